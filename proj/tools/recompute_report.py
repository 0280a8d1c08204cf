#!/usr/bin/env python3
"""Independent recomputation of report.json statistics from latencies.csv.

Reads the latency log, recomputes every statistic with plain Python, and
either prints them or checks them against an existing report.json.

Usage:
  recompute_report.py latencies.csv [--window N] [--warmup F]
                      [--check report.json] [--tolerance T]
"""

import argparse
import csv
import json
import math
import sys


def nearest_rank(sorted_values, p):
    n = len(sorted_values)
    rank = math.ceil(p / 100.0 * n)
    rank = min(max(rank, 1), n)
    return sorted_values[rank - 1]


def compute(rows, window, warmup_fraction):
    rows = sorted(rows, key=lambda r: (r["done_ns"], r["event_id"]))
    lat = [r["latency_ns"] for r in rows]
    count = len(rows)
    out = {
        "count": count,
        "compliantCount": sum(1 for r in rows if r["compliant"]),
        "medianMs": 0.0,
        "meanMs": 0.0,
        "p50Ms": 0.0,
        "p75Ms": 0.0,
        "p95Ms": 0.0,
        "warmupEvents": 0,
        "postWarmupMedianMs": 0.0,
        "postWarmupP95Ms": 0.0,
        "durationSeconds": 0.0,
        "throughputTotalEps": 0.0,
        "windowSize": window,
        "windowRows": 0,
    }
    if count == 0:
        return out
    s = sorted(lat)
    out["medianMs"] = nearest_rank(s, 50) / 1e6
    out["meanMs"] = (sum(lat) / count) / 1e6
    out["p50Ms"] = out["medianMs"]
    out["p75Ms"] = nearest_rank(s, 75) / 1e6
    out["p95Ms"] = nearest_rank(s, 95) / 1e6
    warmup = int(warmup_fraction * count)
    out["warmupEvents"] = warmup
    post = sorted(lat[warmup:])
    if post:
        out["postWarmupMedianMs"] = nearest_rank(post, 50) / 1e6
        out["postWarmupP95Ms"] = nearest_rank(post, 95) / 1e6
    min_enqueue = min(r["enqueue_ns"] for r in rows)
    max_done = max(r["done_ns"] for r in rows)
    out["durationSeconds"] = (max_done - min_enqueue) / 1e9
    if out["durationSeconds"] > 0:
        out["throughputTotalEps"] = count / out["durationSeconds"]
    out["windowRows"] = count // window
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv_path")
    ap.add_argument("--window", type=int, default=1000)
    ap.add_argument("--warmup", type=float, default=0.1)
    ap.add_argument("--check", help="report.json to compare against")
    ap.add_argument("--tolerance", type=float, default=1e-9)
    args = ap.parse_args()

    rows = []
    with open(args.csv_path, newline="") as f:
        reader = csv.DictReader(f)
        expected = ["event_id", "enqueue_ns", "done_ns", "latency_ns", "compliant"]
        if reader.fieldnames != expected:
            print(f"unexpected header: {reader.fieldnames}", file=sys.stderr)
            return 1
        for r in reader:
            rows.append(
                {
                    "event_id": r["event_id"],
                    "enqueue_ns": int(r["enqueue_ns"]),
                    "done_ns": int(r["done_ns"]),
                    "latency_ns": int(r["latency_ns"]),
                    "compliant": r["compliant"] == "1",
                }
            )

    got = compute(rows, args.window, args.warmup)
    if not args.check:
        print(json.dumps(got, indent=2))
        return 0

    with open(args.check) as f:
        want = json.load(f)
    failures = []
    for key, value in got.items():
        if key not in want:
            failures.append(f"missing key in report: {key}")
            continue
        other = want[key]
        if isinstance(value, float) or isinstance(other, float):
            scale = max(abs(value), abs(other), 1.0)
            if abs(value - other) > args.tolerance * scale:
                failures.append(f"{key}: recomputed {value} != reported {other}")
        elif value != other:
            failures.append(f"{key}: recomputed {value} != reported {other}")
    if failures:
        for f_ in failures:
            print(f_, file=sys.stderr)
        return 1
    print(f"report verified against {args.csv_path} ({got['count']} events)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
