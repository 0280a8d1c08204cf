#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#ifdef __linux__
#include <unistd.h>
#endif

#include "consentlog/genbench.hpp"

namespace consentlog {

// --- metrics ----------------------------------------------------------------------

MetricsReport metrics_from_samples(std::vector<Sample>& samples,
                                   std::size_t window,
                                   double warmup_fraction) {
  if (window < 1) raise(Errc::ConfigError, "window must be >= 1");
  if (warmup_fraction < 0 || warmup_fraction >= 1) {
    raise(Errc::ConfigError, "warmup fraction must be in [0, 1)");
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    if (a.done_ns != b.done_ns) return a.done_ns < b.done_ns;
    return a.event_id < b.event_id;
  });

  MetricsReport r;
  r.window_size = window;
  r.count = samples.size();
  if (samples.empty()) return r;

  std::vector<std::int64_t> latencies;
  latencies.reserve(samples.size());
  std::int64_t min_enqueue = samples.front().enqueue_ns;
  std::int64_t max_done = samples.front().done_ns;
  std::int64_t sum = 0;
  for (const auto& s : samples) {
    latencies.push_back(s.latency_ns);
    min_enqueue = std::min(min_enqueue, s.enqueue_ns);
    max_done = std::max(max_done, s.done_ns);
    sum += s.latency_ns;
    if (s.compliant) ++r.compliant_count;
  }

  r.median_ms = static_cast<double>(percentile_ns(latencies, 50)) / 1e6;
  r.mean_ms = static_cast<double>(sum) / static_cast<double>(r.count) / 1e6;
  r.p50_ms = r.median_ms;
  r.p75_ms = static_cast<double>(percentile_ns(latencies, 75)) / 1e6;
  r.p95_ms = static_cast<double>(percentile_ns(latencies, 95)) / 1e6;

  r.warmup_events = static_cast<std::size_t>(
      warmup_fraction * static_cast<double>(r.count));
  const std::span<const std::int64_t> post(latencies.data() + r.warmup_events,
                                           latencies.size() - r.warmup_events);
  if (!post.empty()) {
    r.post_warmup_median_ms = static_cast<double>(percentile_ns(post, 50)) / 1e6;
    r.post_warmup_p95_ms = static_cast<double>(percentile_ns(post, 95)) / 1e6;
  }

  r.duration_seconds = static_cast<double>(max_done - min_enqueue) / 1e9;
  r.throughput_total_eps =
      r.duration_seconds > 0
          ? static_cast<double>(r.count) / r.duration_seconds
          : 0.0;

  r.series = windowed_percentiles(latencies, window);

  const std::int64_t last_bucket = (max_done - min_enqueue) / 1'000'000'000;
  std::vector<std::size_t> buckets(static_cast<std::size_t>(last_bucket) + 1, 0);
  for (const auto& s : samples) {
    ++buckets[static_cast<std::size_t>((s.done_ns - min_enqueue) /
                                       1'000'000'000)];
  }
  r.throughput_series.reserve(buckets.size());
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    r.throughput_series.emplace_back(static_cast<std::int64_t>(b), buckets[b]);
  }
  return r;
}

ordered_json report_to_json(const MetricsReport& r) {
  ordered_json j;
  j["count"] = r.count;
  j["compliantCount"] = r.compliant_count;
  j["medianMs"] = r.median_ms;
  j["meanMs"] = r.mean_ms;
  j["p50Ms"] = r.p50_ms;
  j["p75Ms"] = r.p75_ms;
  j["p95Ms"] = r.p95_ms;
  j["warmupEvents"] = r.warmup_events;
  j["postWarmupMedianMs"] = r.post_warmup_median_ms;
  j["postWarmupP95Ms"] = r.post_warmup_p95_ms;
  j["durationSeconds"] = r.duration_seconds;
  j["throughputTotalEps"] = r.throughput_total_eps;
  j["windowSize"] = r.window_size;
  j["windowRows"] = r.series.size();
  return j;
}

// --- CSV --------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(Errc::ConfigError, "cannot write " + path);
  return f;
}

}  // namespace

void write_latency_csv(const std::string& path,
                       std::span<const Sample> samples) {
  auto f = open_out(path);
  f << "event_id,enqueue_ns,done_ns,latency_ns,compliant\n";
  for (const auto& s : samples) {
    f << s.event_id << ',' << s.enqueue_ns << ',' << s.done_ns << ','
      << s.latency_ns << ',' << (s.compliant ? 1 : 0) << '\n';
  }
}

void write_series_csv(const std::string& path,
                      std::span<const WindowRow> rows) {
  auto f = open_out(path);
  f << "window_end,p50_ms,p75_ms,p95_ms\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", r.end_index,
                  r.p50_ms, r.p75_ms, r.p95_ms);
    f << buf;
  }
}

void write_throughput_csv(
    const std::string& path,
    std::span<const std::pair<std::int64_t, std::size_t>> rows) {
  auto f = open_out(path);
  f << "second,events\n";
  for (const auto& [second, events] : rows) {
    f << second << ',' << events << '\n';
  }
}

std::vector<Sample> read_latency_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(Errc::ConfigError, "cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) raise(Errc::ParseError, path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "event_id,enqueue_ns,done_ns,latency_ns,compliant") {
    raise(Errc::ParseError, path + ": unexpected header '" + line + "'");
  }
  std::vector<Sample> out;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Sample s;
    std::array<std::string, 5> field;
    std::size_t fi = 0;
    for (char c : line) {
      if (c == ',') {
        if (++fi >= field.size()) {
          raise(Errc::ParseError,
                path + ":" + std::to_string(line_no) + ": too many fields");
        }
      } else {
        field[fi] += c;
      }
    }
    if (fi != 4) {
      raise(Errc::ParseError,
            path + ":" + std::to_string(line_no) + ": expected 5 fields");
    }
    try {
      s.event_id = field[0];
      s.enqueue_ns = std::stoll(field[1]);
      s.done_ns = std::stoll(field[2]);
      s.latency_ns = std::stoll(field[3]);
      s.compliant = field[4] == "1";
    } catch (...) {
      raise(Errc::ParseError,
            path + ":" + std::to_string(line_no) + ": bad numeric field");
    }
    out.push_back(std::move(s));
  }
  return out;
}

// --- resource sampling ---------------------------------------------------------------

namespace {

struct ProcStat {
  double cpu_seconds = 0;
  std::uint64_t rss_bytes = 0;
  bool ok = false;
};

ProcStat read_proc_self() {
  ProcStat out;
#ifdef __linux__
  std::ifstream stat("/proc/self/stat");
  if (!stat) return out;
  std::string content;
  std::getline(stat, content);
  const auto paren = content.rfind(')');
  if (paren == std::string::npos) return out;
  std::istringstream rest(content.substr(paren + 2));
  std::string tok;
  // fields 3..15 after the command name; utime is field 14, stime 15
  std::vector<std::string> fields;
  while (rest >> tok) fields.push_back(tok);
  if (fields.size() < 13) return out;
  const double ticks =
      static_cast<double>(std::stoull(fields[11])) +
      static_cast<double>(std::stoull(fields[12]));
  out.cpu_seconds = ticks / static_cast<double>(sysconf(_SC_CLK_TCK));

  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      std::istringstream ls(line.substr(6));
      std::uint64_t kb = 0;
      ls >> kb;
      out.rss_bytes = kb * 1024;
      break;
    }
  }
  out.ok = true;
#endif
  return out;
}

}  // namespace

struct ResourceSampler::Impl {
  std::int64_t interval_ns;
  std::vector<ResourceSample> samples;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  std::thread worker;

  explicit Impl(std::int64_t interval) : interval_ns(interval) {
    if (!ResourceSampler::supported()) return;
    worker = std::thread([this] { loop(); });
  }

  void loop() {
    auto prev = read_proc_self();
    auto prev_t = std::chrono::steady_clock::now();
    const auto start = prev_t;
    std::unique_lock lk(mu);
    while (!stopping) {
      cv.wait_for(lk, std::chrono::nanoseconds(interval_ns),
                  [this] { return stopping; });
      if (stopping) break;
      lk.unlock();
      const auto cur = read_proc_self();
      const auto now = std::chrono::steady_clock::now();
      const double wall =
          std::chrono::duration<double>(now - prev_t).count();
      ResourceSample s;
      s.at_ms = std::chrono::duration_cast<std::chrono::milliseconds>(now -
                                                                      start)
                    .count();
      s.cpu_pct = wall > 0 ? (cur.cpu_seconds - prev.cpu_seconds) / wall * 100.0
                           : 0.0;
      s.rss_bytes = cur.rss_bytes;
      prev = cur;
      prev_t = now;
      lk.lock();
      samples.push_back(s);
    }
  }

  void stop() {
    {
      std::lock_guard lk(mu);
      stopping = true;
    }
    cv.notify_all();
    if (worker.joinable()) worker.join();
  }

  ~Impl() { stop(); }
};

ResourceSampler::ResourceSampler(std::int64_t interval_ns)
    : impl_(std::make_unique<Impl>(interval_ns)) {}

ResourceSampler::~ResourceSampler() = default;

void ResourceSampler::stop() { impl_->stop(); }

std::vector<ResourceSample> ResourceSampler::samples() {
  impl_->stop();
  std::lock_guard lk(impl_->mu);
  return impl_->samples;
}

bool ResourceSampler::supported() { return read_proc_self().ok; }

// --- task runner ------------------------------------------------------------------------

namespace {

constexpr const char* kAppTopic = "application-log";
constexpr const char* kComplianceTopic = "compliance-log";

std::string checker_name(int index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "checker-%02d", index);
  return buf;
}

GenConfig config_for(const TaskSpec& spec, const RunOptions& opts) {
  GenConfig cfg;
  cfg.users = spec.users;
  cfg.rate_ns = spec.rate_ns;
  cfg.policies = spec.policy_union_size;
  cfg.pass_ratio = spec.pass_ratio;
  cfg.seed = opts.seed;
  if (spec.scenario == TaskSpec::Scenario::Batch) {
    cfg.events = static_cast<std::int64_t>(spec.event_count.value_or(0));
    if (cfg.events <= 0) {
      raise(Errc::ConfigError, "batch task needs an event count");
    }
  } else {
    cfg.events = 0;
    cfg.test_time_ns = spec.test_time_ns;
    if (!cfg.test_time_ns) {
      raise(Errc::ConfigError, "streaming task needs a test time");
    }
  }
  return cfg;
}

struct AggregationResult {
  std::vector<Sample> samples;
  std::map<std::string, std::size_t> per_checker;
  std::size_t label_mismatches = 0;
  std::size_t malformed = 0;
};

/// Drains the compliance topic until every expected event id has a result.
/// At-least-once delivery may redeliver; results are deduplicated by id.
AggregationResult aggregate(
    Broker& broker, const std::unordered_map<std::string, bool>& labels,
    std::atomic<bool>& stop) {
  AggregationResult out;
  const std::string group = "metrics";
  const std::string me = "aggregator";
  broker.join_group(group, kComplianceTopic, me);
  std::unordered_set<std::string> seen;
  seen.reserve(labels.size());
  while (seen.size() < labels.size()) {
    const auto batch = broker.poll(group, me, 512);
    if (batch.empty()) {
      broker.clock().sleep_ns(200'000);
      continue;
    }
    for (const auto& polled : batch) {
      const ComplianceRecord rec = record_from_json(polled.record.value);
      broker.commit(group, me, polled.partition, polled.record.offset);
      const auto label = labels.find(rec.entry.entry_id);
      if (label == labels.end()) {
        ++out.malformed;
        continue;
      }
      if (!seen.insert(rec.entry.entry_id).second) continue;
      Sample s;
      s.event_id = rec.entry.entry_id;
      s.done_ns = polled.record.enqueue_ns;
      s.latency_ns = rec.latency_ns;
      s.enqueue_ns = s.done_ns - s.latency_ns;
      s.compliant = rec.compliant;
      out.samples.push_back(std::move(s));
      ++out.per_checker[rec.checker_id];
      if (rec.compliant != label->second) ++out.label_mismatches;
    }
  }
  stop.store(true, std::memory_order_release);
  return out;
}

/// Deterministic replay of the pipeline on simulated time: each checker is a
/// FIFO server over its assigned partitions, merged by arrival time. Consent
/// entries advance no service time; each event check costs the injected
/// delay.
AggregationResult simulate_virtual(
    Broker& broker, const Broker::Assignment& assignment,
    const std::unordered_map<std::string, bool>& labels,
    const Taxonomy& taxonomy, std::int64_t service_ns) {
  AggregationResult out;
  ConsentStore store;
  std::map<std::string, std::vector<std::uint32_t>> by_checker;
  for (const auto& [partition, owner] : assignment) {
    by_checker[owner].push_back(partition);
  }
  for (const auto& [checker, partitions] : by_checker) {
    out.per_checker[checker];  // report zero for idle members
    std::vector<std::uint64_t> next(partitions.size(), 0);
    std::vector<std::uint64_t> size(partitions.size());
    for (std::size_t i = 0; i < partitions.size(); ++i) {
      size[i] = broker.partition_size(kAppTopic, partitions[i]);
    }
    std::int64_t clock = 0;
    while (true) {
      // pick the head record with the smallest (arrival, partition) key
      std::int64_t best_arrival = 0;
      std::size_t best = partitions.size();
      for (std::size_t i = 0; i < partitions.size(); ++i) {
        if (next[i] >= size[i]) continue;
        const Record head =
            broker.read_record(kAppTopic, partitions[i], next[i]);
        if (best == partitions.size() || head.enqueue_ns < best_arrival) {
          best_arrival = head.enqueue_ns;
          best = i;
        }
      }
      if (best == partitions.size()) break;
      const Record rec =
          broker.read_record(kAppTopic, partitions[best], next[best]);
      ++next[best];

      LogEntry entry = entry_from_json(rec.value);
      if (is_policy_entry(entry.kind)) {
        clock = std::max(clock, rec.enqueue_ns);
        store.apply(entry);
        continue;
      }
      const std::int64_t start = std::max(clock, rec.enqueue_ns);
      const std::int64_t done = start + service_ns;
      clock = done;
      const auto outcome = check_event(entry, store, taxonomy);

      ComplianceRecord crec;
      crec.compliant = outcome.compliant;
      crec.reason = outcome.reason;
      crec.consent_entry_id = outcome.consent_entry_id;
      crec.checker_id = checker;
      crec.check_time = kGenBaseMs + done / 1'000'000;
      crec.latency_ns = done - rec.enqueue_ns;
      const std::string key =
          entry.data_subject ? *entry.data_subject : entry.entry_id;
      Sample s;
      s.event_id = entry.entry_id;
      s.enqueue_ns = rec.enqueue_ns;
      s.done_ns = done;
      s.latency_ns = crec.latency_ns;
      s.compliant = outcome.compliant;
      crec.entry = std::move(entry);
      broker.produce_at(kComplianceTopic, key, to_json(crec), done);

      const auto label = labels.find(s.event_id);
      if (label != labels.end() && label->second != s.compliant) {
        ++out.label_mismatches;
      }
      ++out.per_checker[checker];
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

void write_run_meta(const std::string& path, const TaskSpec& spec,
                    const RunOptions& opts, const MetricsReport& r,
                    std::size_t consents) {
  ordered_json meta;
  meta["task"] = spec.task_id;
  meta["scenario"] =
      spec.scenario == TaskSpec::Scenario::Batch ? "batch" : "streaming";
  meta["users"] = spec.users;
  meta["rateNs"] = spec.rate_ns;
  meta["policies"] = spec.policy_union_size;
  if (spec.pass_ratio) {
    meta["passRatio"] = *spec.pass_ratio;
  } else {
    meta["passRatio"] = "random";
  }
  if (spec.test_time_ns) meta["testTimeNs"] = *spec.test_time_ns;
  if (spec.event_count) meta["eventCount"] = *spec.event_count;
  meta["seed"] = opts.seed;
  meta["checkers"] = opts.checkers;
  meta["partitions"] = opts.partitions;
  meta["replicationFactor"] = opts.replication;
  meta["virtualTime"] = opts.virtual_time;
  meta["injectedDelayNs"] = opts.injected_delay_ns.value_or(0);
  meta["consents"] = consents;
  meta["appTopicBytes"] = r.storage_bytes;
  meta["complianceTopicBytes"] = r.compliance_storage_bytes;
  meta["labelMismatches"] = r.label_mismatches;
  ordered_json per = ordered_json::object();
  for (const auto& [checker, n] : r.per_checker_events) per[checker] = n;
  meta["perCheckerEvents"] = per;
  if (r.resources_available) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : r.resources) {
      arr.push_back(ordered_json{{"atMs", s.at_ms},
                                 {"cpuPct", s.cpu_pct},
                                 {"rssBytes", s.rss_bytes}});
    }
    meta["resources"] = arr;
  } else {
    meta["resources"] = "unavailable";
  }
  auto f = open_out(path);
  f << meta.dump(2) << '\n';
}

}  // namespace

MetricsReport run_task(const TaskSpec& spec, const RunOptions& opts,
                       const Taxonomy& taxonomy) {
  if (opts.checkers < 1) raise(Errc::ConfigError, "checkers must be >= 1");
  if (opts.partitions < 1) raise(Errc::ConfigError, "partitions must be >= 1");

  const GenConfig cfg = config_for(spec, opts);
  const auto consents = gen_consents(cfg, taxonomy);
  const bool batch = spec.scenario == TaskSpec::Scenario::Batch;

  std::optional<ResourceSampler> sampler;
  if (opts.sample_resources) sampler.emplace(opts.resource_interval_ns);

  Broker broker;
  broker.create_topic(kAppTopic, static_cast<std::uint32_t>(opts.partitions),
                      static_cast<std::uint32_t>(opts.replication));
  broker.create_topic(kComplianceTopic,
                      static_cast<std::uint32_t>(opts.partitions),
                      static_cast<std::uint32_t>(opts.replication));

  std::optional<std::ofstream> dump;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    if (opts.dump_events) {
      dump = open_out(opts.out_dir + "/events.jsonl");
    }
  }

  std::unordered_map<std::string, bool> labels;
  labels.reserve(std::min<std::uint64_t>(expected_event_count(cfg), 1u << 22));

  AggregationResult agg;
  if (opts.virtual_time) {
    for (const auto& c : consents) {
      broker.produce_at(kAppTopic, *c.data_subject, to_json(c), 0);
    }
    gen_events_stream(cfg, consents, taxonomy, [&](GeneratedEvent&& ev) {
      const std::string line = to_json(ev.entry);
      if (dump) *dump << line << '\n';
      labels.emplace(ev.entry.entry_id, ev.intended_compliant);
      broker.produce_at(kAppTopic, *ev.entry.data_subject, line,
                        batch ? 0 : ev.arrival_ns);
      return true;
    });
    Broker::Assignment assignment;
    for (int i = 1; i <= opts.checkers; ++i) {
      assignment = broker.join_group("checkers", kAppTopic, checker_name(i));
    }
    agg = simulate_virtual(broker, assignment, labels, taxonomy,
                           opts.injected_delay_ns.value_or(0));
  } else {
    std::atomic<bool> stop{false};
    CheckerOptions copts;
    copts.compliance_topic = kComplianceTopic;
    copts.injected_delay_ns = opts.injected_delay_ns.value_or(0);
    copts.stop = &stop;
    copts.epoch_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count() -
                     broker.clock().now_ns() / 1'000'000;

    for (const auto& c : consents) {
      broker.produce(kAppTopic, *c.data_subject, to_json(c));
    }

    const auto produce_events = [&] {
      const std::int64_t t0 = broker.clock().now_ns();
      gen_events_stream(cfg, consents, taxonomy, [&](GeneratedEvent&& ev) {
        const std::string line = to_json(ev.entry);
        if (dump) *dump << line << '\n';
        if (!batch) {
          const std::int64_t target = t0 + ev.arrival_ns;
          broker.clock().sleep_ns(target - broker.clock().now_ns());
        }
        labels.emplace(ev.entry.entry_id, ev.intended_compliant);
        broker.produce(kAppTopic, *ev.entry.data_subject, line);
        return true;
      });
    };

    if (batch) produce_events();  // events already loaded when checkers start

    ConsentStore store;
    for (int i = 1; i <= opts.checkers; ++i) {
      broker.join_group("checkers", kAppTopic, checker_name(i));
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(opts.checkers));
    for (int i = 1; i <= opts.checkers; ++i) {
      workers.emplace_back([&broker, &store, &taxonomy, copts, i] {
        run_checker(broker, checker_name(i), kAppTopic, store, taxonomy, copts);
      });
    }
    std::thread producer;
    if (!batch) producer = std::thread(produce_events);

    agg = aggregate(broker, labels, stop);
    if (producer.joinable()) producer.join();
    for (auto& w : workers) w.join();
  }
  for (int i = 1; i <= opts.checkers; ++i) {
    agg.per_checker.emplace(checker_name(i), 0);
  }

  if (dump) dump->close();

  std::vector<Sample> samples = std::move(agg.samples);
  MetricsReport report =
      metrics_from_samples(samples, opts.window, opts.warmup_fraction);
  report.storage_bytes = broker.storage_bytes(kAppTopic);
  report.compliance_storage_bytes = broker.storage_bytes(kComplianceTopic);
  report.per_checker_events = std::move(agg.per_checker);
  report.label_mismatches = agg.label_mismatches;
  report.malformed = agg.malformed;
  if (sampler) {
    report.resources = sampler->samples();
    report.resources_available = ResourceSampler::supported();
  }

  if (!opts.out_dir.empty()) {
    auto rf = open_out(opts.out_dir + "/report.json");
    rf << report_to_json(report).dump(2) << '\n';
    write_latency_csv(opts.out_dir + "/latencies.csv", samples);
    write_series_csv(opts.out_dir + "/series.csv", report.series);
    write_throughput_csv(opts.out_dir + "/throughput.csv",
                         report.throughput_series);
    write_run_meta(opts.out_dir + "/run_meta.json", spec, opts, report,
                   consents.size());
  }
  return report;
}

}  // namespace consentlog
