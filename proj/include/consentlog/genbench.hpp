#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "consentlog/broker.hpp"

namespace consentlog {

/// Go-style duration syntax: integer+unit concatenations with units
/// ns, us, ms, s, m, h (e.g. "1s", "10ms", "1m30s"). The total must be
/// strictly positive.
std::int64_t parse_duration_ns(std::string_view s);

// --- synthetic workload -----------------------------------------------------------

struct GenConfig {
  enum class Format : std::uint8_t { Json, Ttl };
  enum class Type : std::uint8_t { Log, Consent };

  std::int64_t rate_ns = 1'000'000'000;  // interval between events per user
  std::int64_t events = 0;               // total; <= 0 means unbounded
  Format format = Format::Json;
  Type type = Type::Log;
  int policies = 1;  // max basic policies per consent
  int users = 1;
  std::optional<double> pass_ratio;  // percent in [0,100]; absent = random
  std::uint64_t seed = 42;
  std::optional<std::int64_t> test_time_ns;
};

/// Logical time base of generated corpora (2020-01-01T00:00:00Z).
inline constexpr TimestampMs kGenBaseMs = 1'577'836'800'000;

std::string user_name(int index);  // "user-00001", 1-based

/// One consent assertion per user. Each policy draws 1..cfg.policies basic
/// policies with attributes uniform over the non-Null classes of the proper
/// category and day-interval durations from zero (unbounded with probability
/// one half, else bounded by 1..730 days). Deterministic for a fixed seed.
std::vector<LogEntry> gen_consents(const GenConfig& cfg, const Taxonomy& t);

struct GeneratedEvent {
  LogEntry entry;
  bool intended_compliant = false;
  std::int64_t arrival_ns = 0;  // schedule offset from stream start
};

/// Round-robin event stream over the users at the configured per-user rate.
/// Compliant events specialize one consented basic policy; violating events
/// perturb attributes until the reasoner confirms the violation (bounded
/// retries, then a deterministic fallback). Every event is verified against
/// its intended label before it is emitted. Throws GenerationStuck when a
/// consent authorizes everything and a violation is requested.
std::vector<GeneratedEvent> gen_events(const GenConfig& cfg,
                                       std::span<const LogEntry> consents,
                                       const Taxonomy& t);

/// Streaming form: calls sink until it returns false or the configured count
/// is exhausted. Returns the number of events emitted.
std::uint64_t gen_events_stream(
    const GenConfig& cfg, std::span<const LogEntry> consents, const Taxonomy& t,
    const std::function<bool(GeneratedEvent&&)>& sink);

/// Number of events the configuration yields without materializing them:
/// cfg.events when positive, else users x floor(test_time / rate).
std::uint64_t expected_event_count(const GenConfig& cfg);

// --- statistics ------------------------------------------------------------------

/// Nearest-rank percentile: the value at 1-based index ceil(p/100 * n) of the
/// sorted data, p in (0, 100]. Throws EmptyInput on empty data.
std::int64_t percentile_ns(std::span<const std::int64_t> latencies, double p);

struct WindowRow {
  std::size_t end_index = 0;  // 1-based index of the window's last event
  double p50_ms = 0;
  double p75_ms = 0;
  double p95_ms = 0;
};

/// Disjoint full windows over latencies in completion order; trailing partial
/// windows are dropped.
std::vector<WindowRow> windowed_percentiles(
    std::span<const std::int64_t> latencies, std::size_t window);

/// Cumulative variant: each row covers everything up to its end index
/// (step = window).
std::vector<WindowRow> cumulative_percentiles(
    std::span<const std::int64_t> latencies, std::size_t window);

// --- benchmark tasks ----------------------------------------------------------------

struct TaskSpec {
  std::string task_id;
  enum class Scenario : std::uint8_t { Streaming, Batch } scenario =
      Scenario::Streaming;
  int users = 1;
  std::int64_t rate_ns = 1'000'000'000;
  int policy_union_size = 1;
  std::optional<std::int64_t> test_time_ns;      // streaming rows
  std::optional<std::uint64_t> event_count;      // batch rows
  std::optional<double> pass_ratio;              // absent = random
};

/// The built-in task table rows C-T1-1 .. C-T5-5, optionally desk-scaled with
/// an "@scale<k>" suffix (divides users and test time / event count by k).
TaskSpec task_by_id(std::string_view id);
const std::vector<TaskSpec>& task_table();
std::uint64_t expected_event_count(const TaskSpec& spec);

// --- measurement ---------------------------------------------------------------------

struct Sample {
  std::string event_id;
  std::int64_t enqueue_ns = 0;
  std::int64_t done_ns = 0;
  std::int64_t latency_ns = 0;
  bool compliant = false;
};

struct ResourceSample {
  std::int64_t at_ms = 0;
  double cpu_pct = 0;
  std::uint64_t rss_bytes = 0;
};

/// Best-effort /proc sampler; yields no samples on unsupported platforms.
class ResourceSampler {
 public:
  explicit ResourceSampler(std::int64_t interval_ns);
  ~ResourceSampler();
  void stop();
  std::vector<ResourceSample> samples();
  static bool supported();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct MetricsReport {
  std::size_t count = 0;
  std::size_t compliant_count = 0;
  double median_ms = 0;
  double mean_ms = 0;
  double p50_ms = 0;
  double p75_ms = 0;
  double p95_ms = 0;
  std::size_t warmup_events = 0;
  double post_warmup_median_ms = 0;
  double post_warmup_p95_ms = 0;
  double duration_seconds = 0;
  double throughput_total_eps = 0;
  std::size_t window_size = 1000;
  std::vector<WindowRow> series;
  std::vector<std::pair<std::int64_t, std::size_t>> throughput_series;

  // Run-level extras (not derivable from latencies.csv; kept out of
  // report.json and written to run_meta.json instead).
  std::uint64_t storage_bytes = 0;
  std::uint64_t compliance_storage_bytes = 0;
  std::map<std::string, std::size_t> per_checker_events;
  std::size_t label_mismatches = 0;
  std::size_t malformed = 0;
  std::vector<ResourceSample> resources;
  bool resources_available = false;
};

/// Statistics over the samples; sorts them by (done_ns, event_id) in place,
/// which is also the row order of latencies.csv. Shared by the task runner
/// and `report recompute`, so both emit identical bytes.
MetricsReport metrics_from_samples(std::vector<Sample>& samples,
                                   std::size_t window, double warmup_fraction);

ordered_json report_to_json(const MetricsReport& r);

std::vector<Sample> read_latency_csv(const std::string& path);

void write_latency_csv(const std::string& path, std::span<const Sample> samples);
void write_series_csv(const std::string& path, std::span<const WindowRow> rows);
void write_throughput_csv(
    const std::string& path,
    std::span<const std::pair<std::int64_t, std::size_t>> rows);

// --- task runner ------------------------------------------------------------------------

struct RunOptions {
  int checkers = 1;
  int partitions = 10;
  int replication = 2;
  std::optional<std::int64_t> injected_delay_ns;
  bool virtual_time = false;
  std::uint64_t seed = 42;
  std::string out_dir;       // empty: keep results in memory only
  bool dump_events = false;  // write events.jsonl next to the reports
  std::size_t window = 1000;
  double warmup_fraction = 0.1;
  bool sample_resources = false;
  std::int64_t resource_interval_ns = 1'000'000'000;
};

/// Runs one benchmark task through the full pipeline (generate, produce,
/// check, aggregate) and writes report.json, latencies.csv, series.csv,
/// throughput.csv and run_meta.json to out_dir when set. Wall-clock runs pace
/// producers and sleep per check; virtual-time runs replay the same pipeline
/// deterministically on simulated clocks.
MetricsReport run_task(const TaskSpec& spec, const RunOptions& opts,
                       const Taxonomy& t);

}  // namespace consentlog
