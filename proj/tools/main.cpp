// consentlog: generate consent/event corpora, run compliance benchmark tasks,
// check single policies, inspect the in-process broker, recompute reports.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "consentlog/genbench.hpp"

namespace cl = consentlog;

namespace {

int exit_code_for(const cl::Error& e) {
  switch (e.code()) {
    case cl::Errc::ConfigError:
    case cl::Errc::ValidationError:
    case cl::Errc::ParseError:
    case cl::Errc::BadDuration:
    case cl::Errc::BadInterval:
    case cl::Errc::EmptyUnion:
    case cl::Errc::UnknownClass:
    case cl::Errc::CategoryMismatch:
    case cl::Errc::CycleDetected:
    case cl::Errc::UnknownParent:
    case cl::Errc::DuplicateClass:
      return 1;
    default:
      return 2;
  }
}

cl::Taxonomy load_taxonomy_opt(const std::string& path) {
  if (path.empty()) return cl::Taxonomy::builtin_special();
  return cl::Taxonomy::load_file(path);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) cl::raise(cl::Errc::ConfigError, "cannot read " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

struct GenArgs {
  std::string type = "log";
  std::string format = "json";
  int users = 1;
  std::int64_t events = 0;
  std::string rate = "1s";
  std::string test_time;
  int policies = 1;
  std::optional<double> pass_ratio;
  std::uint64_t seed = 42;
  std::string taxonomy;
  std::string out;
};

int run_gen(const GenArgs& a) {
  cl::GenConfig cfg;
  cfg.users = a.users;
  cfg.events = a.events;
  cfg.rate_ns = cl::parse_duration_ns(a.rate);
  if (!a.test_time.empty()) cfg.test_time_ns = cl::parse_duration_ns(a.test_time);
  cfg.policies = a.policies;
  cfg.pass_ratio = a.pass_ratio;
  cfg.seed = a.seed;
  cfg.type = a.type == "consent" ? cl::GenConfig::Type::Consent
                                 : cl::GenConfig::Type::Log;
  cfg.format = a.format == "ttl" ? cl::GenConfig::Format::Ttl
                                 : cl::GenConfig::Format::Json;

  const cl::Taxonomy taxonomy = load_taxonomy_opt(a.taxonomy);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::binary);
    if (!file) cl::raise(cl::Errc::ConfigError, "cannot write " + a.out);
    out = &file;
  }
  const bool ttl = cfg.format == cl::GenConfig::Format::Ttl;
  if (ttl) *out << cl::ttl_prefix_header() << '\n';

  const auto consents = cl::gen_consents(cfg, taxonomy);
  std::uint64_t written = 0;
  if (cfg.type == cl::GenConfig::Type::Consent) {
    for (const auto& c : consents) {
      if (ttl) {
        *out << cl::to_ttl(c) << '\n';
      } else {
        *out << cl::to_json(c) << '\n';
      }
      ++written;
    }
  } else {
    written = cl::gen_events_stream(
        cfg, consents, taxonomy, [&](cl::GeneratedEvent&& ev) {
          if (ttl) {
            *out << cl::to_ttl(ev.entry) << '\n';
          } else {
            *out << cl::to_json(ev.entry) << '\n';
          }
          return out->good();
        });
  }
  if (!a.out.empty()) {
    std::cerr << "wrote " << written << " entries to " << a.out << '\n';
    if (!ttl) {
      std::ofstream ctx(a.out + ".context.jsonld", std::ios::binary);
      ctx << cl::jsonld_context().dump(2) << '\n';
    }
  }
  return 0;
}

struct BenchArgs {
  std::string task;
  int checkers = 1;
  int partitions = 10;
  int replication = 2;
  std::string inject_delay;
  bool virtual_time = false;
  std::uint64_t seed = 42;
  std::string out_dir = "bench-out";
  bool dump_events = false;
  std::size_t window = 1000;
  double warmup = 0.1;
  bool dry_count = false;
  bool sample_resources = false;
  // overrides of the task row
  std::optional<int> users;
  std::string rate;
  std::string test_time;
  std::optional<std::uint64_t> events;
  std::optional<double> pass_ratio;
};

int run_bench(const BenchArgs& a) {
  cl::TaskSpec spec = cl::task_by_id(a.task);
  if (a.users) spec.users = *a.users;
  if (!a.rate.empty()) spec.rate_ns = cl::parse_duration_ns(a.rate);
  if (!a.test_time.empty()) {
    spec.test_time_ns = cl::parse_duration_ns(a.test_time);
  }
  if (a.events) {
    spec.event_count = *a.events;
    spec.scenario = cl::TaskSpec::Scenario::Batch;
  }
  if (a.pass_ratio) spec.pass_ratio = *a.pass_ratio;

  if (a.dry_count) {
    std::cout << cl::expected_event_count(spec) << '\n';
    return 0;
  }

  cl::RunOptions opts;
  opts.checkers = a.checkers;
  opts.partitions = a.partitions;
  opts.replication = a.replication;
  if (!a.inject_delay.empty()) {
    opts.injected_delay_ns = cl::parse_duration_ns(a.inject_delay);
  }
  opts.virtual_time = a.virtual_time;
  opts.seed = a.seed;
  opts.out_dir = a.out_dir;
  opts.dump_events = a.dump_events;
  opts.window = a.window;
  opts.warmup_fraction = a.warmup;
  opts.sample_resources = a.sample_resources;

  const cl::Taxonomy taxonomy = cl::Taxonomy::builtin_special();
  const cl::MetricsReport r = cl::run_task(spec, opts, taxonomy);
  std::cout << "task " << spec.task_id << ": " << r.count << " events, "
            << r.compliant_count << " compliant\n";
  if (r.count > 0) {
    std::cout << "median " << r.median_ms << " ms, p95 " << r.p95_ms
              << " ms, throughput " << r.throughput_total_eps << " ev/s\n";
  } else {
    std::cout << "empty run (no events generated)\n";
  }
  if (!a.out_dir.empty()) {
    std::cout << "report written to " << a.out_dir << "/report.json\n";
  }
  return 0;
}

struct ReasonArgs {
  std::string content;
  std::string consent;
  std::string taxonomy;
  bool oracle = false;
  std::uint64_t max_universe = 2'000'000;
};

int run_reason(const ReasonArgs& a) {
  const cl::Taxonomy taxonomy = load_taxonomy_opt(a.taxonomy);
  const cl::PrefixMap prefixes = taxonomy.prefixes();

  const auto content_json = cl::ordered_json::parse(slurp(a.content));
  const cl::LogContent content = cl::content_from_json(content_json, &prefixes);
  const auto consent_json = cl::ordered_json::parse(slurp(a.consent));
  const cl::GeneralPolicy consent = cl::policy_from_json(consent_json, &prefixes);

  cl::validate_or_throw(content, taxonomy);
  cl::validate_or_throw(consent, taxonomy);

  const cl::ComplianceResult r = cl::complies(content, consent, taxonomy);
  std::cout << (r.compliant ? "compliant" : "non-compliant");
  if (r.matched_basic) {
    std::cout << " (matched basic policy #" << *r.matched_basic << ")";
  }
  std::cout << '\n';
  if (a.oracle) {
    const bool o = cl::oracle_complies(content, consent, taxonomy, a.max_universe);
    std::cout << "oracle: " << (o ? "compliant" : "non-compliant") << '\n';
    if (o != r.compliant) {
      std::cerr << "error: structural check disagrees with the oracle\n";
      return 2;
    }
  }
  return 0;
}

struct InspectArgs {
  std::string topic = "application-log";
  std::string events;
  int partitions = 10;
  int replication = 2;
  std::string group;
  int consumers = 0;
};

int run_inspect(const InspectArgs& a) {
  cl::Broker broker;
  broker.create_topic(a.topic, static_cast<std::uint32_t>(a.partitions),
                      static_cast<std::uint32_t>(a.replication));
  if (!a.events.empty()) {
    std::ifstream f(a.events, std::ios::binary);
    if (!f) cl::raise(cl::Errc::ConfigError, "cannot read " + a.events);
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const cl::LogEntry e = cl::entry_from_json(line);
      const std::string key = e.data_subject ? *e.data_subject : e.entry_id;
      broker.produce(a.topic, key, line);
    }
  }
  if (!a.group.empty() && a.consumers > 0) {
    for (int i = 1; i <= a.consumers; ++i) {
      char name[24];
      std::snprintf(name, sizeof name, "consumer-%02d", i);
      broker.join_group(a.group, a.topic, name);
    }
  }
  std::cout << broker.inspect(a.topic).dump(2) << '\n';
  return 0;
}

struct RecomputeArgs {
  std::string from;
  std::size_t window = 1000;
  double warmup = 0.1;
  std::string out;
};

int run_recompute(const RecomputeArgs& a) {
  std::vector<cl::Sample> samples = cl::read_latency_csv(a.from);
  const cl::MetricsReport r =
      cl::metrics_from_samples(samples, a.window, a.warmup);
  const std::string text = cl::report_to_json(r).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) cl::raise(cl::Errc::ConfigError, "cannot write " + a.out);
    f << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consent-compliance log engine and benchmark"};
  app.require_subcommand(1);

  std::uint64_t env_seed = 42;
  bool have_env_seed = false;
  if (const char* s = std::getenv("CONSENTLOG_SEED")) {
    env_seed = std::strtoull(s, nullptr, 10);
    have_env_seed = true;
  }
  const char* env_out_dir = std::getenv("CONSENTLOG_OUT_DIR");

  GenArgs gen;
  gen.seed = env_seed;
  auto* cgen = app.add_subcommand("gen", "generate consents or events (jsonl/ttl)");
  cgen->add_option("--type", gen.type, "log (data events) or consent")
      ->check(CLI::IsMember({"log", "consent"}));
  cgen->add_option("--format", gen.format, "json or ttl")
      ->check(CLI::IsMember({"json", "ttl"}));
  cgen->add_option("--users", gen.users, "number of user ids")
      ->check(CLI::PositiveNumber);
  cgen->add_option("--events", gen.events,
                   "total events; <= 0 streams until test time or forever");
  cgen->add_option("--rate", gen.rate,
                   "interval between events per user (e.g. 1s, 10ms)");
  cgen->add_option("--test-time", gen.test_time,
                   "stream length when --events <= 0");
  cgen->add_option("--policies", gen.policies,
                   "max basic policies per consent")
      ->check(CLI::PositiveNumber);
  cgen->add_option("--pass-ratio", gen.pass_ratio,
                   "percent of compliant events; omit for random");
  cgen->add_option("--seed", gen.seed, "generator seed");
  cgen->add_option("--taxonomy", gen.taxonomy, "taxonomy extension file");
  cgen->add_option("--out", gen.out, "output file (default stdout)");

  BenchArgs bench;
  bench.seed = env_seed;
  if (env_out_dir) bench.out_dir = env_out_dir;
  auto* cbench = app.add_subcommand("bench", "benchmark tasks");
  auto* crun = cbench->add_subcommand("run", "run one benchmark task");
  crun->add_option("--task", bench.task,
                   "task id, e.g. C-T1-1 or C-T4-4@scale100")
      ->required();
  crun->add_option("--checkers", bench.checkers, "parallel compliance checkers")
      ->check(CLI::PositiveNumber);
  crun->add_option("--partitions", bench.partitions,
                   "application topic partitions")
      ->check(CLI::PositiveNumber);
  crun->add_option("--replication", bench.replication,
                   "replication factor (storage accounting)")
      ->check(CLI::PositiveNumber);
  crun->add_option("--inject-delay", bench.inject_delay,
                   "per-check service time (e.g. 1ms)");
  crun->add_flag("--virtual-time", bench.virtual_time,
                 "deterministic simulated time instead of wall pacing");
  crun->add_option("--seed", bench.seed, "generator seed");
  crun->add_option("--out-dir", bench.out_dir, "report output directory");
  crun->add_flag("--dump-events", bench.dump_events,
                 "write events.jsonl alongside the reports");
  crun->add_option("--window", bench.window, "percentile window size")
      ->check(CLI::PositiveNumber);
  crun->add_option("--warmup", bench.warmup,
                   "warm-up fraction excluded from steady-state stats");
  crun->add_flag("--dry-count", bench.dry_count,
                 "print the event count the task would generate and exit");
  crun->add_flag("--sample-resources", bench.sample_resources,
                 "sample process CPU and RSS during the run");
  crun->add_option("--users", bench.users, "override the task's user count");
  crun->add_option("--rate", bench.rate, "override the task's event rate");
  crun->add_option("--test-time", bench.test_time,
                   "override the task's test time");
  crun->add_option("--events", bench.events,
                   "override the task's event count (forces batch)");
  crun->add_option("--pass-ratio", bench.pass_ratio,
                   "override the task's pass ratio");
  auto* clist = cbench->add_subcommand("list", "list built-in task rows");

  ReasonArgs reason;
  auto* creason = app.add_subcommand("reason", "compliance checks");
  auto* ccheck = creason->add_subcommand("check",
                                         "check one content against a consent");
  ccheck->add_option("--content", reason.content, "LogContent JSON file")
      ->required();
  ccheck->add_option("--consent", reason.consent,
                     "consent policy JSON file ({\"basics\": [...]})")
      ->required();
  ccheck->add_option("--taxonomy", reason.taxonomy, "taxonomy extension file");
  ccheck->add_flag("--oracle", reason.oracle,
                   "also run the brute-force set-inclusion oracle");
  ccheck->add_option("--max-universe", reason.max_universe,
                     "oracle enumeration guard");

  InspectArgs inspect;
  auto* cbroker = app.add_subcommand("broker", "broker utilities");
  auto* cinspect = cbroker->add_subcommand(
      "inspect", "load a jsonl corpus into a topic and dump its state");
  cinspect->add_option("--topic", inspect.topic, "topic name");
  cinspect->add_option("--events", inspect.events, "events.jsonl to load");
  cinspect->add_option("--partitions", inspect.partitions, "partition count")
      ->check(CLI::PositiveNumber);
  cinspect->add_option("--replication", inspect.replication,
                       "replication factor")
      ->check(CLI::PositiveNumber);
  cinspect->add_option("--group", inspect.group,
                       "simulate a consumer group with this name");
  cinspect->add_option("--consumers", inspect.consumers,
                       "members for the simulated group");

  RecomputeArgs recompute;
  auto* creport = app.add_subcommand("report", "report utilities");
  auto* crecompute =
      creport->add_subcommand("recompute", "rebuild report.json from a CSV");
  crecompute->add_option("--from", recompute.from, "latencies.csv path")
      ->required();
  crecompute->add_option("--window", recompute.window, "percentile window size")
      ->check(CLI::PositiveNumber);
  crecompute->add_option("--warmup", recompute.warmup, "warm-up fraction");
  crecompute->add_option("--out", recompute.out,
                         "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  (void)have_env_seed;
  try {
    if (cgen->parsed()) return run_gen(gen);
    if (crun->parsed()) return run_bench(bench);
    if (clist->parsed()) {
      for (const auto& row : cl::task_table()) {
        std::cout << row.task_id << '\t'
                  << (row.scenario == cl::TaskSpec::Scenario::Batch
                          ? "batch"
                          : "streaming")
                  << "\tusers=" << row.users << '\n';
      }
      return 0;
    }
    if (ccheck->parsed()) return run_reason(reason);
    if (cinspect->parsed()) return run_inspect(inspect);
    if (crecompute->parsed()) return run_recompute(recompute);
    std::cerr << app.help();
    return 1;
  } catch (const cl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
