#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "support/test_support.hpp"

using namespace consentlog;
using namespace consentlog::testing;

TEST_CASE("duration parsing follows the compact unit syntax") {
  CHECK(parse_duration_ns("1s") == 1'000'000'000);
  CHECK(parse_duration_ns("10ms") == 10'000'000);
  CHECK(parse_duration_ns("1m30s") == 90'000'000'000);  // 90,000 ms
  CHECK(parse_duration_ns("2h") == 7'200'000'000'000);
  CHECK(parse_duration_ns("1500us") == 1'500'000);
  CHECK(parse_duration_ns("250ns") == 250);
  CHECK(parse_duration_ns("1h30m15s") ==
        (3600 + 30 * 60 + 15) * 1'000'000'000ll);

  CHECK_THROWS_WITH_AS(parse_duration_ns("0s"), doctest::Contains("positive"),
                       Error);
  CHECK_THROWS_AS(parse_duration_ns(""), Error);
  CHECK_THROWS_AS(parse_duration_ns("10"), Error);
  CHECK_THROWS_AS(parse_duration_ns("ms"), Error);
  CHECK_THROWS_AS(parse_duration_ns("10xs"), Error);
  CHECK_THROWS_AS(parse_duration_ns("1s junk"), Error);
  CHECK_THROWS_AS(parse_duration_ns("999999999999h"), Error);
}

TEST_CASE("consent generation") {
  const Taxonomy t = Taxonomy::builtin_special();
  GenConfig cfg;
  cfg.users = 40;
  cfg.policies = 5;
  cfg.seed = 7;

  const auto consents = gen_consents(cfg, t);
  REQUIRE(consents.size() == 40);
  for (const auto& c : consents) {
    CHECK(c.kind == EntryKind::ConsentAssertion);
    REQUIRE(c.policy.has_value());
    CHECK(c.policy->basics.size() >= 1);
    CHECK(c.policy->basics.size() <= 5);
    CHECK(validate(*c.policy, t).empty());
    for (const auto& b : c.policy->basics) {
      CHECK(b.data.kind == ExprKind::Atom);
      CHECK(b.data.atom != iri::null_class());
      CHECK(b.storage.duration.kind == DurationExpr::Kind::Interval);
      CHECK(b.storage.duration.min_days == 0);
    }
  }

  SUBCASE("a single user yields a single assertion") {
    cfg.users = 1;
    CHECK(gen_consents(cfg, t).size() == 1);
  }
  SUBCASE("the same seed *yields byte-identical output") {
    std::string a, b;
    for (const auto& c : gen_consents(cfg, t)) a += to_json(c) + '\n';
    for (const auto& c : gen_consents(cfg, t)) b += to_json(c) + '\n';
    CHECK(a == b);
  }
}

TEST_CASE("event counts follow users x floor(test_time / rate)") {
  GenConfig cfg;
  cfg.users = 1000;
  cfg.rate_ns = parse_duration_ns("10s");
  cfg.test_time_ns = parse_duration_ns("20m");
  CHECK(expected_event_count(cfg) == 120'000);

  cfg.rate_ns = parse_duration_ns("1s");
  CHECK(expected_event_count(cfg) == 1'200'000);

  // exact loop check on small random configurations
  std::mt19937_64 rng(64);
  const Taxonomy t = Taxonomy::builtin_special();
  for (int i = 0; i < 6; ++i) {
    GenConfig small;
    small.users = 1 + static_cast<int>(rng() % 9);
    small.rate_ns = static_cast<std::int64_t>(1 + rng() % 50) * 100'000'000;
    small.test_time_ns = static_cast<std::int64_t>(1 + rng() % 20) * 1'000'000'000;
    small.seed = rng();
    const auto consents = gen_consents(small, t);
    const auto events = gen_events(small, consents, t);
    CHECK(events.size() ==
          static_cast<std::uint64_t>(small.users) *
              static_cast<std::uint64_t>(*small.test_time_ns / small.rate_ns));
    // arrivals are non-decreasing and within the test time
    for (std::size_t k = 1; k < events.size(); ++k) {
      CHECK(events[k - 1].arrival_ns <= events[k].arrival_ns);
    }
    if (!events.empty()) {
      CHECK(events.back().arrival_ns <= *small.test_time_ns);
    }
  }
}

TEST_CASE("event generation matches its labels and ratios") {
  const Taxonomy t = Taxonomy::builtin_special();
  GenConfig cfg;
  cfg.users = 20;
  cfg.policies = 3;
  cfg.events = 600;
  cfg.seed = 99;

  SUBCASE("pass ratio 0: every event is a verified violation") {
    cfg.pass_ratio = 0;
    const auto consents = gen_consents(cfg, t);
    const auto events = gen_events(cfg, consents, t);
    std::map<std::string, GeneralPolicy> by_user;
    for (const auto& c : consents) by_user[*c.data_subject] = *c.policy;
    for (const auto& ev : events) {
      CHECK_FALSE(ev.intended_compliant);
      CHECK_FALSE(
          complies(*ev.entry.content, by_user.at(*ev.entry.data_subject), t)
              .compliant);
    }
  }
  SUBCASE("pass ratio 100: every event is a verified match") {
    cfg.pass_ratio = 100;
    const auto consents = gen_consents(cfg, t);
    const auto events = gen_events(cfg, consents, t);
    std::map<std::string, GeneralPolicy> by_user;
    for (const auto& c : consents) by_user[*c.data_subject] = *c.policy;
    for (const auto& ev : events) {
      CHECK(ev.intended_compliant);
      CHECK(complies(*ev.entry.content, by_user.at(*ev.entry.data_subject), t)
                .compliant);
    }
  }
  SUBCASE("integral ratios are hit exactly") {
    for (double ratio : {25.0, 50.0, 75.0}) {
      cfg.pass_ratio = ratio;
      const auto consents = gen_consents(cfg, t);
      const auto events = gen_events(cfg, consents, t);
      std::size_t compliant = 0;
      for (const auto& ev : events) compliant += ev.intended_compliant;
      CHECK(compliant ==
            static_cast<std::size_t>(600.0 * ratio / 100.0));
    }
  }
  SUBCASE("random ratio still produces verified labels") {
    cfg.pass_ratio.reset();
    const auto consents = gen_consents(cfg, t);
    const auto events = gen_events(cfg, consents, t);
    std::map<std::string, GeneralPolicy> by_user;
    for (const auto& c : consents) by_user[*c.data_subject] = *c.policy;
    std::size_t compliant = 0;
    for (const auto& ev : events) {
      const bool verdict =
          complies(*ev.entry.content, by_user.at(*ev.entry.data_subject), t)
              .compliant;
      CHECK(verdict == ev.intended_compliant);
      compliant += verdict;
    }
    CHECK(compliant > 200);  // an unbiased coin stays near half
    CHECK(compliant < 400);
  }
  SUBCASE("the same seed yields byte-identical events") {
    cfg.pass_ratio = 50;
    const auto consents = gen_consents(cfg, t);
    std::string a, b;
    for (const auto& ev : gen_events(cfg, consents, t)) {
      a += to_json(ev.entry) + '\n';
    }
    for (const auto& ev : gen_events(cfg, consents, t)) {
      b += to_json(ev.entry) + '\n';
    }
    CHECK(a == b);
  }
}

TEST_CASE("a top consent makes violations impossible") {
  const Taxonomy t = Taxonomy::builtin_special();
  LogEntry consent;
  consent.entry_id = "c-" + user_name(1);
  consent.log_id = "app";
  consent.kind = EntryKind::ConsentAssertion;
  consent.data_subject = user_name(1);
  consent.validity_time = 0;
  consent.policy = top_consent();

  GenConfig cfg;
  cfg.users = 1;
  cfg.events = 10;
  cfg.pass_ratio = 0;
  CHECK_THROWS_WITH_AS(
      static_cast<void>(
          gen_events(cfg, std::vector<LogEntry>{consent}, t)),
      doctest::Contains("GenerationStuck"), Error);
}

TEST_CASE("nearest-rank percentile") {
  std::vector<std::int64_t> ranks;
  for (int i = 1; i <= 100; ++i) ranks.push_back(i * 1'000'000);
  CHECK(percentile_ns(ranks, 95) == 95'000'000);
  CHECK(percentile_ns(ranks, 100) == 100'000'000);
  CHECK(percentile_ns(ranks, 1) == 1'000'000);

  const std::vector<std::int64_t> single{5'000'000};
  CHECK(percentile_ns(single, 1) == 5'000'000);
  CHECK(percentile_ns(single, 50) == 5'000'000);
  CHECK(percentile_ns(single, 100) == 5'000'000);

  CHECK_THROWS_WITH_AS(percentile_ns({}, 50), doctest::Contains("EmptyInput"),
                       Error);
  CHECK_THROWS_AS(percentile_ns(single, 0), Error);
  CHECK_THROWS_AS(percentile_ns(single, 101), Error);

  SUBCASE("matches a sort-based reference on 1000 random arrays") {
    std::mt19937_64 rng(4242);
    for (int round = 0; round < 1000; ++round) {
      std::vector<std::int64_t> data(1 + rng() % 200);
      for (auto& v : data) v = static_cast<std::int64_t>(rng() % 1'000'000);
      const double p[] = {1, 25, 50, 75, 90, 95, 99, 100};
      const double pick = p[rng() % 8];

      std::vector<std::int64_t> sorted = data;
      std::sort(sorted.begin(), sorted.end());
      // reference: walk the sorted array until >= p percent is covered
      std::size_t rank = 0;
      while (rank < sorted.size() &&
             100.0 * static_cast<double>(rank) <
                 pick * static_cast<double>(sorted.size())) {
        ++rank;
      }
      if (rank == 0) rank = 1;
      CHECK(percentile_ns(data, pick) == sorted[rank - 1]);
    }
  }
  SUBCASE("monotone in p and p100 is the maximum") {
    std::mt19937_64 rng(5150);
    std::vector<std::int64_t> data(157);
    for (auto& v : data) v = static_cast<std::int64_t>(rng() % 10'000);
    std::int64_t prev = 0;
    for (double p = 5; p <= 100; p += 5) {
      const auto v = percentile_ns(data, p);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(percentile_ns(data, 100) ==
          *std::max_element(data.begin(), data.end()));
  }
}

TEST_CASE("windowed percentiles") {
  SUBCASE("constant latencies") {
    std::vector<std::int64_t> lat(2000, 1'000'000);
    const auto rows = windowed_percentiles(lat, 1000);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
      CHECK(r.p50_ms == 1.0);
      CHECK(r.p75_ms == 1.0);
      CHECK(r.p95_ms == 1.0);
    }
    CHECK(rows[0].end_index == 1000);
    CHECK(rows[1].end_index == 2000);
  }
  SUBCASE("monotonically increasing latencies give a strictly rising p95") {
    std::vector<std::int64_t> lat;
    for (int i = 0; i < 5000; ++i) lat.push_back(i * 1000);
    const auto rows = windowed_percentiles(lat, 1000);
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].p95_ms > rows[i - 1].p95_ms);
    }
  }
  SUBCASE("partial trailing windows are dropped") {
    std::vector<std::int64_t> lat(1499, 1);
    CHECK(windowed_percentiles(lat, 1000).size() == 1);
  }
  SUBCASE("cumulative mode accumulates prefixes") {
    std::vector<std::int64_t> lat;
    for (int i = 1; i <= 3000; ++i) lat.push_back(i);
    const auto rows = cumulative_percentiles(lat, 1000);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].end_index == 1000);
    CHECK(rows[2].end_index == 3000);
    CHECK(rows[2].p50_ms > rows[0].p50_ms);
  }
}

TEST_CASE("the benchmark task table") {
  CHECK(task_table().size() == 25);

  const TaskSpec t11 = task_by_id("C-T1-1");
  CHECK(t11.users == 1000);
  CHECK(t11.rate_ns == parse_duration_ns("10s"));
  CHECK(t11.policy_union_size == 1);
  CHECK(t11.test_time_ns == parse_duration_ns("20m"));
  CHECK_FALSE(t11.pass_ratio.has_value());

  CHECK(task_by_id("C-T1-5").policy_union_size == 30);
  CHECK(task_by_id("C-T2-5").users == 1'000'000);
  CHECK(task_by_id("C-T3-1").pass_ratio == 0.0);
  CHECK(task_by_id("C-T3-5").pass_ratio == 100.0);
  // the highest generation rate row is one event per 100 ms per user
  CHECK(task_by_id("C-T4-5").rate_ns == parse_duration_ns("100ms"));
  CHECK(task_by_id("C-T5-2").event_count == 1'000'000);
  CHECK(task_by_id("C-T5-5").event_count == 1'000'000'000);
  CHECK(task_by_id("C-T5-1").scenario == TaskSpec::Scenario::Batch);

  CHECK(expected_event_count(task_by_id("C-T4-4")) == 1'200'000);
  CHECK(expected_event_count(task_by_id("C-T1-1")) == 120'000);

  SUBCASE("desk scaling divides users and test time") {
    const TaskSpec scaled = task_by_id("C-T2-2@scale10");
    CHECK(scaled.users == 100);
    CHECK(scaled.test_time_ns == parse_duration_ns("2m"));
    CHECK(scaled.task_id == "C-T2-2@scale10");
    const TaskSpec batch = task_by_id("C-T5-2@scale1000");
    CHECK(batch.event_count == 1'000);
  }
  SUBCASE("unknown ids and bad scales are rejected") {
    CHECK_THROWS_AS(task_by_id("C-T9-1"), Error);
    CHECK_THROWS_AS(task_by_id("C-T1-1@scale0"), Error);
    CHECK_THROWS_AS(task_by_id("C-T1-1@scalefoo"), Error);
  }
}

TEST_CASE("metrics and report recomputation round-trip bit-exactly") {
  std::mt19937_64 rng(2025);
  std::vector<Sample> samples;
  for (int i = 0; i < 2500; ++i) {
    Sample s;
    s.event_id = "e-" + std::to_string(i);
    s.enqueue_ns = static_cast<std::int64_t>(rng() % 1'000'000'000);
    s.latency_ns = static_cast<std::int64_t>(rng() % 50'000'000);
    s.done_ns = s.enqueue_ns + s.latency_ns;
    s.compliant = rng() % 2;
    samples.push_back(std::move(s));
  }

  std::vector<Sample> run_order = samples;
  const MetricsReport direct = metrics_from_samples(run_order, 500, 0.1);
  const std::string report_bytes = report_to_json(direct).dump(2) + "\n";

  const auto dir = std::filesystem::temp_directory_path() / "consentlog-test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "latencies.csv").string();
  write_latency_csv(csv, run_order);

  std::vector<Sample> reloaded = read_latency_csv(csv);
  const MetricsReport recomputed = metrics_from_samples(reloaded, 500, 0.1);
  CHECK(report_to_json(recomputed).dump(2) + "\n" == report_bytes);

  CHECK(direct.count == 2500);
  CHECK(direct.warmup_events == 250);
  CHECK(direct.p50_ms <= direct.p75_ms);
  CHECK(direct.p75_ms <= direct.p95_ms);
  CHECK(direct.series.size() == 5);

  // throughput conservation: bucket counts sum to the total
  std::size_t bucketed = 0;
  for (const auto& [second, n] : direct.throughput_series) bucketed += n;
  CHECK(bucketed == direct.count);
}

TEST_CASE("virtual-time task runs are deterministic") {
  const Taxonomy t = Taxonomy::builtin_special();
  TaskSpec spec = task_by_id("C-T4-4");
  spec.users = 10;
  spec.rate_ns = parse_duration_ns("100ms");
  spec.test_time_ns = parse_duration_ns("2s");

  RunOptions opts;
  opts.checkers = 3;
  opts.partitions = 5;
  opts.virtual_time = true;
  opts.injected_delay_ns = 500'000;
  opts.seed = 11;
  opts.window = 50;

  const auto dir = std::filesystem::temp_directory_path() / "consentlog-vt";
  std::filesystem::remove_all(dir);
  opts.out_dir = (dir / "a").string();
  const MetricsReport a = run_task(spec, opts, t);
  opts.out_dir = (dir / "b").string();
  const MetricsReport b = run_task(spec, opts, t);

  CHECK(a.count == 200);
  CHECK(a.count == b.count);
  CHECK(a.compliant_count == b.compliant_count);
  CHECK(a.label_mismatches == 0);
  CHECK(b.label_mismatches == 0);
  CHECK(a.storage_bytes == b.storage_bytes);
  CHECK(a.median_ms == b.median_ms);

  const auto read_file = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
  };
  CHECK(read_file(dir / "a" / "latencies.csv") ==
        read_file(dir / "b" / "latencies.csv"));
  CHECK(read_file(dir / "a" / "report.json") ==
        read_file(dir / "b" / "report.json"));
  CHECK(read_file(dir / "a" / "series.csv") ==
        read_file(dir / "b" / "series.csv"));
}

TEST_CASE("wall-clock batch run delivers every event exactly once") {
  const Taxonomy t = Taxonomy::builtin_special();
  TaskSpec spec = task_by_id("C-T5-1@scale250");  // 400 events
  RunOptions opts;
  opts.checkers = 2;
  opts.partitions = 4;
  opts.seed = 3;

  const MetricsReport r = run_task(spec, opts, t);
  CHECK(r.count == 400);
  CHECK(r.label_mismatches == 0);
  CHECK(r.throughput_total_eps > 0);
  std::size_t checked = 0;
  for (const auto& [checker, n] : r.per_checker_events) checked += n;
  CHECK(checked == 400);
  CHECK(r.storage_bytes > 0);
}

TEST_CASE("an empty streaming run reports zero events") {
  const Taxonomy t = Taxonomy::builtin_special();
  TaskSpec spec = task_by_id("C-T1-1");
  spec.users = 2;
  spec.rate_ns = parse_duration_ns("10s");
  spec.test_time_ns = parse_duration_ns("1s");  // shorter than one interval
  RunOptions opts;
  opts.virtual_time = true;
  const MetricsReport r = run_task(spec, opts, t);
  CHECK(r.count == 0);
  CHECK(r.throughput_total_eps == 0);
  CHECK(r.series.empty());
}

TEST_CASE("resource sampling degrades gracefully and samples on schedule") {
  if (!ResourceSampler::supported()) {
    ResourceSampler sampler(100'000'000);
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    CHECK(sampler.samples().empty());
    return;
  }
  ResourceSampler sampler(200'000'000);  // 200 ms
  const auto until = std::chrono::steady_clock::now() +
                     std::chrono::milliseconds(2'100);
  volatile std::uint64_t sink = 0;
  while (std::chrono::steady_clock::now() < until) {
    sink += 1;  // busy loop so cpu usage is visible
  }
  const auto samples = sampler.samples();
  CHECK(samples.size() >= 9);
  CHECK(samples.size() <= 11);
  bool any_cpu = false;
  for (const auto& s : samples) {
    if (s.cpu_pct > 10.0) any_cpu = true;
    CHECK(s.rss_bytes > 0);
  }
  CHECK(any_cpu);
}
