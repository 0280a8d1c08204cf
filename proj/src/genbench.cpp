#include "consentlog/genbench.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace consentlog {

std::int64_t parse_duration_ns(std::string_view s) {
  if (s.empty()) raise(Errc::BadDuration, "empty duration");
  std::int64_t total = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] < '0' || s[i] > '9') {
      raise(Errc::BadDuration,
            "expected a number in duration '" + std::string(s) + "'");
    }
    std::int64_t value = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      value = value * 10 + (s[i] - '0');
      if (value > 9'000'000'000'000'000'000 / 1000) {
        raise(Errc::BadDuration, "duration overflows: '" + std::string(s) + "'");
      }
      ++i;
    }
    std::int64_t unit = 0;
    if (i + 1 < s.size() && s[i] == 'n' && s[i + 1] == 's') {
      unit = 1;
      i += 2;
    } else if (i + 1 < s.size() && s[i] == 'u' && s[i + 1] == 's') {
      unit = 1'000;
      i += 2;
    } else if (i + 1 < s.size() && s[i] == 'm' && s[i + 1] == 's') {
      unit = 1'000'000;
      i += 2;
    } else if (i < s.size() && s[i] == 's') {
      unit = 1'000'000'000;
      i += 1;
    } else if (i < s.size() && s[i] == 'm') {
      unit = 60ll * 1'000'000'000;
      i += 1;
    } else if (i < s.size() && s[i] == 'h') {
      unit = 3600ll * 1'000'000'000;
      i += 1;
    } else {
      raise(Errc::BadDuration,
            "unknown unit in duration '" + std::string(s) +
                "' (use ns, us, ms, s, m, h)");
    }
    if (value > (9'000'000'000'000'000'000 - total) / unit) {
      raise(Errc::BadDuration, "duration overflows: '" + std::string(s) + "'");
    }
    total += value * unit;
  }
  if (total <= 0) {
    raise(Errc::BadDuration, "duration must be positive: '" + std::string(s) + "'");
  }
  return total;
}

// --- deterministic generation ---------------------------------------------------

namespace {

/// Deterministic bounded draws; mt19937_64 is bit-exact everywhere, and the
/// modulo keeps draws reproducible (the bias is irrelevant for workload
/// shaping).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  std::uint64_t next() { return g_(); }
  std::uint64_t below(std::uint64_t n) { return g_() % n; }
  bool coin() { return (g_() & 1) != 0; }

 private:
  std::mt19937_64 g_;
};

std::vector<Taxonomy::NodeId> non_null_pool(const Taxonomy& t, Category c) {
  std::vector<Taxonomy::NodeId> out;
  t.category_mask(c).for_each([&](std::size_t i) {
    if (!t.is_null(static_cast<Taxonomy::NodeId>(i))) {
      out.push_back(static_cast<Taxonomy::NodeId>(i));
    }
  });
  return out;
}

constexpr std::array<Category, 5> kAttrCats = {
    Category::Data, Category::Processing, Category::Purpose,
    Category::Recipient, Category::Location};

ClassExpr& attr_of(LogContent& c, std::size_t index) {
  switch (index) {
    case 0: return c.data;
    case 1: return c.processing;
    case 2: return c.purpose;
    case 3: return c.recipient;
    default: return c.storage.location;
  }
}

const ClassExpr& attr_of(const BasicPolicy& b, std::size_t index) {
  switch (index) {
    case 0: return b.data;
    case 1: return b.processing;
    case 2: return b.purpose;
    case 3: return b.recipient;
    default: return b.storage.location;
  }
}

void check_config(const GenConfig& cfg) {
  if (cfg.users < 1) raise(Errc::ConfigError, "users must be >= 1");
  if (cfg.policies < 1) raise(Errc::ConfigError, "policies must be >= 1");
  if (cfg.rate_ns <= 0) raise(Errc::ConfigError, "rate must be positive");
  if (cfg.pass_ratio && (*cfg.pass_ratio < 0 || *cfg.pass_ratio > 100)) {
    raise(Errc::ConfigError, "pass ratio must be within [0, 100]");
  }
}

}  // namespace

std::string user_name(int index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "user-%05d", index);
  return buf;
}

std::vector<LogEntry> gen_consents(const GenConfig& cfg, const Taxonomy& t) {
  check_config(cfg);
  Rng rng(cfg.seed);
  std::array<std::vector<Taxonomy::NodeId>, 5> pool;
  for (std::size_t a = 0; a < 5; ++a) pool[a] = non_null_pool(t, kAttrCats[a]);

  std::vector<LogEntry> out;
  out.reserve(static_cast<std::size_t>(cfg.users));
  for (int u = 1; u <= cfg.users; ++u) {
    GeneralPolicy policy;
    const std::size_t n_basics =
        1 + rng.below(static_cast<std::uint64_t>(cfg.policies));
    for (std::size_t b = 0; b < n_basics; ++b) {
      const auto draw = [&](std::size_t a) {
        return ClassExpr::atom_of(t.iri_of(pool[a][rng.below(pool[a].size())]));
      };
      BasicPolicy basic;
      basic.data = draw(0);
      basic.processing = draw(1);
      basic.purpose = draw(2);
      basic.recipient = draw(3);
      basic.storage.location = draw(4);
      basic.storage.duration =
          rng.coin() ? DurationExpr::unbounded_from(0)
                     : DurationExpr::interval(0, 1 + static_cast<std::int64_t>(
                                                     rng.below(730)));
      policy.basics.push_back(std::move(basic));
    }

    LogEntry e;
    e.entry_id = "c-" + user_name(u);
    e.log_id = "app";
    e.kind = EntryKind::ConsentAssertion;
    e.data_subject = user_name(u);
    e.validity_time = kGenBaseMs - 86'400'000;  // one day before the stream
    e.transaction_time = e.validity_time;
    e.policy = std::move(policy);
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

class EventFactory {
 public:
  EventFactory(const GenConfig& cfg, std::span<const LogEntry> consents,
               const Taxonomy& t)
      : cfg_(cfg), taxonomy_(t), rng_(cfg.seed ^ 0x9e3779b97f4a7c15ull) {
    for (std::size_t a = 0; a < 5; ++a) {
      pool_[a] = non_null_pool(t, kAttrCats[a]);
    }
    for (const auto& c : consents) {
      if (c.kind != EntryKind::ConsentAssertion || !c.data_subject || !c.policy) {
        raise(Errc::ConfigError,
              "event generation needs consent assertions covering every user");
      }
      policies_[*c.data_subject] = &*c.policy;
    }
    for (int u = 1; u <= cfg.users; ++u) {
      if (!policies_.contains(user_name(u))) {
        raise(Errc::ConfigError, "no consent generated for " + user_name(u));
      }
    }
  }

  GeneratedEvent make(std::uint64_t index) {
    const int user_idx = static_cast<int>(index % cfg_.users) + 1;
    const std::uint64_t cycle = index / cfg_.users;
    const std::string user = user_name(user_idx);
    const GeneralPolicy& policy = *policies_.at(user);

    const bool want_compliant = pick_label(index);
    LogContent content =
        want_compliant ? make_compliant(policy) : make_violating(policy);
    const bool verdict = complies(content, policy, taxonomy_).compliant;
    if (verdict != want_compliant) {
      raise(Errc::GenerationStuck,
            "generated event does not match its intended label (event " +
                std::to_string(index) + ")");
    }

    const std::int64_t arrival =
        static_cast<std::int64_t>(cycle) * cfg_.rate_ns +
        (static_cast<std::int64_t>(user_idx) * cfg_.rate_ns) / cfg_.users;

    GeneratedEvent ev;
    ev.intended_compliant = want_compliant;
    ev.arrival_ns = arrival;
    LogEntry& e = ev.entry;
    char id[24];
    std::snprintf(id, sizeof id, "e-%08llu",
                  static_cast<unsigned long long>(index + 1));
    e.entry_id = id;
    e.log_id = "app";
    const bool sharing = rng_.below(8) == 0;
    e.kind = sharing ? EntryKind::SharingEvent : EntryKind::ProcessingEvent;
    if (sharing) {
      e.recipient_instances.push_back("partner-" +
                                      std::to_string(rng_.below(5) + 1));
    }
    e.data_subject = user;
    e.validity_time = kGenBaseMs + arrival / 1'000'000;
    e.transaction_time = e.validity_time + 50;
    e.content = std::move(content);
    return ev;
  }

 private:
  bool pick_label(std::uint64_t index) {
    if (!cfg_.pass_ratio) return rng_.coin();
    const auto pm = static_cast<std::uint64_t>(*cfg_.pass_ratio * 1000.0 + 0.5);
    return (index + 1) * pm / 100'000 > index * pm / 100'000;
  }

  ClassExpr specialize(const ClassExpr& e, Category cat) {
    std::vector<Taxonomy::NodeId> candidates;
    expr_extension(e, cat, taxonomy_).for_each([&](std::size_t i) {
      if (!taxonomy_.is_null(static_cast<Taxonomy::NodeId>(i))) {
        candidates.push_back(static_cast<Taxonomy::NodeId>(i));
      }
    });
    if (candidates.empty()) return ClassExpr::null(cat);
    return ClassExpr::atom_of(
        taxonomy_.iri_of(candidates[rng_.below(candidates.size())]));
  }

  DurationExpr specialize_duration(const DurationExpr& d) {
    if (d.kind == DurationExpr::Kind::Class) {
      std::vector<Taxonomy::NodeId> candidates;
      if (d.duration_class != iri::null_class()) {
        const auto n = taxonomy_.require(d.duration_class, Category::Duration);
        taxonomy_.descendants(n).for_each([&](std::size_t i) {
          if (!taxonomy_.is_null(static_cast<Taxonomy::NodeId>(i))) {
            candidates.push_back(static_cast<Taxonomy::NodeId>(i));
          }
        });
      }
      if (candidates.empty()) return DurationExpr::of_class(iri::null_class());
      return DurationExpr::of_class(
          taxonomy_.iri_of(candidates[rng_.below(candidates.size())]));
    }
    const std::int64_t lo = d.min_days;
    const std::int64_t hi = d.max_days ? std::min(*d.max_days, lo + 730) : lo + 730;
    return DurationExpr::days(
        lo + static_cast<std::int64_t>(rng_.below(
                 static_cast<std::uint64_t>(hi - lo + 1))));
  }

  LogContent make_compliant(const GeneralPolicy& policy) {
    const BasicPolicy& basic =
        policy.basics[rng_.below(policy.basics.size())];
    LogContent c;
    c.data = specialize(basic.data, Category::Data);
    c.processing = specialize(basic.processing, Category::Processing);
    c.purpose = specialize(basic.purpose, Category::Purpose);
    c.recipient = specialize(basic.recipient, Category::Recipient);
    c.storage.location = specialize(basic.storage.location, Category::Location);
    c.storage.duration = specialize_duration(basic.storage.duration);
    return c;
  }

  LogContent make_violating(const GeneralPolicy& policy) {
    for (int attempt = 0; attempt < 40; ++attempt) {
      LogContent c = make_compliant(policy);
      const std::size_t n_perturb = 1 + rng_.below(2);
      for (std::size_t k = 0; k < n_perturb; ++k) {
        const std::size_t slot = rng_.below(6);
        if (slot < 5) {
          const auto& candidates = pool_[slot];
          attr_of(c, slot) = ClassExpr::atom_of(
              taxonomy_.iri_of(candidates[rng_.below(candidates.size())]));
        } else {
          c.storage.duration =
              DurationExpr::days(static_cast<std::int64_t>(rng_.below(1462)));
        }
      }
      if (!complies(c, policy, taxonomy_).compliant) return c;
    }
    return violating_fallback(policy);
  }

  /// Deterministic violation: category roots on every attribute violate every
  /// basic policy that constrains some attribute; a duration outside every
  /// remaining all-root basic's interval handles the rest. When the union of
  /// those intervals covers all days the consent authorizes everything.
  LogContent violating_fallback(const GeneralPolicy& policy) {
    LogContent c;
    c.data = ClassExpr::atom_of(iri::any_root(Category::Data));
    c.processing = ClassExpr::atom_of(iri::any_root(Category::Processing));
    c.purpose = ClassExpr::atom_of(iri::any_root(Category::Purpose));
    c.recipient = ClassExpr::atom_of(iri::any_root(Category::Recipient));
    c.storage.location = ClassExpr::atom_of(iri::any_root(Category::Location));

    std::vector<const DurationExpr*> blocking;
    std::int64_t max_bound = -1;
    for (const auto& b : policy.basics) {
      bool all_root = true;
      for (std::size_t a = 0; a < 5 && all_root; ++a) {
        all_root = subsumes_expr(ClassExpr::top(kAttrCats[a]), attr_of(b, a),
                                 taxonomy_);
      }
      if (!all_root) continue;
      if (b.storage.duration.kind != DurationExpr::Kind::Interval) continue;
      blocking.push_back(&b.storage.duration);
      if (b.storage.duration.max_days) {
        max_bound = std::max(max_bound, *b.storage.duration.max_days);
      }
    }

    std::vector<std::int64_t> candidates{max_bound + 1};
    for (const auto* d : blocking) {
      for (std::int64_t e : {d->min_days - 1, d->min_days + 1}) {
        if (e >= 0) candidates.push_back(e);
      }
      if (d->max_days) candidates.push_back(*d->max_days + 1);
    }
    for (std::int64_t day : candidates) {
      const bool covered = std::any_of(
          blocking.begin(), blocking.end(), [&](const DurationExpr* d) {
            return day >= d->min_days && (!d->max_days || day <= *d->max_days);
          });
      if (covered) continue;
      c.storage.duration = DurationExpr::days(day);
      if (!complies(c, policy, taxonomy_).compliant) return c;
    }
    raise(Errc::GenerationStuck,
          "consent authorizes every operation; cannot generate a violating "
          "event");
  }

  const GenConfig& cfg_;
  const Taxonomy& taxonomy_;
  Rng rng_;
  std::array<std::vector<Taxonomy::NodeId>, 5> pool_;
  std::map<std::string, const GeneralPolicy*> policies_;
};

}  // namespace

std::uint64_t expected_event_count(const GenConfig& cfg) {
  if (cfg.events > 0) return static_cast<std::uint64_t>(cfg.events);
  if (cfg.test_time_ns) {
    return static_cast<std::uint64_t>(cfg.users) *
           static_cast<std::uint64_t>(*cfg.test_time_ns / cfg.rate_ns);
  }
  return 0;  // unbounded
}

std::uint64_t gen_events_stream(
    const GenConfig& cfg, std::span<const LogEntry> consents, const Taxonomy& t,
    const std::function<bool(GeneratedEvent&&)>& sink) {
  check_config(cfg);
  EventFactory factory(cfg, consents, t);
  const std::uint64_t total = expected_event_count(cfg);
  std::uint64_t emitted = 0;
  for (std::uint64_t g = 0; total == 0 || g < total; ++g) {
    if (!sink(factory.make(g))) break;
    ++emitted;
  }
  return emitted;
}

std::vector<GeneratedEvent> gen_events(const GenConfig& cfg,
                                       std::span<const LogEntry> consents,
                                       const Taxonomy& t) {
  std::vector<GeneratedEvent> out;
  const std::uint64_t total = expected_event_count(cfg);
  if (total == 0 && !cfg.test_time_ns) {
    raise(Errc::ConfigError,
          "unbounded stream: use gen_events_stream with a sink");
  }
  out.reserve(total);
  gen_events_stream(cfg, consents, t, [&](GeneratedEvent&& ev) {
    out.push_back(std::move(ev));
    return true;
  });
  return out;
}

// --- percentiles --------------------------------------------------------------------

std::int64_t percentile_ns(std::span<const std::int64_t> latencies, double p) {
  if (latencies.empty()) raise(Errc::EmptyInput, "percentile of no data");
  if (!(p > 0.0) || p > 100.0) {
    raise(Errc::ConfigError, "percentile must be in (0, 100]");
  }
  const auto pm = static_cast<std::uint64_t>(p * 1000.0 + 0.5);
  const std::uint64_t n = latencies.size();
  std::uint64_t rank = (pm * n + 99'999) / 100'000;
  rank = std::clamp<std::uint64_t>(rank, 1, n);
  std::vector<std::int64_t> copy(latencies.begin(), latencies.end());
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   copy.end());
  return copy[rank - 1];
}

namespace {

WindowRow window_row(std::span<const std::int64_t> win, std::size_t end_index) {
  WindowRow row;
  row.end_index = end_index;
  row.p50_ms = static_cast<double>(percentile_ns(win, 50)) / 1e6;
  row.p75_ms = static_cast<double>(percentile_ns(win, 75)) / 1e6;
  row.p95_ms = static_cast<double>(percentile_ns(win, 95)) / 1e6;
  return row;
}

}  // namespace

std::vector<WindowRow> windowed_percentiles(
    std::span<const std::int64_t> latencies, std::size_t window) {
  if (window < 1) raise(Errc::ConfigError, "window must be >= 1");
  std::vector<WindowRow> out;
  for (std::size_t start = 0; start + window <= latencies.size();
       start += window) {
    out.push_back(window_row(latencies.subspan(start, window), start + window));
  }
  return out;
}

std::vector<WindowRow> cumulative_percentiles(
    std::span<const std::int64_t> latencies, std::size_t window) {
  if (window < 1) raise(Errc::ConfigError, "window must be >= 1");
  std::vector<WindowRow> out;
  for (std::size_t end = window; end <= latencies.size(); end += window) {
    out.push_back(window_row(latencies.first(end), end));
  }
  return out;
}

// --- task table -----------------------------------------------------------------------

namespace {

std::vector<TaskSpec> build_task_table() {
  std::vector<TaskSpec> rows;
  const std::int64_t ten_s = 10ll * 1'000'000'000;
  const std::int64_t twenty_min = 20ll * 60 * 1'000'000'000;

  const int t1_policies[] = {1, 5, 10, 20, 30};
  for (int i = 0; i < 5; ++i) {
    TaskSpec s;
    s.task_id = "C-T1-" + std::to_string(i + 1);
    s.users = 1000;
    s.rate_ns = ten_s;
    s.policy_union_size = t1_policies[i];
    s.test_time_ns = twenty_min;
    rows.push_back(s);
  }
  const int t2_users[] = {100, 1'000, 10'000, 100'000, 1'000'000};
  for (int i = 0; i < 5; ++i) {
    TaskSpec s;
    s.task_id = "C-T2-" + std::to_string(i + 1);
    s.users = t2_users[i];
    s.rate_ns = ten_s;
    s.policy_union_size = 5;
    s.test_time_ns = twenty_min;
    rows.push_back(s);
  }
  const double t3_ratio[] = {0, 25, 50, 75, 100};
  for (int i = 0; i < 5; ++i) {
    TaskSpec s;
    s.task_id = "C-T3-" + std::to_string(i + 1);
    s.users = 1000;
    s.rate_ns = ten_s;
    s.policy_union_size = 5;
    s.test_time_ns = twenty_min;
    s.pass_ratio = t3_ratio[i];
    rows.push_back(s);
  }
  const std::int64_t t4_rates[] = {60ll * 1'000'000'000, 30ll * 1'000'000'000,
                                   ten_s, 1'000'000'000, 100'000'000};
  for (int i = 0; i < 5; ++i) {
    TaskSpec s;
    s.task_id = "C-T4-" + std::to_string(i + 1);
    s.users = 1000;
    s.rate_ns = t4_rates[i];
    s.policy_union_size = 5;
    s.test_time_ns = twenty_min;
    rows.push_back(s);
  }
  const int t5_users[] = {100, 1'000, 10'000, 100'000, 1'000'000};
  const std::uint64_t t5_events[] = {100'000, 1'000'000, 10'000'000,
                                     100'000'000, 1'000'000'000};
  for (int i = 0; i < 5; ++i) {
    TaskSpec s;
    s.task_id = "C-T5-" + std::to_string(i + 1);
    s.scenario = TaskSpec::Scenario::Batch;
    s.users = t5_users[i];
    s.rate_ns = 1'000'000'000;  // spaces validity timestamps only
    s.policy_union_size = 5;
    s.event_count = t5_events[i];
    rows.push_back(s);
  }
  return rows;
}

}  // namespace

const std::vector<TaskSpec>& task_table() {
  static const std::vector<TaskSpec> rows = build_task_table();
  return rows;
}

TaskSpec task_by_id(std::string_view id) {
  std::string_view base = id;
  std::uint64_t scale = 1;
  if (const auto at = id.find("@scale"); at != std::string_view::npos) {
    base = id.substr(0, at);
    const std::string k{id.substr(at + 6)};
    try {
      scale = std::stoull(k);
    } catch (...) {
      raise(Errc::ConfigError, "bad scale suffix in task id '" + std::string(id) + "'");
    }
    if (scale < 1) raise(Errc::ConfigError, "scale must be >= 1");
  }
  for (const auto& row : task_table()) {
    if (row.task_id != base) continue;
    TaskSpec s = row;
    s.task_id = std::string(id);
    if (scale > 1) {
      s.users = std::max<std::uint64_t>(1, s.users / scale);
      if (s.test_time_ns) {
        *s.test_time_ns = std::max<std::int64_t>(
            1, *s.test_time_ns / static_cast<std::int64_t>(scale));
      }
      if (s.event_count) {
        *s.event_count = std::max<std::uint64_t>(1, *s.event_count / scale);
      }
    }
    return s;
  }
  raise(Errc::ConfigError, "unknown task id '" + std::string(id) + "'");
}

std::uint64_t expected_event_count(const TaskSpec& spec) {
  if (spec.scenario == TaskSpec::Scenario::Batch) {
    return spec.event_count.value_or(0);
  }
  if (!spec.test_time_ns) return 0;
  return static_cast<std::uint64_t>(spec.users) *
         static_cast<std::uint64_t>(*spec.test_time_ns / spec.rate_ns);
}

}  // namespace consentlog
