#include "consentlog/reasoner.hpp"

#include <algorithm>

namespace consentlog {

const char* to_string(ComplianceReason r) noexcept {
  switch (r) {
    case ComplianceReason::Match: return "Match";
    case ComplianceReason::NoMatch: return "NoMatch";
    case ComplianceReason::NoConsent: return "NoConsent";
    case ComplianceReason::Revoked: return "Revoked";
  }
  return "?";
}

std::optional<ComplianceReason> reason_from_string(std::string_view s) noexcept {
  if (s == "Match") return ComplianceReason::Match;
  if (s == "NoMatch") return ComplianceReason::NoMatch;
  if (s == "NoConsent") return ComplianceReason::NoConsent;
  if (s == "Revoked") return ComplianceReason::Revoked;
  return std::nullopt;
}

namespace {

/// Resolves an atom, mapping the reserved spl:Null IRI to the per-category
/// bottom node.
Taxonomy::NodeId resolve_atom(const ClassId& iri, Category cat,
                              const Taxonomy& t) {
  return t.require(iri, cat);
}

bool is_null_atom(const ClassExpr& e, Category cat, const Taxonomy& t) {
  return e.kind == ExprKind::Atom && t.is_null(resolve_atom(e.atom, cat, t));
}

/// Membership of a single class token in the extension of d. Exact because
/// extensions are downward closed.
bool member(Taxonomy::NodeId x, const ClassExpr& d, Category cat,
            const Taxonomy& t) {
  switch (d.kind) {
    case ExprKind::Atom: {
      const auto nd = resolve_atom(d.atom, cat, t);
      if (t.is_null(nd)) return false;
      return t.is_subclass(x, nd);
    }
    case ExprKind::Top:
      return true;
    case ExprKind::Null:
      return false;
    case ExprKind::Union:
      return std::any_of(d.parts.begin(), d.parts.end(), [&](const auto& p) {
        return member(x, p, cat, t);
      });
    case ExprKind::Intersection:
      return std::all_of(d.parts.begin(), d.parts.end(), [&](const auto& p) {
        return member(x, p, cat, t);
      });
  }
  return false;
}

bool subsumes_rec(const ClassExpr& c, const ClassExpr& d, Category cat,
                  const Taxonomy& t) {
  if (c.kind == ExprKind::Union) {
    return std::all_of(c.parts.begin(), c.parts.end(), [&](const auto& p) {
      return subsumes_rec(p, d, cat, t);
    });
  }
  if (c.kind == ExprKind::Null || is_null_atom(c, cat, t)) return true;
  if (d.kind == ExprKind::Top) return true;
  if (d.kind == ExprKind::Intersection) {
    return std::all_of(d.parts.begin(), d.parts.end(), [&](const auto& p) {
      return subsumes_rec(c, p, cat, t);
    });
  }
  if (c.kind == ExprKind::Atom || c.kind == ExprKind::Top) {
    const auto top_node = c.kind == ExprKind::Top
                              ? t.root(cat)
                              : resolve_atom(c.atom, cat, t);
    return member(top_node, d, cat, t);
  }
  // Intersection on the left: extensions may have no single generator, so
  // decide by direct extension comparison.
  return expr_extension(c, cat, t).is_subset_of(expr_extension(d, cat, t));
}

}  // namespace

Category expr_category(const ClassExpr& e, const Taxonomy& t) {
  switch (e.kind) {
    case ExprKind::Top:
    case ExprKind::Null:
      return e.category;
    case ExprKind::Atom: {
      const auto n = t.find(e.atom);
      if (!n) {
        if (e.atom == iri::null_class()) return Category::Data;  // ambiguous
        raise(Errc::UnknownClass, e.atom + " is not declared");
      }
      return t.category_of(*n);
    }
    case ExprKind::Union:
    case ExprKind::Intersection:
      if (e.parts.empty()) raise(Errc::EmptyUnion, "expression has no members");
      return expr_category(e.parts.front(), t);
  }
  raise(Errc::ValidationError, "unreachable expression kind");
}

Bitset expr_extension(const ClassExpr& e, Category cat, const Taxonomy& t) {
  switch (e.kind) {
    case ExprKind::Atom: {
      const auto n = resolve_atom(e.atom, cat, t);
      if (t.is_null(n)) return Bitset(t.size());
      return t.descendants(n);
    }
    case ExprKind::Top:
      return t.category_mask(cat);
    case ExprKind::Null:
      return Bitset(t.size());
    case ExprKind::Union: {
      Bitset out(t.size());
      for (const auto& p : e.parts) out |= expr_extension(p, cat, t);
      return out;
    }
    case ExprKind::Intersection: {
      Bitset out = t.category_mask(cat);
      for (const auto& p : e.parts) out &= expr_extension(p, cat, t);
      return out;
    }
  }
  return Bitset(t.size());
}

bool expr_empty(const ClassExpr& e, Category cat, const Taxonomy& t) {
  switch (e.kind) {
    case ExprKind::Atom:
      return t.is_null(resolve_atom(e.atom, cat, t));
    case ExprKind::Top:
      return false;
    case ExprKind::Null:
      return true;
    case ExprKind::Union:
      return std::all_of(e.parts.begin(), e.parts.end(), [&](const auto& p) {
        return expr_empty(p, cat, t);
      });
    case ExprKind::Intersection:
      return expr_extension(e, cat, t).none();
  }
  return false;
}

bool subsumes_expr(const ClassExpr& c, const ClassExpr& d, const Taxonomy& t) {
  const Category cc = expr_category(c, t);
  const Category cd = expr_category(d, t);
  if (cc != cd) {
    raise(Errc::CategoryMismatch,
          std::string("cannot compare a ") + to_string(cc) +
              " expression against a " + to_string(cd) + " expression");
  }
  return subsumes_rec(c, d, cc, t);
}

bool duration_contained(const DurationExpr& c, const DurationExpr& p,
                        const Taxonomy& t) {
  const std::string null_iri = iri::null_class();
  const bool c_null =
      c.kind == DurationExpr::Kind::Class && c.duration_class == null_iri;
  if (c_null) return true;  // empty content duration
  const bool p_null =
      p.kind == DurationExpr::Kind::Class && p.duration_class == null_iri;
  if (p_null) return false;

  if (c.kind == DurationExpr::Kind::Interval &&
      p.kind == DurationExpr::Kind::Interval) {
    if (c.min_days < p.min_days) return false;
    if (!p.max_days) return true;
    return c.max_days && *c.max_days <= *p.max_days;
  }
  if (c.kind == DurationExpr::Kind::Class &&
      p.kind == DurationExpr::Kind::Class) {
    return t.is_subclass(t.require(c.duration_class, Category::Duration),
                         t.require(p.duration_class, Category::Duration));
  }
  return false;  // mixed kinds fail closed
}

bool content_empty(const LogContent& c, const Taxonomy& t) {
  if (expr_empty(c.data, Category::Data, t)) return true;
  if (expr_empty(c.processing, Category::Processing, t)) return true;
  if (expr_empty(c.purpose, Category::Purpose, t)) return true;
  if (expr_empty(c.recipient, Category::Recipient, t)) return true;
  if (expr_empty(c.storage.location, Category::Location, t)) return true;
  if (c.storage.duration.kind == DurationExpr::Kind::Class &&
      c.storage.duration.duration_class == iri::null_class()) {
    return true;
  }
  return false;
}

bool basic_subsumed(const LogContent& c, const BasicPolicy& p,
                    const Taxonomy& t) {
  if (content_empty(c, t)) return true;
  return subsumes_expr(c.data, p.data, t) &&
         subsumes_expr(c.processing, p.processing, t) &&
         subsumes_expr(c.purpose, p.purpose, t) &&
         subsumes_expr(c.recipient, p.recipient, t) &&
         subsumes_expr(c.storage.location, p.storage.location, t) &&
         duration_contained(c.storage.duration, p.storage.duration, t);
}

namespace {

/// Exact set-inclusion check for one union-free leaf against the whole
/// consent. Only needed when no single basic subsumes the leaf: a leaf whose
/// component sets are non-principal (an intersection without a top element,
/// or a non-degenerate day interval) can still be covered jointly by several
/// basics. Falls back to "not covered" when enumeration would blow up.
constexpr std::uint64_t kLeafCheckUniverse = 2'000'000;

bool leaf_covered_jointly(const LogContent& leaf, const GeneralPolicy& consent,
                          const Taxonomy& t) {
  try {
    return oracle_complies(leaf, consent, t, kLeafCheckUniverse);
  } catch (const Error& e) {
    if (e.code() == Errc::UniverseTooLarge) return false;
    throw;
  }
}

}  // namespace

ComplianceResult complies(const LogContent& c, const GeneralPolicy& consent,
                          const Taxonomy& t) {
  if (consent.basics.empty()) {
    raise(Errc::ValidationError, "consent policy has no basic policies");
  }
  const auto leaves = dnf(c);
  std::optional<std::size_t> first_match;
  for (const auto& leaf : leaves) {
    bool matched = false;
    for (std::size_t i = 0; i < consent.basics.size(); ++i) {
      if (basic_subsumed(leaf, consent.basics[i], t)) {
        if (!first_match) first_match = i;
        matched = true;
        break;
      }
    }
    if (!matched && consent.basics.size() > 1 &&
        leaf_covered_jointly(leaf, consent, t)) {
      matched = true;
    }
    if (!matched) return {false, std::nullopt, ComplianceReason::NoMatch};
  }
  ComplianceResult r;
  r.compliant = true;
  r.reason = ComplianceReason::Match;
  if (leaves.size() == 1) r.matched_basic = first_match;
  return r;
}

// --- oracle ------------------------------------------------------------------

namespace {

constexpr std::uint64_t kDayTag = 0;
constexpr std::uint64_t kClassTag = 1;
constexpr std::uint64_t kUnboundedToken = 2;

std::uint64_t day_token(std::int64_t day) {
  return (static_cast<std::uint64_t>(day) << 2) | kDayTag;
}

std::uint64_t class_token(Taxonomy::NodeId n) {
  return (static_cast<std::uint64_t>(n) << 2) | kClassTag;
}

void collect_endpoints(const DurationExpr& d, std::vector<std::int64_t>& out) {
  if (d.kind != DurationExpr::Kind::Interval) return;
  for (std::int64_t e : {d.min_days - 1, d.min_days, d.min_days + 1}) {
    if (e >= 0) out.push_back(e);
  }
  if (d.max_days) {
    for (std::int64_t e : {*d.max_days - 1, *d.max_days, *d.max_days + 1}) {
      if (e >= 0) out.push_back(e);
    }
  }
}

/// The duration component of a tuple set, enumerated over the day samples.
std::vector<std::uint64_t> duration_tokens(const DurationExpr& d,
                                           const std::vector<std::int64_t>& days,
                                           const Taxonomy& t) {
  std::vector<std::uint64_t> out;
  if (d.kind == DurationExpr::Kind::Class) {
    if (d.duration_class == iri::null_class()) return out;
    const auto n = t.require(d.duration_class, Category::Duration);
    t.descendants(n).for_each(
        [&](std::size_t i) { out.push_back(class_token(static_cast<Taxonomy::NodeId>(i))); });
    return out;
  }
  for (std::int64_t day : days) {
    if (day >= d.min_days && (!d.max_days || day <= *d.max_days)) {
      out.push_back(day_token(day));
    }
  }
  if (!d.max_days) out.push_back(kUnboundedToken);
  return out;
}

/// Membership of a duration token in a policy duration.
bool duration_token_in(std::uint64_t token, const DurationExpr& p,
                       const Taxonomy& t) {
  if (p.kind == DurationExpr::Kind::Class) {
    if (p.duration_class == iri::null_class()) return false;
    if ((token & 3) != kClassTag) return false;
    const auto x = static_cast<Taxonomy::NodeId>(token >> 2);
    return t.is_subclass(x, t.require(p.duration_class, Category::Duration));
  }
  if (token == kUnboundedToken) return !p.max_days;
  if ((token & 3) != kDayTag) return false;
  const auto day = static_cast<std::int64_t>(token >> 2);
  return day >= p.min_days && (!p.max_days || day <= *p.max_days);
}

struct ComponentSets {
  std::array<std::vector<Taxonomy::NodeId>, 5> classes;
  std::vector<std::uint64_t> durations;
};

ComponentSets content_components(const LogContent& c, const Taxonomy& t,
                                 const std::vector<std::int64_t>& days) {
  static constexpr std::array<Category, 5> cats = {
      Category::Data, Category::Processing, Category::Purpose,
      Category::Recipient, Category::Location};
  ComponentSets out;
  const std::array<const ClassExpr*, 5> exprs = {
      &c.data, &c.processing, &c.purpose, &c.recipient, &c.storage.location};
  for (std::size_t a = 0; a < 5; ++a) {
    expr_extension(*exprs[a], cats[a], t).for_each([&](std::size_t i) {
      out.classes[a].push_back(static_cast<Taxonomy::NodeId>(i));
    });
  }
  out.durations = duration_tokens(c.storage.duration, days, t);
  return out;
}

struct BasicSets {
  std::array<Bitset, 5> classes;
  const DurationExpr* duration;
};

BasicSets basic_components(const BasicPolicy& b, const Taxonomy& t) {
  BasicSets out;
  out.classes[0] = expr_extension(b.data, Category::Data, t);
  out.classes[1] = expr_extension(b.processing, Category::Processing, t);
  out.classes[2] = expr_extension(b.purpose, Category::Purpose, t);
  out.classes[3] = expr_extension(b.recipient, Category::Recipient, t);
  out.classes[4] = expr_extension(b.storage.location, Category::Location, t);
  out.duration = &b.storage.duration;
  return out;
}

std::uint64_t component_universe(const ComponentSets& s) {
  std::uint64_t total = 1;
  for (const auto& v : s.classes) {
    total *= static_cast<std::uint64_t>(v.size());
    if (total == 0) return 0;
  }
  total *= static_cast<std::uint64_t>(s.durations.size());
  return total;
}

template <typename Fn>
void for_each_tuple(const ComponentSets& s, Fn&& fn) {
  for (auto d : s.classes[0]) {
    for (auto pr : s.classes[1]) {
      for (auto pu : s.classes[2]) {
        for (auto r : s.classes[3]) {
          for (auto l : s.classes[4]) {
            for (auto dur : s.durations) {
              if (!fn(AuthTuple{d, pr, pu, r, l, dur})) return;
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::vector<std::int64_t> duration_sample_days(const LogContent& c,
                                               const GeneralPolicy& consent) {
  std::vector<std::int64_t> days;
  collect_endpoints(c.storage.duration, days);
  for (const auto& b : consent.basics) {
    collect_endpoints(b.storage.duration, days);
  }
  if (days.empty()) days.push_back(0);
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  return days;
}

std::set<AuthTuple> authorization_tuples(const LogContent& c, const Taxonomy& t,
                                         const std::vector<std::int64_t>& days,
                                         std::uint64_t max_universe) {
  const auto comps = content_components(c, t, days);
  if (component_universe(comps) > max_universe) {
    raise(Errc::UniverseTooLarge,
          "authorization tuple count " +
              std::to_string(component_universe(comps)) + " exceeds limit " +
              std::to_string(max_universe));
  }
  std::set<AuthTuple> out;
  for_each_tuple(comps, [&](const AuthTuple& tup) {
    out.insert(tup);
    return true;
  });
  return out;
}

bool oracle_complies(const LogContent& c, const GeneralPolicy& consent,
                     const Taxonomy& t, std::uint64_t max_universe) {
  const auto days = duration_sample_days(c, consent);
  const auto comps = content_components(c, t, days);
  const std::uint64_t universe = component_universe(comps);
  if (universe == 0) return true;  // empty set is included in anything
  if (universe > max_universe) {
    raise(Errc::UniverseTooLarge,
          "authorization tuple count " + std::to_string(universe) +
              " exceeds limit " + std::to_string(max_universe));
  }

  std::vector<BasicSets> basics;
  basics.reserve(consent.basics.size());
  for (const auto& b : consent.basics) basics.push_back(basic_components(b, t));

  bool included = true;
  for_each_tuple(comps, [&](const AuthTuple& tup) {
    for (const auto& b : basics) {
      bool in = true;
      for (std::size_t a = 0; a < 5; ++a) {
        if (!b.classes[a].test(tup[a])) {
          in = false;
          break;
        }
      }
      if (in && duration_token_in(tup[5], *b.duration, t)) return true;  // next tuple
    }
    included = false;
    return false;  // counterexample found, stop
  });
  return included;
}

}  // namespace consentlog
