#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "consentlog/genbench.hpp"

namespace consentlog::testing {

// --- fixtures (the BeFit tracking scenario) ---------------------------------

inline const char* kBefitTaxonomy =
    "@prefix befit <http://www.befit.example/ns#>\n"
    "befit:SensorGathering subClassOf svpr:Collect\n"
    "befit:HealthTracking subClassOf svpu:Health\n";

inline constexpr const char* kBefitSensorGathering =
    "http://www.befit.example/ns#SensorGathering";
inline constexpr const char* kBefitHealthTracking =
    "http://www.befit.example/ns#HealthTracking";

inline std::string svd(const char* name) {
  return std::string("http://www.specialprivacy.eu/vocabs/data#") + name;
}
inline std::string svpr(const char* name) {
  return std::string("http://www.specialprivacy.eu/vocabs/processing#") + name;
}
inline std::string svpu(const char* name) {
  return std::string("http://www.specialprivacy.eu/vocabs/purposes#") + name;
}
inline std::string svr(const char* name) {
  return std::string("http://www.specialprivacy.eu/vocabs/recipients#") + name;
}
inline std::string svl(const char* name) {
  return std::string("http://www.specialprivacy.eu/vocabs/locations#") + name;
}
inline std::string svdu(const char* name) {
  return std::string("http://www.specialprivacy.eu/vocabs/duration#") + name;
}

inline LogContent befit_tracking_content() {
  LogContent c;
  c.data = ClassExpr::atom_of(svd("Location"));
  c.processing = ClassExpr::atom_of(kBefitSensorGathering);
  c.purpose = ClassExpr::atom_of(kBefitHealthTracking);
  c.recipient = ClassExpr::atom_of(svr("Ours"));
  c.storage.location = ClassExpr::atom_of(svl("OurServers"));
  c.storage.duration = DurationExpr::days(30);
  return c;
}

inline GeneralPolicy befit_collect_consent() {
  BasicPolicy b;
  b.data = ClassExpr::atom_of(svd("Location"));
  b.processing = ClassExpr::atom_of(svpr("Collect"));
  b.purpose = ClassExpr::atom_of(svpu("Health"));
  b.recipient = ClassExpr::atom_of(svr("Ours"));
  b.storage.location = ClassExpr::atom_of(svl("OurServers"));
  b.storage.duration = DurationExpr::unbounded_from(0);
  return GeneralPolicy{{b}};
}

/// A policy whose every attribute is the category root with an unbounded
/// duration: authorizes every operation.
inline GeneralPolicy top_consent() {
  BasicPolicy b;
  b.data = ClassExpr::atom_of(iri::any_root(Category::Data));
  b.processing = ClassExpr::atom_of(iri::any_root(Category::Processing));
  b.purpose = ClassExpr::atom_of(iri::any_root(Category::Purpose));
  b.recipient = ClassExpr::atom_of(iri::any_root(Category::Recipient));
  b.storage.location = ClassExpr::atom_of(iri::any_root(Category::Location));
  b.storage.duration = DurationExpr::unbounded_from(0);
  return GeneralPolicy{{b}};
}

// --- random taxonomies --------------------------------------------------------

struct RandomWorld {
  Taxonomy taxonomy{Taxonomy::builtin_special()};
  std::string source;
  std::array<std::vector<std::string>, kCategoryCount> classes;  // new IRIs
};

/// Builds a random extension DAG: up to max_new classes spread over the six
/// categories, each with one or two parents among the earlier classes of the
/// same category (or a built-in anchor), so multi-parent diamonds appear.
inline RandomWorld make_random_world(std::mt19937_64& rng, int max_new = 40) {
  static const char* anchors[6][3] = {
      {"spl:AnyData", "svd:Health", "svd:Location"},
      {"spl:AnyProcessing", "svpr:Collect", "svpr:Analyze"},
      {"spl:AnyPurpose", "svpu:Health", "svpu:Marketing"},
      {"spl:AnyRecipient", "svr:Ours", "svr:Public"},
      {"spl:AnyLocation", "svl:EU", "svl:OurServers"},
      {"spl:AnyDuration", "svdu:Indefinitely", "svdu:StatedPurpose"},
  };
  static const char* code = "DPURLT";

  RandomWorld world;
  std::string src = "@prefix tst <http://test.example/ns#>\n";
  std::array<std::vector<std::string>, kCategoryCount> curies;
  const int total = 12 + static_cast<int>(rng() % (max_new > 12 ? max_new - 11 : 1));
  for (int i = 0; i < total; ++i) {
    const int cat = static_cast<int>(rng() % 6);
    const std::string curie =
        std::string("tst:") + code[cat] + std::to_string(curies[cat].size());
    const int n_parents = (rng() % 4 == 0 && !curies[cat].empty()) ? 2 : 1;
    std::set<std::string> parents;
    for (int p = 0; p < n_parents; ++p) {
      if (!curies[cat].empty() && rng() % 3 != 0) {
        parents.insert(curies[cat][rng() % curies[cat].size()]);
      } else {
        parents.insert(anchors[cat][rng() % 3]);
      }
    }
    for (const auto& parent : parents) {
      src += curie + " subClassOf " + parent + "\n";
    }
    curies[cat].push_back(curie);
    world.classes[cat].push_back("http://test.example/ns#" + curie.substr(4));
  }
  world.source = src;
  world.taxonomy = Taxonomy::load(src);
  return world;
}

// --- random expressions and policies ---------------------------------------------

inline ClassExpr random_expr(std::mt19937_64& rng, const RandomWorld& world,
                             Category cat, int depth) {
  const auto& pool = world.classes[static_cast<int>(cat)];
  const auto atom = [&]() -> ClassExpr {
    if (pool.empty()) return ClassExpr::top(cat);
    return ClassExpr::atom_of(pool[rng() % pool.size()]);
  };
  const std::uint64_t roll = rng() % 100;
  if (depth == 0 || roll < 72) {
    if (roll < 4) return ClassExpr::top(cat);
    if (roll < 8) return ClassExpr::null(cat);
    return atom();
  }
  const std::size_t arity = 2 + rng() % 2;
  std::vector<ClassExpr> parts;
  for (std::size_t i = 0; i < arity; ++i) {
    parts.push_back(random_expr(rng, world, cat, depth - 1));
  }
  if (roll < 86) return ClassExpr::union_of(std::move(parts));
  return ClassExpr::intersection_of(std::move(parts));
}

inline DurationExpr random_content_duration(std::mt19937_64& rng,
                                            const RandomWorld& world) {
  const std::uint64_t roll = rng() % 100;
  if (roll < 70) return DurationExpr::days(static_cast<std::int64_t>(rng() % 731));
  if (roll < 90) {
    const auto& pool = world.classes[static_cast<int>(Category::Duration)];
    if (!pool.empty()) return DurationExpr::of_class(pool[rng() % pool.size()]);
  }
  if (roll < 95) return DurationExpr::of_class(svdu("Indefinitely"));
  return DurationExpr::of_class(iri::null_class());
}

inline DurationExpr random_policy_duration(std::mt19937_64& rng,
                                           const RandomWorld& world) {
  const std::uint64_t roll = rng() % 100;
  if (roll < 60) {
    const auto min = static_cast<std::int64_t>(rng() % 731);
    if (rng() % 2 == 0) return DurationExpr::unbounded_from(min);
    return DurationExpr::interval(min,
                                  min + static_cast<std::int64_t>(rng() % 731));
  }
  if (roll < 85) {
    const auto& pool = world.classes[static_cast<int>(Category::Duration)];
    if (!pool.empty()) return DurationExpr::of_class(pool[rng() % pool.size()]);
    return DurationExpr::of_class(svdu("Indefinitely"));
  }
  if (roll < 95) {
    return DurationExpr::of_class(
        std::string("http://www.specialprivacy.eu/langs/usage-policy#") +
        "AnyDuration");
  }
  return DurationExpr::of_class(iri::null_class());
}

inline LogContent random_content(std::mt19937_64& rng, const RandomWorld& world,
                                 int depth = 2) {
  LogContent c;
  c.data = random_expr(rng, world, Category::Data, depth);
  c.processing = random_expr(rng, world, Category::Processing, depth);
  c.purpose = random_expr(rng, world, Category::Purpose, depth);
  c.recipient = random_expr(rng, world, Category::Recipient, depth);
  c.storage.location = random_expr(rng, world, Category::Location, depth);
  c.storage.duration = random_content_duration(rng, world);
  return c;
}

inline GeneralPolicy random_policy(std::mt19937_64& rng,
                                   const RandomWorld& world, int max_basics = 4,
                                   int depth = 2) {
  GeneralPolicy p;
  const std::size_t n = 1 + rng() % max_basics;
  for (std::size_t i = 0; i < n; ++i) {
    BasicPolicy b;
    b.data = random_expr(rng, world, Category::Data, depth);
    b.processing = random_expr(rng, world, Category::Processing, depth);
    b.purpose = random_expr(rng, world, Category::Purpose, depth);
    b.recipient = random_expr(rng, world, Category::Recipient, depth);
    b.storage.location = random_expr(rng, world, Category::Location, depth);
    b.storage.duration = random_policy_duration(rng, world);
    p.basics.push_back(std::move(b));
  }
  return p;
}

// --- independent oracles -----------------------------------------------------------

/// Reachability by plain DFS over the raw parent edges; deliberately avoids
/// the precomputed closure it is used to check.
inline bool oracle_reaches(const Taxonomy& t, Taxonomy::NodeId from,
                           Taxonomy::NodeId to) {
  if (from == to) return true;
  std::vector<Taxonomy::NodeId> stack{from};
  std::set<Taxonomy::NodeId> seen{from};
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    for (const auto parent : t.parents_of(cur)) {
      if (parent == to) return true;
      if (seen.insert(parent).second) stack.push_back(parent);
    }
  }
  return false;
}

/// Set-valued expression extension computed against oracle_reaches; the
/// reference for expr_extension and subsumes_expr.
inline std::set<Taxonomy::NodeId> oracle_extension(const Taxonomy& t,
                                                   const ClassExpr& e,
                                                   Category cat) {
  std::set<Taxonomy::NodeId> out;
  switch (e.kind) {
    case ExprKind::Atom: {
      const auto n = t.require(e.atom, cat);
      if (t.is_null(n)) return out;
      t.category_mask(cat).for_each([&](std::size_t i) {
        if (oracle_reaches(t, static_cast<Taxonomy::NodeId>(i), n)) {
          out.insert(static_cast<Taxonomy::NodeId>(i));
        }
      });
      return out;
    }
    case ExprKind::Top: {
      t.category_mask(cat).for_each(
          [&](std::size_t i) { out.insert(static_cast<Taxonomy::NodeId>(i)); });
      return out;
    }
    case ExprKind::Null:
      return out;
    case ExprKind::Union: {
      for (const auto& p : e.parts) {
        auto inner = oracle_extension(t, p, cat);
        out.insert(inner.begin(), inner.end());
      }
      return out;
    }
    case ExprKind::Intersection: {
      bool first = true;
      for (const auto& p : e.parts) {
        auto inner = oracle_extension(t, p, cat);
        if (first) {
          out = std::move(inner);
          first = false;
        } else {
          std::set<Taxonomy::NodeId> merged;
          for (const auto n : out) {
            if (inner.contains(n)) merged.insert(n);
          }
          out = std::move(merged);
        }
      }
      return out;
    }
  }
  return out;
}

inline std::set<Taxonomy::NodeId> bits_to_set(const Bitset& b) {
  std::set<Taxonomy::NodeId> out;
  b.for_each([&](std::size_t i) { out.insert(static_cast<Taxonomy::NodeId>(i)); });
  return out;
}

}  // namespace consentlog::testing
