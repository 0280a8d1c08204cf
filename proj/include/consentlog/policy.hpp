#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "consentlog/vocab.hpp"

namespace consentlog {

enum class ExprKind : std::uint8_t { Atom, Union, Intersection, Top, Null };

/// A class expression over one category: atoms, finite unions and
/// intersections, the category top (spl:Any*) and the empty bottom (spl:Null).
/// Values are immutable once built; construct through the factories.
struct ClassExpr {
  ExprKind kind = ExprKind::Atom;
  ClassId atom;                         // Atom only (expanded IRI)
  Category category = Category::Data;   // Top / Null only
  std::vector<ClassExpr> parts;         // Union / Intersection only

  static ClassExpr atom_of(ClassId iri);
  static ClassExpr top(Category c);
  static ClassExpr null(Category c);
  /// Length-1 lists collapse to the sole element; empty lists are rejected
  /// with EmptyUnion.
  static ClassExpr union_of(std::vector<ClassExpr> parts);
  static ClassExpr intersection_of(std::vector<ClassExpr> parts);

  bool operator==(const ClassExpr&) const = default;
};

/// Storage duration: either a Duration-category class or a day interval
/// [min_days, max_days], with an absent max meaning "unbounded".
struct DurationExpr {
  enum class Kind : std::uint8_t { Class, Interval };

  Kind kind = Kind::Interval;
  ClassId duration_class;               // Kind::Class (expanded IRI)
  std::int64_t min_days = 0;            // Kind::Interval
  std::optional<std::int64_t> max_days; // absent = unbounded

  static DurationExpr of_class(ClassId iri);
  static DurationExpr interval(std::int64_t min,
                               std::optional<std::int64_t> max);
  static DurationExpr days(std::int64_t d) { return interval(d, d); }
  static DurationExpr unbounded_from(std::int64_t min) {
    return interval(min, std::nullopt);
  }

  bool operator==(const DurationExpr&) const = default;
};

struct StorageExpr {
  ClassExpr location;   // Location category
  DurationExpr duration;

  bool operator==(const StorageExpr&) const = default;
};

/// One five-attribute authorization product: data, processing, purpose,
/// recipient and storage (location + duration).
struct BasicPolicy {
  ClassExpr data;
  ClassExpr processing;
  ClassExpr purpose;
  ClassExpr recipient;
  StorageExpr storage;

  bool operator==(const BasicPolicy&) const = default;
};

/// The content of a data event uses the same five-attribute shape as a basic
/// policy (attribute expressions may contain unions).
using LogContent = BasicPolicy;

/// A consent policy: the union of one or more basic policies. An operation is
/// authorized when at least one basic policy authorizes it.
struct GeneralPolicy {
  std::vector<BasicPolicy> basics;

  bool operator==(const GeneralPolicy&) const = default;
};

struct ValidationIssue {
  Errc code;
  std::string detail;
};

/// Structural and taxonomy checks: every atom resolves, every expression is
/// category-correct, list arities hold, and duration intervals are
/// well-ordered. Empty result means valid.
std::vector<ValidationIssue> validate(const BasicPolicy& p, const Taxonomy& t);
std::vector<ValidationIssue> validate(const GeneralPolicy& p, const Taxonomy& t);

/// Throws the first issue as an Error; no-op when valid.
void validate_or_throw(const BasicPolicy& p, const Taxonomy& t);
void validate_or_throw(const GeneralPolicy& p, const Taxonomy& t);

/// Rewrites Top to the category root atom, flattens nested unions and
/// intersections, and collapses length-1 lists.
ClassExpr normalize(const ClassExpr& e);
LogContent normalize(const LogContent& c);

/// The union branches of an expression: union-free expressions whose
/// pointwise union has the same extension. Unions distribute out of
/// intersections; atoms and intersections are retained.
std::vector<ClassExpr> union_branches(const ClassExpr& e);

/// Disjunctive normal form of a content: the cartesian expansion of the
/// per-attribute union branches. The result length is exactly the product of
/// the per-attribute branch counts; every element is union-free.
std::vector<LogContent> dnf(const LogContent& c);

}  // namespace consentlog
