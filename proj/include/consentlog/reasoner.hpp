#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "consentlog/policy.hpp"

namespace consentlog {

enum class ComplianceReason : std::uint8_t { Match, NoMatch, NoConsent, Revoked };

const char* to_string(ComplianceReason r) noexcept;
std::optional<ComplianceReason> reason_from_string(std::string_view s) noexcept;

struct ComplianceResult {
  bool compliant = false;
  /// Index into GeneralPolicy::basics of the authorizing basic policy, set
  /// when the content is compliant and union-free (singleton DNF). Lowest
  /// index wins.
  std::optional<std::size_t> matched_basic;
  ComplianceReason reason = ComplianceReason::NoMatch;
};

/// Extension of a class expression under the canonical interpretation, as a
/// bitset over taxonomy nodes: atoms denote their descendant set, Top the
/// whole category, Null the empty set, unions and intersections the
/// corresponding set operations.
Bitset expr_extension(const ClassExpr& e, Category cat, const Taxonomy& t);

/// Category of an expression (from its atoms or explicit Top/Null tag).
Category expr_category(const ClassExpr& e, const Taxonomy& t);

/// True iff the canonical extension of the expression is empty.
bool expr_empty(const ClassExpr& e, Category cat, const Taxonomy& t);

/// True iff extension(c) is a subset of extension(d). Decided structurally
/// where exact (unions on either side, intersections on the right, atoms) and
/// by extension comparison for intersections on the left.
bool subsumes_expr(const ClassExpr& c, const ClassExpr& d, const Taxonomy& t);

/// Interval vs interval containment (absent max = unbounded), class vs class
/// subsumption, mixed kinds fail closed. A Null duration class on the content
/// side denotes the empty set and is contained in anything.
bool duration_contained(const DurationExpr& c, const DurationExpr& p,
                        const Taxonomy& t);

/// True iff the content denotes no authorization tuples at all (some
/// attribute has an empty extension); such content is vacuously authorized.
bool content_empty(const LogContent& c, const Taxonomy& t);

/// Componentwise product subsumption of a union-free content against one
/// basic policy. Content with an empty component set is subsumed by any basic.
bool basic_subsumed(const LogContent& c, const BasicPolicy& p,
                    const Taxonomy& t);

/// Compliance decision: every DNF leaf of the content must be authorized by
/// the consent. The fast path matches each leaf against a single basic
/// policy; leaves with non-principal component sets that no single basic
/// covers are re-checked by exact set inclusion, so the result agrees with
/// oracle_complies. matched_basic is reported when the DNF is a singleton and
/// one basic policy subsumed it (lowest index).
ComplianceResult complies(const LogContent& c, const GeneralPolicy& consent,
                          const Taxonomy& t);

// --- brute-force oracle ------------------------------------------------------

/// Day sample points for duration enumeration: every interval endpoint of the
/// content and consent, each +/- 1, clipped at zero, deduplicated.
std::vector<std::int64_t> duration_sample_days(const LogContent& c,
                                               const GeneralPolicy& consent);

/// One enumerated authorization tuple: node ids for data, processing,
/// purpose, recipient and location, plus an encoded duration token
/// (day value, duration-class node, or the unbounded sentinel).
using AuthTuple = std::array<std::uint64_t, 6>;

/// Materializes the authorization tuple-set of a content over the canonical
/// extensions and the given day samples. Throws UniverseTooLarge when the
/// product of the component counts exceeds max_universe.
std::set<AuthTuple> authorization_tuples(const LogContent& c, const Taxonomy& t,
                                         const std::vector<std::int64_t>& days,
                                         std::uint64_t max_universe);

/// Literal set-inclusion semantics: enumerates the content's authorization
/// tuples and checks each for membership in some basic policy of the consent.
bool oracle_complies(const LogContent& c, const GeneralPolicy& consent,
                     const Taxonomy& t, std::uint64_t max_universe);

}  // namespace consentlog
