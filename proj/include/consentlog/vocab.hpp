#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "consentlog/bitset.hpp"
#include "consentlog/errors.hpp"

namespace consentlog {

/// The six attribute categories of the minimum core model. Every class in a
/// taxonomy belongs to exactly one category and reaches that category's root.
enum class Category : std::uint8_t {
  Data = 0,
  Processing,
  Purpose,
  Recipient,
  Location,
  Duration,
};

inline constexpr std::size_t kCategoryCount = 6;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::Data,      Category::Processing, Category::Purpose,
    Category::Recipient, Category::Location,   Category::Duration,
};

const char* to_string(Category c) noexcept;
std::optional<Category> category_from_string(std::string_view name) noexcept;

/// Well-known IRIs. `spl` is the usage-policy language namespace; the sv*
/// namespaces hold the built-in auxiliary vocabularies.
namespace iri {
inline constexpr std::string_view kSplPrefix =
    "http://www.specialprivacy.eu/langs/usage-policy#";
inline constexpr std::string_view kSplogPrefix =
    "http://www.specialprivacy.eu/langs/splog#";

std::string any_root(Category c);   // spl:AnyData, spl:AnyProcessing, ...
std::string null_class();           // spl:Null (category resolved by context)
}  // namespace iri

/// A class identifier is an expanded, absolute IRI.
using ClassId = std::string;

/// Immutable class taxonomy: a DAG of named classes under the six category
/// roots, with precomputed reflexive-transitive reachability. Safe for
/// unrestricted concurrent reads once constructed.
class Taxonomy {
 public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kNoNode = static_cast<NodeId>(-1);

  /// The built-in vocabulary: six roots, one bottom (spl:Null) per category,
  /// and the published example classes, each a direct child of its root.
  static Taxonomy builtin_special();

  /// Built-in vocabulary merged with the extension axioms in `source`
  /// (taxonomy file format; see README). Throws Error on cycles, unknown
  /// parents, cross-category edges, reserved-class redeclarations, and
  /// malformed lines (ParseError carries the 1-based line number).
  static Taxonomy load(std::string_view source);
  static Taxonomy load_file(const std::string& path);

  std::size_t size() const noexcept { return nodes_.size(); }

  // --- node resolution ---------------------------------------------------

  /// Resolves an expanded IRI to a node. spl:Null is category-scoped, so a
  /// category is required to resolve it; for every other IRI the category is
  /// checked against the node when provided.
  std::optional<NodeId> find(std::string_view iri,
                             std::optional<Category> cat = std::nullopt) const;

  /// Like find(), but throws UnknownClass / CategoryMismatch.
  NodeId require(std::string_view iri,
                 std::optional<Category> cat = std::nullopt) const;

  NodeId root(Category c) const noexcept { return roots_[static_cast<int>(c)]; }
  NodeId null_node(Category c) const noexcept {
    return nulls_[static_cast<int>(c)];
  }

  const std::string& iri_of(NodeId n) const { return nodes_[n].iri; }
  Category category_of(NodeId n) const { return nodes_[n].category; }
  bool is_root(NodeId n) const { return nodes_[n].is_root; }
  bool is_null(NodeId n) const { return nodes_[n].is_null; }
  const std::vector<NodeId>& parents_of(NodeId n) const {
    return nodes_[n].parents;
  }

  // --- reachability ---------------------------------------------------------

  /// True iff `descendant` reaches `ancestor` through zero or more subclass
  /// edges. Both nodes must share a category (checked by the string overload).
  bool is_subclass(NodeId descendant, NodeId ancestor) const {
    return descendants_[ancestor].test(descendant);
  }

  /// String-level query; resolves spl:Null against the other operand's
  /// category. Throws UnknownClass / CategoryMismatch.
  bool is_subclass(std::string_view a, std::string_view b) const;

  /// All classes x with x subclass-of c, as a bitset over node ids.
  const Bitset& descendants(NodeId c) const { return descendants_[c]; }

  /// All nodes of one category, as a bitset over node ids.
  const Bitset& category_mask(Category c) const {
    return category_masks_[static_cast<int>(c)];
  }

  /// The canonical extension of a class: every class reaching it, itself
  /// included. Order follows node insertion order (roots, bottoms, built-ins,
  /// then extensions in declaration order).
  std::vector<ClassId> extension_of(std::string_view c) const;

  // --- prefix handling -----------------------------------------------------

  /// Expands `prefix:Local` using the built-in plus loaded prefixes; absolute
  /// IRIs (optionally <>-wrapped) pass through. Throws ParseError on an
  /// unknown prefix.
  std::string expand(std::string_view name) const;

  /// Re-compacts an expanded IRI to `prefix:Local` when a prefix matches.
  std::string compact(std::string_view iri) const;

  const std::map<std::string, std::string>& prefixes() const {
    return prefixes_;
  }

 private:
  struct Node {
    std::string iri;
    Category category;
    bool is_root = false;
    bool is_null = false;
    std::vector<NodeId> parents;
  };

  Taxonomy() = default;

  NodeId add_node(std::string iri, Category cat, bool root, bool null_class);
  void add_edge(NodeId child, NodeId parent, int line);
  void finalize();  // topological check + closure computation

  std::vector<Node> nodes_;
  // spl:Null shares one IRI across six nodes, hence the multimap.
  std::multimap<std::string, NodeId, std::less<>> by_iri_;
  std::array<NodeId, kCategoryCount> roots_{};
  std::array<NodeId, kCategoryCount> nulls_{};
  std::vector<Bitset> descendants_;
  std::array<Bitset, kCategoryCount> category_masks_{};
  std::map<std::string, std::string> prefixes_;
};

}  // namespace consentlog
