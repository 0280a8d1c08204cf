#include "consentlog/vocab.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

namespace consentlog {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownClass: return "UnknownClass";
    case Errc::CategoryMismatch: return "CategoryMismatch";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::UnknownParent: return "UnknownParent";
    case Errc::DuplicateClass: return "DuplicateClass";
    case Errc::EmptyUnion: return "EmptyUnion";
    case Errc::BadInterval: return "BadInterval";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::UniverseTooLarge: return "UniverseTooLarge";
    case Errc::DuplicateTopic: return "DuplicateTopic";
    case Errc::BadPartitionCount: return "BadPartitionCount";
    case Errc::UnknownTopic: return "UnknownTopic";
    case Errc::UnknownMember: return "UnknownMember";
    case Errc::NotAssigned: return "NotAssigned";
    case Errc::RewindRejected: return "RewindRejected";
    case Errc::BadDuration: return "BadDuration";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::GenerationStuck: return "GenerationStuck";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Error";
}

const char* to_string(Category c) noexcept {
  switch (c) {
    case Category::Data: return "Data";
    case Category::Processing: return "Processing";
    case Category::Purpose: return "Purpose";
    case Category::Recipient: return "Recipient";
    case Category::Location: return "Location";
    case Category::Duration: return "Duration";
  }
  return "?";
}

std::optional<Category> category_from_string(std::string_view name) noexcept {
  for (Category c : kAllCategories) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

namespace iri {

std::string any_root(Category c) {
  static const char* names[] = {"AnyData",      "AnyProcessing", "AnyPurpose",
                                "AnyRecipient", "AnyLocation",   "AnyDuration"};
  return std::string(kSplPrefix) + names[static_cast<int>(c)];
}

std::string null_class() { return std::string(kSplPrefix) + "Null"; }

}  // namespace iri

namespace {

struct BuiltinVocab {
  Category category;
  const char* prefix;
  const char* ns;
  std::vector<const char*> classes;
};

const std::vector<BuiltinVocab>& builtin_vocabs() {
  static const std::vector<BuiltinVocab> v = {
      {Category::Data,
       "svd",
       "http://www.specialprivacy.eu/vocabs/data#",
       {"Activity", "Anonymized", "Financial", "Health", "Location",
        "Navigation", "Preference", "Profile"}},
      {Category::Processing,
       "svpr",
       "http://www.specialprivacy.eu/vocabs/processing#",
       {"Aggregate", "Analyze", "Anonymize", "Collect", "Copy", "Derive",
        "Move", "Query", "Transfer"}},
      {Category::Purpose,
       "svpu",
       "http://www.specialprivacy.eu/vocabs/purposes#",
       {"Account", "Arts", "Delivery", "Education", "Feedback", "Gaming",
        "Health", "Marketing", "Payment", "Search"}},
      {Category::Recipient,
       "svr",
       "http://www.specialprivacy.eu/vocabs/recipients#",
       {"Delivery", "OtherRecipient", "Ours", "Public", "Same", "Unrelated"}},
      {Category::Location,
       "svl",
       "http://www.specialprivacy.eu/vocabs/locations#",
       {"ControllerServer", "EU", "EULike", "ThirdCountries", "OurServers",
        "ProcessorServers", "ThirdParty"}},
      {Category::Duration,
       "svdu",
       "http://www.specialprivacy.eu/vocabs/duration#",
       {"BusinessPractices", "Indefinitely", "LegalRequirement",
        "StatedPurpose"}},
  };
  return v;
}

bool looks_absolute(std::string_view s) {
  return s.find("://") != std::string_view::npos;
}

std::string_view strip_angles(std::string_view s) {
  if (s.size() >= 2 && s.front() == '<' && s.back() == '>') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace

Taxonomy::NodeId Taxonomy::add_node(std::string iri, Category cat, bool root,
                                    bool null_class) {
  const NodeId id = static_cast<NodeId>(nodes_.size());
  by_iri_.emplace(iri, id);
  nodes_.push_back(Node{std::move(iri), cat, root, null_class, {}});
  return id;
}

void Taxonomy::add_edge(NodeId child, NodeId parent, int line) {
  const Node& c = nodes_[child];
  const Node& p = nodes_[parent];
  if (c.category != p.category) {
    raise(Errc::CategoryMismatch,
          "line " + std::to_string(line) + ": subclass axiom crosses from " +
              std::string(to_string(c.category)) + " to " +
              std::string(to_string(p.category)) + " (" + c.iri + " -> " +
              p.iri + ")");
  }
  auto& parents = nodes_[child].parents;
  if (std::find(parents.begin(), parents.end(), parent) == parents.end()) {
    parents.push_back(parent);
  }
}

Taxonomy Taxonomy::builtin_special() {
  Taxonomy t;
  t.prefixes_["spl"] = std::string(iri::kSplPrefix);
  for (Category c : kAllCategories) {
    t.roots_[static_cast<int>(c)] = t.add_node(iri::any_root(c), c, true, false);
  }
  for (Category c : kAllCategories) {
    const NodeId n = t.add_node(iri::null_class(), c, false, true);
    t.nulls_[static_cast<int>(c)] = n;
    t.nodes_[n].parents.push_back(t.root(c));
  }
  for (const auto& vocab : builtin_vocabs()) {
    t.prefixes_[vocab.prefix] = vocab.ns;
    for (const char* name : vocab.classes) {
      const NodeId n =
          t.add_node(std::string(vocab.ns) + name, vocab.category, false, false);
      t.nodes_[n].parents.push_back(t.root(vocab.category));
    }
  }
  t.finalize();
  return t;
}

std::optional<Taxonomy::NodeId> Taxonomy::find(
    std::string_view iri, std::optional<Category> cat) const {
  auto [lo, hi] = by_iri_.equal_range(iri);
  if (lo == hi) return std::nullopt;
  if (std::next(lo) == hi) {
    // Unique IRI; category, when given, must agree.
    if (cat && nodes_[lo->second].category != *cat) return std::nullopt;
    return lo->second;
  }
  // spl:Null: category context required.
  if (!cat) return std::nullopt;
  for (auto it = lo; it != hi; ++it) {
    if (nodes_[it->second].category == *cat) return it->second;
  }
  return std::nullopt;
}

Taxonomy::NodeId Taxonomy::require(std::string_view iri,
                                   std::optional<Category> cat) const {
  if (auto n = find(iri, cat)) return *n;
  if (auto n = find(iri)) {
    raise(Errc::CategoryMismatch,
          std::string(iri) + " is a " +
              std::string(to_string(nodes_[*n].category)) + " class, expected " +
              (cat ? to_string(*cat) : "?"));
  }
  raise(Errc::UnknownClass, std::string(iri) + " is not declared");
}

bool Taxonomy::is_subclass(std::string_view a, std::string_view b) const {
  const std::string null_iri = iri::null_class();
  std::optional<Category> cat;
  if (a != null_iri) {
    cat = nodes_[require(a)].category;
  } else if (b != null_iri) {
    cat = nodes_[require(b)].category;
  } else {
    return true;  // Null vs Null, reflexive in any category
  }
  const NodeId na = require(a, cat);
  const NodeId nb = require(b, cat);
  return is_subclass(na, nb);
}

std::vector<ClassId> Taxonomy::extension_of(std::string_view c) const {
  const NodeId n = require(c);
  std::vector<ClassId> out;
  descendants_[n].for_each([&](std::size_t i) { out.push_back(nodes_[i].iri); });
  return out;
}

std::string Taxonomy::expand(std::string_view name) const {
  name = strip_angles(name);
  if (looks_absolute(name)) return std::string(name);
  const auto colon = name.find(':');
  if (colon == std::string_view::npos) {
    raise(Errc::ParseError,
          "expected prefix:Local or an absolute IRI, got '" +
              std::string(name) + "'");
  }
  const auto it = prefixes_.find(std::string(name.substr(0, colon)));
  if (it == prefixes_.end()) {
    raise(Errc::ParseError,
          "unknown prefix '" + std::string(name.substr(0, colon)) + "'");
  }
  return it->second + std::string(name.substr(colon + 1));
}

std::string Taxonomy::compact(std::string_view iri) const {
  for (const auto& [prefix, ns] : prefixes_) {
    if (iri.size() > ns.size() && iri.substr(0, ns.size()) == ns) {
      return prefix + ":" + std::string(iri.substr(ns.size()));
    }
  }
  return std::string(iri);
}

void Taxonomy::finalize() {
  const std::size_t n = nodes_.size();
  // Kahn over child -> parent edges; leftovers mean a cycle.
  std::vector<std::uint32_t> pending(n, 0);
  std::vector<std::vector<NodeId>> children(n);
  for (NodeId c = 0; c < n; ++c) {
    pending[c] = static_cast<std::uint32_t>(nodes_[c].parents.size());
    for (NodeId p : nodes_[c].parents) children[p].push_back(c);
  }
  std::deque<NodeId> ready;
  for (NodeId i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push_back(i);
  }
  std::vector<NodeId> topo;  // parents before children
  topo.reserve(n);
  while (!ready.empty()) {
    const NodeId p = ready.front();
    ready.pop_front();
    topo.push_back(p);
    for (NodeId c : children[p]) {
      if (--pending[c] == 0) ready.push_back(c);
    }
  }
  if (topo.size() != n) {
    std::string cycle_members;
    for (NodeId i = 0; i < n; ++i) {
      if (pending[i] > 0) {
        if (!cycle_members.empty()) cycle_members += ", ";
        cycle_members += nodes_[i].iri;
      }
    }
    raise(Errc::CycleDetected, "subclass axioms form a cycle among: " + cycle_members);
  }

  // Every non-root reaches its category root; with acyclicity and same-category
  // edges this holds iff every non-root has at least one parent.
  for (NodeId i = 0; i < n; ++i) {
    if (!nodes_[i].is_root && nodes_[i].parents.empty()) {
      raise(Errc::UnknownParent, nodes_[i].iri + " has no parent");
    }
  }

  descendants_.assign(n, Bitset(n));
  // Children before parents: walk topo order backwards.
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const NodeId c = *it;
    descendants_[c].set(c);
    for (NodeId p : nodes_[c].parents) descendants_[p] |= descendants_[c];
  }

  for (Category cat : kAllCategories) {
    category_masks_[static_cast<int>(cat)] = Bitset(n);
  }
  for (NodeId i = 0; i < n; ++i) {
    category_masks_[static_cast<int>(nodes_[i].category)].set(i);
  }
}

Taxonomy Taxonomy::load(std::string_view source) {
  Taxonomy t = builtin_special();
  t.descendants_.clear();  // recomputed after the merge

  struct Axiom {
    std::string child;
    std::string parent;
    int line;
  };
  std::vector<Axiom> axioms;

  std::istringstream in{std::string(source)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line(raw);
    const auto hash = line.find('#');
    // '#' starts a comment unless it is part of an IRI (preceded by non-space
    // text and no whitespace boundary); keep it simple: a comment starts at a
    // '#' that begins the line or follows whitespace.
    std::size_t cut = std::string_view::npos;
    for (std::size_t i = hash; i != std::string_view::npos; i = line.find('#', i + 1)) {
      if (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t') {
        cut = i;
        break;
      }
    }
    if (cut != std::string_view::npos) line = line.substr(0, cut);

    std::istringstream ls{std::string(line)};
    std::vector<std::string> tok;
    for (std::string w; ls >> w;) tok.push_back(w);
    if (tok.empty()) continue;

    if (tok[0] == "@prefix") {
      if (tok.size() != 3) {
        raise(Errc::ParseError, "line " + std::to_string(line_no) +
                                    ": expected '@prefix name iri'");
      }
      std::string prefix = tok[1];
      if (!prefix.empty() && prefix.back() == ':') prefix.pop_back();
      std::string ns{strip_angles(tok[2])};
      auto it = t.prefixes_.find(prefix);
      if (it != t.prefixes_.end() && it->second != ns) {
        raise(Errc::ParseError, "line " + std::to_string(line_no) +
                                    ": prefix '" + prefix +
                                    "' already bound to " + it->second);
      }
      t.prefixes_[prefix] = ns;
      continue;
    }
    if (tok.size() == 3 && tok[1] == "subClassOf") {
      std::string child, parent;
      try {
        child = t.expand(tok[0]);
        parent = t.expand(tok[2]);
      } catch (const Error& e) {
        raise(Errc::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
      }
      axioms.push_back(Axiom{std::move(child), std::move(parent), line_no});
      continue;
    }
    raise(Errc::ParseError, "line " + std::to_string(line_no) +
                                ": expected '<child> subClassOf <parent>'");
  }

  const std::string null_iri = iri::null_class();
  for (const auto& ax : axioms) {
    if (ax.child == null_iri || ax.parent == null_iri) {
      raise(Errc::DuplicateClass, "line " + std::to_string(ax.line) +
                                      ": spl:Null is reserved and cannot "
                                      "appear in subclass axioms");
    }
    if (auto n = t.find(ax.child); n && t.nodes_[*n].is_root) {
      raise(Errc::DuplicateClass, "line " + std::to_string(ax.line) + ": " +
                                      ax.child +
                                      " is a category root and cannot be "
                                      "redeclared as a subclass");
    }
  }

  // New classes inherit the category of their (eventually grounded) parents;
  // iterate to a fixpoint so declaration order does not matter.
  std::vector<bool> done(axioms.size(), false);
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (std::size_t i = 0; i < axioms.size(); ++i) {
      if (done[i]) continue;
      const auto parent = t.find(axioms[i].parent);
      if (!parent) continue;
      const Category cat = t.nodes_[*parent].category;
      NodeId child;
      if (auto existing = t.find(axioms[i].child)) {
        child = *existing;
      } else {
        child = t.add_node(axioms[i].child, cat, false, false);
      }
      t.add_edge(child, *parent, axioms[i].line);
      done[i] = true;
      progressed = true;
    }
  }
  for (std::size_t i = 0; i < axioms.size(); ++i) {
    if (!done[i]) {
      raise(Errc::UnknownParent, "line " + std::to_string(axioms[i].line) +
                                     ": parent " + axioms[i].parent +
                                     " is not declared anywhere");
    }
  }

  t.finalize();
  return t;
}

Taxonomy Taxonomy::load_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(Errc::ParseError, "cannot open taxonomy file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return load(buf.str());
}

}  // namespace consentlog
