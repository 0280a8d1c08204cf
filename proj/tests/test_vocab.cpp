#include <doctest.h>

#include <algorithm>
#include <random>

#include "support/test_support.hpp"

using namespace consentlog;
using namespace consentlog::testing;

TEST_CASE("builtin vocabulary ships the published classes") {
  const Taxonomy t = Taxonomy::builtin_special();

  for (Category c : kAllCategories) {
    CHECK(t.is_root(t.root(c)));
    CHECK(t.is_null(t.null_node(c)));
    CHECK(t.category_of(t.root(c)) == c);
    CHECK(t.is_subclass(t.null_node(c), t.root(c)));
  }

  // roots + one bottom per category + 8/9/10/6/7/4 published examples
  CHECK(t.size() == 6 + 6 + 8 + 9 + 10 + 6 + 7 + 4);

  CHECK(t.find(svd("Location")).has_value());
  CHECK(t.find(svpr("Transfer")).has_value());
  CHECK(t.find(svpu("Search")).has_value());
  CHECK(t.find(svr("Unrelated")).has_value());
  CHECK(t.find(svl("ThirdParty")).has_value());
  CHECK(t.find(svdu("StatedPurpose")).has_value());
  CHECK_FALSE(t.find("http://www.specialprivacy.eu/vocabs/data#Bogus"));
}

TEST_CASE("is_subclass on builtin classes") {
  const Taxonomy t = Taxonomy::builtin_special();

  CHECK(t.is_subclass(svd("Location"), iri::any_root(Category::Data)));
  CHECK(t.is_subclass(svpr("Collect"), svpr("Collect")));
  CHECK_FALSE(t.is_subclass(iri::any_root(Category::Data), svd("Location")));

  CHECK_THROWS_WITH_AS(
      static_cast<void>(t.is_subclass(svpu("Health"),
                                      iri::any_root(Category::Processing))),
      doctest::Contains("CategoryMismatch"), Error);
  CHECK_THROWS_AS(
      static_cast<void>(t.is_subclass("http://nowhere.example/X", svd("Health"))),
      Error);
}

TEST_CASE("svpu:Marketing and svpu:Health are unrelated in the builtin set") {
  // Independent check: exhaustive reachability over the raw edges.
  const Taxonomy t = Taxonomy::builtin_special();
  const auto marketing = t.require(svpu("Marketing"));
  const auto health = t.require(svpu("Health"), Category::Purpose);
  CHECK_FALSE(oracle_reaches(t, marketing, health));
  CHECK_FALSE(oracle_reaches(t, health, marketing));
  CHECK(t.is_subclass(marketing, health) == oracle_reaches(t, marketing, health));
  CHECK_FALSE(t.is_subclass(svpu("Marketing"), svpu("Health")));
}

TEST_CASE("loading the BeFit extension") {
  const Taxonomy t = Taxonomy::load(kBefitTaxonomy);
  CHECK(t.is_subclass(kBefitSensorGathering, svpr("Collect")));
  CHECK(t.is_subclass(kBefitSensorGathering, iri::any_root(Category::Processing)));
  CHECK(t.is_subclass(kBefitHealthTracking, svpu("Health")));
  CHECK_FALSE(t.is_subclass(svpr("Collect"), kBefitSensorGathering));

  const auto ext = t.extension_of(svpr("Collect"));
  CHECK(std::find(ext.begin(), ext.end(), svpr("Collect")) != ext.end());
  CHECK(std::find(ext.begin(), ext.end(), kBefitSensorGathering) != ext.end());
}

TEST_CASE("empty extension equals the builtin taxonomy") {
  const Taxonomy t = Taxonomy::load("# nothing but comments\n\n");
  const Taxonomy b = Taxonomy::builtin_special();
  CHECK(t.size() == b.size());
  for (Taxonomy::NodeId i = 0; i < t.size(); ++i) {
    CHECK(t.iri_of(i) == b.iri_of(i));
    CHECK(t.category_of(i) == b.category_of(i));
  }
}

TEST_CASE("taxonomy file errors") {
  SUBCASE("cycle") {
    CHECK_THROWS_WITH_AS(
        Taxonomy::load("@prefix x <http://x.example/>\n"
                       "x:a subClassOf x:b\n"
                       "x:b subClassOf x:a\n"
                       "x:b subClassOf svd:Health\n"),
        doctest::Contains("CycleDetected"), Error);
  }
  SUBCASE("unknown parent") {
    CHECK_THROWS_WITH_AS(
        Taxonomy::load("@prefix x <http://x.example/>\nx:a subClassOf x:ghost\n"),
        doctest::Contains("UnknownParent"), Error);
  }
  SUBCASE("cross category edge") {
    CHECK_THROWS_WITH_AS(
        Taxonomy::load("@prefix x <http://x.example/>\n"
                       "x:a subClassOf svd:Health\n"
                       "x:a subClassOf svpu:Health\n"),
        doctest::Contains("CategoryMismatch"), Error);
  }
  SUBCASE("root cannot be redeclared") {
    CHECK_THROWS_WITH_AS(Taxonomy::load("spl:AnyData subClassOf svd:Health\n"),
                         doctest::Contains("DuplicateClass"), Error);
  }
  SUBCASE("spl:Null is reserved") {
    CHECK_THROWS_WITH_AS(Taxonomy::load("spl:Null subClassOf svd:Health\n"),
                         doctest::Contains("DuplicateClass"), Error);
  }
  SUBCASE("parse errors carry line numbers") {
    CHECK_THROWS_WITH_AS(Taxonomy::load("# fine\nnot an axiom line\n"),
                         doctest::Contains("line 2"), Error);
    CHECK_THROWS_WITH_AS(Taxonomy::load("@prefix broken\n"),
                         doctest::Contains("line 1"), Error);
  }
  SUBCASE("prefix rebinding is rejected") {
    CHECK_THROWS_WITH_AS(
        Taxonomy::load("@prefix svd <http://other.example/>\n"),
        doctest::Contains("already bound"), Error);
  }
}

TEST_CASE("duplicate identical declarations are idempotent") {
  const std::string once = kBefitTaxonomy;
  const std::string twice = once + once;
  const Taxonomy a = Taxonomy::load(once);
  const Taxonomy b = Taxonomy::load(twice);
  CHECK(a.size() == b.size());
  for (Taxonomy::NodeId i = 0; i < a.size(); ++i) {
    CHECK(a.iri_of(i) == b.iri_of(i));
    CHECK(a.parents_of(i) == b.parents_of(i));
  }
}

TEST_CASE("declaration order does not matter") {
  const Taxonomy t = Taxonomy::load(
      "@prefix x <http://x.example/>\n"
      "x:grandchild subClassOf x:child\n"
      "x:child subClassOf svd:Health\n");
  CHECK(t.is_subclass("http://x.example/grandchild", svd("Health")));
}

TEST_CASE("extension_of") {
  const Taxonomy t = Taxonomy::builtin_special();

  SUBCASE("root covers its whole category") {
    const auto ext = t.extension_of(iri::any_root(Category::Recipient));
    CHECK(ext.size() == 8);  // root + bottom + 6 examples
  }
  SUBCASE("a leaf covers only itself") {
    const auto ext = t.extension_of(svdu("Indefinitely"));
    REQUIRE(ext.size() == 1);
    CHECK(ext.front() == svdu("Indefinitely"));
  }
  SUBCASE("bottom covers only itself") {
    CHECK(t.descendants(t.null_node(Category::Data)).count() == 1);
  }
}

TEST_CASE("is_subclass is a preorder and matches extension inclusion") {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 25; ++round) {
    const RandomWorld world = make_random_world(rng, 40);
    const Taxonomy& t = world.taxonomy;
    const auto n = static_cast<Taxonomy::NodeId>(t.size());

    for (Taxonomy::NodeId x = 0; x < n; ++x) {
      CHECK(t.is_subclass(x, x));
    }
    // closure equals independent DFS reachability, pairwise per category
    for (Taxonomy::NodeId x = 0; x < n; ++x) {
      for (Taxonomy::NodeId y = 0; y < n; ++y) {
        if (t.category_of(x) != t.category_of(y)) continue;
        if (t.is_subclass(x, y) != oracle_reaches(t, x, y)) {
          REQUIRE(t.is_subclass(x, y) == oracle_reaches(t, x, y));
        }
      }
    }
    // transitivity spot check over sampled triples
    for (int i = 0; i < 200; ++i) {
      const auto a = static_cast<Taxonomy::NodeId>(rng() % n);
      const auto b = static_cast<Taxonomy::NodeId>(rng() % n);
      const auto c = static_cast<Taxonomy::NodeId>(rng() % n);
      if (t.category_of(a) != t.category_of(b) ||
          t.category_of(b) != t.category_of(c)) {
        continue;
      }
      if (t.is_subclass(a, b) && t.is_subclass(b, c)) {
        CHECK(t.is_subclass(a, c));
      }
    }
    // is_subclass(a, b) iff extension_of(a) is a subset of extension_of(b)
    for (int i = 0; i < 100; ++i) {
      const auto a = static_cast<Taxonomy::NodeId>(rng() % n);
      const auto b = static_cast<Taxonomy::NodeId>(rng() % n);
      if (t.category_of(a) != t.category_of(b)) continue;
      CHECK(t.is_subclass(a, b) ==
            t.descendants(a).is_subset_of(t.descendants(b)));
    }
  }
}

TEST_CASE("prefix expansion") {
  const Taxonomy t = Taxonomy::load("@prefix ex <http://ex.example/ns#>\n"
                                    "ex:A subClassOf svd:Health\n");
  CHECK(t.expand("svd:Location") == svd("Location"));
  CHECK(t.expand("ex:A") == "http://ex.example/ns#A");
  CHECK(t.expand("<http://raw.example/X>") == "http://raw.example/X");
  CHECK(t.expand("http://raw.example/X") == "http://raw.example/X");
  CHECK_THROWS_AS(t.expand("nope:X"), Error);
  CHECK_THROWS_AS(t.expand("bare"), Error);
  CHECK(t.compact(svd("Location")) == "svd:Location");
}
