#include <doctest.h>

#include <filesystem>

#include "lot/taxonomy.hpp"
#include "lot/util.hpp"

using namespace lot;
namespace fs = std::filesystem;

namespace {

Feature feat(const std::string& name, const std::string& def = "some definition") {
  Feature f;
  f.name = name;
  f.definition = def;
  return f;
}

Taxonomy three_features() {
  return Taxonomy::with_features({feat("checks units"), feat("enumerates cases"),
                                  feat("restates the goal")});
}

}  // namespace

TEST_CASE("with_features yields version 1 with positional ids") {
  Taxonomy t = three_features();
  CHECK(t.version() == 1);
  CHECK(t.size() == 3);
  for (size_t i = 0; i < t.size(); ++i) CHECK(t.feature(i).feature_id == int(i));
}

TEST_CASE("merge with an empty proposal changes nothing") {
  Taxonomy t = three_features();
  int before = t.version();
  CHECK(t.merge({}) == 0);
  CHECK(t.version() == before);
  CHECK(t.size() == 3);
}

TEST_CASE("merge drops nominal duplicates without a version bump") {
  Taxonomy t = three_features();
  int before = t.version();
  CHECK(t.merge({feat("Checks   Units")}) == 0);  // same normalized name
  CHECK(t.version() == before);
}

TEST_CASE("merge appends novel features and bumps the version once") {
  Taxonomy t = three_features();
  int accepted = t.merge({feat("tries small examples"), feat("checks units"), feat("backtracks")});
  CHECK(accepted == 2);
  CHECK(t.size() == 5);
  CHECK(t.version() == 2);
  CHECK(t.feature(3).name == "tries small examples");
  CHECK(t.feature(4).feature_id == 4);
}

TEST_CASE("merge is idempotent") {
  Taxonomy t = three_features();
  std::vector<Feature> proposal = {feat("new one"), feat("new two")};
  Taxonomy once = t;
  once.merge(proposal);
  Taxonomy twice = once;
  CHECK(twice.merge(proposal) == 0);
  CHECK(twice == once);
}

TEST_CASE("growth is append-only: earlier features stay put") {
  Taxonomy t = three_features();
  std::vector<Feature> before = t.features();
  t.merge({feat("extra")});
  for (size_t i = 0; i < before.size(); ++i) CHECK(t.feature(i) == before[i]);
  CHECK(t.size() >= before.size());
}

TEST_CASE("prefix recovers earlier versions") {
  Taxonomy t = three_features();
  t.merge({feat("late addition")});
  Taxonomy v1 = t.prefix(1, 3);
  CHECK(v1.version() == 1);
  CHECK(v1.size() == 3);
  CHECK(v1.feature(2) == t.feature(2));
  CHECK_THROWS_AS(t.prefix(1, 10), Error);
}

TEST_CASE("save/load round-trips including version and origin metadata") {
  Taxonomy t = three_features();
  std::vector<Feature> extra = {feat("with origin")};
  extra[0].origin_iteration = 7;
  extra[0].origin_pair = "q42";
  t.merge(extra);
  auto p = fs::temp_directory_path() / "lot_taxonomy_roundtrip.json";
  t.save(p);
  Taxonomy back = Taxonomy::load(p);
  CHECK(back == t);
  CHECK(back.feature(3).origin_pair == "q42");
}

TEST_CASE("load rejects duplicate normalized names") {
  auto p = fs::temp_directory_path() / "lot_taxonomy_dup.json";
  write_file(p, R"({"version":1,"features":[
    {"id":0,"name":"Checks Units","definition":"d"},
    {"id":1,"name":"checks  units","definition":"d"}]})");
  CHECK_THROWS_AS(Taxonomy::load(p), Error);
}

TEST_CASE("load accepts an empty version-1 taxonomy and rejects a missing version") {
  auto p = fs::temp_directory_path() / "lot_taxonomy_empty.json";
  write_file(p, R"({"version":1,"features":[]})");
  Taxonomy t = Taxonomy::load(p);
  CHECK(t.empty());
  CHECK(t.version() == 1);
  write_file(p, R"({"features":[]})");
  CHECK_THROWS_AS(Taxonomy::load(p), Error);
}

TEST_CASE("format_taxonomy lists features in order") {
  std::string s = format_taxonomy(three_features());
  CHECK(contains(s, "1. checks units:"));
  CHECK(contains(s, "3. restates the goal:"));
}
