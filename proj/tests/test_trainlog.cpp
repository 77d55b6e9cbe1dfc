#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "lot/taxonomy.hpp"
#include "lot/trainlog.hpp"
#include "lot/util.hpp"

using namespace lot;
using nlohmann::json;

namespace {

TrainEvent update_event(int version, std::vector<std::pair<std::string, std::string>> features) {
  json added = json::array();
  for (auto& [name, def] : features)
    added.push_back({{"name", name}, {"definition", def}, {"origin_iteration", 0}});
  json data{{"version", version}, {"width", 0}, {"accepted", features.size()},
            {"proposed", features.size()}, {"added", added}};
  return TrainEvent{"taxonomy_update", data.dump()};
}

}  // namespace

TEST_CASE("train log round-trips through jsonl") {
  TrainLog log;
  log.append(TrainEvent{"note", R"({"msg":"hello"})"});
  log.append(update_event(1, {{"f1", "d1"}}));
  auto p = std::filesystem::temp_directory_path() / "lot_trainlog_roundtrip.jsonl";
  log.save_jsonl(p);
  TrainLog back = TrainLog::load_jsonl(p);
  REQUIRE(back.size() == 2);
  CHECK(back.events()[0].type == "note");
  CHECK(json::parse(back.events()[1].payload_json).at("version") == 1);
}

TEST_CASE("taxonomy_update events replay into the final taxonomy") {
  TrainLog log;
  log.append(update_event(1, {{"f1", "d1"}, {"f2", "d2"}}));
  log.append(TrainEvent{"checkpoint", R"({"iteration":1})"});
  log.append(update_event(2, {{"f3", "d3"}}));
  Taxonomy replayed = log.replay_taxonomy();
  CHECK(replayed.version() == 2);
  REQUIRE(replayed.size() == 3);
  CHECK(replayed.feature(2).name == "f3");
}

TEST_CASE("replay rejects non-increasing versions and stale features") {
  TrainLog log;
  log.append(update_event(1, {{"f1", "d1"}}));
  log.append(update_event(1, {{"f2", "d2"}}));
  CHECK_THROWS_AS(log.replay_taxonomy(), Error);

  TrainLog dup;
  dup.append(update_event(1, {{"f1", "d1"}}));
  dup.append(update_event(2, {{"f1", "d1"}}));
  CHECK_THROWS_AS(dup.replay_taxonomy(), Error);
}
