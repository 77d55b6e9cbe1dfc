#include "lot/trainlog.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lot/taxonomy.hpp"
#include "lot/util.hpp"

namespace lot {

using nlohmann::json;

void TrainLog::append(TrainEvent event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<TrainEvent> TrainLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

size_t TrainLog::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::vector<TrainEvent> TrainLog::events_of_type(const std::string& type) const {
  std::lock_guard lock(mutex_);
  std::vector<TrainEvent> out;
  for (const auto& e : events_)
    if (e.type == type) out.push_back(e);
  return out;
}

void TrainLog::save_jsonl(const std::filesystem::path& path) const {
  std::lock_guard lock(mutex_);
  std::ostringstream out;
  size_t seq = 0;
  for (const auto& e : events_) {
    json payload;
    try {
      payload = json::parse(e.payload_json.empty() ? "{}" : e.payload_json);
    } catch (const json::exception& ex) {
      throw Error("train log event " + std::to_string(seq) + " has invalid payload: " + ex.what());
    }
    json j;
    j["seq"] = seq++;
    j["type"] = e.type;
    j["data"] = std::move(payload);
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

TrainLog TrainLog::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open train log: " + path.string());
  std::vector<TrainEvent> events;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    TrainEvent event;
    event.type = j.at("type").get<std::string>();
    event.payload_json = j.value("data", json::object()).dump();
    events.push_back(std::move(event));
  }
  return TrainLog(std::move(events));
}

Taxonomy TrainLog::replay_taxonomy() const {
  Taxonomy taxonomy;
  bool populated = false;
  int last_version = 0;
  for (const auto& e : events()) {
    if (e.type != "taxonomy_update") continue;
    json j = json::parse(e.payload_json);
    std::vector<Feature> added;
    for (const auto& jf : j.at("added")) {
      Feature f;
      f.name = jf.at("name").get<std::string>();
      f.definition = jf.at("definition").get<std::string>();
      f.origin_iteration = jf.value("origin_iteration", 0);
      if (jf.contains("origin_pair")) f.origin_pair = jf.at("origin_pair").get<std::string>();
      added.push_back(std::move(f));
    }
    if (!populated) {
      taxonomy = Taxonomy::with_features(added);
      populated = true;
    } else {
      int accepted = taxonomy.merge(added);
      if (accepted != static_cast<int>(added.size()))
        throw Error("replay: taxonomy_update event re-adds existing features");
    }
    int logged_version = j.at("version").get<int>();
    if (taxonomy.version() != logged_version)
      throw Error("replay: reconstructed version " + std::to_string(taxonomy.version()) +
                  " != logged version " + std::to_string(logged_version));
    if (logged_version <= last_version)
      throw Error("replay: versions are not strictly increasing");
    last_version = logged_version;
  }
  return taxonomy;
}

}  // namespace lot
