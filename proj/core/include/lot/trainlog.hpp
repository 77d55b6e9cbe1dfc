#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace lot {

class Taxonomy;

/// One logged event. The payload is a self-contained JSON object; "type"
/// and "seq" are added by the log.
struct TrainEvent {
  std::string type;          // annotator_call | taxonomy_update | checkpoint | convergence | skip | note
  std::string payload_json;  // JSON object text
};

/// Serialized sink for everything that happens during a run: annotator
/// calls, taxonomy diffs, classifier checkpoints, convergence counters,
/// skipped pairs. The taxonomy_update events alone reconstruct the final
/// taxonomy.
class TrainLog {
 public:
  TrainLog() = default;
  explicit TrainLog(std::vector<TrainEvent> events) : events_(std::move(events)) {}

  void append(TrainEvent event);

  std::vector<TrainEvent> events() const;
  size_t size() const;
  std::vector<TrainEvent> events_of_type(const std::string& type) const;

  void save_jsonl(const std::filesystem::path& path) const;
  static TrainLog load_jsonl(const std::filesystem::path& path);

  // Replays taxonomy_update events into a fresh taxonomy and checks the
  // version sequence is strictly increasing.
  Taxonomy replay_taxonomy() const;

 private:
  mutable std::mutex mutex_;
  std::vector<TrainEvent> events_;
};

}  // namespace lot
