#include "lot/taxonomy.hpp"

#include <sstream>

#include <json.hpp>

#include "lot/util.hpp"

namespace lot {

using nlohmann::json;

std::string Taxonomy::normalize_name(std::string_view name) {
  return collapse_ws(lower_copy(name));
}

Taxonomy Taxonomy::with_features(std::vector<Feature> features) {
  if (features.empty()) throw Error("with_features: need at least one feature");
  Taxonomy t;
  for (Feature& f : features) {
    if (f.name.empty() || f.definition.empty())
      throw Error("with_features: feature name and definition must be non-empty");
    std::string key = normalize_name(f.name);
    if (!t.normalized_names_.insert(key).second) continue;  // nominal duplicate, keep the first
    f.feature_id = static_cast<int>(t.features_.size());
    t.features_.push_back(std::move(f));
  }
  return t;
}

int Taxonomy::merge(const std::vector<Feature>& proposed) {
  int accepted = 0;
  for (const Feature& f : proposed) {
    if (f.name.empty() || f.definition.empty())
      throw Error("merge: feature name and definition must be non-empty");
    std::string key = normalize_name(f.name);
    if (normalized_names_.count(key)) continue;
    Feature stored = f;
    stored.feature_id = static_cast<int>(features_.size());
    features_.push_back(std::move(stored));
    normalized_names_.insert(std::move(key));
    ++accepted;
  }
  if (accepted > 0) ++version_;
  return accepted;
}

Taxonomy Taxonomy::prefix(int version, size_t width) const {
  if (width > features_.size()) throw Error("prefix: width exceeds the taxonomy size");
  if (version < 1 || version > version_) throw Error("prefix: version out of range");
  Taxonomy t;
  t.version_ = version;
  for (size_t i = 0; i < width; ++i) {
    t.features_.push_back(features_[i]);
    t.normalized_names_.insert(normalize_name(features_[i].name));
  }
  return t;
}

void Taxonomy::save(const std::filesystem::path& path) const {
  json j;
  j["version"] = version_;
  json feats = json::array();
  for (const Feature& f : features_) {
    json jf;
    jf["id"] = f.feature_id;
    jf["name"] = f.name;
    jf["definition"] = f.definition;
    jf["origin_iteration"] = f.origin_iteration;
    if (f.origin_pair) jf["origin_pair"] = *f.origin_pair;
    feats.push_back(std::move(jf));
  }
  j["features"] = std::move(feats);
  write_file(path, j.dump(2) + "\n");
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("malformed taxonomy file " + path.string() + ": " + e.what());
  }
  if (!j.contains("version")) throw Error("taxonomy file " + path.string() + ": missing \"version\"");
  if (!j.contains("features") || !j.at("features").is_array())
    throw Error("taxonomy file " + path.string() + ": missing \"features\" array");
  Taxonomy t;
  t.version_ = j.at("version").get<int>();
  if (t.version_ < 1) throw Error("taxonomy version must be >= 1");
  int idx = 0;
  for (const auto& jf : j.at("features")) {
    Feature f;
    f.feature_id = jf.value("id", idx);
    f.name = jf.at("name").get<std::string>();
    f.definition = jf.at("definition").get<std::string>();
    f.origin_iteration = jf.value("origin_iteration", 0);
    if (jf.contains("origin_pair")) f.origin_pair = jf.at("origin_pair").get<std::string>();
    if (f.name.empty() || f.definition.empty())
      throw Error("taxonomy file " + path.string() + ": feature " + std::to_string(idx) +
                  " has an empty name or definition");
    if (f.feature_id != idx)
      throw Error("taxonomy file " + path.string() + ": feature id " +
                  std::to_string(f.feature_id) + " does not match its position " +
                  std::to_string(idx));
    std::string key = normalize_name(f.name);
    if (!t.normalized_names_.insert(key).second)
      throw Error("taxonomy file " + path.string() + ": duplicate feature name \"" + f.name + "\"");
    t.features_.push_back(std::move(f));
    ++idx;
  }
  return t;
}

std::string format_taxonomy(const Taxonomy& taxonomy) {
  std::ostringstream out;
  for (size_t i = 0; i < taxonomy.size(); ++i) {
    const Feature& f = taxonomy.feature(i);
    out << (i + 1) << ". " << f.name << ": " << f.definition << "\n";
  }
  return out.str();
}

std::vector<std::string> feature_names(const Taxonomy& taxonomy) {
  std::vector<std::string> names;
  names.reserve(taxonomy.size());
  for (const Feature& f : taxonomy.features()) names.push_back(f.name);
  return names;
}

}  // namespace lot
