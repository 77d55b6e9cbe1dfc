#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lot {

/// A named, natural-language-defined reasoning trait.
struct Feature {
  int feature_id = -1;  // equals position in its taxonomy
  std::string name;
  std::string definition;
  int origin_iteration = 0;
  std::optional<std::string> origin_pair;  // question_id; empty for the initial pair

  bool operator==(const Feature&) const = default;
};

/// Ordered, versioned, append-only set of features. Normalized names are
/// unique; the feature list at version v is a prefix of the list at any
/// later version, which keeps old encodings aligned.
class Taxonomy {
 public:
  Taxonomy() = default;

  // Initial population: the features become version 1 (ids assigned by
  // position). Later growth goes through merge().
  static Taxonomy with_features(std::vector<Feature> features);

  const std::vector<Feature>& features() const { return features_; }
  const Feature& feature(size_t i) const { return features_.at(i); }
  int version() const { return version_; }
  size_t size() const { return features_.size(); }
  bool empty() const { return features_.empty(); }

  // Appends proposed features whose normalized name is new, in proposal
  // order; bumps the version iff anything was accepted. Returns the
  // accepted count.
  int merge(const std::vector<Feature>& proposed);

  // The version-v snapshot: the first `width` features. Well-defined because
  // growth is append-only.
  Taxonomy prefix(int version, size_t width) const;

  void save(const std::filesystem::path& path) const;
  static Taxonomy load(const std::filesystem::path& path);

  static std::string normalize_name(std::string_view name);

  bool operator==(const Taxonomy& other) const {
    return version_ == other.version_ && features_ == other.features_;
  }

 private:
  std::vector<Feature> features_;
  int version_ = 1;
  std::set<std::string> normalized_names_;
};

// numbered "i. name: definition" lines, the form prompts embed
std::string format_taxonomy(const Taxonomy& taxonomy);

std::vector<std::string> feature_names(const Taxonomy& taxonomy);

}  // namespace lot
