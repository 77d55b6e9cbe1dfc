#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic RNG. mt19937_64 output is pinned by the standard; bounded
/// draws use rejection sampling so results never depend on the stdlib's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // uniform in [0, bound), bound > 0
  uint64_t below(uint64_t bound);

  // uniform in [0, 1)
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // independent child stream
  Rng fork() { return Rng(next_u64() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
};

uint64_t fnv1a(std::string_view s);
std::string hex64(uint64_t v);

std::string lower_copy(std::string_view s);
std::string trim(std::string_view s);
// collapse any whitespace run to a single space and trim
std::string collapse_ws(std::string_view s);
bool contains(std::string_view haystack, std::string_view needle);

std::vector<std::string> split_lines(std::string_view text);
// raw content of the first ``` ... ``` block, if both fences are present
std::optional<std::string> fenced_block(std::string_view text);
// segments ending at '.', '!', '?' or newline; empty segments dropped
std::vector<std::string> split_sentences(std::string_view text);
// blank-line delimited blocks
std::vector<std::string> split_paragraphs(std::string_view text);

// ordered first-appearance list of tokens of the form <prefix><alnum...>
std::vector<std::string> find_marker_tokens(std::string_view text, std::string_view prefix);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
void ensure_dir(const std::filesystem::path& dir);

void warn(const std::string& message);

}  // namespace lot
