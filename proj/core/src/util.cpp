#include "lot/util.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

namespace lot {

uint64_t Rng::below(uint64_t bound) {
  if (bound == 0) throw Error("Rng::below: bound must be positive");
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string lower_copy(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = true;  // drop leading whitespace
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      out.push_back(c);
      in_ws = false;
    }
  }
  return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::optional<std::string> fenced_block(std::string_view text) {
  auto lines = split_lines(text);
  std::string content;
  bool inside = false;
  for (const auto& line : lines) {
    if (trim(line).rfind("```", 0) == 0) {
      if (!inside) {
        inside = true;
        continue;
      }
      return content;
    }
    if (inside) {
      content += line;
      content += "\n";
    }
  }
  return std::nullopt;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?' || c == '\n') {
      std::string s = trim(current);
      if (!s.empty()) out.push_back(std::move(s));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  std::string s = trim(current);
  if (!s.empty()) out.push_back(std::move(s));
  return out;
}

std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    std::string p = trim(current);
    if (!p.empty()) out.push_back(std::move(p));
    current.clear();
  };
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\n') {
      // a newline followed by only whitespace up to the next newline is a blank line
      size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < text.size() && text[j] == '\n') {
        flush();
        i = j + 1;
        continue;
      }
    }
    current.push_back(text[i]);
    ++i;
  }
  flush();
  return out;
}

std::vector<std::string> find_marker_tokens(std::string_view text, std::string_view prefix) {
  std::vector<std::string> out;
  std::vector<std::string> seen;
  size_t pos = 0;
  while ((pos = text.find(prefix, pos)) != std::string_view::npos) {
    size_t end = pos + prefix.size();
    size_t suffix_start = end;
    while (end < text.size() && std::isalnum(static_cast<unsigned char>(text[end]))) ++end;
    if (end > suffix_start) {
      std::string token(text.substr(pos, end - pos));
      bool fresh = true;
      for (const auto& s : seen)
        if (s == token) fresh = false;
      if (fresh) {
        seen.push_back(token);
        out.push_back(std::move(token));
      }
    }
    pos = end;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

void warn(const std::string& message) { std::cerr << "[lot] warning: " << message << "\n"; }

}  // namespace lot
