#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lot {

/// Named plain-text prompt templates with {placeholder} substitution.
/// Built-in defaults can be overridden per template by files named
/// "<template>.txt" in a directory.
class TemplateSet {
 public:
  static TemplateSet builtin();
  // builtins plus overrides found in dir
  static TemplateSet from_dir(const std::filesystem::path& dir);

  const std::string& raw(const std::string& name) const;
  std::string render(const std::string& name,
                     const std::map<std::string, std::string>& vars) const;

  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace lot
