#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include "pseudoflow/errors.hpp"

namespace pseudoflow {

// Minimal TOML subset: comments, [sections], and key = value lines with
// string / bool / integer / float values. Exactly what flat config files
// need; anything else is rejected with a line number.
struct TomlValue {
  std::variant<bool, std::int64_t, double, std::string> v;

  bool as_bool(const std::string& where) const;
  std::int64_t as_int(const std::string& where) const;
  double as_double(const std::string& where) const;  // accepts integers
  const std::string& as_string(const std::string& where) const;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::filesystem::path& path);

}  // namespace pseudoflow
