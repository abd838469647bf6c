#include "pseudoflow/toml.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pseudoflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("toml line " + std::to_string(line) + ": " + msg);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

TomlValue parse_value(const std::string& raw, int line) {
  if (raw.empty()) fail(line, "missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\') {
        if (i + 2 >= raw.size()) fail(line, "dangling escape");
        ++i;
        switch (raw[i]) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: fail(line, "unsupported escape sequence");
        }
      } else {
        out.push_back(raw[i]);
      }
    }
    return TomlValue{out};
  }
  if (raw == "true") return TomlValue{true};
  if (raw == "false") return TomlValue{false};
  const bool looks_float = raw.find_first_of(".eE") != std::string::npos;
  if (!looks_float) {
    std::int64_t iv = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), iv);
    if (ec == std::errc() && p == raw.data() + raw.size()) return TomlValue{iv};
  }
  try {
    std::size_t used = 0;
    const double dv = std::stod(raw, &used);
    if (used == raw.size()) return TomlValue{dv};
  } catch (...) {
  }
  fail(line, "cannot parse value '" + raw + "'");
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

}  // namespace

bool TomlValue::as_bool(const std::string& where) const {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError(where + ": expected a boolean");
}

std::int64_t TomlValue::as_int(const std::string& where) const {
  if (const std::int64_t* i = std::get_if<std::int64_t>(&v)) return *i;
  throw ConfigError(where + ": expected an integer");
}

double TomlValue::as_double(const std::string& where) const {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const std::int64_t* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError(where + ": expected a number");
}

const std::string& TomlValue::as_string(const std::string& where) const {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(where + ": expected a string");
}

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) fail(line_no, "bad section name '" + section + "'");
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(line_no, "bad key '" + key + "'");
    if (section.empty()) fail(line_no, "key outside any [section]");
    if (table[section].count(key)) fail(line_no, "duplicate key '" + key + "'");
    table[section][key] = parse_value(trim(line.substr(eq + 1)), line_no);
  }
  return table;
}

TomlTable parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

}  // namespace pseudoflow
