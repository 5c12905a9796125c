#include "microbend/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace microbend::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::runtime_error("toml parse error (line " + std::to_string(line) + "): " + what);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool looks_like_int(const std::string& s) {
  if (s.empty()) return false;
  size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

Table::Value Table::parse_value(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (v.empty()) fail(line_no, "empty value");
  Value out;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') fail(line_no, "unterminated string");
    out.kind = Kind::String;
    out.str = v.substr(1, v.size() - 2);
    return out;
  }
  if (v == "true" || v == "false") {
    out.kind = Kind::Bool;
    out.boolean = (v == "true");
    return out;
  }
  if (v.front() == '[') {
    if (v.back() != ']') fail(line_no, "unterminated array");
    out.kind = Kind::Array;
    const std::string inner = v.substr(1, v.size() - 2);
    std::string item;
    int depth = 0;
    bool in_string = false;
    for (char ch : inner) {
      if (ch == '"') in_string = !in_string;
      if (!in_string && ch == '[') ++depth;
      if (!in_string && ch == ']') --depth;
      if (ch == ',' && depth == 0 && !in_string) {
        if (!trim(item).empty()) out.array.push_back(parse_value(item, line_no));
        item.clear();
      } else {
        item += ch;
      }
    }
    if (!trim(item).empty()) out.array.push_back(parse_value(item, line_no));
    return out;
  }
  if (looks_like_int(v)) {
    out.kind = Kind::Int;
    out.integer = std::stoll(v);
    out.num = static_cast<double>(out.integer);
    return out;
  }
  try {
    size_t pos = 0;
    out.num = std::stod(v, &pos);
    if (pos != v.size()) fail(line_no, "trailing characters after number: '" + v + "'");
    out.kind = Kind::Float;
    return out;
  } catch (const std::invalid_argument&) {
    fail(line_no, "unrecognized value: '" + v + "'");
  }
}

Table Table::parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line_no, "unterminated table header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line_no, "empty table name");
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    table.values_[full] = parse_value(s.substr(eq + 1), line_no);
  }
  return table;
}

Table Table::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool Table::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Table::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
  if (it->second.kind != Kind::String) throw std::runtime_error("config key is not a string: " + key);
  return it->second.str;
}

std::string Table::get_string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Table::get_double(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
  if (it->second.kind != Kind::Float && it->second.kind != Kind::Int)
    throw std::runtime_error("config key is not a number: " + key);
  return it->second.num;
}

double Table::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Table::get_int(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
  if (it->second.kind != Kind::Int) throw std::runtime_error("config key is not an integer: " + key);
  return it->second.integer;
}

std::int64_t Table::get_int_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Table::get_bool_or(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.kind != Kind::Bool) throw std::runtime_error("config key is not a boolean: " + key);
  return it->second.boolean;
}

std::vector<double> Table::get_double_array(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
  if (it->second.kind != Kind::Array) throw std::runtime_error("config key is not an array: " + key);
  std::vector<double> out;
  for (const auto& v : it->second.array) {
    if (v.kind != Kind::Float && v.kind != Kind::Int)
      throw std::runtime_error("config array is not numeric: " + key);
    out.push_back(v.num);
  }
  return out;
}

std::vector<std::int64_t> Table::get_int_array(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
  if (it->second.kind != Kind::Array) throw std::runtime_error("config key is not an array: " + key);
  std::vector<std::int64_t> out;
  for (const auto& v : it->second.array) {
    if (v.kind != Kind::Int) throw std::runtime_error("config array is not integer: " + key);
    out.push_back(v.integer);
  }
  return out;
}

void Table::set_override(const std::string& key, const std::string& raw_value) {
  values_[key] = parse_value(raw_value, 0);
}

std::vector<std::string> Table::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

}  // namespace microbend::toml
