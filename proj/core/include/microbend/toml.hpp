#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace microbend::toml {

// Minimal TOML-subset reader for flat run configs: [table] headers,
// key = value with strings, integers, floats, booleans, and homogeneous
// scalar arrays. No dates, no multi-line strings, no nested tables.
class Table {
 public:
  static Table parse(const std::string& text);
  static Table parse_file(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  // Lookups throw std::runtime_error on missing keys or type mismatch;
  // the *_or forms substitute a default when the key is absent.
  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_double_array(const std::string& key) const;
  std::vector<std::int64_t> get_int_array(const std::string& key) const;

  void set_override(const std::string& key, const std::string& raw_value);
  std::vector<std::string> keys() const;

 private:
  enum class Kind { String, Float, Int, Bool, Array };
  struct Value {
    Kind kind;
    std::string str;
    double num = 0;
    std::int64_t integer = 0;
    bool boolean = false;
    std::vector<Value> array;
  };
  static Value parse_value(const std::string& raw, int line_no);
  std::map<std::string, Value> values_;
};

}  // namespace microbend::toml
