#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vihoi::cli {

// Layered run configuration: built-in defaults, then a config file, then
// command-line overrides. Every key has a default; unknown keys and values
// of the wrong type throw Config.
//
// File grammar (one statement per line):
//
//   line     := blank | comment | section | pair
//   comment  := '#' any*                  (also allowed after a value)
//   section  := '[' name ']'              name is dotted, e.g. [diffusion]
//   pair     := key '=' value             key is dotted; inside a section it
//                                         is prefixed with "<section>."
//   value    := text up to '#' or end of line, trimmed; a value in double
//               quotes is taken verbatim (may contain '#')
//
// Lists are comma separated ("8, 9"). Booleans are true/false.
//
// A run.json written by any command is accepted as a config file too: its
// "config" object is read back key by key.
class RunConfig {
 public:
  enum class Type { kString, kInt, kReal, kBool, kIntList };

  struct KeySpec {
    std::string key;
    Type type;
    std::string default_value;
    std::vector<std::string> choices;  // empty: any value of the type
  };

  RunConfig();

  static const std::vector<KeySpec>& schema();

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  // Applies a file's statements on top of the current values.
  void merge_text(std::string_view text);
  void set(const std::string& key, const std::string& value);
  // "key=value".
  void set_assignment(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  std::string str(const std::string& key) const { return get(key); }
  long integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<int> int_list(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const { return std::filesystem::path(get(key)); }

  // Seed for a named stage, derived from seeds.base.
  std::uint64_t seed(std::string_view stage) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  // Canonical text form: one section per key prefix, keys sorted.
  std::string format() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace vihoi::cli
