#pragma once

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "constell/core.hpp"
#include "constell/io.hpp"

namespace constell {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value file with [section] headers and '#' comments. Reads are
/// tracked so unknown keys can be reported with their line numbers.
class ConfigFile {
 public:
  static ConfigFile parse_string(const std::string& text, const std::string& name = "<config>") {
    ConfigFile cf;
    cf.name_ = name;
    cf.raw_ = text;
    std::istringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      line = ioutil::trim(line);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(name + ":" + std::to_string(lineno) + ": unterminated section");
        section = ioutil::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                          line + "'");
      const std::string key = ioutil::trim(line.substr(0, eq));
      if (key.empty())
        throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
      Entry e;
      e.value = ioutil::trim(line.substr(eq + 1));
      e.line = lineno;
      if (!cf.entries_.emplace(section + "/" + key, e).second)
        throw ConfigError(name + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                          "' in section [" + section + "]");
    }
    return cf;
  }

  static ConfigFile parse_file(const std::filesystem::path& path) {
    auto f = ioutil::open_in(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path.string());
  }

  bool has(const std::string& section, const std::string& key) const {
    return entries_.count(section + "/" + key) > 0;
  }

  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& dflt) const {
    auto it = entries_.find(section + "/" + key);
    if (it == entries_.end()) return dflt;
    it->second.consumed = true;
    return it->second.value;
  }

  double get_real(const std::string& section, const std::string& key, double dflt) const {
    auto it = entries_.find(section + "/" + key);
    if (it == entries_.end()) return dflt;
    it->second.consumed = true;
    return ioutil::parse_double(it->second.value, where(it));
  }

  long long get_int(const std::string& section, const std::string& key, long long dflt) const {
    auto it = entries_.find(section + "/" + key);
    if (it == entries_.end()) return dflt;
    it->second.consumed = true;
    return ioutil::parse_int(it->second.value, where(it));
  }

  bool get_flag(const std::string& section, const std::string& key, bool dflt) const {
    auto it = entries_.find(section + "/" + key);
    if (it == entries_.end()) return dflt;
    it->second.consumed = true;
    const std::string& v = it->second.value;
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError(where(it) + ": expected a boolean, got '" + v + "'");
  }

  /// Error out on any key no loader asked for — catches typos early.
  void require_all_consumed() const {
    std::string bad;
    for (const auto& [k, e] : entries_)
      if (!e.consumed)
        bad += (bad.empty() ? "" : "; ") + name_ + ":" + std::to_string(e.line) +
               ": unknown key '" + k + "'";
    if (!bad.empty()) throw ConfigError(bad);
  }

  const std::string& raw_text() const { return raw_; }
  const std::string& name() const { return name_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };

  std::string where(std::map<std::string, Entry>::const_iterator it) const {
    return name_ + ":" + std::to_string(it->second.line);
  }

  std::string name_;
  std::string raw_;
  std::map<std::string, Entry> entries_;
};

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string config_text;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_s = 0.0;

  void save(const std::filesystem::path& path) const {
    auto f = ioutil::open_out(path);
    f << "# constell run manifest v1\n";
    f << "command=" << command << "\n";
    f << "tool_version=" << tool_version << "\n";
    f << "seed=" << seed << "\n";
    f << "wall_s=" << ioutil::fmt_double(wall_s) << "\n";
    for (const auto& i : inputs) f << "input=" << i << "\n";
    for (const auto& o : outputs) f << "output=" << o << "\n";
    f << "config_begin\n" << config_text;
    if (!config_text.empty() && config_text.back() != '\n') f << "\n";
    f << "config_end\n";
  }
};

/// Prefix an existing text artifact with a '# manifest=...' reference.
inline void tag_artifact(const std::filesystem::path& artifact,
                         const std::filesystem::path& manifest) {
  std::string body;
  {
    auto f = ioutil::open_in(artifact);
    std::stringstream ss;
    ss << f.rdbuf();
    body = ss.str();
  }
  auto f = ioutil::open_out(artifact);
  f << "# manifest=" << manifest.filename().string() << "\n" << body;
}

}  // namespace constell
