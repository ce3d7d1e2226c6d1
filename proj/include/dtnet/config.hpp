// Copyright 2026 The dtnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Sectioned key-value text configuration (INI style):
//
//   [section]
//   key = value   ; comment
//
// Keys are addressed as "section.key".

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dtnet/errors.hpp"

namespace dtnet {

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>") {
    KeyValueConfig cfg;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, cfg.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    // read_ini drops sections without keys; an empty [layerN] still counts.
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      const auto open = line.find_first_not_of(" \t");
      const auto close = line.find_last_not_of(" \t\r");
      if (open == std::string::npos || line[open] != '[' || line[close] != ']') continue;
      const std::string name = line.substr(open + 1, close - open - 1);
      if (!cfg.tree_.get_child_optional(name)) cfg.tree_.put_child(name, {});
    }
    cfg.origin_ = origin;
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto cfg = parse(buf.str(), path.string());
    cfg.base_dir_ = path.parent_path();
    return cfg;
  }

  bool has(const std::string& key) const { return tree_.get_child_optional(key).has_value(); }

  bool has_section(const std::string& section) const {
    auto child = tree_.get_child_optional(section);
    return child.has_value();
  }

  template <typename T>
  T get(const std::string& key) const {
    auto raw = tree_.get_optional<std::string>(key);
    if (!raw) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return convert<T>(key, *raw);
  }

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    return convert<T>(key, *raw);
  }

  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    tree_.put(key, os.str());
  }

  /// Comma separated list; empty when the key is absent.
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> items;
    auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return items;
    std::stringstream ss(*raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) items.push_back(item.substr(b, e - b + 1));
    }
    return items;
  }

  /// Resolves a path-valued key relative to the directory of the config file.
  std::filesystem::path path(const std::string& key) const {
    std::filesystem::path p = get<std::string>(key);
    return p.is_absolute() ? p : base_dir_ / p;
  }

  std::string to_string() const {
    std::ostringstream os;
    boost::property_tree::ini_parser::write_ini(os, tree_);
    return os.str();
  }

  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }
  const std::string& origin() const noexcept { return origin_; }

 private:
  template <typename T>
  T convert(const std::string& key, const std::string& raw) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
      if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
      throw ConfigError(origin_ + ": key '" + key + "' expects a boolean, got '" + raw + "'");
    } else {
      std::istringstream in(raw);
      T value{};
      in >> value;
      if (in.fail() || !(in >> std::ws).eof())
        throw ConfigError(origin_ + ": key '" + key + "' has invalid value '" + raw + "'");
      return value;
    }
  }

  boost::property_tree::ptree tree_;
  std::filesystem::path base_dir_;
  std::string origin_ = "<config>";
};

}  // namespace dtnet
