/*
 * Copyright 2026 The reachcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Flat `key = value` files: one pair per line, `#` comments, later keys override
// earlier ones.

#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/text.hpp"

namespace reachcast {

class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in) {
    KeyValueFile kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto body = text::trim(line);
      if (body.empty() || body.front() == '#') continue;
      auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
      auto key = text::trim(body.substr(0, eq));
      if (key.empty()) throw ParseError("empty key", lineno);
      kv.values_[std::string(key)] = std::string(text::trim(body.substr(eq + 1)));
    }
    return kv;
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto d = text::parse_double(*v);
    if (!d) throw ParameterError("'" + key + "' must be a number, got '" + *v + "'");
    return *d;
  }

  template <class Int>
  Int get_int(const std::string& key, Int fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto d = text::parse_int<Int>(*v);
    if (!d) throw ParameterError("'" + key + "' must be an integer, got '" + *v + "'");
    return *d;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ParameterError("'" + key + "' must be true or false, got '" + *v + "'");
  }

  /// Comma-separated list of numbers.
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (auto item : text::split(*v, ',')) {
      if (text::trim(item).empty()) continue;
      auto d = text::parse_double(item);
      if (!d) throw ParameterError("'" + key + "' must be a comma-separated list of numbers");
      out.push_back(*d);
    }
    return out;
  }

  std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<std::string> out;
    for (auto item : text::split(*v, ',')) {
      auto t = text::trim(item);
      if (!t.empty()) out.emplace_back(t);
    }
    return out;
  }

  void write(std::ostream& out) const {
    for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace reachcast
