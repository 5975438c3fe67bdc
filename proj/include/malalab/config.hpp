#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "malalab/errors.hpp"

namespace malalab {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Flat `key=value` block. Entries are separated by newlines or ';', `#` starts a comment.
class KeyValueBlock {
 public:
  static KeyValueBlock parse(std::string_view text) {
    KeyValueBlock block;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find_first_of("\n;", pos);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(pos, end - pos);
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (!line.empty()) {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
          throw InputError("config: expected key=value, got '" + std::string(line) + "'");
        auto key = std::string(detail::trim(line.substr(0, eq)));
        auto value = std::string(detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw InputError("config: empty key");
        block.entries_[key] = value;
      }
      pos = end + 1;
    }
    return block;
  }

  static KeyValueBlock load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
  }

  double get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? to_double(key, *v) : fallback;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto v = get(key);
    return v ? to_int(key, *v) : fallback;
  }

  /// Comma-separated list of reals.
  std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (auto& item : split_list(*v)) out.push_back(to_double(key, item));
    if (out.empty()) throw InputError("config: '" + key + "' is an empty list");
    return out;
  }

  /// Comma-separated list of integers. `2^k` items are accepted as powers of two.
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         std::vector<std::int64_t> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<std::int64_t> out;
    for (auto& item : split_list(*v)) {
      if (auto caret = item.find('^'); caret != std::string::npos) {
        const auto base = to_int(key, item.substr(0, caret));
        const auto exponent = to_int(key, item.substr(caret + 1));
        if (exponent < 0 || exponent > 40) throw InputError("config: bad exponent in '" + item + "'");
        std::int64_t value = 1;
        for (std::int64_t i = 0; i < exponent; ++i) value *= base;
        out.push_back(value);
      } else {
        out.push_back(to_int(key, item));
      }
    }
    if (out.empty()) throw InputError("config: '" + key + "' is an empty list");
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto t = detail::trim(item);
      if (!t.empty()) items.emplace_back(t);
    }
    return items;
  }

  static double to_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InputError("config: '" + key + "' expects a number, got '" + s + "'");
    }
  }

  static std::int64_t to_int(const std::string& key, const std::string& s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw InputError("config: '" + key + "' expects an integer, got '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> entries_;
};

}  // namespace malalab
