#include "ussci/core/kv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ussci {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
  throw std::invalid_argument("config key '" + key + "': '" + value + "' is not " + what);
}

template <typename U>
bool read_number(const KeyValues& kv, const std::string& key, U& out, const char* what) {
  auto it = kv.find(key);
  if (it == kv.end()) return false;
  const std::string& v = it->second;
  U parsed{};
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
  if (ec != std::errc{} || end != v.data() + v.size() || v.empty()) bad(key, v, what);
  out = parsed;
  return true;
}

}  // namespace

KeyValues parse_kv(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("line " + std::to_string(number) + ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (!kv.emplace(key, trim(t.substr(eq + 1))).second) {
      throw std::invalid_argument("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

std::string format_kv(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

bool kv_read(const KeyValues& kv, const std::string& key, std::size_t& out) {
  return read_number(kv, key, out, "a non-negative integer");
}

bool kv_read(const KeyValues& kv, const std::string& key, double& out) {
  double v = 0;
  if (!read_number(kv, key, v, "a number")) return false;
  if (!std::isfinite(v)) bad(key, kv.at(key), "a finite number");
  out = v;
  return true;
}

bool kv_read(const KeyValues& kv, const std::string& key, bool& out) {
  auto it = kv.find(key);
  if (it == kv.end()) return false;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "on") {
    out = true;
  } else if (v == "0" || v == "false" || v == "off") {
    out = false;
  } else {
    bad(key, v, "a boolean");
  }
  return true;
}

bool kv_read(const KeyValues& kv, const std::string& key, std::string& out) {
  auto it = kv.find(key);
  if (it == kv.end()) return false;
  out = it->second;
  return true;
}

}  // namespace ussci
