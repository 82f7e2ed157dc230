#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace ussci {

using KeyValues = std::map<std::string, std::string>;

/// Flat "key=value" lines; blank lines and lines starting with '#' are skipped.
/// Throws std::invalid_argument naming the line on malformed input or duplicate keys.
KeyValues parse_kv(const std::string& text);
std::string format_kv(const KeyValues& kv);

// Typed lookups that leave `out` untouched when the key is absent and throw
// std::invalid_argument (naming the key) when the value does not parse.
bool kv_read(const KeyValues& kv, const std::string& key, std::size_t& out);
bool kv_read(const KeyValues& kv, const std::string& key, double& out);
bool kv_read(const KeyValues& kv, const std::string& key, bool& out);
bool kv_read(const KeyValues& kv, const std::string& key, std::string& out);

}  // namespace ussci
