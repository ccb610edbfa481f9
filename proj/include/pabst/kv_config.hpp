#ifndef PABST_KV_CONFIG_HPP_
#define PABST_KV_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>

namespace pabst {

// Flat "key = value" file. Blank lines and lines starting with '#' are
// skipped; keys must be unique.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_kv(const std::string& text, const std::string& source = "config");
KeyValues read_kv_file(const std::string& path);

double parse_double(const std::string& key, const std::string& value);
uint64_t parse_uint(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

}  // namespace pabst

#endif  // PABST_KV_CONFIG_HPP_
