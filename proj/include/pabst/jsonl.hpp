#ifndef PABST_JSONL_HPP_
#define PABST_JSONL_HPP_

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace pabst {

using Json = nlohmann::json;

// Calls fn(object, line_number) for every non-blank line. Parse failures and
// exceptions thrown by fn become ValidationError("<path>:<line>: ...").
void read_jsonl(const std::string& path, const std::function<void(const Json&, size_t)>& fn);

// One compact object per line, keys in insertion order of the Json values.
void write_jsonl(const std::string& path, const std::vector<Json>& rows);

// Typed field access with "missing field"/"wrong type" validation errors.
std::string require_string(const Json& obj, const char* key);
std::vector<std::string> require_string_list(const Json& obj, const char* key);

// Reads a whole file; ValidationError if it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace pabst

#endif  // PABST_JSONL_HPP_
