#include "pabst/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "pabst/common.hpp"

namespace pabst {

void read_jsonl(const std::string& path, const std::function<void(const Json&, size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(Json::parse(line), lineno);
    } catch (const Json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void write_jsonl(const std::string& path, const std::vector<Json>& rows) {
  std::string out;
  for (const Json& row : rows) out += row.dump() + "\n";
  write_file(path, out);
}

std::string require_string(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  const Json& v = obj.at(key);
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> require_string_list(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  const Json& v = obj.at(key);
  if (!v.is_array()) throw ValidationError(std::string("field '") + key + "' must be a list");
  std::vector<std::string> out;
  for (const Json& item : v) {
    if (!item.is_string()) {
      throw ValidationError(std::string("field '") + key + "' must hold strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace pabst
