#pragma once
// Line-delimited JSON helpers. Corpus files are one record per line so
// they stream at any scale; errors carry the 1-based line number.

#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"
#include "mrfg/core.hpp"

namespace mrfg {

using Json = nlohmann::json;

// Calls fn(record, line_number) for every non-empty line.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(const Json&, size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error("malformed line " + std::to_string(lineno) + " in " + path + ": " + e.what());
    }
    fn(rec, lineno);
  }
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw Error("cannot write " + path);
  }
  void write(const Json& rec) { out_ << rec.dump() << "\n"; }

 private:
  std::ofstream out_;
};

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw Error("malformed json in " + path + ": " + e.what());
  }
  return j;
}

inline void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace mrfg
