#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "wclre/types.hpp"

namespace wclre {

// One-record-per-line instance format. Fields: tokens (array of strings),
// head ([start, end)), tail ([start, end)), relation (string), confidence
// (optional number in [0, 1]). UTF-8 throughout.

inline Instance parse_instance_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw data_error("malformed record: not an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "tokens" && key != "head" && key != "tail" && key != "relation" &&
        key != "confidence")
      throw data_error("malformed record: unknown field '" + key + "'");
  }

  Instance inst;
  if (!j.contains("tokens") || !j["tokens"].is_array())
    throw data_error("malformed record: field 'tokens' missing or not an array");
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw data_error("malformed record: field 'tokens' has a non-string entry");
    inst.tokens.push_back(t.get<std::string>());
  }
  if (inst.tokens.empty()) throw data_error("malformed record: field 'tokens' is empty");

  auto read_span = [&](const char* field) -> Span {
    if (!j.contains(field) || !j[field].is_array() || j[field].size() != 2 ||
        !j[field][0].is_number_unsigned() || !j[field][1].is_number_unsigned())
      throw data_error(std::string("malformed record: field '") + field +
                       "' must be [start, end] with non-negative integers");
    Span s{j[field][0].get<std::size_t>(), j[field][1].get<std::size_t>()};
    if (s.start >= s.end) throw data_error(std::string("empty span: field '") + field + "'");
    if (s.end > inst.tokens.size())
      throw data_error(std::string("span out of bounds: field '") + field + "'");
    return s;
  };
  inst.head = read_span("head");
  inst.tail = read_span("tail");

  if (!j.contains("relation") || !j["relation"].is_string())
    throw data_error("malformed record: field 'relation' missing or not a string");
  inst.relation = RelationLabel(j["relation"].get<std::string>());
  if (inst.relation.name.empty()) throw data_error("malformed record: field 'relation' is empty");

  if (j.contains("confidence")) {
    if (!j["confidence"].is_number())
      throw data_error("malformed record: field 'confidence' not a number");
    const double c = j["confidence"].get<double>();
    if (c < 0.0 || c > 1.0)
      throw data_error("malformed record: field 'confidence' outside [0, 1]");
    inst.confidence = c;
  }
  return inst;
}

inline std::string serialize_instance_record(const Instance& inst) {
  nlohmann::json j;
  j["tokens"] = inst.tokens;
  j["head"] = {inst.head.start, inst.head.end};
  j["tail"] = {inst.tail.start, inst.tail.end};
  j["relation"] = inst.relation.name;
  if (inst.confidence) j["confidence"] = *inst.confidence;
  return j.dump();
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open dataset file: " + path.string());
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      ds.instances.push_back(parse_instance_record(line));
    } catch (const data_error& e) {
      throw data_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  rebuild_label_set(ds);
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write dataset file: " + path.string());
  for (const auto& inst : ds.instances) out << serialize_instance_record(inst) << '\n';
}

}  // namespace wclre
