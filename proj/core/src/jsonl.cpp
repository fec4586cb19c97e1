#include "jsonl.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "elicit/error.hpp"

namespace elicit::detail {

void fail_at(const Origin& origin, const std::string& message) {
  throw ValidationError(std::string(origin.source) + ":" + std::to_string(origin.line) + ": " +
                        message);
}

void for_each_record(std::istream& in, std::string_view source,
                     const std::function<void(const Origin&, const json&)>& fn) {
  std::string line;
  Origin origin{source, 0};
  while (std::getline(in, line)) {
    ++origin.line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at(origin, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) fail_at(origin, "expected a JSON object");
    fn(origin, record);
  }
  if (in.bad()) throw ValidationError(std::string(source) + ": read error");
}

const json& require_field(const json& object, std::string_view key, const Origin& origin) {
  auto it = object.find(key);
  if (it == object.end()) fail_at(origin, "missing field '" + std::string(key) + "'");
  return *it;
}

std::string require_string(const json& object, std::string_view key, const Origin& origin,
                           bool non_empty) {
  const json& value = require_field(object, key, origin);
  if (!value.is_string()) fail_at(origin, "field '" + std::string(key) + "' must be a string");
  auto text = value.get<std::string>();
  if (non_empty && text.empty()) fail_at(origin, "field '" + std::string(key) + "' is empty");
  return text;
}

double require_number(const json& object, std::string_view key, const Origin& origin) {
  const json& value = require_field(object, key, origin);
  if (!value.is_number()) fail_at(origin, "field '" + std::string(key) + "' must be a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) fail_at(origin, "field '" + std::string(key) + "' is not finite");
  return x;
}

std::uint64_t require_unsigned(const json& object, std::string_view key, const Origin& origin) {
  const json& value = require_field(object, key, origin);
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
    fail_at(origin, "field '" + std::string(key) + "' must be a non-negative integer");
  return value.get<std::uint64_t>();
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_record(std::ostream& out, const json& record) { out << record.dump() << '\n'; }

}  // namespace elicit::detail
