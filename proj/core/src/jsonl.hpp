#pragma once

// Helpers for the newline-delimited JSON formats. Private to the library.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

namespace elicit::detail {

using json = nlohmann::json;

/// Where a record came from, for error messages.
struct Origin {
  std::string_view source;
  std::size_t line = 0;
};

[[noreturn]] void fail_at(const Origin& origin, const std::string& message);

/// Calls `fn` for every non-blank line parsed as a JSON object.
void for_each_record(std::istream& in, std::string_view source,
                     const std::function<void(const Origin&, const json&)>& fn);

const json& require_field(const json& object, std::string_view key, const Origin& origin);
std::string require_string(const json& object, std::string_view key, const Origin& origin,
                           bool non_empty = true);
double require_number(const json& object, std::string_view key, const Origin& origin);
std::uint64_t require_unsigned(const json& object, std::string_view key, const Origin& origin);

std::ifstream open_for_read(const std::filesystem::path& path);
std::ofstream open_for_write(const std::filesystem::path& path);

/// Compact dump followed by '\n'. Keys are sorted (nlohmann object order).
void write_record(std::ostream& out, const json& record);

}  // namespace elicit::detail
