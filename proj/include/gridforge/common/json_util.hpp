#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gridforge/common/bytes.hpp"

namespace gridforge {

using Json = nlohmann::json;

/// Parses one textual document; any syntax error becomes Error(MalformedDocument).
Json parse_document(std::string_view text);
/// Compact, key-sorted rendering.
std::string dump_document(const Json& doc);

// Field accessors that raise Error(MalformedDocument) on absence or type mismatch.
const Json& require_field(const Json& doc, std::string_view key);
std::string get_string(const Json& doc, std::string_view key);
std::int64_t get_int(const Json& doc, std::string_view key);
std::uint64_t get_uint(const Json& doc, std::string_view key);
bool get_bool(const Json& doc, std::string_view key);
Bytes get_base64(const Json& doc, std::string_view key);
const Json& get_object(const Json& doc, std::string_view key);
const Json& get_array(const Json& doc, std::string_view key);

}  // namespace gridforge
