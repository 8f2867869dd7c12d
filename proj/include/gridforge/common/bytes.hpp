#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridforge {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string hex_encode(ByteView data);
/// Strict lowercase hex; throws Error(MalformedDocument) otherwise.
Bytes hex_decode(std::string_view text);

std::string base64_encode(ByteView data);
/// Strict standard base64 with padding; throws Error(MalformedDocument).
Bytes base64_decode(std::string_view text);

}  // namespace gridforge
