#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gridforge/common/bytes.hpp"

namespace gridforge {

/// Deterministic key-sorted, length-prefixed serialization used for every
/// signed or hashed structure.
///
/// A document is `d<count>:` followed by its fields in ascending key order,
/// each as `<keylen>:<key><value>`. Values are tagged:
///   s<len>:<utf8>   b<len>:<raw>   u<len>:<decimal>   i<len>:<decimal>
///   l<count>:<value>...            d<count>:... (nested document)
/// Duplicate keys are a programming error and throw std::logic_error.
class CanonicalEncoder {
public:
    CanonicalEncoder& add_string(std::string_view key, std::string_view value);
    CanonicalEncoder& add_bytes(std::string_view key, ByteView value);
    CanonicalEncoder& add_uint(std::string_view key, std::uint64_t value);
    CanonicalEncoder& add_int(std::string_view key, std::int64_t value);
    CanonicalEncoder& add_bool(std::string_view key, bool value);
    CanonicalEncoder& add_string_map(std::string_view key, const std::map<std::string, std::string>& value);
    CanonicalEncoder& add_string_list(std::string_view key, const std::vector<std::string>& value);
    CanonicalEncoder& add_bytes_list(std::string_view key, const std::vector<Bytes>& value);
    CanonicalEncoder& add_document(std::string_view key, const CanonicalEncoder& nested);

    Bytes encode() const;

private:
    CanonicalEncoder& put(std::string_view key, std::string encoded_value);
    std::map<std::string, std::string, std::less<>> fields_;
};

}  // namespace gridforge
