#include "gridforge/common/json_util.hpp"

#include "gridforge/common/error.hpp"

namespace gridforge {

Json parse_document(std::string_view text) {
    try {
        Json doc = Json::parse(text.begin(), text.end());
        if (!doc.is_object()) {
            throw Error(ErrorCode::MalformedDocument, "document is not an object");
        }
        return doc;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
}

std::string dump_document(const Json& doc) { return doc.dump(); }

const Json& require_field(const Json& doc, std::string_view key) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::MalformedDocument, "expected object holding '" + std::string(key) + "'");
    }
    auto it = doc.find(key);
    if (it == doc.end()) {
        throw Error(ErrorCode::MalformedDocument, "missing field '" + std::string(key) + "'");
    }
    return *it;
}

namespace {

[[noreturn]] void wrong_type(std::string_view key, std::string_view expected) {
    throw Error(ErrorCode::MalformedDocument, "field '" + std::string(key) + "' is not " + std::string(expected));
}

}  // namespace

std::string get_string(const Json& doc, std::string_view key) {
    const Json& v = require_field(doc, key);
    if (!v.is_string()) wrong_type(key, "a string");
    return v.get<std::string>();
}

std::int64_t get_int(const Json& doc, std::string_view key) {
    const Json& v = require_field(doc, key);
    if (!v.is_number_integer()) wrong_type(key, "an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_uint(const Json& doc, std::string_view key) {
    const Json& v = require_field(doc, key);
    if (!v.is_number_unsigned()) wrong_type(key, "an unsigned integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const Json& doc, std::string_view key) {
    const Json& v = require_field(doc, key);
    if (!v.is_boolean()) wrong_type(key, "a boolean");
    return v.get<bool>();
}

Bytes get_base64(const Json& doc, std::string_view key) { return base64_decode(get_string(doc, key)); }

const Json& get_object(const Json& doc, std::string_view key) {
    const Json& v = require_field(doc, key);
    if (!v.is_object()) wrong_type(key, "an object");
    return v;
}

const Json& get_array(const Json& doc, std::string_view key) {
    const Json& v = require_field(doc, key);
    if (!v.is_array()) wrong_type(key, "an array");
    return v;
}

}  // namespace gridforge
