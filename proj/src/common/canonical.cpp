#include "gridforge/common/canonical.hpp"

#include <stdexcept>

namespace gridforge {

namespace {

std::string tagged(char tag, std::string_view body) {
    std::string out;
    out.reserve(body.size() + 12);
    out.push_back(tag);
    out += std::to_string(body.size());
    out.push_back(':');
    out += body;
    return out;
}

std::string counted(char tag, std::size_t count, std::string_view body) {
    std::string out;
    out.push_back(tag);
    out += std::to_string(count);
    out.push_back(':');
    out += body;
    return out;
}

}  // namespace

CanonicalEncoder& CanonicalEncoder::put(std::string_view key, std::string encoded_value) {
    auto [it, inserted] = fields_.emplace(std::string(key), std::move(encoded_value));
    if (!inserted) {
        throw std::logic_error("duplicate canonical field: " + std::string(key));
    }
    return *this;
}

CanonicalEncoder& CanonicalEncoder::add_string(std::string_view key, std::string_view value) {
    return put(key, tagged('s', value));
}

CanonicalEncoder& CanonicalEncoder::add_bytes(std::string_view key, ByteView value) {
    return put(key, tagged('b', std::string_view(reinterpret_cast<const char*>(value.data()), value.size())));
}

CanonicalEncoder& CanonicalEncoder::add_uint(std::string_view key, std::uint64_t value) {
    return put(key, tagged('u', std::to_string(value)));
}

CanonicalEncoder& CanonicalEncoder::add_int(std::string_view key, std::int64_t value) {
    return put(key, tagged('i', std::to_string(value)));
}

CanonicalEncoder& CanonicalEncoder::add_bool(std::string_view key, bool value) {
    return put(key, tagged('u', value ? "1" : "0"));
}

CanonicalEncoder& CanonicalEncoder::add_string_map(std::string_view key,
                                                   const std::map<std::string, std::string>& value) {
    CanonicalEncoder nested;
    for (const auto& [k, v] : value) {
        nested.add_string(k, v);
    }
    return add_document(key, nested);
}

CanonicalEncoder& CanonicalEncoder::add_string_list(std::string_view key, const std::vector<std::string>& value) {
    std::string body;
    for (const auto& item : value) {
        body += tagged('s', item);
    }
    return put(key, counted('l', value.size(), body));
}

CanonicalEncoder& CanonicalEncoder::add_bytes_list(std::string_view key, const std::vector<Bytes>& value) {
    std::string body;
    for (const auto& item : value) {
        body += tagged('b', std::string_view(reinterpret_cast<const char*>(item.data()), item.size()));
    }
    return put(key, counted('l', value.size(), body));
}

CanonicalEncoder& CanonicalEncoder::add_document(std::string_view key, const CanonicalEncoder& nested) {
    Bytes enc = nested.encode();
    return put(key, std::string(enc.begin(), enc.end()));
}

Bytes CanonicalEncoder::encode() const {
    std::string body;
    for (const auto& [key, value] : fields_) {
        body += std::to_string(key.size());
        body.push_back(':');
        body += key;
        body += value;
    }
    std::string doc = counted('d', fields_.size(), body);
    return Bytes(doc.begin(), doc.end());
}

}  // namespace gridforge
