#include "gridforge/credstore/certificate.hpp"

#include <charconv>

#include "gridforge/common/canonical.hpp"
#include "gridforge/common/error.hpp"

namespace gridforge::credstore {

std::string_view to_string(CertType type) {
    switch (type) {
        case CertType::CA:
            return "CA";
        case CertType::EndEntity:
            return "EndEntity";
        case CertType::Proxy:
            return "Proxy";
    }
    return "?";
}

CertType cert_type_from_string(std::string_view name) {
    if (name == "CA") return CertType::CA;
    if (name == "EndEntity") return CertType::EndEntity;
    if (name == "Proxy") return CertType::Proxy;
    throw Error(ErrorCode::MalformedDocument, "unknown cert_type '" + std::string(name) + "'");
}

std::string DelegationDepth::to_text() const {
    return is_unlimited() ? std::string("unlimited") : std::to_string(levels());
}

DelegationDepth DelegationDepth::from_text(std::string_view text) {
    if (text == "unlimited") {
        return unlimited();
    }
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() ||
        (text.size() > 1 && text.front() == '0')) {
        throw Error(ErrorCode::MalformedDocument, "invalid delegation depth '" + std::string(text) + "'");
    }
    return limited(v);
}

Bytes Certificate::canonical_body() const {
    CanonicalEncoder enc;
    enc.add_uint("serial", serial)
        .add_string("subject", subject)
        .add_string("issuer", issuer)
        .add_bytes("subject_public_key", subject_public_key)
        .add_int("not_before", validity.not_before)
        .add_int("not_after", validity.not_after)
        .add_string("cert_type", to_string(type))
        .add_string_map("extensions", extensions)
        .add_string("signature_scheme", signature_scheme);
    if (max_delegation_depth) {
        enc.add_string("max_delegation_depth", max_delegation_depth->to_text());
    }
    return enc.encode();
}

Json Certificate::to_json() const {
    Json doc = {
        {"serial", serial},
        {"subject", subject},
        {"issuer", issuer},
        {"subject_public_key", base64_encode(subject_public_key)},
        {"not_before", validity.not_before},
        {"not_after", validity.not_after},
        {"cert_type", to_string(type)},
        {"extensions", extensions},
        {"signature_scheme", signature_scheme},
        {"signature", base64_encode(signature)},
    };
    if (max_delegation_depth) {
        doc["max_delegation_depth"] = max_delegation_depth->to_text();
    }
    return doc;
}

Certificate Certificate::from_json(const Json& doc) {
    Certificate c;
    c.serial = get_uint(doc, "serial");
    c.subject = get_string(doc, "subject");
    c.issuer = get_string(doc, "issuer");
    c.subject_public_key = get_base64(doc, "subject_public_key");
    c.validity.not_before = get_int(doc, "not_before");
    c.validity.not_after = get_int(doc, "not_after");
    c.type = cert_type_from_string(get_string(doc, "cert_type"));
    for (const auto& [k, v] : get_object(doc, "extensions").items()) {
        if (!v.is_string()) {
            throw Error(ErrorCode::MalformedDocument, "extension '" + k + "' is not a string");
        }
        c.extensions.emplace(k, v.get<std::string>());
    }
    c.signature_scheme = get_string(doc, "signature_scheme");
    c.signature = get_base64(doc, "signature");
    if (doc.contains("max_delegation_depth")) {
        c.max_delegation_depth = DelegationDepth::from_text(get_string(doc, "max_delegation_depth"));
    }
    const std::size_t expected_fields = c.max_delegation_depth ? 11 : 10;
    if (doc.size() != expected_fields) {
        throw Error(ErrorCode::MalformedDocument, "certificate has unexpected fields");
    }
    return c;
}

std::string proxy_subject(std::string_view parent_subject, std::uint64_t serial) {
    return std::string(parent_subject) + "/CN=proxy-" + std::to_string(serial);
}

Json chain_to_json(const Chain& chain) {
    Json arr = Json::array();
    for (const auto& cert : chain) {
        arr.push_back(cert.to_json());
    }
    return arr;
}

Chain chain_from_json(const Json& array) {
    if (!array.is_array()) {
        throw Error(ErrorCode::MalformedDocument, "certificate chain is not an array");
    }
    Chain chain;
    chain.reserve(array.size());
    for (const auto& doc : array) {
        chain.push_back(Certificate::from_json(doc));
    }
    return chain;
}

}  // namespace gridforge::credstore
