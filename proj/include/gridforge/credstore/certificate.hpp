#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridforge/common/bytes.hpp"
#include "gridforge/common/json_util.hpp"
#include "gridforge/common/time.hpp"

namespace gridforge::credstore {

enum class CertType { CA, EndEntity, Proxy };

std::string_view to_string(CertType type);
CertType cert_type_from_string(std::string_view name);

/// Number of further proxy levels a certificate permits. Unlimited is a
/// distinct value, and Unlimited - 1 == Unlimited.
class DelegationDepth {
public:
    static constexpr DelegationDepth unlimited() { return DelegationDepth(); }
    static constexpr DelegationDepth limited(std::uint32_t levels) { return DelegationDepth(levels); }

    constexpr bool is_unlimited() const noexcept { return !levels_.has_value(); }
    /// Finite level count; only meaningful when !is_unlimited().
    constexpr std::uint32_t levels() const noexcept { return levels_.value_or(0); }
    constexpr bool allows_delegation() const noexcept { return is_unlimited() || *levels_ >= 1; }

    /// Saturating at zero; callers check allows_delegation() first.
    constexpr DelegationDepth decremented() const noexcept {
        if (is_unlimited() || *levels_ == 0) return *this;
        return limited(*levels_ - 1);
    }

    friend constexpr DelegationDepth min(DelegationDepth a, DelegationDepth b) noexcept {
        if (a.is_unlimited()) return b;
        if (b.is_unlimited()) return a;
        return a.levels() <= b.levels() ? a : b;
    }

    constexpr bool operator==(const DelegationDepth&) const = default;

    std::string to_text() const;
    static DelegationDepth from_text(std::string_view text);

private:
    constexpr DelegationDepth() = default;
    constexpr explicit DelegationDepth(std::uint32_t levels) : levels_(levels) {}
    std::optional<std::uint32_t> levels_;
};

using Extensions = std::map<std::string, std::string>;

/// Extension keys carried by host-issued service credentials.
inline constexpr std::string_view kExtGridIdentity = "grid_identity";
inline constexpr std::string_view kExtLocalAccount = "local_account";
inline constexpr std::string_view kExtLocalPolicy = "local_policy";

struct Certificate {
    std::uint64_t serial = 0;
    std::string subject;
    std::string issuer;
    Bytes subject_public_key;
    Validity validity;
    CertType type = CertType::EndEntity;
    /// Absent for CA certificates.
    std::optional<DelegationDepth> max_delegation_depth;
    Extensions extensions;
    std::string signature_scheme;
    Bytes signature;

    /// Key-sorted, length-prefixed encoding of every field except the signature.
    Bytes canonical_body() const;
    bool self_signed() const { return issuer == subject; }

    Json to_json() const;
    static Certificate from_json(const Json& doc);

    bool operator==(const Certificate&) const = default;
};

/// Subject naming rule for proxies: parent subject + "/CN=proxy-<serial>".
std::string proxy_subject(std::string_view parent_subject, std::uint64_t serial);

using Chain = std::vector<Certificate>;

Json chain_to_json(const Chain& chain);
Chain chain_from_json(const Json& array);

}  // namespace gridforge::credstore
