#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridforge/cas/cas.hpp"
#include "gridforge/credstore/credential.hpp"

namespace gridforge::secmsg {

enum class MessageMode { StatelessSigned, Context };

std::string_view to_string(MessageMode mode);

/// What a service publishes about how it must be called.
struct PolicyDescriptor {
    std::string service_name;
    std::vector<std::string> accepted_trust_roots;
    MessageMode required_message_mode = MessageMode::StatelessSigned;
    std::optional<std::string> required_assertion;

    Json to_json() const;
    static PolicyDescriptor from_json(const Json& doc);
};

struct MechanismPlan {
    credstore::CredentialSet credential;
    MessageMode mode = MessageMode::StatelessSigned;
    std::optional<cas::CasAssertion> assertion;
};

/// Picks the credential rooted at an accepted trust root with the longest
/// remaining validity (ties broken by ascending leaf subject), together with
/// an unexpired assertion from the required VO for that credential's user.
MechanismPlan select_mechanism(const PolicyDescriptor& policy,
                               const std::vector<credstore::CredentialSet>& available,
                               const std::vector<cas::CasAssertion>& assertions, UnixTime now);

}  // namespace gridforge::secmsg
