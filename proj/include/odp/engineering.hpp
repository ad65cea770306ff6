#pragma once

#include "odp/instance.hpp"
#include "odp/metamodel.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace odp {
namespace eng {

// Shipped vocabulary the engineering operations rely on. The corpus model
// declares all of it; any model that does may use these operations.
inline constexpr std::string_view kStubTemplate = "Stub";
inline constexpr std::string_view kBinderTemplate = "Binder";
inline constexpr std::string_view kProtocolTemplate = "Protocol";

// Channel chain roles, client side to server side.
inline constexpr std::string_view kChannelRoles[7] = {
    "to_stub",         // endpoint -> client stub
    "stub_binder",     // client stub -> client binder
    "binder_protocol", // client binder -> client protocol
    "interworking",    // client protocol -> server protocol
    "protocol_binder", // server protocol -> server binder
    "binder_stub",     // server binder -> server stub
    "stub_to",         // server stub -> endpoint
};

inline constexpr std::string_view kNodeCapsuleRole = "node_capsule";
inline constexpr std::string_view kCapsuleClusterRole = "capsule_cluster";
inline constexpr std::string_view kClusterObjectRole = "cluster_object";

inline constexpr std::string_view kRefRole = "ref";
inline constexpr std::string_view kGrantRole = "grant";
inline constexpr std::string_view kAuthorizedAttr = "authorized";
inline constexpr std::string_view kAcceptsAttr = "accepts";

/// True when (group, kind) is one of the fixed function-group tags.
bool is_known_tag(std::string_view group, std::string_view kind);

/// All tags of the taxonomy, for diagnostics and docs.
const std::vector<EngineeringTag>& tag_taxonomy();

class EngineeringError : public std::runtime_error {
public:
    enum class Kind {
        MissingChannelTemplates, // E1
        DuplicateChannel,        // E2
        UnknownDestination,      // E3
        CredentialRejected,      // E4
        AuthenticationFailed,    // E4
        MissingTemplate,         // E5
        MissingPayload,
        NotContained,
        UnknownObject,
        BrokenContainment,
    };

    EngineeringError(Kind kind, const std::string& message);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// The node -> capsule -> cluster -> object containment tree, derived from
/// the containment roles of a system. Construction fails if any element has
/// more than one container.
struct Containment {
    std::map<std::string, std::set<std::string>> node_capsules;
    std::map<std::string, std::set<std::string>> capsule_clusters;
    std::map<std::string, std::set<std::string>> cluster_objects;

    static Containment from_system(const System& system);

    std::optional<std::string> cluster_of(const std::string& object_id) const;
    std::optional<std::string> capsule_of(const std::string& cluster_id) const;
    std::optional<std::string> node_of_cluster(const std::string& cluster_id) const;
    /// Node under which an object ultimately lives, when fully contained.
    std::optional<std::string> node_of(const std::string& object_id) const;
    std::size_t object_count() const;

    friend bool operator==(const Containment&, const Containment&) = default;
};

/// Mobile payload of an object: its state plus the authority, credential and
/// code image read from the shipped attributes of the same names.
struct SoftwareEntity {
    std::string object_id;
    std::map<std::string, Value> state;
    std::string authority;
    std::string credential;
    std::string code;
};

SoftwareEntity make_software_entity(const System& system, const std::string& object_id);

struct TravelRequest {
    std::string source_node;
    std::string destination_node;
    std::string entity;

    friend bool operator==(const TravelRequest&, const TravelRequest&) = default;
};

struct TransferResult {
    System system;
    TravelRequest request;
};

/// Inserts a stub/binder/protocol pair chain between two endpoint objects:
/// six fresh objects and the seven chain links. The result conforms to the
/// model whenever the input did.
System build_channel(const System& system, const Model& model, const std::string& client_id,
                     const std::string& server_id);

enum class DenyReason { NoReference, NoAuthorization };

struct Decision {
    bool allowed = false;
    std::optional<DenyReason> reason;

    friend bool operator==(const Decision&, const Decision&) = default;
};

/// A client may invoke a target iff it holds a `ref` link to it and is
/// authorized (boolean `authorized` attribute, or a `grant` link to the
/// target). The reference is checked first.
Decision authorize_invocation(const System& system, const std::string& client,
                              const std::string& target);

/// Moves an entity's object to a cluster under the destination node, keeping
/// state, authority, credential and code verbatim. The destination accepts
/// the entity iff its `accepts` attribute equals the credential or "*".
TransferResult transfer_entity(const System& system, const SoftwareEntity& entity,
                               const std::string& destination_node);

/// Creates a fresh instance of `template_name` under the destination node's
/// first cluster on behalf of an authenticated client. Attribute defaults:
/// int 0, bool false, string "".
System remote_create(const System& system, const Model& model, const std::string& client_id,
                     const std::string& template_name, const std::string& destination_node);

} // namespace eng
} // namespace odp
