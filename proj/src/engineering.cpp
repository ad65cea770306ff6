#include "odp/engineering.hpp"

#include <algorithm>
#include <array>

namespace odp {
namespace eng {

EngineeringError::EngineeringError(Kind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

namespace {

const std::vector<EngineeringTag>& taxonomy() {
    static const std::vector<EngineeringTag> tags = {
        {"management", "node"},
        {"management", "object"},
        {"management", "cluster"},
        {"management", "capsule"},
        {"coordination", "eventNotification"},
        {"coordination", "checkpointRecovery"},
        {"coordination", "deactivationReactivation"},
        {"coordination", "group"},
        {"coordination", "migration"},
        {"coordination", "interfaceRefTracking"},
        {"coordination", "transaction"},
        {"repository", "storage"},
        {"repository", "informationOrganization"},
        {"repository", "relocation"},
        {"repository", "typeRepository"},
        {"repository", "trading"},
        {"security", "accessControl"},
        {"security", "authentication"},
        {"security", "securityAudit"},
        {"security", "keyManagement"},
        {"security", "confidentialityIntegrity"},
    };
    return tags;
}

const ObjectInstance& require_object(const System& system, const std::string& id) {
    const ObjectInstance* object = system.find_object(id);
    if (!object) {
        throw EngineeringError(EngineeringError::Kind::UnknownObject,
                               "no object '" + id + "' in system '" + system.name + "'");
    }
    return *object;
}

bool link_exists(const System& system, std::string_view role, const std::string& source,
                 const std::string& target) {
    return std::ranges::any_of(system.links, [&](const auto& entry) {
        return entry.second.role == role && entry.second.source == source &&
               entry.second.target == target;
    });
}

std::string unique_object_id(const System& system, std::string base) {
    if (!system.objects.contains(base)) return base;
    for (std::size_t k = 2;; ++k) {
        std::string candidate = base + "_" + std::to_string(k);
        if (!system.objects.contains(candidate)) return candidate;
    }
}

std::string unique_link_id(const System& system, std::string base) {
    if (!system.links.contains(base)) return base;
    for (std::size_t k = 2;; ++k) {
        std::string candidate = base + "_" + std::to_string(k);
        if (!system.links.contains(candidate)) return candidate;
    }
}

std::string required_string_attr(const ObjectInstance& object, std::string_view attr) {
    auto it = object.state.find(std::string(attr));
    if (it == object.state.end() || !std::holds_alternative<std::string>(it->second)) {
        throw EngineeringError(EngineeringError::Kind::MissingPayload,
                               "object '" + object.id + "' lacks string attribute '" +
                                   std::string(attr) + "'");
    }
    return std::get<std::string>(it->second);
}

void insert_child(std::map<std::string, std::set<std::string>>& tree,
                  std::map<std::string, std::string>& parent_of, const std::string& parent,
                  const std::string& child, const char* what) {
    auto [it, fresh] = parent_of.emplace(child, parent);
    if (!fresh && it->second != parent) {
        throw EngineeringError(EngineeringError::Kind::BrokenContainment,
                               std::string(what) + " '" + child + "' is contained twice (by '" +
                                   it->second + "' and '" + parent + "')");
    }
    tree[parent].insert(child);
}

} // namespace

bool is_known_tag(std::string_view group, std::string_view kind) {
    return std::ranges::any_of(taxonomy(), [&](const EngineeringTag& t) {
        return t.group == group && t.kind == kind;
    });
}

const std::vector<EngineeringTag>& tag_taxonomy() { return taxonomy(); }

Containment Containment::from_system(const System& system) {
    Containment tree;
    std::map<std::string, std::string> capsule_parent, cluster_parent, object_parent;
    for (const auto& [id, link] : system.links) {
        if (link.role == kNodeCapsuleRole) {
            insert_child(tree.node_capsules, capsule_parent, link.source, link.target, "capsule");
        } else if (link.role == kCapsuleClusterRole) {
            insert_child(tree.capsule_clusters, cluster_parent, link.source, link.target,
                         "cluster");
        } else if (link.role == kClusterObjectRole) {
            insert_child(tree.cluster_objects, object_parent, link.source, link.target, "object");
        }
    }
    return tree;
}

std::optional<std::string> Containment::cluster_of(const std::string& object_id) const {
    for (const auto& [cluster, members] : cluster_objects) {
        if (members.contains(object_id)) return cluster;
    }
    return std::nullopt;
}

std::optional<std::string> Containment::capsule_of(const std::string& cluster_id) const {
    for (const auto& [capsule, members] : capsule_clusters) {
        if (members.contains(cluster_id)) return capsule;
    }
    return std::nullopt;
}

std::optional<std::string> Containment::node_of_cluster(const std::string& cluster_id) const {
    auto capsule = capsule_of(cluster_id);
    if (!capsule) return std::nullopt;
    for (const auto& [node, members] : node_capsules) {
        if (members.contains(*capsule)) return node;
    }
    return std::nullopt;
}

std::optional<std::string> Containment::node_of(const std::string& object_id) const {
    auto cluster = cluster_of(object_id);
    if (!cluster) return std::nullopt;
    return node_of_cluster(*cluster);
}

std::size_t Containment::object_count() const {
    std::size_t n = 0;
    for (const auto& [cluster, members] : cluster_objects) n += members.size();
    return n;
}

SoftwareEntity make_software_entity(const System& system, const std::string& object_id) {
    const ObjectInstance& object = require_object(system, object_id);
    SoftwareEntity entity;
    entity.object_id = object_id;
    entity.state = object.state;
    entity.authority = required_string_attr(object, "authority");
    entity.credential = required_string_attr(object, "credential");
    entity.code = required_string_attr(object, "code");
    return entity;
}

System build_channel(const System& system, const Model& model, const std::string& client_id,
                     const std::string& server_id) {
    require_object(system, client_id);
    require_object(system, server_id);

    for (std::string_view tpl : {kStubTemplate, kBinderTemplate, kProtocolTemplate}) {
        if (!model.templates.contains(std::string(tpl))) {
            throw EngineeringError(EngineeringError::Kind::MissingChannelTemplates,
                                   "model '" + model.name + "' lacks channel template '" +
                                       std::string(tpl) + "'");
        }
    }
    for (std::string_view role : kChannelRoles) {
        if (!model.roles.contains(std::string(role))) {
            throw EngineeringError(EngineeringError::Kind::MissingChannelTemplates,
                                   "model '" + model.name + "' lacks channel role '" +
                                       std::string(role) + "'");
        }
    }

    // An identical chain between the two endpoints means the channel exists.
    for (const auto& [id0, l0] : system.links) {
        if (l0.role != kChannelRoles[0] || l0.source != client_id) continue;
        std::string at = l0.target;
        bool complete = true;
        for (std::size_t hop = 1; hop < 7 && complete; ++hop) {
            bool advanced = false;
            for (const auto& [id, link] : system.links) {
                if (link.role == kChannelRoles[hop] && link.source == at) {
                    at = link.target;
                    advanced = true;
                    break;
                }
            }
            complete = advanced;
        }
        if (complete && at == server_id) {
            throw EngineeringError(EngineeringError::Kind::DuplicateChannel,
                                   "a channel between '" + client_id + "' and '" + server_id +
                                       "' already exists");
        }
    }

    System result = system;
    const std::string prefix = client_id + "_" + server_id;
    struct Part {
        std::string_view suffix;
        std::string_view tpl;
        std::string_view side;
    };
    constexpr std::array<Part, 6> parts = {{
        {"_stub_c", kStubTemplate, "client"},
        {"_bind_c", kBinderTemplate, "client"},
        {"_prot_c", kProtocolTemplate, "client"},
        {"_prot_s", kProtocolTemplate, "server"},
        {"_bind_s", kBinderTemplate, "server"},
        {"_stub_s", kStubTemplate, "server"},
    }};

    std::vector<std::string> chain;
    chain.push_back(client_id);
    for (const Part& part : parts) {
        ObjectInstance object;
        object.id = unique_object_id(result, prefix + std::string(part.suffix));
        object.templates = {std::string(part.tpl)};
        object.state["side"] = std::string(part.side);
        chain.push_back(object.id);
        result.objects.emplace(object.id, std::move(object));
    }
    chain.push_back(server_id);

    for (std::size_t i = 0; i < 7; ++i) {
        Link link;
        link.id = unique_link_id(result, prefix + "_ch" + std::to_string(i + 1));
        link.role = std::string(kChannelRoles[i]);
        link.source = chain[i];
        link.target = chain[i + 1];
        result.links.emplace(link.id, std::move(link));
    }
    return result;
}

Decision authorize_invocation(const System& system, const std::string& client,
                              const std::string& target) {
    const ObjectInstance& client_object = require_object(system, client);
    require_object(system, target);

    if (!link_exists(system, kRefRole, client, target)) {
        return Decision{false, DenyReason::NoReference};
    }
    bool authorized = false;
    auto it = client_object.state.find(std::string(kAuthorizedAttr));
    if (it != client_object.state.end() && std::holds_alternative<bool>(it->second)) {
        authorized = std::get<bool>(it->second);
    }
    if (!authorized) authorized = link_exists(system, kGrantRole, client, target);
    if (!authorized) return Decision{false, DenyReason::NoAuthorization};
    return Decision{true, std::nullopt};
}

namespace {

/// First cluster under a node, in id order.
std::string destination_cluster(const Containment& tree, const System& system,
                                const std::string& node) {
    if (!system.objects.contains(node)) {
        throw EngineeringError(EngineeringError::Kind::UnknownDestination,
                               "destination node '" + node + "' does not exist");
    }
    auto capsules = tree.node_capsules.find(node);
    if (capsules != tree.node_capsules.end()) {
        for (const std::string& capsule : capsules->second) {
            auto clusters = tree.capsule_clusters.find(capsule);
            if (clusters != tree.capsule_clusters.end() && !clusters->second.empty()) {
                return *clusters->second.begin();
            }
        }
    }
    throw EngineeringError(EngineeringError::Kind::UnknownDestination,
                           "destination node '" + node + "' has no cluster");
}

} // namespace

TransferResult transfer_entity(const System& system, const SoftwareEntity& entity,
                               const std::string& destination_node) {
    const ObjectInstance& object = require_object(system, entity.object_id);

    Containment tree = Containment::from_system(system);
    auto source_cluster = tree.cluster_of(entity.object_id);
    if (!source_cluster) {
        throw EngineeringError(EngineeringError::Kind::NotContained,
                               "entity '" + entity.object_id + "' lives in no cluster");
    }
    auto source_node = tree.node_of_cluster(*source_cluster);

    std::string target_cluster = destination_cluster(tree, system, destination_node);

    const ObjectInstance& node = require_object(system, destination_node);
    auto accepts = node.state.find(std::string(kAcceptsAttr));
    std::string accepted =
        accepts != node.state.end() && std::holds_alternative<std::string>(accepts->second)
            ? std::get<std::string>(accepts->second)
            : "";
    if (accepted != "*" && accepted != entity.credential) {
        throw EngineeringError(EngineeringError::Kind::CredentialRejected,
                               "node '" + destination_node + "' rejects credential of '" +
                                   entity.object_id + "'");
    }

    System result = system;
    // Rewire the containment link; state, authority, credential and code ride
    // along untouched on the object itself.
    for (auto& [id, link] : result.links) {
        if (link.role == kClusterObjectRole && link.target == entity.object_id) {
            link.source = target_cluster;
        }
    }
    (void)object;

    TravelRequest request{source_node.value_or(""), destination_node, entity.object_id};
    return TransferResult{std::move(result), request};
}

System remote_create(const System& system, const Model& model, const std::string& client_id,
                     const std::string& template_name, const std::string& destination_node) {
    const ObjectInstance& client = require_object(system, client_id);

    bool authenticated = false;
    auto it = client.state.find(std::string(kAuthorizedAttr));
    if (it != client.state.end() && std::holds_alternative<bool>(it->second)) {
        authenticated = std::get<bool>(it->second);
    }
    if (!authenticated) authenticated = link_exists(system, kGrantRole, client_id, destination_node);
    if (!authenticated) {
        throw EngineeringError(EngineeringError::Kind::AuthenticationFailed,
                               "client '" + client_id + "' is not authenticated to '" +
                                   destination_node + "'");
    }

    std::set<std::string> closure;
    try {
        closure = template_closure(model, template_name);
    } catch (const ModelError& e) {
        throw EngineeringError(EngineeringError::Kind::MissingTemplate, e.what());
    }

    Containment tree = Containment::from_system(system);
    std::string cluster = destination_cluster(tree, system, destination_node);

    System result = system;
    ObjectInstance object;
    object.id = unique_object_id(result, client_id + "_" + template_name + "_new");
    object.templates = closure;
    for (const std::string& tpl_name : closure) {
        const ObjectTemplate* tpl = model.find_template(tpl_name);
        if (!tpl) continue;
        for (const auto& [attr, sort] : tpl->attributes) {
            switch (sort) {
            case Sort::Int: object.state.emplace(attr, Int(0)); break;
            case Sort::Bool: object.state.emplace(attr, false); break;
            case Sort::String: object.state.emplace(attr, std::string()); break;
            }
        }
    }
    Link link;
    link.id = unique_link_id(result, cluster + "_holds_" + object.id);
    link.role = std::string(kClusterObjectRole);
    link.source = cluster;
    link.target = object.id;
    result.objects.emplace(object.id, std::move(object));
    result.links.emplace(link.id, std::move(link));
    return result;
}

} // namespace eng
} // namespace odp
