#pragma once

#include "odp/instance.hpp"
#include "odp/predicate.hpp"
#include "odp/value.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace odp {

/// A deployment/communication function tag attached to an object template,
/// e.g. management.node or security.accessControl.
struct EngineeringTag {
    std::string group;
    std::string kind;

    auto operator<=>(const EngineeringTag&) const = default;
};

struct ObjectTemplate {
    std::string name;
    std::set<std::string> parents;
    std::map<std::string, Sort> attributes;
    std::set<std::string> types;
    std::set<std::string> actions;
    std::set<std::string> dynamic_schemas;
    std::set<std::string> static_schemas;
    std::set<std::string> invariant_schemas;
    std::set<EngineeringTag> tags;

    friend bool operator==(const ObjectTemplate&, const ObjectTemplate&) = default;
};

enum class ActionKind { Internal, Interaction };

struct ActionTemplate {
    std::string name;
    std::vector<std::string> participants; // template names, never empty
    std::string start_state;
    std::string end_state;
    std::set<std::string> types;

    friend bool operator==(const ActionTemplate&, const ActionTemplate&) = default;
};

/// A type is a predicate over one object (bound as `self`); its class in a
/// given system is computed extensionally by extension().
struct TypeDef {
    std::string name;
    ExprPtr predicate;
    std::set<std::string> subtypes;
    std::set<std::string> supertypes;

    friend bool operator==(const TypeDef& a, const TypeDef& b);
};

enum class CountScope { Global, PerSource };

struct RoleDef {
    std::string name;
    std::set<std::string> source_templates;
    std::set<std::string> target_templates;
    std::uint64_t lower = 0;
    std::optional<std::uint64_t> upper; // nullopt = unbounded
    std::optional<std::string> inverse;
    CountScope scope = CountScope::Global;

    friend bool operator==(const RoleDef&, const RoleDef&) = default;
};

struct InvariantSchema {
    std::string name;
    ExprPtr predicate;

    friend bool operator==(const InvariantSchema& a, const InvariantSchema& b);
};

struct StaticSchema {
    std::string name;
    std::string at_time;
    ExprPtr predicate;

    friend bool operator==(const StaticSchema& a, const StaticSchema& b);
};

/// One state-change primitive of a dynamic rule. Effects apply in declaration
/// order; expressions see the intermediate state produced by earlier effects.
struct Effect {
    struct Assign {
        std::string var;
        std::string attribute;
        ExprPtr value;
    };
    struct Create {
        std::string var;
        std::string template_name;
        std::map<std::string, ExprPtr> init;
    };
    struct Delete {
        std::string var;
    };
    struct Reclassify {
        std::string var;
        std::string template_name;
    };
    struct AddLink {
        std::string role;
        std::string source_var;
        std::string target_var;
    };
    struct RemoveLink {
        std::string role;
        std::string source_var;
        std::string target_var;
    };

    std::variant<Assign, Create, Delete, Reclassify, AddLink, RemoveLink> action;

    friend bool operator==(const Effect& a, const Effect& b);
};

struct DynamicRule {
    std::string name;
    std::string action; // action template name
    std::vector<std::pair<std::string, std::string>> participants; // (var, template)
    ExprPtr precondition;  // defaults to true
    std::vector<Effect> effects;
    ExprPtr postcondition; // defaults to true

    friend bool operator==(const DynamicRule& a, const DynamicRule& b);
};

struct DynamicSchema {
    std::string name;
    std::vector<DynamicRule> rules;

    friend bool operator==(const DynamicSchema&, const DynamicSchema&) = default;
};

/// A complete model-language specification. Declarations are name-keyed, so
/// structural equality and iteration order are independent of source order.
struct Model {
    std::string name;
    std::map<std::string, ObjectTemplate> templates;
    std::map<std::string, ActionTemplate> action_templates;
    std::map<std::string, TypeDef> types;
    std::map<std::string, RoleDef> roles;
    std::map<std::string, DynamicSchema> dynamic_schemas;   // "specifier"
    std::map<std::string, StaticSchema> static_schemas;     // "describer"
    std::map<std::string, InvariantSchema> invariant_schemas; // "constrainer"

    const ObjectTemplate* find_template(const std::string& n) const;
    const ActionTemplate* find_action(const std::string& n) const;
    const TypeDef* find_type(const std::string& n) const;
    const RoleDef* find_role(const std::string& n) const;

    /// Looks a dynamic rule up across all dynamic schemas (rule names are
    /// unique model-wide). Returns the owning schema name alongside.
    const DynamicRule* find_rule(const std::string& n, std::string* schema = nullptr) const;

    friend bool operator==(const Model&, const Model&) = default;
};

class ModelError : public std::runtime_error {
public:
    enum class Kind { UnknownTemplate, CyclicInheritance };

    ModelError(Kind kind, const std::string& message);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Transitive parents of a template, excluding the template itself.
/// Throws ModelError on unresolved names or inheritance cycles.
std::set<std::string> ancestors(const Model& model, const std::string& template_name);

/// {leaf} ∪ ancestors(leaf): the template set a fresh instance must carry.
std::set<std::string> template_closure(const Model& model, const std::string& leaf);

/// Cycle-tolerant variant used by checkers: reachable parent set, computed
/// with a visited set so malformed models never loop.
std::set<std::string> reachable_parents(const Model& model, const std::string& template_name);

ActionKind action_kind(const ActionTemplate& action);

/// The class of a type in a system: all objects satisfying its predicate.
std::set<std::string> extension(const TypeDef& type, const System& system,
                                const Model* model = nullptr);

} // namespace odp
