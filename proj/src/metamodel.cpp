#include "odp/metamodel.hpp"

#include <algorithm>
#include <deque>

namespace odp {

bool operator==(const TypeDef& a, const TypeDef& b) {
    return a.name == b.name && a.subtypes == b.subtypes && a.supertypes == b.supertypes &&
           expr_equal(a.predicate, b.predicate);
}

bool operator==(const InvariantSchema& a, const InvariantSchema& b) {
    return a.name == b.name && expr_equal(a.predicate, b.predicate);
}

bool operator==(const StaticSchema& a, const StaticSchema& b) {
    return a.name == b.name && a.at_time == b.at_time && expr_equal(a.predicate, b.predicate);
}

bool operator==(const Effect& a, const Effect& b) {
    if (a.action.index() != b.action.index()) return false;
    if (const auto* x = std::get_if<Effect::Assign>(&a.action)) {
        const auto& y = std::get<Effect::Assign>(b.action);
        return x->var == y.var && x->attribute == y.attribute && expr_equal(x->value, y.value);
    }
    if (const auto* x = std::get_if<Effect::Create>(&a.action)) {
        const auto& y = std::get<Effect::Create>(b.action);
        if (x->var != y.var || x->template_name != y.template_name ||
            x->init.size() != y.init.size()) {
            return false;
        }
        return std::ranges::equal(x->init, y.init, [](const auto& l, const auto& r) {
            return l.first == r.first && expr_equal(l.second, r.second);
        });
    }
    if (const auto* x = std::get_if<Effect::Delete>(&a.action)) {
        return x->var == std::get<Effect::Delete>(b.action).var;
    }
    if (const auto* x = std::get_if<Effect::Reclassify>(&a.action)) {
        const auto& y = std::get<Effect::Reclassify>(b.action);
        return x->var == y.var && x->template_name == y.template_name;
    }
    if (const auto* x = std::get_if<Effect::AddLink>(&a.action)) {
        const auto& y = std::get<Effect::AddLink>(b.action);
        return x->role == y.role && x->source_var == y.source_var && x->target_var == y.target_var;
    }
    const auto& x = std::get<Effect::RemoveLink>(a.action);
    const auto& y = std::get<Effect::RemoveLink>(b.action);
    return x.role == y.role && x.source_var == y.source_var && x.target_var == y.target_var;
}

bool operator==(const DynamicRule& a, const DynamicRule& b) {
    return a.name == b.name && a.action == b.action && a.participants == b.participants &&
           a.effects == b.effects && expr_equal(a.precondition, b.precondition) &&
           expr_equal(a.postcondition, b.postcondition);
}

const ObjectTemplate* Model::find_template(const std::string& n) const {
    auto it = templates.find(n);
    return it == templates.end() ? nullptr : &it->second;
}

const ActionTemplate* Model::find_action(const std::string& n) const {
    auto it = action_templates.find(n);
    return it == action_templates.end() ? nullptr : &it->second;
}

const TypeDef* Model::find_type(const std::string& n) const {
    auto it = types.find(n);
    return it == types.end() ? nullptr : &it->second;
}

const RoleDef* Model::find_role(const std::string& n) const {
    auto it = roles.find(n);
    return it == roles.end() ? nullptr : &it->second;
}

const DynamicRule* Model::find_rule(const std::string& n, std::string* schema) const {
    for (const auto& [name, dyn] : dynamic_schemas) {
        for (const DynamicRule& rule : dyn.rules) {
            if (rule.name == n) {
                if (schema) *schema = name;
                return &rule;
            }
        }
    }
    return nullptr;
}

ModelError::ModelError(Kind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

std::set<std::string> ancestors(const Model& model, const std::string& template_name) {
    if (!model.find_template(template_name)) {
        throw ModelError(ModelError::Kind::UnknownTemplate,
                         "unknown template '" + template_name + "'");
    }
    std::set<std::string> result;
    std::set<std::string> on_stack;
    std::set<std::string> done;
    // DFS; revisiting a template still on the stack means the parenthood
    // graph has a cycle.
    auto visit = [&](auto&& self, const std::string& name) -> void {
        if (done.contains(name)) return;
        if (!on_stack.insert(name).second) {
            throw ModelError(ModelError::Kind::CyclicInheritance,
                             "inheritance cycle through '" + name + "'");
        }
        const ObjectTemplate* t = model.find_template(name);
        if (!t) {
            throw ModelError(ModelError::Kind::UnknownTemplate, "unknown template '" + name + "'");
        }
        for (const std::string& parent : t->parents) {
            result.insert(parent);
            self(self, parent);
        }
        on_stack.erase(name);
        done.insert(name);
    };
    visit(visit, template_name);
    return result;
}

std::set<std::string> template_closure(const Model& model, const std::string& leaf) {
    std::set<std::string> closure = ancestors(model, leaf);
    closure.insert(leaf);
    return closure;
}

std::set<std::string> reachable_parents(const Model& model, const std::string& template_name) {
    std::set<std::string> seen;
    const ObjectTemplate* start = model.find_template(template_name);
    if (!start) return seen;
    std::deque<std::string> queue(start->parents.begin(), start->parents.end());
    while (!queue.empty()) {
        std::string current = queue.front();
        queue.pop_front();
        if (!seen.insert(current).second) continue;
        if (const ObjectTemplate* t = model.find_template(current)) {
            for (const std::string& parent : t->parents) queue.push_back(parent);
        }
    }
    return seen;
}

ActionKind action_kind(const ActionTemplate& action) {
    return action.participants.size() == 1 ? ActionKind::Internal : ActionKind::Interaction;
}

std::set<std::string> extension(const TypeDef& type, const System& system, const Model* model) {
    std::set<std::string> members;
    for (const auto& [id, object] : system.objects) {
        Binding self{{"self", ObjectRef{id}}};
        if (eval_predicate(type.predicate, system, self, model)) members.insert(id);
    }
    return members;
}

} // namespace odp
