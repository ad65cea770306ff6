#include "odp/wf.hpp"

#include "odp/predicate.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>

namespace odp {

namespace {

constexpr std::array<std::string_view, 33> kRuleNames = {
    "W1", "W2", "W3", "W4", "W5", "W6", "W7", "W8", "W9",
    "I1", "I2", "I3", "I4", "I5",
    "C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8",
    "D1", "D2", "D3", "D4", "D5",
    "E1", "E2", "E3", "E4", "E5",
    "T1",
};

} // namespace

std::string_view rule_name(RuleId id) { return kRuleNames[static_cast<std::size_t>(id)]; }

std::optional<RuleId> rule_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kRuleNames.size(); ++i) {
        if (kRuleNames[i] == name) return static_cast<RuleId>(i);
    }
    return std::nullopt;
}

bool violation_less(const Violation& a, const Violation& b) {
    if (a.rule != b.rule) return a.rule < b.rule;
    if (a.subjects != b.subjects) return a.subjects < b.subjects;
    return a.message < b.message;
}

void sort_violations(std::vector<Violation>& violations) {
    std::stable_sort(violations.begin(), violations.end(), violation_less);
}

bool has_errors(const std::vector<Violation>& violations) {
    return std::ranges::any_of(violations,
                               [](const Violation& v) { return v.severity == Severity::Error; });
}

namespace {

void add(std::vector<Violation>& out, RuleId rule, std::vector<std::string> subjects,
         std::string message) {
    out.push_back(Violation{rule, std::move(subjects), std::move(message), {}, Severity::Error});
}

/// Strongly connected components with more than one node, plus single nodes
/// carrying a self edge. Returns each component's sorted member list.
std::vector<std::vector<std::string>> cyclic_components(
    const std::map<std::string, std::set<std::string>>& edges) {
    std::vector<std::vector<std::string>> cycles;
    std::map<std::string, int> index, low;
    std::map<std::string, bool> on_stack;
    std::vector<std::string> stack;
    int counter = 0;

    std::function<void(const std::string&)> strongconnect = [&](const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        auto it = edges.find(v);
        if (it != edges.end()) {
            for (const std::string& w : it->second) {
                if (!edges.contains(w)) continue;
                if (!index.contains(w)) {
                    strongconnect(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::string> component;
            while (true) {
                std::string w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                component.push_back(w);
                if (w == v) break;
            }
            bool self_loop = component.size() == 1 && it != edges.end() &&
                             it->second.contains(component.front());
            if (component.size() > 1 || self_loop) {
                std::ranges::sort(component);
                cycles.push_back(std::move(component));
            }
        }
    };

    for (const auto& [node, targets] : edges) {
        if (!index.contains(node)) strongconnect(node);
    }
    std::ranges::sort(cycles);
    return cycles;
}

void check_references(const Model& model, std::vector<Violation>& out) {
    for (const auto& [name, t] : model.templates) {
        for (const std::string& d : t.dynamic_schemas) {
            if (!model.dynamic_schemas.contains(d)) {
                add(out, RuleId::W1, {name, d},
                    "template '" + name + "' references dynamic schema '" + d +
                        "' that the model does not declare; declaring it removes this violation");
            }
        }
        for (const std::string& s : t.static_schemas) {
            if (!model.static_schemas.contains(s)) {
                add(out, RuleId::W2, {name, s},
                    "template '" + name + "' references static schema '" + s +
                        "' that the model does not declare; declaring it removes this violation");
            }
        }
        for (const std::string& i : t.invariant_schemas) {
            if (!model.invariant_schemas.contains(i)) {
                add(out, RuleId::W3, {name, i},
                    "template '" + name + "' references invariant schema '" + i +
                        "' that the model does not declare; declaring it removes this violation");
            }
        }
        for (const std::string& a : t.actions) {
            if (!model.action_templates.contains(a)) {
                add(out, RuleId::W4, {name, a},
                    "template '" + name + "' references action '" + a +
                        "' that the model does not declare; declaring it removes this violation");
            }
        }
        for (const std::string& ty : t.types) {
            if (!model.types.contains(ty)) {
                add(out, RuleId::W5, {name, ty},
                    "template '" + name + "' references type '" + ty +
                        "' that the model does not declare; declaring it removes this violation");
            }
        }
    }
    for (const auto& [name, a] : model.action_templates) {
        for (const std::string& ty : a.types) {
            if (!model.types.contains(ty)) {
                add(out, RuleId::W5, {name, ty},
                    "action '" + name + "' references type '" + ty +
                        "' that the model does not declare; declaring it removes this violation");
            }
        }
    }
}

void check_type_declarations(const Model& model, std::vector<Violation>& out) {
    for (const auto& [name, type] : model.types) {
        for (const std::string& sub : type.subtypes) {
            const TypeDef* other = model.find_type(sub);
            if (!other) {
                add(out, RuleId::W6, {name, sub},
                    "type '" + name + "' declares undeclared subtype '" + sub + "'");
            } else if (!other->supertypes.contains(name)) {
                add(out, RuleId::W6, {name, sub},
                    "type '" + name + "' declares subtype '" + sub +
                        "' but '" + sub + "' does not declare it as a supertype");
            }
        }
        for (const std::string& super : type.supertypes) {
            const TypeDef* other = model.find_type(super);
            if (!other) {
                add(out, RuleId::W7, {name, super},
                    "type '" + name + "' declares undeclared supertype '" + super + "'");
            } else if (!other->subtypes.contains(name)) {
                add(out, RuleId::W7, {name, super},
                    "type '" + name + "' declares supertype '" + super +
                        "' but '" + super + "' does not declare it as a subtype");
            }
        }
    }
    // Acyclicity of the declared subtype graph (edges supertype -> subtype).
    std::map<std::string, std::set<std::string>> edges;
    for (const auto& [name, type] : model.types) edges[name] = type.subtypes;
    for (const auto& cycle : cyclic_components(edges)) {
        std::string joined;
        for (const std::string& n : cycle) {
            if (!joined.empty()) joined += ", ";
            joined += n;
        }
        add(out, RuleId::W6, cycle, "subtype declarations form a cycle: " + joined);
    }
}

void check_actions(const Model& model, std::vector<Violation>& out) {
    for (const auto& [name, a] : model.action_templates) {
        if (a.start_state == a.end_state) {
            add(out, RuleId::W8, {name},
                "action '" + name + "' declares the same start and end state '" + a.start_state +
                    "'");
        }
    }
}

void check_parenthood(const Model& model, std::vector<Violation>& out) {
    std::map<std::string, std::set<std::string>> edges;
    for (const auto& [name, t] : model.templates) edges[name] = t.parents;
    for (const auto& cycle : cyclic_components(edges)) {
        if (cycle.size() == 1) {
            add(out, RuleId::W9, cycle, "template '" + cycle.front() + "' is its own parent");
        } else {
            std::string joined;
            for (const std::string& n : cycle) {
                if (!joined.empty()) joined += ", ";
                joined += n;
            }
            add(out, RuleId::W9, cycle, "template parenthood forms a cycle: " + joined);
        }
    }
}

void add_type_issues(std::vector<Violation>& out, const std::string& subject,
                     const std::string& where, const std::vector<TypeIssue>& issues) {
    for (const TypeIssue& issue : issues) {
        out.push_back(Violation{RuleId::T1,
                                {subject},
                                where + ": " + issue.message,
                                issue.span,
                                Severity::Error});
    }
}

void check_predicates(const Model& model, std::vector<Violation>& out) {
    for (const auto& [name, type] : model.types) {
        TypeEnv env{{"self", VarDomain{VarDomain::Kind::AnyObject, ""}}};
        add_type_issues(out, name, "type '" + name + "'",
                        typecheck_predicate(type.predicate, model, env));
    }
    for (const auto& [name, schema] : model.invariant_schemas) {
        add_type_issues(out, name, "invariant schema '" + name + "'",
                        typecheck_predicate(schema.predicate, model, {}));
    }
    for (const auto& [name, schema] : model.static_schemas) {
        add_type_issues(out, name, "static schema '" + name + "'",
                        typecheck_predicate(schema.predicate, model, {}));
    }
    for (const auto& [schema_name, schema] : model.dynamic_schemas) {
        for (const DynamicRule& rule : schema.rules) {
            TypeEnv env;
            for (const auto& [var, tpl] : rule.participants) {
                if (env.contains(var)) {
                    add(out, RuleId::T1, {rule.name},
                        "rule '" + rule.name + "': duplicate participant variable '" + var + "'");
                }
                env.insert_or_assign(var, VarDomain{VarDomain::Kind::Template, tpl});
            }
            add_type_issues(out, rule.name, "rule '" + rule.name + "' precondition",
                            typecheck_predicate(rule.precondition, model, env));
            for (const Effect& effect : rule.effects) {
                if (const auto* assign = std::get_if<Effect::Assign>(&effect.action)) {
                    if (!env.contains(assign->var)) {
                        add(out, RuleId::T1, {rule.name},
                            "rule '" + rule.name + "': assignment to unbound variable '" +
                                assign->var + "'");
                        continue;
                    }
                    // Typecheck the assignment as the equation var.attr = value.
                    ExprPtr equation = mk_bin(BinOp::Eq, mk_attr(mk_var(assign->var),
                                                                 assign->attribute),
                                              assign->value);
                    add_type_issues(out, rule.name, "rule '" + rule.name + "' effect",
                                    typecheck_predicate(equation, model, env));
                } else if (const auto* create = std::get_if<Effect::Create>(&effect.action)) {
                    if (env.contains(create->var)) {
                        add(out, RuleId::T1, {rule.name},
                            "rule '" + rule.name + "': create variable '" + create->var +
                                "' is already bound");
                    }
                    env.insert_or_assign(create->var,
                                         VarDomain{VarDomain::Kind::Template,
                                                   create->template_name});
                    for (const auto& [attr, value] : create->init) {
                        ExprPtr equation =
                            mk_bin(BinOp::Eq, mk_attr(mk_var(create->var), attr), value);
                        add_type_issues(out, rule.name, "rule '" + rule.name + "' create",
                                        typecheck_predicate(equation, model, env));
                    }
                } else if (const auto* del = std::get_if<Effect::Delete>(&effect.action)) {
                    if (!env.contains(del->var)) {
                        add(out, RuleId::T1, {rule.name},
                            "rule '" + rule.name + "': delete of unbound variable '" + del->var +
                                "'");
                    }
                } else if (const auto* re = std::get_if<Effect::Reclassify>(&effect.action)) {
                    if (!env.contains(re->var)) {
                        add(out, RuleId::T1, {rule.name},
                            "rule '" + rule.name + "': reclassify of unbound variable '" +
                                re->var + "'");
                    } else {
                        env.insert_or_assign(
                            re->var, VarDomain{VarDomain::Kind::Template, re->template_name});
                    }
                } else if (const auto* al = std::get_if<Effect::AddLink>(&effect.action)) {
                    for (const std::string& var : {al->source_var, al->target_var}) {
                        if (!env.contains(var)) {
                            add(out, RuleId::T1, {rule.name},
                                "rule '" + rule.name + "': link endpoint variable '" + var +
                                    "' is not bound");
                        }
                    }
                } else if (const auto* rl = std::get_if<Effect::RemoveLink>(&effect.action)) {
                    for (const std::string& var : {rl->source_var, rl->target_var}) {
                        if (!env.contains(var)) {
                            add(out, RuleId::T1, {rule.name},
                                "rule '" + rule.name + "': link endpoint variable '" + var +
                                    "' is not bound");
                        }
                    }
                }
            }
            add_type_issues(out, rule.name, "rule '" + rule.name + "' postcondition",
                            typecheck_predicate(rule.postcondition, model, env));
        }
    }
}

} // namespace

std::vector<Violation> check_model(const Model& model) {
    std::vector<Violation> out;
    check_references(model, out);
    check_type_declarations(model, out);
    check_actions(model, out);
    check_parenthood(model, out);
    check_predicates(model, out);
    sort_violations(out);
    return out;
}

std::vector<Violation> check_system_wf(const System& system) {
    std::vector<Violation> out;

    // I1: link endpoints are objects of the system.
    for (const auto& [id, link] : system.links) {
        std::string missing;
        if (!system.objects.contains(link.source)) missing = link.source;
        if (!system.objects.contains(link.target)) {
            if (!missing.empty()) missing += "', '";
            missing += link.target;
        }
        if (!missing.empty()) {
            add(out, RuleId::I1, {id},
                "link '" + id + "' references missing object '" + missing + "'");
        }
    }

    // I2: links are unique per (source, target, role).
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<std::string>> groups;
    for (const auto& [id, link] : system.links) {
        groups[{link.role, link.source, link.target}].push_back(id);
    }
    for (const auto& [key, ids] : groups) {
        if (ids.size() > 1) {
            std::vector<std::string> sorted = ids;
            std::ranges::sort(sorted);
            add(out, RuleId::I2, sorted,
                "duplicate links of role '" + std::get<0>(key) + "' between '" +
                    std::get<1>(key) + "' and '" + std::get<2>(key) + "'");
        }
    }

    // I3: once the system declares instants, every object carries state.
    if (!system.time_points.empty()) {
        for (const auto& [id, object] : system.objects) {
            if (object.state.empty()) {
                add(out, RuleId::I3, {id},
                    "object '" + id + "' has no state although the system declares time points");
            }
        }
    }

    // I4/I5: recorded condition bindings couple pre to start and post to end.
    for (const ConditionBinding& b : system.bindings) {
        if (b.condition == ConditionKind::Pre && b.bound != StatePoint::Start) {
            add(out, RuleId::I4, {b.rule, b.object},
                "precondition of rule '" + b.rule + "' bound to the end state of '" + b.object +
                    "'");
        }
        if (b.condition == ConditionKind::Post && b.bound != StatePoint::End) {
            add(out, RuleId::I5, {b.rule, b.object},
                "postcondition of rule '" + b.rule + "' bound to the start state of '" + b.object +
                    "'");
        }
    }

    sort_violations(out);
    return out;
}

} // namespace odp
