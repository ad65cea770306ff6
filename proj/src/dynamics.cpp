#include "odp/dynamics.hpp"

#include "odp/predicate.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <sstream>
#include <tuple>

namespace odp {

ApplyError::ApplyError(Kind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

SimulateError::SimulateError(Kind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

namespace {

Binding to_eval_binding(const std::map<std::string, std::string>& binding) {
    Binding b;
    for (const auto& [var, id] : binding) b.insert_or_assign(var, ObjectRef{id});
    return b;
}

/// All assignments of participant variables to objects whose template sets
/// contain the declared template, enumerated in object-id order.
void enumerate_bindings(const System& system, const DynamicRule& rule, std::size_t position,
                        std::map<std::string, std::string>& current,
                        const std::function<void(const std::map<std::string, std::string>&)>& fn) {
    if (position == rule.participants.size()) {
        fn(current);
        return;
    }
    const auto& [var, tpl] = rule.participants[position];
    for (const auto& [id, object] : system.objects) {
        if (!object.templates.contains(tpl)) continue;
        current[var] = id;
        enumerate_bindings(system, rule, position + 1, current, fn);
        current.erase(var);
    }
}

std::vector<const DynamicRule*> rules_by_name(const Model& model) {
    std::vector<const DynamicRule*> rules;
    for (const auto& [schema_name, schema] : model.dynamic_schemas) {
        for (const DynamicRule& rule : schema.rules) rules.push_back(&rule);
    }
    std::ranges::sort(rules, {}, [](const DynamicRule* r) { return r->name; });
    return rules;
}

} // namespace

EnabledSet enabled_rules(const System& system, const Model& model) {
    EnabledSet out;
    for (const DynamicRule* rule : rules_by_name(model)) {
        std::map<std::string, std::string> current;
        enumerate_bindings(system, *rule, 0, current,
                           [&](const std::map<std::string, std::string>& binding) {
                               try {
                                   if (eval_predicate(rule->precondition, system,
                                                      to_eval_binding(binding), &model)) {
                                       out.enabled.push_back(RuleBinding{rule->name, binding});
                                   }
                               } catch (const EvalError& e) {
                                   std::ostringstream msg;
                                   msg << "rule '" << rule->name << "' precondition failed on {";
                                   bool first = true;
                                   for (const auto& [var, id] : binding) {
                                       if (!first) msg << ", ";
                                       first = false;
                                       msg << var << "=" << id;
                                   }
                                   msg << "}: " << e.what();
                                   out.diagnostics.push_back(msg.str());
                               }
                           });
    }
    return out;
}

namespace {

std::string fresh_object_id(const System& system) {
    for (std::size_t k = 1;; ++k) {
        std::string id = "o" + std::to_string(k);
        if (!system.objects.contains(id)) return id;
    }
}

std::string fresh_link_id(const System& system) {
    for (std::size_t k = 1;; ++k) {
        std::string id = "l" + std::to_string(k);
        if (!system.links.contains(id)) return id;
    }
}

/// Attributes an object of the given template set must carry, per the model.
std::map<std::string, Sort> declared_attributes(const Model& model,
                                                const std::set<std::string>& templates) {
    std::map<std::string, Sort> attrs;
    for (const std::string& name : templates) {
        if (const ObjectTemplate* t = model.find_template(name)) {
            for (const auto& [attr, sort] : t->attributes) attrs.insert_or_assign(attr, sort);
        }
    }
    return attrs;
}

Value eval_term(const ExprPtr& expr, const System& system, const Binding& binding,
                const Model& model) {
    EvalValue v;
    try {
        v = eval_expr(expr, system, binding, &model);
    } catch (const EvalError& e) {
        throw ApplyError(ApplyError::Kind::EffectEvalFailed,
                         std::string("effect expression failed: ") + e.what());
    }
    if (auto* i = std::get_if<Int>(&v)) return *i;
    if (auto* b = std::get_if<bool>(&v)) return *b;
    if (auto* s = std::get_if<std::string>(&v)) return *s;
    throw ApplyError(ApplyError::Kind::SortMismatch,
                     "effect expression did not produce an attribute value");
}

} // namespace

System apply_rule(const System& system, const Model& model, const DynamicRule& rule,
                  const std::map<std::string, std::string>& binding) {
    // Participants must all be bound to live objects of the right template.
    for (const auto& [var, tpl] : rule.participants) {
        auto it = binding.find(var);
        if (it == binding.end()) {
            throw ApplyError(ApplyError::Kind::BadBinding,
                             "participant '" + var + "' is not bound");
        }
        const ObjectInstance* object = system.find_object(it->second);
        if (!object || !object->templates.contains(tpl)) {
            throw ApplyError(ApplyError::Kind::BadBinding,
                             "participant '" + var + "' is not bound to a live '" + tpl +
                                 "' object");
        }
    }

    System result = system;
    std::map<std::string, std::string> env = binding; // var -> object id
    std::set<std::string> created_vars;
    std::set<std::string> deleted_vars;
    std::set<std::string> touched; // objects needing a final completeness check

    auto live_object = [&](const std::string& var) -> ObjectInstance& {
        if (deleted_vars.contains(var)) {
            throw ApplyError(ApplyError::Kind::ObjectDeleted,
                             "variable '" + var + "' refers to a deleted object");
        }
        auto it = env.find(var);
        if (it == env.end()) {
            throw ApplyError(ApplyError::Kind::BadBinding, "variable '" + var + "' is not bound");
        }
        auto obj = result.objects.find(it->second);
        if (obj == result.objects.end()) {
            throw ApplyError(ApplyError::Kind::ObjectDeleted,
                             "object '" + it->second + "' is gone");
        }
        return obj->second;
    };

    auto eval_binding = [&]() {
        Binding b;
        for (const auto& [var, id] : env) {
            if (!deleted_vars.contains(var)) b.insert_or_assign(var, ObjectRef{id});
        }
        return b;
    };

    for (const Effect& effect : rule.effects) {
        if (const auto* assign = std::get_if<Effect::Assign>(&effect.action)) {
            ObjectInstance& object = live_object(assign->var);
            auto attrs = declared_attributes(model, object.templates);
            auto decl = attrs.find(assign->attribute);
            if (decl == attrs.end()) {
                throw ApplyError(ApplyError::Kind::UnknownAttribute,
                                 "attribute '" + assign->attribute + "' is not declared for '" +
                                     object.id + "'");
            }
            Value value = eval_term(assign->value, result, eval_binding(), model);
            if (sort_of(value) != decl->second) {
                throw ApplyError(ApplyError::Kind::SortMismatch,
                                 "attribute '" + assign->attribute + "' expects " +
                                     std::string(sort_name(decl->second)));
            }
            object.state.insert_or_assign(assign->attribute, std::move(value));
            touched.insert(object.id);
        } else if (const auto* create = std::get_if<Effect::Create>(&effect.action)) {
            if (env.contains(create->var)) {
                throw ApplyError(ApplyError::Kind::DuplicateVar,
                                 "create variable '" + create->var + "' is already bound");
            }
            std::set<std::string> closure;
            try {
                closure = template_closure(model, create->template_name);
            } catch (const ModelError& e) {
                throw ApplyError(ApplyError::Kind::UnknownTemplate, e.what());
            }
            ObjectInstance object;
            object.id = fresh_object_id(result);
            object.templates = closure;
            auto attrs = declared_attributes(model, closure);
            for (const auto& [attr, expr] : create->init) {
                auto decl = attrs.find(attr);
                if (decl == attrs.end()) {
                    throw ApplyError(ApplyError::Kind::UnknownAttribute,
                                     "created '" + create->template_name +
                                         "' has no attribute '" + attr + "'");
                }
                Value value = eval_term(expr, result, eval_binding(), model);
                if (sort_of(value) != decl->second) {
                    throw ApplyError(ApplyError::Kind::SortMismatch,
                                     "attribute '" + attr + "' expects " +
                                         std::string(sort_name(decl->second)));
                }
                object.state.insert_or_assign(attr, std::move(value));
            }
            env[create->var] = object.id;
            created_vars.insert(create->var);
            touched.insert(object.id);
            result.objects.emplace(object.id, std::move(object));
        } else if (const auto* del = std::get_if<Effect::Delete>(&effect.action)) {
            if (created_vars.contains(del->var)) {
                throw ApplyError(ApplyError::Kind::BadBinding,
                                 "deleting an object created by the same rule is not supported");
            }
            ObjectInstance& object = live_object(del->var);
            std::string id = object.id;
            for (const auto& [link_id, link] : result.links) {
                if (link.source == id || link.target == id) {
                    throw ApplyError(ApplyError::Kind::DeleteDanglingLink,
                                     "deleting '" + id + "' would leave link '" + link_id +
                                         "' dangling; remove it in the same rule");
                }
            }
            result.objects.erase(id);
            deleted_vars.insert(del->var);
            touched.erase(id);
        } else if (const auto* re = std::get_if<Effect::Reclassify>(&effect.action)) {
            if (created_vars.contains(re->var)) {
                throw ApplyError(ApplyError::Kind::BadBinding,
                                 "reclassifying an object created by the same rule is not "
                                 "supported; create the right template instead");
            }
            ObjectInstance& object = live_object(re->var);
            std::set<std::string> closure;
            try {
                closure = template_closure(model, re->template_name);
            } catch (const ModelError& e) {
                throw ApplyError(ApplyError::Kind::UnknownTemplate, e.what());
            }
            object.templates = closure;
            // Attributes not declared by the new closure are dropped; newly
            // required ones must be assigned before the rule ends.
            auto attrs = declared_attributes(model, closure);
            std::erase_if(object.state,
                          [&](const auto& entry) { return !attrs.contains(entry.first); });
            touched.insert(object.id);
        } else if (const auto* al = std::get_if<Effect::AddLink>(&effect.action)) {
            if (!model.find_role(al->role)) {
                throw ApplyError(ApplyError::Kind::UnknownRole,
                                 "unknown role '" + al->role + "'");
            }
            const std::string source = live_object(al->source_var).id;
            const std::string target = live_object(al->target_var).id;
            for (const auto& [link_id, link] : result.links) {
                if (link.role == al->role && link.source == source && link.target == target) {
                    throw ApplyError(ApplyError::Kind::DuplicateLink,
                                     "link of role '" + al->role + "' between '" + source +
                                         "' and '" + target + "' already exists");
                }
            }
            Link link;
            link.id = fresh_link_id(result);
            link.role = al->role;
            link.source = source;
            link.target = target;
            result.links.emplace(link.id, std::move(link));
        } else if (const auto* rl = std::get_if<Effect::RemoveLink>(&effect.action)) {
            const std::string source = live_object(rl->source_var).id;
            const std::string target = live_object(rl->target_var).id;
            auto it = std::ranges::find_if(result.links, [&](const auto& entry) {
                return entry.second.role == rl->role && entry.second.source == source &&
                       entry.second.target == target;
            });
            if (it == result.links.end()) {
                throw ApplyError(ApplyError::Kind::MissingLink,
                                 "no link of role '" + rl->role + "' between '" + source +
                                     "' and '" + target + "' to remove");
            }
            result.links.erase(it);
        }
    }

    // Created or reclassified objects must end up with exactly the attributes
    // their closure declares.
    for (const std::string& id : touched) {
        auto it = result.objects.find(id);
        if (it == result.objects.end()) continue;
        auto attrs = declared_attributes(model, it->second.templates);
        for (const auto& [attr, sort] : attrs) {
            if (!it->second.state.contains(attr)) {
                throw ApplyError(ApplyError::Kind::IncompleteState,
                                 "object '" + id + "' is missing attribute '" + attr +
                                     "' required by its templates");
            }
        }
        for (const auto& [attr, value] : it->second.state) {
            if (!attrs.contains(attr)) {
                throw ApplyError(ApplyError::Kind::IncompleteState,
                                 "object '" + id + "' carries attribute '" + attr +
                                     "' that no template of its closure declares");
            }
        }
    }

    try {
        if (!eval_predicate(rule.postcondition, result, eval_binding(), &model)) {
            throw ApplyError(ApplyError::Kind::PostconditionFailed,
                             "postcondition of rule '" + rule.name + "' does not hold");
        }
    } catch (const EvalError& e) {
        throw ApplyError(ApplyError::Kind::PostconditionFailed,
                         "postcondition of rule '" + rule.name +
                             "' could not be evaluated: " + e.what());
    }

    for (const auto& [name, schema] : model.invariant_schemas) {
        try {
            if (!eval_predicate(schema.predicate, result, {}, &model)) {
                throw ApplyError(ApplyError::Kind::InvariantBroken,
                                 "invariant schema '" + name + "' broken by rule '" + rule.name +
                                     "'");
            }
        } catch (const EvalError& e) {
            throw ApplyError(ApplyError::Kind::InvariantBroken,
                             "invariant schema '" + name +
                                 "' could not be evaluated: " + e.what());
        }
    }

    return result;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

/// splitmix64: tiny, documented, identical results on every platform.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Unbiased draw from [0, n) by rejection under a power-of-two mask.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        while (true) {
            std::uint64_t draw = next() & mask;
            if (draw < n) return draw;
        }
    }
};

std::vector<ConditionBinding> step_condition_bindings(const DynamicRule& rule,
                                                      const std::map<std::string, std::string>&
                                                          binding) {
    std::vector<ConditionBinding> out;
    for (const auto& [var, tpl] : rule.participants) {
        auto it = binding.find(var);
        if (it == binding.end()) continue;
        out.push_back({ConditionKind::Pre, rule.name, it->second, StatePoint::Start});
        out.push_back({ConditionKind::Post, rule.name, it->second, StatePoint::End});
    }
    std::ranges::sort(out);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

Trace simulate(const Model& model, const System& initial, std::size_t steps, std::uint64_t seed) {
    {
        ConformanceReport report = conform(initial, model);
        if (report.verdict != Verdict::Conforms) {
            throw SimulateError(SimulateError::Kind::InitialNonConforming,
                                "initial system '" + initial.name + "' does not conform to '" +
                                    model.name + "' (" +
                                    std::to_string(report.violations.size()) + " violations)");
        }
    }

    Trace trace;
    trace.model = model.name;
    trace.seed = seed;
    trace.snapshots.push_back(initial);

    SplitMix64 rng(seed);
    ConformOptions mid_trace;
    mid_trace.include_statics = false; // statics are indexed by trace position

    for (std::size_t i = 0; i < steps; ++i) {
        const System& current = trace.snapshots.back();
        EnabledSet enabled = enabled_rules(current, model);
        if (enabled.enabled.empty()) break;
        const RuleBinding& choice =
            enabled.enabled[static_cast<std::size_t>(rng.below(enabled.enabled.size()))];
        const DynamicRule* rule = model.find_rule(choice.rule);
        System next;
        try {
            next = apply_rule(current, model, *rule, choice.binding);
        } catch (const ApplyError& e) {
            throw SimulateError(SimulateError::Kind::StepFailed,
                                "step " + std::to_string(i + 1) + " (rule '" + choice.rule +
                                    "') failed: " + e.what());
        }
        ConformanceReport report = conform(next, model, mid_trace);
        if (report.verdict != Verdict::Conforms) {
            throw SimulateError(SimulateError::Kind::NonConformingSnapshot,
                                "snapshot after step " + std::to_string(i + 1) +
                                    " no longer conforms to '" + model.name + "'");
        }
        TraceStep step;
        step.rule = choice.rule;
        step.binding = choice.binding;
        const ActionTemplate* action = model.find_action(rule->action);
        step.kind = action ? action_kind(*action) : ActionKind::Internal;
        step.condition_bindings = step_condition_bindings(*rule, choice.binding);
        trace.steps.push_back(std::move(step));
        trace.snapshots.push_back(std::move(next));
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Trace verification

namespace {

void add(std::vector<Violation>& out, RuleId rule, std::vector<std::string> subjects,
         std::string message, Severity severity = Severity::Error) {
    out.push_back(Violation{rule, std::move(subjects), std::move(message), {}, severity});
}

std::string step_label(std::size_t index) { return "step:" + std::to_string(index + 1); }

using LinkKey = std::tuple<std::string, std::string, std::string>; // role, source, target

std::set<LinkKey> link_keys(const System& system) {
    std::set<LinkKey> keys;
    for (const auto& [id, link] : system.links) {
        keys.insert({link.role, link.source, link.target});
    }
    return keys;
}

std::string key_text(const LinkKey& key) {
    return std::get<0>(key) + "(" + std::get<1>(key) + " -> " + std::get<2>(key) + ")";
}

/// Checks one step of a trace against the rule it claims to instantiate.
void verify_step(const Model& model, const System& before, const System& after,
                 const TraceStep& step, std::size_t index, std::vector<Violation>& out) {
    const std::string label = step_label(index);

    const DynamicRule* rule = model.find_rule(step.rule);
    if (!rule) {
        add(out, RuleId::D1, {step.rule, label},
            "step " + std::to_string(index + 1) + " claims rule '" + step.rule +
                "' which the model does not declare");
        return;
    }

    // D1: the claimed binding must have been enabled at the start snapshot.
    bool binding_ok = rule->participants.size() == step.binding.size();
    for (const auto& [var, tpl] : rule->participants) {
        auto it = step.binding.find(var);
        if (it == step.binding.end()) {
            binding_ok = false;
            break;
        }
        const ObjectInstance* object = before.find_object(it->second);
        if (!object || !object->templates.contains(tpl)) {
            binding_ok = false;
            break;
        }
    }
    if (!binding_ok) {
        add(out, RuleId::D1, {step.rule, label},
            "step " + std::to_string(index + 1) +
                " binds participants inconsistently with rule '" + step.rule + "'");
        return;
    }
    Binding eval_binding = to_eval_binding(step.binding);
    try {
        if (!eval_predicate(rule->precondition, before, eval_binding, &model)) {
            add(out, RuleId::D1, {step.rule, label},
                "precondition of rule '" + step.rule + "' does not hold at the start of step " +
                    std::to_string(index + 1));
        }
    } catch (const EvalError& e) {
        add(out, RuleId::D1, {step.rule, label},
            "precondition of rule '" + step.rule + "' could not be evaluated: " + e.what());
    }

    const ActionTemplate* action = model.find_action(rule->action);
    if (action && action_kind(*action) != step.kind) {
        add(out, RuleId::D1, {step.rule, label},
            "step " + std::to_string(index + 1) + " records the wrong action kind for '" +
                rule->action + "'");
    }

    // Condition bindings recorded on the step follow the I4/I5 discipline.
    for (const ConditionBinding& b : step.condition_bindings) {
        if (b.rule != step.rule) {
            add(out, RuleId::D1, {step.rule, label},
                "condition binding on step " + std::to_string(index + 1) +
                    " references foreign rule '" + b.rule + "'");
        }
        if (b.condition == ConditionKind::Pre && b.bound != StatePoint::Start) {
            add(out, RuleId::I4, {b.rule, b.object},
                "precondition of rule '" + b.rule + "' bound to the end state of '" + b.object +
                    "'");
        }
        if (b.condition == ConditionKind::Post && b.bound != StatePoint::End) {
            add(out, RuleId::I5, {b.rule, b.object},
                "postcondition of rule '" + b.rule + "' bound to the start state of '" +
                    b.object + "'");
        }
    }

    // Postcondition at the end snapshot (D1).
    std::map<std::string, std::string> env = step.binding;
    std::set<std::string> expected_deleted;
    std::vector<const Effect::Create*> creates;
    std::map<std::string, std::string> reclassified; // object id -> new leaf
    std::map<std::string, std::set<std::string>> assigned; // object id -> attributes
    std::set<LinkKey> added_links, removed_links;

    // Created objects are matched to create effects in declaration order;
    // fresh ids are generated in ascending order by the engine.
    std::vector<std::string> created_ids;
    for (const auto& [id, object] : after.objects) {
        if (!before.objects.contains(id)) created_ids.push_back(id);
    }
    std::size_t create_cursor = 0;
    for (const Effect& effect : rule->effects) {
        if (const auto* create = std::get_if<Effect::Create>(&effect.action)) {
            creates.push_back(create);
            if (create_cursor < created_ids.size()) {
                env[create->var] = created_ids[create_cursor++];
            }
        }
    }

    for (const Effect& effect : rule->effects) {
        if (const auto* assign = std::get_if<Effect::Assign>(&effect.action)) {
            auto it = env.find(assign->var);
            if (it != env.end()) assigned[it->second].insert(assign->attribute);
        } else if (const auto* del = std::get_if<Effect::Delete>(&effect.action)) {
            auto it = env.find(del->var);
            if (it != env.end()) expected_deleted.insert(it->second);
        } else if (const auto* re = std::get_if<Effect::Reclassify>(&effect.action)) {
            auto it = env.find(re->var);
            if (it != env.end()) reclassified[it->second] = re->template_name;
        } else if (const auto* al = std::get_if<Effect::AddLink>(&effect.action)) {
            auto s = env.find(al->source_var);
            auto t = env.find(al->target_var);
            if (s != env.end() && t != env.end()) {
                added_links.insert({al->role, s->second, t->second});
            }
        } else if (const auto* rl = std::get_if<Effect::RemoveLink>(&effect.action)) {
            auto s = env.find(rl->source_var);
            auto t = env.find(rl->target_var);
            if (s != env.end() && t != env.end()) {
                removed_links.insert({rl->role, s->second, t->second});
            }
        }
    }

    try {
        Binding post_binding;
        for (const auto& [var, id] : env) {
            if (!expected_deleted.contains(id)) post_binding.insert_or_assign(var, ObjectRef{id});
        }
        if (!eval_predicate(rule->postcondition, after, post_binding, &model)) {
            add(out, RuleId::D1, {step.rule, label},
                "postcondition of rule '" + step.rule + "' does not hold at the end of step " +
                    std::to_string(index + 1));
        }
    } catch (const EvalError& e) {
        add(out, RuleId::D1, {step.rule, label},
            "postcondition of rule '" + step.rule + "' could not be evaluated: " + e.what());
    }

    // D4: objects appear, disappear and change template sets exactly as the
    // declared effects dictate.
    if (created_ids.size() != creates.size()) {
        add(out, RuleId::D4, {step.rule, label},
            "step " + std::to_string(index + 1) + " creates " +
                std::to_string(created_ids.size()) + " objects but declares " +
                std::to_string(creates.size()) + " create effects");
    } else {
        for (std::size_t i = 0; i < creates.size(); ++i) {
            const ObjectInstance& object = after.objects.at(created_ids[i]);
            std::set<std::string> closure{creates[i]->template_name};
            closure.merge(reachable_parents(model, creates[i]->template_name));
            if (object.templates != closure) {
                add(out, RuleId::D4, {object.id, label},
                    "created object '" + object.id + "' does not instantiate the closure of '" +
                        creates[i]->template_name + "'");
            }
        }
    }
    std::set<std::string> actually_deleted;
    for (const auto& [id, object] : before.objects) {
        if (!after.objects.contains(id)) actually_deleted.insert(id);
    }
    if (actually_deleted != expected_deleted) {
        add(out, RuleId::D4, {step.rule, label},
            "step " + std::to_string(index + 1) +
                " deletes a different object set than its effects declare");
    }
    for (const auto& [id, object] : before.objects) {
        const ObjectInstance* now = after.find_object(id);
        if (!now) continue;
        auto re = reclassified.find(id);
        if (re != reclassified.end()) {
            std::set<std::string> closure{re->second};
            closure.merge(reachable_parents(model, re->second));
            if (now->templates != closure) {
                add(out, RuleId::D4, {id, label},
                    "object '" + id + "' was not reclassified to the closure of '" + re->second +
                        "'");
            }
        } else if (now->templates != object.templates) {
            add(out, RuleId::D4, {id, label},
                "object '" + id + "' changed templates without a reclassify effect");
        }
    }

    // D5: the frame condition. Attributes of surviving objects change only
    // under an assign (or lawful reclassification reshape); links change
    // exactly by the declared add/remove effects; timeline and identity of
    // the system stay put.
    for (const auto& [id, object] : before.objects) {
        const ObjectInstance* now = after.find_object(id);
        if (!now) continue;
        bool was_reclassified = reclassified.contains(id);
        const std::set<std::string>* object_assigned = nullptr;
        if (auto it = assigned.find(id); it != assigned.end()) object_assigned = &it->second;
        for (const auto& [attr, value] : object.state) {
            auto now_it = now->state.find(attr);
            if (now_it == now->state.end()) {
                if (!was_reclassified) {
                    add(out, RuleId::D5, {id, label},
                        "attribute '" + attr + "' of untouched object '" + id + "' disappeared");
                }
                continue;
            }
            if (now_it->second != value) {
                bool allowed = object_assigned && object_assigned->contains(attr);
                if (!allowed) {
                    add(out, RuleId::D5, {id, label},
                        "attribute '" + attr + "' of object '" + id +
                            "' changed although no effect assigns it");
                }
            }
        }
        for (const auto& [attr, value] : now->state) {
            if (object.state.contains(attr)) continue;
            bool allowed = (object_assigned && object_assigned->contains(attr)) ||
                           was_reclassified;
            if (!allowed) {
                add(out, RuleId::D5, {id, label},
                    "attribute '" + attr + "' appeared on object '" + id +
                        "' although no effect assigns it");
            }
        }
    }
    std::set<LinkKey> before_links = link_keys(before);
    std::set<LinkKey> after_links = link_keys(after);
    for (const LinkKey& key : after_links) {
        if (!before_links.contains(key) && !added_links.contains(key)) {
            add(out, RuleId::D5, {key_text(key), label},
                "link " + key_text(key) + " appeared without an add-link effect");
        }
    }
    for (const LinkKey& key : before_links) {
        if (after_links.contains(key)) continue;
        bool deleted_endpoint = expected_deleted.contains(std::get<1>(key)) ||
                                expected_deleted.contains(std::get<2>(key));
        if (!removed_links.contains(key) && !deleted_endpoint) {
            add(out, RuleId::D5, {key_text(key), label},
                "link " + key_text(key) + " disappeared without a remove-link effect");
        }
    }
    for (const LinkKey& key : added_links) {
        if (!after_links.contains(key)) {
            add(out, RuleId::D5, {key_text(key), label},
                "declared add-link effect " + key_text(key) + " is not reflected in the trace");
        }
    }
    for (const LinkKey& key : removed_links) {
        if (after_links.contains(key)) {
            add(out, RuleId::D5, {key_text(key), label},
                "declared remove-link effect " + key_text(key) + " is not reflected in the trace");
        }
    }
    if (before.name != after.name || before.model != after.model ||
        before.time_points != after.time_points) {
        add(out, RuleId::D5, {step.rule, label},
            "system identity or timeline changed across step " + std::to_string(index + 1));
    }

    if (rule->effects.empty()) {
        add(out, RuleId::W8, {step.rule, label},
            "rule '" + step.rule + "' has no effects; start and end states of step " +
                std::to_string(index + 1) + " coincide",
            Severity::Warning);
    }
}

} // namespace

std::vector<Violation> verify_trace(const Model& model, const Trace& trace) {
    std::vector<Violation> out;
    if (trace.snapshots.empty()) {
        add(out, RuleId::D1, {trace.model}, "trace has no snapshots");
        sort_violations(out);
        return out;
    }
    if (trace.snapshots.size() != trace.steps.size() + 1) {
        add(out, RuleId::D1, {trace.model},
            "trace has " + std::to_string(trace.snapshots.size()) + " snapshots for " +
                std::to_string(trace.steps.size()) + " steps");
    }

    // D2 and the I-rules hold at every snapshot.
    for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
        const System& snapshot = trace.snapshots[i];
        std::string snap_label = "snapshot:" + std::to_string(i);
        for (const auto& [name, schema] : model.invariant_schemas) {
            try {
                if (!eval_predicate(schema.predicate, snapshot, {}, &model)) {
                    add(out, RuleId::D2, {name, snap_label},
                        "invariant schema '" + name + "' does not hold at snapshot " +
                            std::to_string(i));
                }
            } catch (const EvalError& e) {
                add(out, RuleId::D2, {name, snap_label},
                    "invariant schema '" + name + "' could not be evaluated at snapshot " +
                        std::to_string(i) + ": " + e.what());
            }
        }
        for (Violation& v : check_system_wf(snapshot)) {
            v.subjects.push_back(snap_label);
            out.push_back(std::move(v));
        }
    }

    // D3: static schemas at the snapshot their time label maps to.
    const std::vector<std::string>& timeline = trace.snapshots.front().time_points;
    for (const auto& [name, schema] : model.static_schemas) {
        auto at = std::ranges::find(timeline, schema.at_time);
        if (at == timeline.end()) continue;
        std::size_t index = static_cast<std::size_t>(at - timeline.begin());
        if (index >= trace.snapshots.size()) continue;
        try {
            if (!eval_predicate(schema.predicate, trace.snapshots[index], {}, &model)) {
                add(out, RuleId::D3, {name},
                    "static schema '" + name + "' does not hold at time '" + schema.at_time +
                        "' (snapshot " + std::to_string(index) + ")");
            }
        } catch (const EvalError& e) {
            add(out, RuleId::D3, {name},
                "static schema '" + name + "' could not be evaluated: " + e.what());
        }
    }

    std::size_t step_count = std::min(trace.steps.size(), trace.snapshots.size() - 1);
    for (std::size_t i = 0; i < step_count; ++i) {
        verify_step(model, trace.snapshots[i], trace.snapshots[i + 1], trace.steps[i], i, out);
    }

    sort_violations(out);
    return out;
}

} // namespace odp
