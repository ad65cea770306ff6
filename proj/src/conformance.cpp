#include "odp/conformance.hpp"

#include "odp/predicate.hpp"

#include <algorithm>

namespace odp {

namespace {

void add(std::vector<Violation>& out, RuleId rule, std::vector<std::string> subjects,
         std::string message) {
    out.push_back(Violation{rule, std::move(subjects), std::move(message), {}, Severity::Error});
}

bool of_set_resolves(const ObjectInstance& object, const Model& model) {
    return std::ranges::all_of(object.templates, [&](const std::string& t) {
        return model.templates.contains(t);
    });
}

// C1: some member of the object's template set is a leaf whose closure is
// exactly that set. Objects naming templates unknown to the model are skipped
// here; C3 reports those.
void check_closures(const System& system, const Model& model, std::vector<Violation>& out) {
    for (const auto& [id, object] : system.objects) {
        if (object.templates.empty()) {
            add(out, RuleId::C1, {id}, "object '" + id + "' instantiates no template");
            continue;
        }
        if (!of_set_resolves(object, model)) continue;
        bool closed = std::ranges::any_of(object.templates, [&](const std::string& leaf) {
            std::set<std::string> closure{leaf};
            closure.merge(reachable_parents(model, leaf));
            return closure == object.templates;
        });
        if (!closed) {
            add(out, RuleId::C1, {id},
                "object '" + id +
                    "' does not instantiate a single template together with all of its parents");
        }
    }
}

// C2: link endpoints carry templates compatible with the role declaration.
void check_link_templates(const System& system, const Model& model, std::vector<Violation>& out) {
    for (const auto& [id, link] : system.links) {
        const RoleDef* role = model.find_role(link.role);
        if (!role) continue; // C5 reports the unknown role
        const ObjectInstance* source = system.find_object(link.source);
        const ObjectInstance* target = system.find_object(link.target);
        if (!source || !target) continue; // I1 reports dangling endpoints
        auto intersects = [](const std::set<std::string>& a, const std::set<std::string>& b) {
            return std::ranges::any_of(a, [&](const std::string& x) { return b.contains(x); });
        };
        if (!intersects(role->source_templates, source->templates)) {
            add(out, RuleId::C2, {id},
                "link '" + id + "': source '" + link.source +
                    "' instantiates no source template of role '" + link.role + "'");
        }
        if (!intersects(role->target_templates, target->templates)) {
            add(out, RuleId::C2, {id},
                "link '" + id + "': target '" + link.target +
                    "' instantiates no target template of role '" + link.role + "'");
        }
    }
}

// C3: the model declares every template the system's objects instantiate.
void check_template_coverage(const System& system, const Model& model,
                             std::vector<Violation>& out) {
    for (const auto& [id, object] : system.objects) {
        for (const std::string& t : object.templates) {
            if (!model.templates.contains(t)) {
                add(out, RuleId::C3, {id, t},
                    "object '" + id + "' instantiates template '" + t +
                        "' unknown to model '" + model.name + "'");
            }
        }
    }
}

// C4: every type referenced by a template in use resolves in the model.
void check_type_coverage(const System& system, const Model& model, std::vector<Violation>& out) {
    std::set<std::string> in_use;
    for (const auto& [id, object] : system.objects) {
        in_use.insert(object.templates.begin(), object.templates.end());
    }
    for (const std::string& t : in_use) {
        const ObjectTemplate* tpl = model.find_template(t);
        if (!tpl) continue;
        for (const std::string& type_name : tpl->types) {
            if (!model.types.contains(type_name)) {
                add(out, RuleId::C4, {t, type_name},
                    "template '" + t + "' in use references type '" + type_name +
                        "' unknown to model '" + model.name + "'");
            }
        }
    }
}

// C5: the model declares every role the system's links instantiate.
void check_role_coverage(const System& system, const Model& model, std::vector<Violation>& out) {
    for (const auto& [id, link] : system.links) {
        if (!model.roles.contains(link.role)) {
            add(out, RuleId::C5, {id, link.role},
                "link '" + id + "' instantiates role '" + link.role + "' unknown to model '" +
                    model.name + "'");
        }
    }
}

void check_cardinalities(const System& system, const Model& model, bool paper_literal,
                         std::vector<Violation>& out) {
    for (const auto& [name, role] : model.roles) {
        auto counts = cardinality_count(role, system);
        for (const auto& [key, count] : counts) {
            std::string where = role.scope == CountScope::Global
                                    ? "in the system"
                                    : "from source '" + key + "'";
            if (role.upper && count > *role.upper) {
                std::vector<std::string> subjects{name};
                if (role.scope == CountScope::PerSource) subjects.push_back(key);
                add(out, RuleId::C6, std::move(subjects),
                    "role '" + name + "' has " + std::to_string(count) + " links " + where +
                        ", above the upper bound " + std::to_string(*role.upper));
            }
            std::uint64_t lower = role.lower;
            if (paper_literal) {
                // Literal reading: the lower clause compares against the
                // upper bound; unbounded roles have no lower clause then.
                if (!role.upper) continue;
                lower = *role.upper;
            }
            if (count < lower) {
                std::vector<std::string> subjects{name};
                if (role.scope == CountScope::PerSource) subjects.push_back(key);
                add(out, RuleId::C6, std::move(subjects),
                    "role '" + name + "' has " + std::to_string(count) + " links " + where +
                        ", below the lower bound " + std::to_string(lower));
            }
        }
    }
}

// C7: a link of a role with an inverse has exactly one reverse link.
void check_inverse_links(const System& system, const Model& model, std::vector<Violation>& out) {
    for (const auto& [id, link] : system.links) {
        const RoleDef* role = model.find_role(link.role);
        if (!role || !role->inverse) continue;
        std::size_t reverse_count = 0;
        for (const auto& [other_id, other] : system.links) {
            if (other.role == *role->inverse && other.source == link.target &&
                other.target == link.source) {
                ++reverse_count;
            }
        }
        if (reverse_count != 1) {
            add(out, RuleId::C7, {id},
                "link '" + id + "' of role '" + link.role + "' has " +
                    std::to_string(reverse_count) + " reverse links of role '" + *role->inverse +
                    "' (expected exactly 1)");
        }
    }
}

// C8: a declared subtype's extension is included in its supertype's.
void check_subtype_extensions(const System& system, const Model& model,
                              std::vector<Violation>& out) {
    for (const auto& [super_name, super] : model.types) {
        for (const std::string& sub_name : super.subtypes) {
            const TypeDef* sub = model.find_type(sub_name);
            if (!sub) continue; // W6 reports the dangling declaration
            try {
                std::set<std::string> sub_ext = extension(*sub, system, &model);
                std::set<std::string> super_ext = extension(super, system, &model);
                std::vector<std::string> witnesses;
                std::ranges::set_difference(sub_ext, super_ext, std::back_inserter(witnesses));
                if (!witnesses.empty()) {
                    add(out, RuleId::C8, {sub_name, super_name},
                        "declared subtype '" + sub_name + "' has members outside '" + super_name +
                            "': " + witnesses.front() +
                            (witnesses.size() > 1 ? " and others" : ""));
                }
            } catch (const EvalError& e) {
                add(out, RuleId::C8, {sub_name, super_name},
                    "evaluation error while comparing extensions: " + std::string(e.what()));
            }
        }
    }
}

void check_schemas(const System& system, const Model& model, bool include_statics,
                   std::vector<Violation>& out) {
    for (const auto& [name, schema] : model.invariant_schemas) {
        try {
            if (!eval_predicate(schema.predicate, system, {}, &model)) {
                add(out, RuleId::D2, {name}, "invariant schema '" + name + "' does not hold");
            }
        } catch (const EvalError& e) {
            add(out, RuleId::D2, {name},
                "invariant schema '" + name + "' could not be evaluated: " + e.what());
        }
    }
    if (!include_statics) return;
    for (const auto& [name, schema] : model.static_schemas) {
        if (!system.time_point(schema.at_time)) continue;
        try {
            if (!eval_predicate(schema.predicate, system, {}, &model)) {
                add(out, RuleId::D3, {name},
                    "static schema '" + name + "' does not hold at time '" + schema.at_time +
                        "'");
            }
        } catch (const EvalError& e) {
            add(out, RuleId::D3, {name},
                "static schema '" + name + "' could not be evaluated: " + e.what());
        }
    }
}

} // namespace

std::map<std::string, std::uint64_t> cardinality_count(const RoleDef& role,
                                                       const System& system) {
    std::map<std::string, std::uint64_t> counts;
    if (role.scope == CountScope::Global) {
        std::uint64_t n = 0;
        for (const auto& [id, link] : system.links) {
            if (link.role == role.name) ++n;
        }
        counts["global"] = n;
        return counts;
    }
    // Per-source: every object eligible as a source contributes a key, even
    // with no links, so lower bounds bind.
    for (const auto& [id, object] : system.objects) {
        bool eligible = std::ranges::any_of(role.source_templates, [&](const std::string& t) {
            return object.templates.contains(t);
        });
        if (eligible) counts[id] = 0;
    }
    for (const auto& [id, link] : system.links) {
        if (link.role == role.name) ++counts[link.source];
    }
    return counts;
}

ConformanceReport conform(const System& system, const Model& model,
                          const ConformOptions& options) {
    ConformanceReport report;
    report.system_name = system.name;
    report.model_name = model.name;

    check_closures(system, model, report.violations);
    check_link_templates(system, model, report.violations);
    check_template_coverage(system, model, report.violations);
    check_type_coverage(system, model, report.violations);
    check_role_coverage(system, model, report.violations);
    check_cardinalities(system, model, options.paper_literal_c6, report.violations);
    check_inverse_links(system, model, report.violations);
    check_subtype_extensions(system, model, report.violations);
    check_schemas(system, model, options.include_statics, report.violations);

    sort_violations(report.violations);
    report.verdict = report.violations.empty() ? Verdict::Conforms : Verdict::Violates;
    return report;
}

} // namespace odp
