#include "odp/dsl.hpp"

#include <functional>
#include <ostream>
#include <sstream>

namespace odp {

namespace {

template <class... Ts>
struct Overload : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overload(Ts...) -> Overload<Ts...>;

// Binding strength; children print parenthesized when weaker than the
// context demands. Quantifiers bind weakest, postfix strongest.
enum Prec : int {
    PrecQuant = 0,
    PrecImplies = 1,
    PrecOr = 2,
    PrecAnd = 3,
    PrecNot = 4,
    PrecCompare = 5,
    PrecAdd = 6,
    PrecMul = 7,
    PrecPostfix = 8,
    PrecPrimary = 9,
};

void print_expr(std::ostream& os, const ExprPtr& e, int min_prec);

void parenthesized(std::ostream& os, int prec, int min_prec,
                   const std::function<void()>& body) {
    if (prec < min_prec) {
        os << "(";
        body();
        os << ")";
    } else {
        body();
    }
}

void print_expr(std::ostream& os, const ExprPtr& e, int min_prec) {
    std::visit(
        Overload{
            [&](const Expr::IntLit& n) { os << n.value.str(); },
            [&](const Expr::BoolLit& n) { os << (n.value ? "true" : "false"); },
            [&](const Expr::StringLit& n) { os << quote_string(n.value); },
            [&](const Expr::ObjectLit& n) { os << n.id; },
            [&](const Expr::Var& n) { os << n.name; },
            [&](const Expr::Attr& n) {
                parenthesized(os, PrecPostfix, min_prec, [&] {
                    print_expr(os, n.base, PrecPostfix);
                    os << "." << n.attribute;
                });
            },
            [&](const Expr::Nav& n) {
                parenthesized(os, PrecPostfix, min_prec, [&] {
                    print_expr(os, n.base, PrecPostfix);
                    os << (n.reverse ? "~>" : "->") << n.role;
                });
            },
            [&](const Expr::Not& n) {
                parenthesized(os, PrecNot, min_prec, [&] {
                    os << "not ";
                    print_expr(os, n.arg, PrecNot);
                });
            },
            [&](const Expr::Binary& n) {
                struct OpInfo {
                    const char* text;
                    int prec;
                    int lhs_prec;
                    int rhs_prec;
                };
                OpInfo info{};
                switch (n.op) {
                case BinOp::Implies: info = {"implies", PrecImplies, PrecOr, PrecImplies}; break;
                case BinOp::Or: info = {"or", PrecOr, PrecOr, PrecAnd}; break;
                case BinOp::And: info = {"and", PrecAnd, PrecAnd, PrecNot}; break;
                case BinOp::Eq: info = {"=", PrecCompare, PrecAdd, PrecAdd}; break;
                case BinOp::Ne: info = {"!=", PrecCompare, PrecAdd, PrecAdd}; break;
                case BinOp::Lt: info = {"<", PrecCompare, PrecAdd, PrecAdd}; break;
                case BinOp::Le: info = {"<=", PrecCompare, PrecAdd, PrecAdd}; break;
                case BinOp::Gt: info = {">", PrecCompare, PrecAdd, PrecAdd}; break;
                case BinOp::Ge: info = {">=", PrecCompare, PrecAdd, PrecAdd}; break;
                case BinOp::Add: info = {"+", PrecAdd, PrecAdd, PrecMul}; break;
                case BinOp::Sub: info = {"-", PrecAdd, PrecAdd, PrecMul}; break;
                case BinOp::Mul: info = {"*", PrecMul, PrecMul, PrecPostfix}; break;
                }
                parenthesized(os, info.prec, min_prec, [&] {
                    print_expr(os, n.lhs, info.lhs_prec);
                    os << " " << info.text << " ";
                    print_expr(os, n.rhs, info.rhs_prec);
                });
            },
            [&](const Expr::Quant& n) {
                parenthesized(os, PrecQuant, min_prec, [&] {
                    os << (n.quantifier == Quantifier::Forall ? "forall " : "exists ");
                    os << n.var << ": " << n.domain << " . ";
                    print_expr(os, n.body, PrecQuant);
                });
            },
            [&](const Expr::SetSize& n) {
                parenthesized(os, PrecPostfix, min_prec, [&] {
                    print_expr(os, n.set, PrecPostfix);
                    os << ".size";
                });
            },
            [&](const Expr::SetEmpty& n) {
                parenthesized(os, PrecPostfix, min_prec, [&] {
                    print_expr(os, n.set, PrecPostfix);
                    os << ".isEmpty";
                });
            },
            [&](const Expr::SetIncludes& n) {
                parenthesized(os, PrecPostfix, min_prec, [&] {
                    print_expr(os, n.set, PrecPostfix);
                    os << (n.all ? ".includesAll(" : ".includes(");
                    print_expr(os, n.element, PrecQuant);
                    os << ")";
                });
            },
        },
        e->node);
}

template <class Range>
void print_list(std::ostream& os, const Range& names) {
    bool first = true;
    for (const auto& name : names) {
        if (!first) os << ", ";
        first = false;
        os << name;
    }
}

void print_system(std::ostream& os, const System& s, int indent);

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent), ' '); }

void print_effect(std::ostream& os, const Effect& effect, int indent) {
    const std::string in = pad(indent);
    std::visit(
        Overload{
            [&](const Effect::Assign& a) {
                os << in << a.var << "." << a.attribute << " := ";
                print_expr(os, a.value, PrecQuant);
                os << ";\n";
            },
            [&](const Effect::Create& c) {
                os << in << "create " << c.var << " : " << c.template_name << " {";
                if (c.init.empty()) {
                    os << " }\n";
                    return;
                }
                os << "\n";
                for (const auto& [attr, value] : c.init) {
                    os << pad(indent + 2) << attr << " = ";
                    print_expr(os, value, PrecQuant);
                    os << ";\n";
                }
                os << in << "}\n";
            },
            [&](const Effect::Delete& d) { os << in << "delete " << d.var << ";\n"; },
            [&](const Effect::Reclassify& r) {
                os << in << "reclassify " << r.var << " : " << r.template_name << ";\n";
            },
            [&](const Effect::AddLink& l) {
                os << in << "link add " << l.role << " (" << l.source_var << " -> "
                   << l.target_var << ");\n";
            },
            [&](const Effect::RemoveLink& l) {
                os << in << "link remove " << l.role << " (" << l.source_var << " -> "
                   << l.target_var << ");\n";
            },
        },
        effect.action);
}

bool is_true(const ExprPtr& e) {
    const auto* lit = std::get_if<Expr::BoolLit>(&e->node);
    return lit && lit->value;
}

void print_rule(std::ostream& os, const DynamicRule& rule, int indent) {
    const std::string in = pad(indent);
    os << in << "rule " << rule.name << " : " << rule.action << " (";
    bool first = true;
    for (const auto& [var, tpl] : rule.participants) {
        if (!first) os << ", ";
        first = false;
        os << var << ": " << tpl;
    }
    os << ") {\n";
    if (!is_true(rule.precondition)) {
        os << pad(indent + 2) << "pre { ";
        print_expr(os, rule.precondition, PrecQuant);
        os << " }\n";
    }
    if (!rule.effects.empty()) {
        os << pad(indent + 2) << "effect {\n";
        for (const Effect& effect : rule.effects) print_effect(os, effect, indent + 4);
        os << pad(indent + 2) << "}\n";
    }
    if (!is_true(rule.postcondition)) {
        os << pad(indent + 2) << "post { ";
        print_expr(os, rule.postcondition, PrecQuant);
        os << " }\n";
    }
    os << in << "}\n";
}

void print_model(std::ostream& os, const Model& m, int indent) {
    const std::string in = pad(indent);
    os << in << "model " << m.name << " {\n";
    int d = indent + 2;
    for (const auto& [name, t] : m.templates) {
        os << pad(d) << "template " << name << " {\n";
        if (!t.parents.empty()) {
            os << pad(d + 2) << "parents: ";
            print_list(os, t.parents);
            os << ";\n";
        }
        if (!t.attributes.empty()) {
            os << pad(d + 2) << "attrs {\n";
            for (const auto& [attr, sort] : t.attributes) {
                os << pad(d + 4) << attr << ": " << sort_name(sort) << ";\n";
            }
            os << pad(d + 2) << "}\n";
        }
        if (!t.types.empty()) {
            os << pad(d + 2) << "types: ";
            print_list(os, t.types);
            os << ";\n";
        }
        if (!t.actions.empty()) {
            os << pad(d + 2) << "actions: ";
            print_list(os, t.actions);
            os << ";\n";
        }
        if (!t.dynamic_schemas.empty()) {
            os << pad(d + 2) << "dynamic: ";
            print_list(os, t.dynamic_schemas);
            os << ";\n";
        }
        if (!t.static_schemas.empty()) {
            os << pad(d + 2) << "static: ";
            print_list(os, t.static_schemas);
            os << ";\n";
        }
        if (!t.invariant_schemas.empty()) {
            os << pad(d + 2) << "invariant: ";
            print_list(os, t.invariant_schemas);
            os << ";\n";
        }
        if (!t.tags.empty()) {
            os << pad(d + 2) << "tags: ";
            bool first = true;
            for (const EngineeringTag& tag : t.tags) {
                if (!first) os << ", ";
                first = false;
                os << tag.group << "." << tag.kind;
            }
            os << ";\n";
        }
        os << pad(d) << "}\n";
    }
    for (const auto& [name, a] : m.action_templates) {
        os << pad(d) << "action " << name << " {\n";
        os << pad(d + 2) << "participants: ";
        print_list(os, a.participants);
        os << ";\n";
        os << pad(d + 2) << "start: " << a.start_state << ";\n";
        os << pad(d + 2) << "end: " << a.end_state << ";\n";
        if (!a.types.empty()) {
            os << pad(d + 2) << "types: ";
            print_list(os, a.types);
            os << ";\n";
        }
        os << pad(d) << "}\n";
    }
    for (const auto& [name, t] : m.types) {
        os << pad(d) << "type " << name << " {\n";
        if (!is_true(t.predicate)) {
            os << pad(d + 2) << "pred { ";
            print_expr(os, t.predicate, PrecQuant);
            os << " }\n";
        }
        if (!t.subtypes.empty()) {
            os << pad(d + 2) << "subtypes: ";
            print_list(os, t.subtypes);
            os << ";\n";
        }
        if (!t.supertypes.empty()) {
            os << pad(d + 2) << "supertypes: ";
            print_list(os, t.supertypes);
            os << ";\n";
        }
        os << pad(d) << "}\n";
    }
    for (const auto& [name, r] : m.roles) {
        os << pad(d) << "role " << name << " {\n";
        os << pad(d + 2) << "source: ";
        print_list(os, r.source_templates);
        os << ";\n";
        os << pad(d + 2) << "target: ";
        print_list(os, r.target_templates);
        os << ";\n";
        os << pad(d + 2) << "card: " << r.lower << " .. ";
        if (r.upper) os << *r.upper;
        else os << "*";
        os << ";\n";
        if (r.inverse) os << pad(d + 2) << "inverse: " << *r.inverse << ";\n";
        if (r.scope == CountScope::PerSource) os << pad(d + 2) << "scope: per-source;\n";
        os << pad(d) << "}\n";
    }
    for (const auto& [name, schema] : m.invariant_schemas) {
        os << pad(d) << "invariant " << name << " { ";
        print_expr(os, schema.predicate, PrecQuant);
        os << " }\n";
    }
    for (const auto& [name, schema] : m.static_schemas) {
        os << pad(d) << "static " << name << " at " << schema.at_time << " { ";
        print_expr(os, schema.predicate, PrecQuant);
        os << " }\n";
    }
    for (const auto& [name, schema] : m.dynamic_schemas) {
        os << pad(d) << "dynamic " << name << " {\n";
        for (const DynamicRule& rule : schema.rules) print_rule(os, rule, d + 2);
        os << pad(d) << "}\n";
    }
    os << in << "}\n";
}

void print_system(std::ostream& os, const System& s, int indent) {
    const std::string in = pad(indent);
    os << in << "system " << s.name << " conforms " << s.model << " {\n";
    int d = indent + 2;
    for (const auto& [id, object] : s.objects) {
        os << pad(d) << "object " << id << " : ";
        print_list(os, object.templates);
        if (object.state.empty()) {
            os << " { }\n";
            continue;
        }
        os << " {\n";
        for (const auto& [attr, value] : object.state) {
            os << pad(d + 2) << attr << " = " << value_text(value) << ";\n";
        }
        os << pad(d) << "}\n";
    }
    for (const auto& [id, link] : s.links) {
        os << pad(d) << "link " << id << " : " << link.role << " (" << link.source << " -> "
           << link.target << ");\n";
    }
    for (const std::string& label : s.time_points) {
        os << pad(d) << "time " << label << ";\n";
    }
    for (const ConditionBinding& b : s.bindings) {
        os << pad(d) << "bind " << (b.condition == ConditionKind::Pre ? "pre" : "post") << " "
           << b.rule << " " << b.object << " "
           << (b.bound == StatePoint::Start ? "start" : "end") << ";\n";
    }
    os << in << "}\n";
}

} // namespace

std::string predicate_text(const ExprPtr& expr) {
    std::ostringstream os;
    print_expr(os, expr, PrecQuant);
    return os.str();
}

std::string effect_text(const Effect& effect) {
    std::ostringstream os;
    print_effect(os, effect, 0);
    std::string out = os.str();
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::string serialize(const Model& model) {
    std::ostringstream os;
    print_model(os, model, 0);
    return os.str();
}

std::string serialize(const System& system) {
    std::ostringstream os;
    print_system(os, system, 0);
    return os.str();
}

std::string serialize(const Trace& trace) {
    std::ostringstream os;
    os << "trace {\n";
    os << "  model: " << trace.model << ";\n";
    os << "  seed: " << trace.seed << ";\n";
    os << "  steps: " << trace.steps.size() << ";\n";
    for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
        os << "  snapshot {\n";
        print_system(os, trace.snapshots[i], 4);
        os << "  }\n";
        if (i < trace.steps.size()) {
            const TraceStep& step = trace.steps[i];
            os << "  step {\n";
            os << "    rule: " << step.rule << ";\n";
            os << "    kind: " << (step.kind == ActionKind::Internal ? "internal" : "interaction")
               << ";\n";
            for (const auto& [var, object] : step.binding) {
                os << "    bind " << var << " = " << object << ";\n";
            }
            for (const ConditionBinding& b : step.condition_bindings) {
                os << "    cond " << (b.condition == ConditionKind::Pre ? "pre" : "post") << " "
                   << b.rule << " " << b.object << " "
                   << (b.bound == StatePoint::Start ? "start" : "end") << ";\n";
            }
            os << "  }\n";
        }
    }
    os << "}\n";
    return os.str();
}

} // namespace odp
