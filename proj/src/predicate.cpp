#include "odp/predicate.hpp"

#include "odp/instance.hpp"
#include "odp/metamodel.hpp"

#include <algorithm>
#include <utility>

namespace odp {

namespace {

template <class... Ts>
struct Overload : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overload(Ts...) -> Overload<Ts...>;

ExprPtr make(Expr::Node node) {
    auto e = std::make_shared<Expr>();
    e->node = std::move(node);
    return e;
}

} // namespace

ExprPtr mk_int(Int value) { return make(Expr::IntLit{std::move(value)}); }
ExprPtr mk_bool(bool value) { return make(Expr::BoolLit{value}); }
ExprPtr mk_string(std::string value) { return make(Expr::StringLit{std::move(value)}); }
ExprPtr mk_object(std::string id) { return make(Expr::ObjectLit{std::move(id)}); }
ExprPtr mk_var(std::string name) { return make(Expr::Var{std::move(name)}); }
ExprPtr mk_attr(ExprPtr base, std::string attribute) {
    return make(Expr::Attr{std::move(base), std::move(attribute)});
}
ExprPtr mk_nav(ExprPtr base, std::string role, bool reverse) {
    return make(Expr::Nav{std::move(base), std::move(role), reverse});
}
ExprPtr mk_not(ExprPtr arg) { return make(Expr::Not{std::move(arg)}); }
ExprPtr mk_bin(BinOp op, ExprPtr lhs, ExprPtr rhs) {
    return make(Expr::Binary{op, std::move(lhs), std::move(rhs)});
}
ExprPtr mk_quant(Quantifier q, std::string var, std::string domain, ExprPtr body) {
    return make(Expr::Quant{q, std::move(var), std::move(domain), std::move(body)});
}
ExprPtr mk_size(ExprPtr set) { return make(Expr::SetSize{std::move(set)}); }
ExprPtr mk_is_empty(ExprPtr set) { return make(Expr::SetEmpty{std::move(set)}); }
ExprPtr mk_includes(ExprPtr set, ExprPtr element) {
    return make(Expr::SetIncludes{std::move(set), std::move(element), false});
}
ExprPtr mk_includes_all(ExprPtr set, ExprPtr subset) {
    return make(Expr::SetIncludes{std::move(set), std::move(subset), true});
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        Overload{
            [&](const Expr::IntLit& x) { return x.value == std::get<Expr::IntLit>(b->node).value; },
            [&](const Expr::BoolLit& x) {
                return x.value == std::get<Expr::BoolLit>(b->node).value;
            },
            [&](const Expr::StringLit& x) {
                return x.value == std::get<Expr::StringLit>(b->node).value;
            },
            [&](const Expr::ObjectLit& x) {
                return x.id == std::get<Expr::ObjectLit>(b->node).id;
            },
            [&](const Expr::Var& x) { return x.name == std::get<Expr::Var>(b->node).name; },
            [&](const Expr::Attr& x) {
                const auto& y = std::get<Expr::Attr>(b->node);
                return x.attribute == y.attribute && expr_equal(x.base, y.base);
            },
            [&](const Expr::Nav& x) {
                const auto& y = std::get<Expr::Nav>(b->node);
                return x.role == y.role && x.reverse == y.reverse && expr_equal(x.base, y.base);
            },
            [&](const Expr::Not& x) {
                return expr_equal(x.arg, std::get<Expr::Not>(b->node).arg);
            },
            [&](const Expr::Binary& x) {
                const auto& y = std::get<Expr::Binary>(b->node);
                return x.op == y.op && expr_equal(x.lhs, y.lhs) && expr_equal(x.rhs, y.rhs);
            },
            [&](const Expr::Quant& x) {
                const auto& y = std::get<Expr::Quant>(b->node);
                return x.quantifier == y.quantifier && x.var == y.var && x.domain == y.domain &&
                       expr_equal(x.body, y.body);
            },
            [&](const Expr::SetSize& x) {
                return expr_equal(x.set, std::get<Expr::SetSize>(b->node).set);
            },
            [&](const Expr::SetEmpty& x) {
                return expr_equal(x.set, std::get<Expr::SetEmpty>(b->node).set);
            },
            [&](const Expr::SetIncludes& x) {
                const auto& y = std::get<Expr::SetIncludes>(b->node);
                return x.all == y.all && expr_equal(x.set, y.set) &&
                       expr_equal(x.element, y.element);
            },
        },
        a->node);
}

EvalError::EvalError(Kind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct EvalContext {
    const System& system;
    const Model* model;
    // Types whose predicates are on the evaluation stack; guards against
    // recursive type definitions.
    std::set<std::string> active_types;
};

EvalValue eval_node(const ExprPtr& expr, EvalContext& ctx, const Binding& binding);

bool eval_bool(const ExprPtr& expr, EvalContext& ctx, const Binding& binding) {
    EvalValue v = eval_node(expr, ctx, binding);
    if (const bool* b = std::get_if<bool>(&v)) return *b;
    throw EvalError(EvalError::Kind::TypeMismatch, "expected a boolean value");
}

Int eval_int(const ExprPtr& expr, EvalContext& ctx, const Binding& binding) {
    EvalValue v = eval_node(expr, ctx, binding);
    if (const Int* i = std::get_if<Int>(&v)) return *i;
    throw EvalError(EvalError::Kind::TypeMismatch, "expected an integer value");
}

const ObjectInstance& eval_object(const ExprPtr& expr, EvalContext& ctx, const Binding& binding) {
    EvalValue v = eval_node(expr, ctx, binding);
    const auto* ref = std::get_if<ObjectRef>(&v);
    if (!ref) throw EvalError(EvalError::Kind::TypeMismatch, "expected an object value");
    const ObjectInstance* object = ctx.system.find_object(ref->id);
    if (!object) {
        throw EvalError(EvalError::Kind::UnknownObject, "no object '" + ref->id + "' in system");
    }
    return *object;
}

ObjectSet eval_set(const ExprPtr& expr, EvalContext& ctx, const Binding& binding) {
    EvalValue v = eval_node(expr, ctx, binding);
    if (auto* s = std::get_if<ObjectSet>(&v)) return std::move(*s);
    throw EvalError(EvalError::Kind::TypeMismatch, "expected an object set");
}

bool satisfies_type(const TypeDef& type, const std::string& object_id, EvalContext& ctx) {
    if (ctx.active_types.contains(type.name)) {
        throw EvalError(EvalError::Kind::RecursiveType,
                        "type '" + type.name + "' refers to itself through its predicate");
    }
    ctx.active_types.insert(type.name);
    bool result;
    try {
        Binding self{{"self", ObjectRef{object_id}}};
        result = eval_bool(type.predicate, ctx, self);
    } catch (...) {
        ctx.active_types.erase(type.name);
        throw;
    }
    ctx.active_types.erase(type.name);
    return result;
}

/// Objects of a quantifier domain, in id order. Template domains read the
/// instantiated template sets; type domains evaluate the type's predicate.
std::vector<std::string> domain_objects(const std::string& domain, EvalContext& ctx) {
    bool is_template = false;
    const TypeDef* type = nullptr;
    if (ctx.model) {
        is_template = ctx.model->templates.contains(domain);
        auto ti = ctx.model->types.find(domain);
        if (ti != ctx.model->types.end()) type = &ti->second;
        if (is_template && type) {
            throw EvalError(EvalError::Kind::AmbiguousDomain,
                            "'" + domain + "' names both a template and a type");
        }
    }
    std::vector<std::string> ids;
    if (type) {
        for (const auto& [id, object] : ctx.system.objects) {
            if (satisfies_type(*type, id, ctx)) ids.push_back(id);
        }
        return ids;
    }
    if (!ctx.model || is_template) {
        // Without a model every domain is read as a template name; membership
        // is decided by the instantiated template sets alone.
        for (const auto& [id, object] : ctx.system.objects) {
            if (object.templates.contains(domain)) ids.push_back(id);
        }
        return ids;
    }
    throw EvalError(EvalError::Kind::UnknownDomain,
                    "'" + domain + "' is neither a template nor a type of the model");
}

EvalValue eval_node(const ExprPtr& expr, EvalContext& ctx, const Binding& binding) {
    return std::visit(
        Overload{
            [&](const Expr::IntLit& n) -> EvalValue { return n.value; },
            [&](const Expr::BoolLit& n) -> EvalValue { return n.value; },
            [&](const Expr::StringLit& n) -> EvalValue { return n.value; },
            [&](const Expr::ObjectLit& n) -> EvalValue { return ObjectRef{n.id}; },
            [&](const Expr::Var& n) -> EvalValue {
                auto it = binding.find(n.name);
                if (it == binding.end()) {
                    throw EvalError(EvalError::Kind::UnboundVariable,
                                    "variable '" + n.name + "' is not bound");
                }
                return std::visit(
                    Overload{
                        [](const ObjectRef& r) -> EvalValue { return r; },
                        [](const Int& i) -> EvalValue { return i; },
                        [](bool b) -> EvalValue { return b; },
                        [](const std::string& s) -> EvalValue { return s; },
                    },
                    it->second);
            },
            [&](const Expr::Attr& n) -> EvalValue {
                const ObjectInstance& object = eval_object(n.base, ctx, binding);
                auto it = object.state.find(n.attribute);
                if (it == object.state.end()) {
                    throw EvalError(EvalError::Kind::MissingAttribute,
                                    "object '" + object.id + "' has no attribute '" +
                                        n.attribute + "'");
                }
                return std::visit([](const auto& v) -> EvalValue { return v; }, it->second);
            },
            [&](const Expr::Nav& n) -> EvalValue {
                const ObjectInstance& object = eval_object(n.base, ctx, binding);
                ObjectSet out;
                for (const auto& [id, link] : ctx.system.links) {
                    if (link.role != n.role) continue;
                    if (!n.reverse && link.source == object.id) out.ids.insert(link.target);
                    if (n.reverse && link.target == object.id) out.ids.insert(link.source);
                }
                return out;
            },
            [&](const Expr::Not& n) -> EvalValue { return !eval_bool(n.arg, ctx, binding); },
            [&](const Expr::Binary& n) -> EvalValue {
                switch (n.op) {
                case BinOp::Add: return eval_int(n.lhs, ctx, binding) + eval_int(n.rhs, ctx, binding);
                case BinOp::Sub: return eval_int(n.lhs, ctx, binding) - eval_int(n.rhs, ctx, binding);
                case BinOp::Mul: return eval_int(n.lhs, ctx, binding) * eval_int(n.rhs, ctx, binding);
                case BinOp::Lt: return eval_int(n.lhs, ctx, binding) < eval_int(n.rhs, ctx, binding);
                case BinOp::Le: return eval_int(n.lhs, ctx, binding) <= eval_int(n.rhs, ctx, binding);
                case BinOp::Gt: return eval_int(n.lhs, ctx, binding) > eval_int(n.rhs, ctx, binding);
                case BinOp::Ge: return eval_int(n.lhs, ctx, binding) >= eval_int(n.rhs, ctx, binding);
                case BinOp::And: {
                    // Connectives short-circuit left to right.
                    if (!eval_bool(n.lhs, ctx, binding)) return false;
                    return eval_bool(n.rhs, ctx, binding);
                }
                case BinOp::Or: {
                    if (eval_bool(n.lhs, ctx, binding)) return true;
                    return eval_bool(n.rhs, ctx, binding);
                }
                case BinOp::Implies: {
                    if (!eval_bool(n.lhs, ctx, binding)) return true;
                    return eval_bool(n.rhs, ctx, binding);
                }
                case BinOp::Eq:
                case BinOp::Ne: {
                    EvalValue l = eval_node(n.lhs, ctx, binding);
                    EvalValue r = eval_node(n.rhs, ctx, binding);
                    bool eq;
                    if (const auto* lr = std::get_if<ObjectRef>(&l)) {
                        const auto* rr = std::get_if<ObjectRef>(&r);
                        if (!rr) {
                            throw EvalError(EvalError::Kind::TypeMismatch,
                                            "object compared with a plain value");
                        }
                        eq = lr->id == rr->id;
                    } else if (l.index() != r.index() || std::holds_alternative<ObjectSet>(l)) {
                        throw EvalError(EvalError::Kind::TypeMismatch,
                                        "equality over incompatible values");
                    } else {
                        eq = l == r;
                    }
                    return n.op == BinOp::Eq ? eq : !eq;
                }
                }
                throw EvalError(EvalError::Kind::TypeMismatch, "bad operator");
            },
            [&](const Expr::Quant& n) -> EvalValue {
                std::vector<std::string> ids = domain_objects(n.domain, ctx);
                for (const std::string& id : ids) {
                    Binding inner = binding;
                    inner.insert_or_assign(n.var, ObjectRef{id});
                    bool hit = eval_bool(n.body, ctx, inner);
                    if (n.quantifier == Quantifier::Forall && !hit) return false;
                    if (n.quantifier == Quantifier::Exists && hit) return true;
                }
                return n.quantifier == Quantifier::Forall;
            },
            [&](const Expr::SetSize& n) -> EvalValue {
                return Int(eval_set(n.set, ctx, binding).ids.size());
            },
            [&](const Expr::SetEmpty& n) -> EvalValue {
                return eval_set(n.set, ctx, binding).ids.empty();
            },
            [&](const Expr::SetIncludes& n) -> EvalValue {
                ObjectSet set = eval_set(n.set, ctx, binding);
                if (n.all) {
                    ObjectSet sub = eval_set(n.element, ctx, binding);
                    return std::ranges::includes(set.ids, sub.ids);
                }
                EvalValue element = eval_node(n.element, ctx, binding);
                const auto* ref = std::get_if<ObjectRef>(&element);
                if (!ref) {
                    throw EvalError(EvalError::Kind::TypeMismatch,
                                    "includes expects an object argument");
                }
                return set.ids.contains(ref->id);
            },
        },
        expr->node);
}

} // namespace

EvalValue eval_expr(const ExprPtr& expr, const System& system, const Binding& binding,
                    const Model* model) {
    EvalContext ctx{system, model, {}};
    return eval_node(expr, ctx, binding);
}

bool eval_predicate(const ExprPtr& expr, const System& system, const Binding& binding,
                    const Model* model) {
    EvalValue v = eval_expr(expr, system, binding, model);
    if (const bool* b = std::get_if<bool>(&v)) return *b;
    throw EvalError(EvalError::Kind::TypeMismatch, "predicate did not evaluate to a boolean");
}

// ---------------------------------------------------------------------------
// Typechecking

namespace {

struct Checked {
    enum class Kind { Sort, Object, Set, Invalid } kind = Kind::Invalid;
    Sort sort = Sort::Int;
    VarDomain domain; // meaningful for Kind::Object
};

struct CheckContext {
    const Model& model;
    std::vector<TypeIssue>& issues;
};

void report(CheckContext& ctx, const SourceSpan& span, std::string message) {
    ctx.issues.push_back(TypeIssue{std::move(message), span});
}

/// Attribute sorts visible on an object of the given domain. A template
/// domain sees the declarations of the template and its reachable parents;
/// type and unconstrained domains see every template of the model.
std::optional<Sort> attribute_sort(CheckContext& ctx, const SourceSpan& span,
                                   const VarDomain& domain, const std::string& attribute) {
    std::vector<const ObjectTemplate*> scope;
    if (domain.kind == VarDomain::Kind::Template) {
        const ObjectTemplate* t = ctx.model.find_template(domain.name);
        if (t) {
            scope.push_back(t);
            for (const std::string& parent : reachable_parents(ctx.model, domain.name)) {
                if (const ObjectTemplate* p = ctx.model.find_template(parent)) scope.push_back(p);
            }
        }
    } else {
        for (const auto& [name, t] : ctx.model.templates) scope.push_back(&t);
    }
    std::optional<Sort> found;
    bool conflict = false;
    for (const ObjectTemplate* t : scope) {
        auto it = t->attributes.find(attribute);
        if (it == t->attributes.end()) continue;
        if (found && *found != it->second) conflict = true;
        found = it->second;
    }
    if (!found) {
        report(ctx, span, "unknown attribute '" + attribute + "'" +
                              (domain.kind == VarDomain::Kind::Template
                                   ? " on template '" + domain.name + "'"
                                   : ""));
        return std::nullopt;
    }
    if (conflict) {
        report(ctx, span, "attribute '" + attribute + "' is declared with conflicting sorts");
        return std::nullopt;
    }
    return found;
}

Checked check_node(const ExprPtr& expr, CheckContext& ctx, const TypeEnv& env);

Checked check_sort(const ExprPtr& expr, CheckContext& ctx, const TypeEnv& env, Sort want,
                   const char* what) {
    Checked c = check_node(expr, ctx, env);
    if (c.kind == Checked::Kind::Invalid) return c;
    if (c.kind != Checked::Kind::Sort || c.sort != want) {
        std::string got = c.kind == Checked::Kind::Sort ? std::string(sort_name(c.sort))
                          : c.kind == Checked::Kind::Object ? std::string("object")
                                                            : std::string("object set");
        report(ctx, expr->span, got + " used as " + what);
        return Checked{};
    }
    return c;
}

Checked check_node(const ExprPtr& expr, CheckContext& ctx, const TypeEnv& env) {
    return std::visit(
        Overload{
            [&](const Expr::IntLit&) { return Checked{Checked::Kind::Sort, Sort::Int, {}}; },
            [&](const Expr::BoolLit&) { return Checked{Checked::Kind::Sort, Sort::Bool, {}}; },
            [&](const Expr::StringLit&) { return Checked{Checked::Kind::Sort, Sort::String, {}}; },
            [&](const Expr::ObjectLit&) {
                return Checked{Checked::Kind::Object, Sort::Int,
                               VarDomain{VarDomain::Kind::AnyObject, ""}};
            },
            [&](const Expr::Var& n) {
                auto it = env.find(n.name);
                if (it == env.end()) {
                    report(ctx, expr->span, "unbound variable '" + n.name + "'");
                    return Checked{};
                }
                return Checked{Checked::Kind::Object, Sort::Int, it->second};
            },
            [&](const Expr::Attr& n) {
                Checked base = check_node(n.base, ctx, env);
                if (base.kind == Checked::Kind::Invalid) return Checked{};
                if (base.kind != Checked::Kind::Object) {
                    report(ctx, expr->span, "attribute access on a non-object value");
                    return Checked{};
                }
                auto sort = attribute_sort(ctx, expr->span, base.domain, n.attribute);
                if (!sort) return Checked{};
                return Checked{Checked::Kind::Sort, *sort, {}};
            },
            [&](const Expr::Nav& n) {
                Checked base = check_node(n.base, ctx, env);
                if (base.kind != Checked::Kind::Invalid && base.kind != Checked::Kind::Object) {
                    report(ctx, expr->span, "navigation on a non-object value");
                    return Checked{};
                }
                if (!ctx.model.find_role(n.role)) {
                    report(ctx, expr->span, "unknown role '" + n.role + "'");
                    return Checked{};
                }
                return Checked{Checked::Kind::Set, Sort::Int, {}};
            },
            [&](const Expr::Not& n) {
                check_sort(n.arg, ctx, env, Sort::Bool, "bool");
                return Checked{Checked::Kind::Sort, Sort::Bool, {}};
            },
            [&](const Expr::Binary& n) {
                switch (n.op) {
                case BinOp::Add:
                case BinOp::Sub:
                case BinOp::Mul:
                    check_sort(n.lhs, ctx, env, Sort::Int, "int");
                    check_sort(n.rhs, ctx, env, Sort::Int, "int");
                    return Checked{Checked::Kind::Sort, Sort::Int, {}};
                case BinOp::Lt:
                case BinOp::Le:
                case BinOp::Gt:
                case BinOp::Ge:
                    check_sort(n.lhs, ctx, env, Sort::Int, "int");
                    check_sort(n.rhs, ctx, env, Sort::Int, "int");
                    return Checked{Checked::Kind::Sort, Sort::Bool, {}};
                case BinOp::And:
                case BinOp::Or:
                case BinOp::Implies:
                    check_sort(n.lhs, ctx, env, Sort::Bool, "bool");
                    check_sort(n.rhs, ctx, env, Sort::Bool, "bool");
                    return Checked{Checked::Kind::Sort, Sort::Bool, {}};
                case BinOp::Eq:
                case BinOp::Ne: {
                    Checked l = check_node(n.lhs, ctx, env);
                    Checked r = check_node(n.rhs, ctx, env);
                    if (l.kind == Checked::Kind::Invalid || r.kind == Checked::Kind::Invalid) {
                        return Checked{Checked::Kind::Sort, Sort::Bool, {}};
                    }
                    bool ok = (l.kind == Checked::Kind::Sort && r.kind == Checked::Kind::Sort &&
                               l.sort == r.sort) ||
                              (l.kind == Checked::Kind::Object && r.kind == Checked::Kind::Object);
                    if (!ok) report(ctx, expr->span, "equality over incompatible operands");
                    return Checked{Checked::Kind::Sort, Sort::Bool, {}};
                }
                }
                return Checked{};
            },
            [&](const Expr::Quant& n) {
                bool is_template = ctx.model.templates.contains(n.domain);
                bool is_type = ctx.model.types.contains(n.domain);
                VarDomain domain{VarDomain::Kind::AnyObject, n.domain};
                if (is_template && is_type) {
                    report(ctx, expr->span,
                           "quantifier domain '" + n.domain + "' names both a template and a type");
                } else if (is_template) {
                    domain = VarDomain{VarDomain::Kind::Template, n.domain};
                } else if (is_type) {
                    domain = VarDomain{VarDomain::Kind::Type, n.domain};
                } else {
                    report(ctx, expr->span,
                           "quantifier domain '" + n.domain +
                               "' is neither a declared template nor a declared type");
                }
                if (env.contains(n.var)) {
                    report(ctx, expr->span, "variable '" + n.var + "' shadows an outer binding");
                }
                TypeEnv inner = env;
                inner.insert_or_assign(n.var, domain);
                check_sort(n.body, ctx, inner, Sort::Bool, "bool");
                return Checked{Checked::Kind::Sort, Sort::Bool, {}};
            },
            [&](const Expr::SetSize& n) {
                Checked s = check_node(n.set, ctx, env);
                if (s.kind != Checked::Kind::Invalid && s.kind != Checked::Kind::Set) {
                    report(ctx, expr->span, "size applies to an object set");
                }
                return Checked{Checked::Kind::Sort, Sort::Int, {}};
            },
            [&](const Expr::SetEmpty& n) {
                Checked s = check_node(n.set, ctx, env);
                if (s.kind != Checked::Kind::Invalid && s.kind != Checked::Kind::Set) {
                    report(ctx, expr->span, "isEmpty applies to an object set");
                }
                return Checked{Checked::Kind::Sort, Sort::Bool, {}};
            },
            [&](const Expr::SetIncludes& n) {
                Checked s = check_node(n.set, ctx, env);
                if (s.kind != Checked::Kind::Invalid && s.kind != Checked::Kind::Set) {
                    report(ctx, expr->span, n.all ? "includesAll applies to an object set"
                                                  : "includes applies to an object set");
                }
                Checked e = check_node(n.element, ctx, env);
                if (e.kind == Checked::Kind::Invalid) {
                    return Checked{Checked::Kind::Sort, Sort::Bool, {}};
                }
                if (n.all && e.kind != Checked::Kind::Set) {
                    report(ctx, expr->span, "includesAll expects an object set argument");
                }
                if (!n.all && e.kind != Checked::Kind::Object) {
                    report(ctx, expr->span, "includes expects an object argument");
                }
                return Checked{Checked::Kind::Sort, Sort::Bool, {}};
            },
        },
        expr->node);
}

} // namespace

std::vector<TypeIssue> typecheck_predicate(const ExprPtr& expr, const Model& model,
                                           const TypeEnv& env) {
    std::vector<TypeIssue> issues;
    CheckContext ctx{model, issues};
    Checked c = check_node(expr, ctx, env);
    if (c.kind == Checked::Kind::Sort && c.sort != Sort::Bool) {
        report(ctx, expr->span, std::string(sort_name(c.sort)) + " used as bool");
    } else if (c.kind == Checked::Kind::Object || c.kind == Checked::Kind::Set) {
        report(ctx, expr->span, "predicate must be boolean");
    }
    return issues;
}

std::vector<TypeIssue> typecheck_term(const ExprPtr& expr, const Model& model, const TypeEnv& env,
                                      Sort expected) {
    std::vector<TypeIssue> issues;
    CheckContext ctx{model, issues};
    check_sort(expr, ctx, env, expected, sort_name(expected).data());
    return issues;
}

} // namespace odp
