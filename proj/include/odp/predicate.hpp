#pragma once

#include "odp/source.hpp"
#include "odp/value.hpp"

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace odp {

struct Model;
struct System;

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinOp { Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Implies };
enum class Quantifier { Forall, Exists };

/// First-order constraint language over object graphs: literals, variables,
/// attribute access, role navigation (forward and reverse), arithmetic,
/// comparisons, boolean connectives, bounded quantifiers and set reducers.
struct Expr {
    struct IntLit {
        Int value;
    };
    struct BoolLit {
        bool value;
    };
    struct StringLit {
        std::string value;
    };
    // Denotes a specific object. Not part of the surface grammar; used by the
    // evaluator machinery and tests that pin a variable to a known object.
    struct ObjectLit {
        std::string id;
    };
    struct Var {
        std::string name;
    };
    struct Attr {
        ExprPtr base;
        std::string attribute;
    };
    struct Nav {
        ExprPtr base;
        std::string role;
        bool reverse = false;
    };
    struct Not {
        ExprPtr arg;
    };
    struct Binary {
        BinOp op;
        ExprPtr lhs;
        ExprPtr rhs;
    };
    struct Quant {
        Quantifier quantifier;
        std::string var;
        std::string domain; // template or type name
        ExprPtr body;
    };
    struct SetSize {
        ExprPtr set;
    };
    struct SetEmpty {
        ExprPtr set;
    };
    struct SetIncludes {
        ExprPtr set;
        ExprPtr element; // an object when all=false, another set when all=true
        bool all = false;
    };

    using Node = std::variant<IntLit, BoolLit, StringLit, ObjectLit, Var, Attr, Nav, Not, Binary,
                              Quant, SetSize, SetEmpty, SetIncludes>;

    Node node;
    SourceSpan span; // ignored by structural equality
};

ExprPtr mk_int(Int value);
ExprPtr mk_bool(bool value);
ExprPtr mk_string(std::string value);
ExprPtr mk_object(std::string id);
ExprPtr mk_var(std::string name);
ExprPtr mk_attr(ExprPtr base, std::string attribute);
ExprPtr mk_nav(ExprPtr base, std::string role, bool reverse = false);
ExprPtr mk_not(ExprPtr arg);
ExprPtr mk_bin(BinOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr mk_quant(Quantifier q, std::string var, std::string domain, ExprPtr body);
ExprPtr mk_size(ExprPtr set);
ExprPtr mk_is_empty(ExprPtr set);
ExprPtr mk_includes(ExprPtr set, ExprPtr element);
ExprPtr mk_includes_all(ExprPtr set, ExprPtr subset);

/// Structural equality; source spans do not participate.
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// ---------------------------------------------------------------------------
// Evaluation

struct ObjectRef {
    std::string id;
    auto operator<=>(const ObjectRef&) const = default;
};

struct ObjectSet {
    std::set<std::string> ids;
    friend bool operator==(const ObjectSet&, const ObjectSet&) = default;
};

/// Values a variable may be bound to from the outside.
using BoundValue = std::variant<ObjectRef, Int, bool, std::string>;
using Binding = std::map<std::string, BoundValue>;

using EvalValue = std::variant<Int, bool, std::string, ObjectRef, ObjectSet>;

class EvalError : public std::runtime_error {
public:
    enum class Kind {
        UnboundVariable,
        MissingAttribute,
        UnknownObject,
        UnknownDomain,
        AmbiguousDomain,
        UnknownRole,
        RecursiveType,
        TypeMismatch,
    };

    EvalError(Kind kind, const std::string& message);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Evaluates an expression against one system snapshot. The model is needed
/// only to resolve type-domain quantifiers; template domains and navigation
/// read the system alone. Throws EvalError as declared per node.
EvalValue eval_expr(const ExprPtr& expr, const System& system, const Binding& binding,
                    const Model* model = nullptr);

/// Top-level form of eval_expr for boolean predicates.
bool eval_predicate(const ExprPtr& expr, const System& system, const Binding& binding,
                    const Model* model = nullptr);

// ---------------------------------------------------------------------------
// Typechecking

struct TypeIssue {
    std::string message;
    SourceSpan span;
};

struct VarDomain {
    enum class Kind { Template, Type, AnyObject } kind = Kind::AnyObject;
    std::string name;
};

using TypeEnv = std::map<std::string, VarDomain>;

/// Collects every sort/resolution error in the expression; never aborts.
std::vector<TypeIssue> typecheck_predicate(const ExprPtr& expr, const Model& model,
                                           const TypeEnv& env = {});

/// Variant of typecheck_predicate that also demands an integer-, boolean- or
/// string-sorted result (used for effect right-hand sides).
std::vector<TypeIssue> typecheck_term(const ExprPtr& expr, const Model& model, const TypeEnv& env,
                                      Sort expected);

} // namespace odp
