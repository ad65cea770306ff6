#pragma once

#include "odp/instance.hpp"
#include "odp/metamodel.hpp"
#include "odp/source.hpp"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace odp {

/// Stable checker rule identifiers. W-rules judge models, I-rules judge
/// systems in isolation, C-rules judge a system against its model, D-rules
/// judge traces, E-rules are raised by engineering operations and T1 flags
/// predicates that fail to typecheck. docs/rules.md is the catalog.
enum class RuleId {
    W1, W2, W3, W4, W5, W6, W7, W8, W9,
    I1, I2, I3, I4, I5,
    C1, C2, C3, C4, C5, C6, C7, C8,
    D1, D2, D3, D4, D5,
    E1, E2, E3, E4, E5,
    T1,
};

std::string_view rule_name(RuleId id);
std::optional<RuleId> rule_from_name(std::string_view name);

enum class Severity { Error, Warning };

struct Violation {
    RuleId rule;
    std::vector<std::string> subjects; // never empty
    std::string message;
    SourceSpan span;
    Severity severity = Severity::Error;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Ordering used for every report: (rule, subjects, message).
bool violation_less(const Violation& a, const Violation& b);

void sort_violations(std::vector<Violation>& violations);

bool has_errors(const std::vector<Violation>& violations);

/// Evaluates W1–W9 plus the T1 predicate-typecheck sweep over every schema,
/// type and dynamic rule. Reports all violations; the empty report means the
/// model is well-formed.
std::vector<Violation> check_model(const Model& model);

/// Evaluates I1–I5 on a system in isolation (no model required).
std::vector<Violation> check_system_wf(const System& system);

} // namespace odp
