#pragma once

#include "odp/conformance.hpp"
#include "odp/instance.hpp"
#include "odp/metamodel.hpp"
#include "odp/wf.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace odp {

/// One executed transition: the rule, the participant binding and the kind
/// of the underlying action, plus the condition/state couplings recorded for
/// the step.
struct TraceStep {
    std::string rule;
    std::map<std::string, std::string> binding; // participant var -> object id
    ActionKind kind = ActionKind::Internal;
    std::vector<ConditionBinding> condition_bindings;

    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

/// A snapshot sequence produced by executing dynamic rules.
/// Invariant: snapshots.size() == steps.size() + 1.
struct Trace {
    std::string model;
    std::uint64_t seed = 0;
    std::vector<System> snapshots;
    std::vector<TraceStep> steps;

    friend bool operator==(const Trace&, const Trace&) = default;
};

struct RuleBinding {
    std::string rule;
    std::map<std::string, std::string> binding;

    friend bool operator==(const RuleBinding&, const RuleBinding&) = default;
};

struct EnabledSet {
    std::vector<RuleBinding> enabled; // ordered by (rule name, binding)
    std::vector<std::string> diagnostics; // preconditions that failed to evaluate
};

/// All (rule, binding) pairs whose participants match and whose precondition
/// holds on the given snapshot. A precondition that raises an evaluation
/// error disables the binding and contributes a diagnostic.
EnabledSet enabled_rules(const System& system, const Model& model);

class ApplyError : public std::runtime_error {
public:
    enum class Kind {
        BadBinding,
        UnknownTemplate,
        UnknownRole,
        UnknownAttribute,
        SortMismatch,
        DuplicateVar,
        ObjectDeleted,
        DeleteDanglingLink,
        DuplicateLink,
        MissingLink,
        IncompleteState,
        EffectEvalFailed,
        PostconditionFailed,
        InvariantBroken,
    };

    ApplyError(Kind kind, const std::string& message);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Applies one enabled rule. Effects run in declaration order against a copy
/// of the system; everything not named by an effect is left untouched. The
/// postcondition and every invariant schema are re-checked on the result and
/// failure discards it (ApplyError).
System apply_rule(const System& system, const Model& model, const DynamicRule& rule,
                  const std::map<std::string, std::string>& binding);

class SimulateError : public std::runtime_error {
public:
    enum class Kind { InitialNonConforming, StepFailed, NonConformingSnapshot };

    SimulateError(Kind kind, const std::string& message);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Runs up to `steps` transitions from `initial`, drawing uniformly from the
/// enabled set with a seed-stable generator (splitmix64 with rejection
/// sampling). Stops early when nothing is enabled. Identical inputs produce
/// identical traces.
Trace simulate(const Model& model, const System& initial, std::size_t steps, std::uint64_t seed);

/// Checks a trace against its model: D1 (steps justified by an enabled rule
/// whose pre/post held), D2 (invariant schemas at every snapshot), D3 (static
/// schemas at their trace position), D4 (object creation/deletion/
/// reclassification matches the declared effects), D5 (frame: untouched
/// attributes and links unchanged), plus the per-snapshot I-rules and the
/// I4/I5 discipline of recorded condition bindings. Steps with an empty
/// effect list are reported as W8 warnings.
std::vector<Violation> verify_trace(const Model& model, const Trace& trace);

} // namespace odp
