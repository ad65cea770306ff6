#pragma once

#include "odp/dynamics.hpp"
#include "odp/instance.hpp"
#include "odp/metamodel.hpp"
#include "odp/predicate.hpp"
#include "odp/source.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace odp {

struct ParseMessage {
    enum class Severity { Error, Warning } severity = Severity::Error;
    SourceSpan span;
    std::string message;

    friend bool operator==(const ParseMessage&, const ParseMessage&) = default;
};

struct ParseReport {
    std::vector<ParseMessage> messages;

    bool failed() const;
    std::vector<ParseMessage> errors() const;
};

/// Source locations of declarations, keyed by "category:name"
/// (e.g. "template:Server", "object:o1"). Kept outside the domain values so
/// structural equality is independent of where things were written.
struct SpanTable {
    std::map<std::string, SourceSpan> spans;

    std::optional<SourceSpan> lookup(std::string_view category, std::string_view name) const;
    void record(std::string_view category, std::string_view name, const SourceSpan& span);
};

template <class T>
struct Parsed {
    T value;
    SpanTable spans;
};

template <class T>
struct ParseOutcome {
    std::optional<Parsed<T>> parsed;
    ParseReport report;

    bool ok() const { return parsed.has_value() && !report.failed(); }
};

/// Parses one model file. On success the model is name-resolved: parents,
/// role endpoint templates, role inverses, action participants and rule
/// vocabulary all refer to declared elements. References that the W-rules
/// judge (template -> schema/action/type) are kept as written.
ParseOutcome<Model> parse_model(std::string_view text, std::string file = "<input>");

/// Parses one system file. Object/link/time declarations are resolved within
/// the file; nothing is checked against the model (separation of phases).
ParseOutcome<System> parse_system(std::string_view text, std::string file = "<input>");

/// Parses one trace file: header, snapshots and step records.
ParseOutcome<Trace> parse_trace(std::string_view text, std::string file = "<input>");

/// Canonical serializers: declarations sorted by (category, name), stable
/// attribute order, byte-stable for equal values. parse(serialize(x)) == x.
std::string serialize(const Model& model);
std::string serialize(const System& system);
std::string serialize(const Trace& trace);

/// Canonical concrete syntax of a predicate (used by the serializers and in
/// diagnostics).
std::string predicate_text(const ExprPtr& expr);

std::string effect_text(const Effect& effect);

} // namespace odp
