#pragma once

#include "odp/instance.hpp"
#include "odp/metamodel.hpp"
#include "odp/wf.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace odp {

struct ConformOptions {
    /// Restores the literal lower-bound reading of the cardinality rule
    /// (count >= upperBound) for study; the default reads it as lowerBound.
    bool paper_literal_c6 = false;

    /// When false, static schemas are skipped; used on mid-trace snapshots
    /// where time labels are resolved by trace position instead.
    bool include_statics = true;
};

enum class Verdict { Conforms, Violates };

struct ConformanceReport {
    std::string system_name;
    std::string model_name;
    std::vector<Violation> violations;
    Verdict verdict = Verdict::Conforms;

    friend bool operator==(const ConformanceReport&, const ConformanceReport&) = default;
};

/// Decides whether a system is a valid instance of its claimed model:
/// rules C1–C8 plus one entry per failing invariant schema (D2) and per
/// failing static schema whose time point the system declares (D3).
ConformanceReport conform(const System& system, const Model& model,
                          const ConformOptions& options = {});

/// Link counts for one role: a single "global" key, or one key per eligible
/// source object under per-source scope (eligible sources appear even with
/// count 0 so lower bounds bind).
std::map<std::string, std::uint64_t> cardinality_count(const RoleDef& role, const System& system);

} // namespace odp
