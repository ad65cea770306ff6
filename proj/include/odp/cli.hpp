#pragma once

#include "odp/dsl.hpp"
#include "odp/wf.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace odp {
namespace cli {

inline constexpr std::string_view kToolName = "odp-check";
inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kModelPathEnv = "ODPCHECK_MODEL_PATH";

enum class Command { CheckModel, CheckSystem, Conform, Simulate, VerifyTrace, Fmt };
enum class Format { Text, Json };

struct CliConfig {
    Command command = Command::CheckModel;
    std::vector<std::string> inputs;
    std::optional<std::string> model_path;          // --model
    std::vector<std::string> model_search_path;     // --model-path / env
    Format format = Format::Text;
    std::optional<std::set<RuleId>> rule_filter;    // --rules
    std::optional<std::uint64_t> seed;              // simulate only
    std::optional<std::uint64_t> steps;             // simulate only
    bool paper_literal_c6 = false;
    std::optional<std::string> out_path;            // simulate trace output
    bool write_in_place = false;                    // fmt --write
};

// Exit codes: 0 no violations, 1 violations found, 2 parse/usage/internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolations = 1;
inline constexpr int kExitError = 2;

/// Runs one configured command. Reports go to `out`, diagnostics to `err`.
int run(const CliConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (without the program name) and runs them.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Attaches declaration spans to violations whose first subject is found in
/// the span table.
void attach_spans(std::vector<Violation>& violations, const SpanTable& spans,
                  const std::string& fallback_file);

} // namespace cli
} // namespace odp
