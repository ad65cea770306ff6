#pragma once

#include "odp/wf.hpp"

#include <string>
#include <vector>

namespace odp {
namespace cli {

/// Renders the machine-readable report document; shape per
/// docs/report.schema.json.
std::string render_json(const std::string& command, const std::vector<std::string>& inputs,
                        const std::vector<Violation>& violations);

/// One line per violation: `RULE file:line:col subject,subject - message`.
std::string render_text(const std::vector<Violation>& violations,
                        const std::string& fallback_file);

} // namespace cli
} // namespace odp
