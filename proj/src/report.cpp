#include "odp/report.hpp"

#include "odp/cli.hpp"

#include <json.hpp>

#include <sstream>

namespace odp {
namespace cli {

std::string render_json(const std::string& command, const std::vector<std::string>& inputs,
                        const std::vector<Violation>& violations) {
    nlohmann::json doc;
    doc["tool"] = std::string(kToolName);
    doc["version"] = std::string(kToolVersion);
    doc["command"] = command;
    doc["inputs"] = inputs;
    nlohmann::json items = nlohmann::json::array();
    for (const Violation& v : violations) {
        nlohmann::json item;
        item["rule"] = std::string(rule_name(v.rule));
        item["subjects"] = v.subjects;
        item["message"] = v.message;
        item["severity"] = v.severity == Severity::Error ? "error" : "warning";
        if (v.span.known()) {
            item["span"] = {
                {"file", v.span.file},         {"startLine", v.span.start_line},
                {"startCol", v.span.start_col}, {"endLine", v.span.end_line},
                {"endCol", v.span.end_col},
            };
        }
        items.push_back(std::move(item));
    }
    doc["violations"] = std::move(items);
    doc["verdict"] = has_errors(violations) ? "violations" : "ok";
    return doc.dump(2) + "\n";
}

std::string render_text(const std::vector<Violation>& violations,
                        const std::string& fallback_file) {
    std::ostringstream os;
    for (const Violation& v : violations) {
        os << rule_name(v.rule) << " ";
        if (v.span.known()) {
            os << v.span.file << ":" << v.span.start_line << ":" << v.span.start_col;
        } else {
            os << fallback_file << ":0:0";
        }
        os << " ";
        bool first = true;
        for (const std::string& subject : v.subjects) {
            if (!first) os << ",";
            first = false;
            os << subject;
        }
        os << " - " << v.message << "\n";
    }
    return os.str();
}

} // namespace cli
} // namespace odp
