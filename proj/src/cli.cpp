#include "odp/cli.hpp"

#include "odp/conformance.hpp"
#include "odp/dynamics.hpp"
#include "odp/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace odp {
namespace cli {

namespace fs = std::filesystem;

namespace {

struct CliError {
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError{"cannot read '" + path + "'"};
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void print_parse_report(const ParseReport& report, std::ostream& err) {
    for (const ParseMessage& m : report.messages) {
        err << (m.severity == ParseMessage::Severity::Error ? "error" : "warning") << ": ";
        if (m.span.known()) {
            err << m.span.file << ":" << m.span.start_line << ":" << m.span.start_col << ": ";
        }
        err << m.message << "\n";
    }
}

Parsed<Model> load_model(const std::string& path, std::ostream& err) {
    auto outcome = parse_model(read_file(path), path);
    print_parse_report(outcome.report, err);
    if (!outcome.parsed) throw CliError{"model '" + path + "' does not parse"};
    return std::move(*outcome.parsed);
}

Parsed<System> load_system(const std::string& path, std::ostream& err) {
    auto outcome = parse_system(read_file(path), path);
    print_parse_report(outcome.report, err);
    if (!outcome.parsed) throw CliError{"system '" + path + "' does not parse"};
    return std::move(*outcome.parsed);
}

Parsed<Trace> load_trace(const std::string& path, std::ostream& err) {
    auto outcome = parse_trace(read_file(path), path);
    print_parse_report(outcome.report, err);
    if (!outcome.parsed) throw CliError{"trace '" + path + "' does not parse"};
    return std::move(*outcome.parsed);
}

/// Finds the model a system claims: an explicit --model path wins, otherwise
/// the search path is scanned for <name>.odpm; ambiguity is an error.
std::string resolve_model_path(const CliConfig& config, const std::string& model_name) {
    if (config.model_path) return *config.model_path;
    std::vector<std::string> hits;
    for (const std::string& dir : config.model_search_path) {
        fs::path candidate = fs::path(dir) / (model_name + ".odpm");
        std::error_code ec;
        if (fs::exists(candidate, ec)) hits.push_back(candidate.string());
    }
    if (hits.empty()) {
        throw CliError{"cannot resolve model '" + model_name +
                       "'; pass --model or extend the model search path"};
    }
    if (hits.size() > 1) {
        throw CliError{"model '" + model_name + "' is ambiguous: found " + hits[0] + " and " +
                       hits[1]};
    }
    return hits[0];
}

void apply_rule_filter(const CliConfig& config, std::vector<Violation>& violations) {
    if (!config.rule_filter) return;
    std::erase_if(violations, [&](const Violation& v) {
        return !config.rule_filter->contains(v.rule);
    });
}

int emit_report(const CliConfig& config, const std::string& command,
                const std::vector<std::string>& inputs, std::vector<Violation> violations,
                std::ostream& out) {
    if (config.format == Format::Json) {
        out << render_json(command, inputs, violations);
    } else {
        out << render_text(violations, inputs.empty() ? "<input>" : inputs.front());
    }
    return has_errors(violations) ? kExitViolations : kExitOk;
}

int run_check_model(const CliConfig& config, std::ostream& out, std::ostream& err) {
    std::vector<Violation> all;
    for (const std::string& path : config.inputs) {
        Parsed<Model> parsed = load_model(path, err);
        std::vector<Violation> violations = check_model(parsed.value);
        attach_spans(violations, parsed.spans, path);
        all.insert(all.end(), violations.begin(), violations.end());
    }
    apply_rule_filter(config, all);
    return emit_report(config, "check-model", config.inputs, std::move(all), out);
}

int run_check_system(const CliConfig& config, std::ostream& out, std::ostream& err) {
    std::vector<Violation> all;
    for (const std::string& path : config.inputs) {
        Parsed<System> parsed = load_system(path, err);
        std::vector<Violation> violations = check_system_wf(parsed.value);
        attach_spans(violations, parsed.spans, path);
        all.insert(all.end(), violations.begin(), violations.end());
    }
    apply_rule_filter(config, all);
    return emit_report(config, "check-system", config.inputs, std::move(all), out);
}

int run_conform(const CliConfig& config, std::ostream& out, std::ostream& err) {
    std::vector<Violation> all;
    ConformOptions options;
    options.paper_literal_c6 = config.paper_literal_c6;
    for (const std::string& path : config.inputs) {
        Parsed<System> parsed = load_system(path, err);
        std::string model_path = resolve_model_path(config, parsed.value.model);
        Parsed<Model> model = load_model(model_path, err);
        ConformanceReport report = conform(parsed.value, model.value, options);
        attach_spans(report.violations, parsed.spans, path);
        all.insert(all.end(), report.violations.begin(), report.violations.end());
    }
    apply_rule_filter(config, all);
    return emit_report(config, "conform", config.inputs, std::move(all), out);
}

int run_simulate(const CliConfig& config, std::ostream& out, std::ostream& err) {
    if (config.inputs.size() != 1) throw CliError{"simulate expects exactly one system file"};
    Parsed<System> parsed = load_system(config.inputs.front(), err);
    std::string model_path = resolve_model_path(config, parsed.value.model);
    Parsed<Model> model = load_model(model_path, err);

    Trace trace;
    try {
        trace = simulate(model.value, parsed.value, config.steps.value_or(10),
                         config.seed.value_or(0));
    } catch (const SimulateError& e) {
        if (e.kind() == SimulateError::Kind::InitialNonConforming) {
            ConformOptions options;
            options.paper_literal_c6 = config.paper_literal_c6;
            ConformanceReport report = conform(parsed.value, model.value, options);
            attach_spans(report.violations, parsed.spans, config.inputs.front());
            err << "error: " << e.what() << "\n";
            return emit_report(config, "simulate", config.inputs, std::move(report.violations),
                               out);
        }
        throw CliError{e.what()};
    }

    std::string text = serialize(trace);
    if (config.out_path) {
        std::ofstream file(*config.out_path, std::ios::binary);
        if (!file) throw CliError{"cannot write '" + *config.out_path + "'"};
        file << text;
    } else {
        out << text;
    }
    return kExitOk;
}

int run_verify_trace(const CliConfig& config, std::ostream& out, std::ostream& err) {
    std::vector<Violation> all;
    for (const std::string& path : config.inputs) {
        Parsed<Trace> parsed = load_trace(path, err);
        std::string model_path = resolve_model_path(config, parsed.value.model);
        Parsed<Model> model = load_model(model_path, err);
        std::vector<Violation> violations = verify_trace(model.value, parsed.value);
        attach_spans(violations, parsed.spans, path);
        all.insert(all.end(), violations.begin(), violations.end());
    }
    apply_rule_filter(config, all);
    return emit_report(config, "verify-trace", config.inputs, std::move(all), out);
}

int run_fmt(const CliConfig& config, std::ostream& out, std::ostream& err) {
    for (const std::string& path : config.inputs) {
        std::string extension = fs::path(path).extension().string();
        std::string text;
        if (extension == ".odpm") {
            text = serialize(load_model(path, err).value);
        } else if (extension == ".odps") {
            text = serialize(load_system(path, err).value);
        } else if (extension == ".odpt") {
            text = serialize(load_trace(path, err).value);
        } else {
            throw CliError{"'" + path + "': unknown extension (expected .odpm, .odps or .odpt)"};
        }
        if (config.write_in_place) {
            std::ofstream file(path, std::ios::binary);
            if (!file) throw CliError{"cannot write '" + path + "'"};
            file << text;
        } else {
            out << text;
        }
    }
    return kExitOk;
}

} // namespace

void attach_spans(std::vector<Violation>& violations, const SpanTable& spans,
                  const std::string& fallback_file) {
    static constexpr std::string_view kCategories[] = {
        "template", "action", "type",   "role", "invariant", "static",
        "dynamic",  "rule",   "object", "link", "time",      "system",
    };
    for (Violation& v : violations) {
        if (v.span.known() || v.subjects.empty()) continue;
        for (std::string_view category : kCategories) {
            if (auto span = spans.lookup(category, v.subjects.front())) {
                v.span = *span;
                break;
            }
        }
        if (!v.span.known()) {
            v.span.file = fallback_file;
        }
    }
}

int run(const CliConfig& config, std::ostream& out, std::ostream& err) {
    try {
        switch (config.command) {
        case Command::CheckModel: return run_check_model(config, out, err);
        case Command::CheckSystem: return run_check_system(config, out, err);
        case Command::Conform: return run_conform(config, out, err);
        case Command::Simulate: return run_simulate(config, out, err);
        case Command::VerifyTrace: return run_verify_trace(config, out, err);
        case Command::Fmt: return run_fmt(config, out, err);
        }
        return kExitError;
    } catch (const CliError& e) {
        err << "error: " << e.message << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Model and instance checker for engineering-viewpoint specifications"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    struct SubOptions {
        std::vector<std::string> inputs;
        std::string model;
        std::vector<std::string> model_path;
        std::string format = "text";
        std::vector<std::string> rules;
        std::uint64_t seed = 0;
        bool seed_set = false;
        std::uint64_t steps = 10;
        bool steps_set = false;
        bool paper_literal_c6 = false;
        std::string out_path;
        bool write = false;
    };
    SubOptions opt;

    auto add_common = [&](CLI::App* sub, bool with_model) {
        sub->add_option("inputs", opt.inputs, "input files")->required()->expected(-1);
        sub->add_option("--format", opt.format, "report format (text or json)")
            ->check(CLI::IsMember({"text", "json"}));
        sub->add_option("--rules", opt.rules, "only report these rule ids")->delimiter(',');
        if (with_model) {
            sub->add_option("--model", opt.model, "model file");
            sub->add_option("--model-path", opt.model_path,
                            "directories searched for <model>.odpm");
            sub->add_flag("--paper-literal-c6", opt.paper_literal_c6,
                          "use the literal lower-bound reading of C6");
        }
    };

    CLI::App* check_model = app.add_subcommand("check-model", "check model well-formedness");
    add_common(check_model, false);
    CLI::App* check_system =
        app.add_subcommand("check-system", "check system well-formedness in isolation");
    add_common(check_system, false);
    CLI::App* conform_cmd =
        app.add_subcommand("conform", "check a system against its claimed model");
    add_common(conform_cmd, true);
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run dynamic rules from a system");
    add_common(simulate_cmd, true);
    auto* seed_opt = simulate_cmd->add_option("--seed", opt.seed, "random seed");
    auto* steps_opt = simulate_cmd->add_option("--steps", opt.steps, "maximum step count");
    simulate_cmd->add_option("--out", opt.out_path, "write the trace to this file");
    CLI::App* verify_cmd = app.add_subcommand("verify-trace", "check a recorded trace");
    add_common(verify_cmd, true);
    CLI::App* fmt_cmd = app.add_subcommand("fmt", "canonicalize specification files");
    add_common(fmt_cmd, false);
    fmt_cmd->add_flag("--write", opt.write, "rewrite files in place");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help / --version
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    CliConfig config;
    if (app.got_subcommand(check_model)) config.command = Command::CheckModel;
    else if (app.got_subcommand(check_system)) config.command = Command::CheckSystem;
    else if (app.got_subcommand(conform_cmd)) config.command = Command::Conform;
    else if (app.got_subcommand(simulate_cmd)) config.command = Command::Simulate;
    else if (app.got_subcommand(verify_cmd)) config.command = Command::VerifyTrace;
    else if (app.got_subcommand(fmt_cmd)) config.command = Command::Fmt;

    config.inputs = opt.inputs;
    if (!opt.model.empty()) config.model_path = opt.model;
    config.model_search_path = opt.model_path;
    if (const char* env = std::getenv(kModelPathEnv.data())) {
        std::string value(env);
        std::size_t start = 0;
        while (start <= value.size()) {
            std::size_t colon = value.find(':', start);
            std::string dir = value.substr(start, colon == std::string::npos ? std::string::npos
                                                                             : colon - start);
            if (!dir.empty()) config.model_search_path.push_back(dir);
            if (colon == std::string::npos) break;
            start = colon + 1;
        }
    }
    config.format = opt.format == "json" ? Format::Json : Format::Text;
    if (!opt.rules.empty()) {
        std::set<RuleId> filter;
        for (const std::string& name : opt.rules) {
            auto id = rule_from_name(name);
            if (!id) {
                err << "error: unknown rule id '" << name << "'\n";
                return kExitError;
            }
            filter.insert(*id);
        }
        config.rule_filter = std::move(filter);
    }
    if (seed_opt->count() > 0) config.seed = opt.seed;
    if (steps_opt->count() > 0) config.steps = opt.steps;
    config.paper_literal_c6 = opt.paper_literal_c6;
    if (!opt.out_path.empty()) config.out_path = opt.out_path;
    config.write_in_place = opt.write;

    return run(config, out, err);
}

} // namespace cli
} // namespace odp
