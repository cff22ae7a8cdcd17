#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "intent_explorer/cli/config.hpp"
#include "intent_explorer/device/app_model.hpp"
#include "intent_explorer/device/reachability.hpp"
#include "intent_explorer/runner/runner.hpp"

namespace ie = intent_explorer;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kUsage = 2;

// Configuration problems map to exit code 2, everything else to 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ie::cli::LoadedConfig load(const std::string& path) {
    try {
        return ie::cli::load_config(path);
    } catch (const ie::ParseError& e) {
        throw UsageError(e.what());
    } catch (const ie::ValidationError& e) {
        throw UsageError(e.what());
    }
}

fs::path output_dir(const ie::runner::RunConfig& config, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (config.output_dir.empty()) throw UsageError("no output directory: set output_dir or pass --output");
    return config.output_dir;
}

void print_summary(const ie::runner::RunResult& r, const fs::path& dir) {
    const auto& stats = r.report["statistics"];
    std::cout << r.mode << " run: " << stats["task_count"].get<int>() << " tasks, " << r.total_actions
              << " actions, " << r.crashes.size() << " crashes, coverage " << r.coverage.covered_count() << "/"
              << r.coverage.total_known << "\n"
              << "wrote " << dir.string() << "\n";
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& rules,
            bool deterministic, const std::string& out) {
    auto cfg = load(config_path);
    if (seed) cfg.run.seed = *seed;
    if (deterministic) cfg.run.deterministic = true;
    if (!rules.empty()) {
        cfg.backend.kind = ie::cli::BackendKind::scripted;
        cfg.backend.rules = rules;
    }
    const auto dir = output_dir(cfg.run, out);
    std::shared_ptr<ie::llm::Backend> backend;
    try {
        backend = ie::cli::make_backend(cfg.backend);
    } catch (const ie::ValidationError& e) {
        throw UsageError(e.what());
    } catch (const ie::ParseError& e) {
        throw UsageError(e.what());
    }
    ie::runner::Explorer explorer(cfg.run, ie::cli::make_device(cfg.run), backend);
    const auto result = explorer.run();
    ie::runner::write_run_directory(dir, result);
    print_summary(result, dir);
    return kOk;
}

int cmd_baseline(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out) {
    auto cfg = load(config_path);
    if (seed) cfg.run.seed = *seed;
    const auto dir = output_dir(cfg.run, out);
    const auto result = ie::runner::random_baseline(cfg.run, ie::cli::make_device(cfg.run));
    ie::runner::write_run_directory(dir, result);
    print_summary(result, dir);
    return kOk;
}

int cmd_replay(const std::string& script_path, const std::string& config_path, bool json) {
    const auto cfg = load(config_path);
    ie::runner::TestScript script;
    try {
        script = ie::runner::load_script(script_path);
    } catch (const ie::ParseError& e) {
        throw UsageError(e.what());
    }
    auto device = ie::cli::make_device(cfg.run);
    if (script.app_package != device->package_name()) {
        throw UsageError("the script targets " + script.app_package + " but the model is " + device->package_name());
    }
    const auto verdict = ie::runner::replay(script, *device);
    if (json) std::cout << ie::runner::to_json(verdict).dump(2) << "\n";
    else std::cout << verdict.summary() << "\n";
    if (!verdict.passed) std::cerr << "replay failed: " << verdict.summary() << "\n";
    return verdict.passed ? kOk : kRunFailure;
}

void print_text_report(const nlohmann::json& r) {
    const auto& app = r["app"];
    const auto& cov = r["coverage"];
    const auto& st = r["statistics"];
    std::cout << app["name"].get<std::string>() << " (" << app["package"].get<std::string>() << "), "
              << r["mode"].get<std::string>() << " run\n";
    std::cout << "tasks: " << st["task_count"] << " (" << st["unique_tasks"] << " unique, " << st["success_count"]
              << " succeeded), actions: " << st["total_actions"] << ", crashes: " << st["crash_count"] << "\n";
    if (st.contains("labeled_tasks")) {
        std::cout << "labels: " << st["labeled_tasks"] << " labeled, " << st["viable_count"] << " viable, "
                  << st["completed_count"] << " completed\n";
    }
    std::cout << "coverage: " << cov["covered_count"] << "/" << cov["total_known"] << " internal activities\n";
    auto join = [](const nlohmann::json& list) {
        std::string s;
        for (const auto& x : list) s += (s.empty() ? "" : ", ") + x.get<std::string>();
        return s.empty() ? std::string("none") : s;
    };
    std::cout << "covered: " << join(cov["covered"]) << "\n";
    std::cout << "uncovered: " << join(cov["uncovered"]) << "\n";
    for (const auto& t : r["tasks"]) {
        std::cout << t["index"] << ". [" << t["termination"].get<std::string>() << ", " << t["actions"].size()
                  << " actions, " << (t["success"].get<bool>() ? "success" : "failure") << "] "
                  << t["description"].get<std::string>() << "\n";
    }
    for (const auto& c : r["crashes"]) {
        std::cout << "crash in task " << c["task"] << " at step " << c["step"] << ": "
                  << c["message"].get<std::string>() << "\n";
    }
    for (const auto& [role, u] : r["model_usage"].items()) {
        std::cout << "model " << role << ": " << u["requests"] << " requests, " << u["prompt_chars"]
                  << " prompt chars, " << u["response_chars"] << " response chars\n";
    }
}

int cmd_report(const std::string& run_dir, const std::string& format, const std::string& labels) {
    const fs::path dir(run_dir);
    if (format == "csv") {
        std::cout << read_file(dir / "coverage_timeline.csv");
        return kOk;
    }
    nlohmann::ordered_json report;
    try {
        report = nlohmann::ordered_json::parse(read_file(dir / "report.json"));
        if (!labels.empty()) ie::runner::merge_labels(report, nlohmann::json::parse(read_file(labels)));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed report or labels: ") + e.what());
    } catch (const ie::ParseError& e) {
        throw UsageError(e.what());
    }
    if (format == "json") std::cout << report.dump(2) << "\n";
    else print_text_report(report);
    return kOk;
}

int cmd_validate_model(const std::string& path) {
    ie::device::AppModel model;
    try {
        model = ie::device::load_app_model(path);
    } catch (const ie::Error& e) {
        throw UsageError(e.what());
    }
    const auto reach = ie::device::explore_reachable(model);
    const auto internal = model.internal_activity_names();
    std::string unreachable;
    for (const auto& name : internal) {
        if (!reach.internal.count(name)) unreachable += (unreachable.empty() ? "" : ", ") + name;
    }
    std::cout << model.app_name << " (" << model.package_name << "): " << internal.size() << " internal activities, "
              << reach.internal.size() << " reachable";
    if (reach.truncated) std::cout << " (search truncated)";
    std::cout << "\n";
    if (!unreachable.empty()) std::cout << "unreachable: " << unreachable << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intent-driven GUI exploration with LLM agents"};
    app.require_subcommand(1);

    std::string config, rules, out, script, run_dir, format = "text", labels, model;
    std::optional<std::uint64_t> seed;
    bool deterministic = false, json = false;

    auto* run = app.add_subcommand("run", "Explore an app with the agent loop");
    run->add_option("--config", config, "Run configuration (TOML)")->required();
    run->add_option("--seed", seed, "Override the configured seed");
    run->add_option("--scripted", rules, "Use the scripted backend with these rules");
    run->add_flag("--deterministic", deterministic, "Use a tick clock instead of the wall clock");
    run->add_option("--output", out, "Run directory (defaults to output_dir)");

    auto* baseline = app.add_subcommand("baseline", "Explore with the random walker");
    baseline->add_option("--config", config, "Run configuration (TOML)")->required();
    baseline->add_option("--seed", seed, "Override the configured seed");
    baseline->add_option("--output", out, "Run directory (defaults to output_dir)");

    auto* replay = app.add_subcommand("replay", "Replay an exported test script");
    replay->add_option("--script", script, "Test script (JSON)")->required();
    replay->add_option("--config", config, "Run configuration naming the app model")->required();
    replay->add_flag("--json", json, "Print the verdict as JSON");

    auto* report = app.add_subcommand("report", "Render a run directory");
    report->add_option("--run-dir", run_dir, "Run directory")->required();
    report->add_option("--format", format, "text, json or csv")->check(CLI::IsMember({"text", "json", "csv"}));
    report->add_option("--labels", labels, "Viability/completion labels to merge (JSON)");

    auto* validate = app.add_subcommand("validate-model", "Check an app model and its reachability");
    validate->add_option("model", model, "App model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*run) return cmd_run(config, seed, rules, deterministic, out);
        if (*baseline) return cmd_baseline(config, seed, out);
        if (*replay) return cmd_replay(script, config, json);
        if (*report) return cmd_report(run_dir, format, labels);
        if (*validate) return cmd_validate_model(model);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRunFailure;
    }
    return kUsage;
}
