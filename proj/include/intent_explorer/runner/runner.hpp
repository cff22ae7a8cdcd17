#pragma once

#include <memory>
#include <string>
#include <vector>

#include "intent_explorer/agents/agents.hpp"
#include "intent_explorer/device/device.hpp"
#include "intent_explorer/llm/backend.hpp"
#include "intent_explorer/memory/stores.hpp"
#include "intent_explorer/runner/config.hpp"
#include "intent_explorer/runner/script.hpp"

namespace intent_explorer::runner {

struct ExecutedStep {
    gui::Action action;
    std::string description;
    ScriptStep script_step;
    std::string activity_before;
    std::string activity_after;  // empty after a crash
    std::string observation;
    bool left_app = false;
    int forced_backs = 0;  // back presses the runner added to return to the app
    bool reset_after = false;
    std::string returned_to;  // activity after the forced return, if any
};

struct CritiqueEntry {
    int after_action = 0;
    memory::Critique critique;
};

struct TaskExecution {
    int index = 0;  // 1-based
    memory::Task task;
    std::vector<ExecutedStep> steps;
    std::vector<CritiqueEntry> critiques;
    int skipped_critiques = 0;
    agents::Termination termination = agents::Termination::end_task;
    std::string detail;
    memory::TaskRecord record;
    std::vector<ScriptStep> setup;
};

struct CrashEntry {
    int task_index = 0;  // 0 for the random baseline
    std::string task;
    int step = 0;
    std::string message;
};

struct CoveragePoint {
    std::int64_t timestamp = 0;
    std::size_t covered = 0;
    std::size_t total = 0;
};

struct RunResult {
    std::string mode;  // "agent" or "baseline"
    std::vector<TaskExecution> executions;
    std::vector<CrashEntry> crashes;
    std::vector<CoveragePoint> timeline;
    memory::Coverage coverage;
    int total_actions = 0;
    int planning_failures = 0;
    std::map<llm::RoleTag, llm::RoleUsage> usage;
    std::vector<nlohmann::ordered_json> transcript;
    std::vector<memory::TaskRecord> task_records;
    memory::WidgetStore widgets;
    memory::VisitCounter visits;
    std::string app_package;
    nlohmann::ordered_json report;
};

// Plans, executes and reflects on tasks until the budget is spent.
class Explorer {
public:
    Explorer(RunConfig config, std::shared_ptr<device::DeviceInterface> device, std::shared_ptr<llm::Backend> backend);
    ~Explorer();

    RunResult run();

    // Runs one task from the current page; used by run() and by tests.
    TaskExecution execute_task(const memory::Task& task);

    const memory::TaskStore& tasks() const noexcept;
    const memory::WidgetStore& widgets() const noexcept;
    const memory::VisitCounter& visits() const noexcept;
    const agents::Planner& planner() const noexcept;
    llm::Gateway& gateway() noexcept;

private:
    struct State;
    std::unique_ptr<State> s_;
};

// Uniform sampling over the page's actions plus back, with the same coverage
// accounting and report layout as the agent and no model calls. Needs an
// action budget (or a task budget, read as tasks x max actions per task).
RunResult random_baseline(const RunConfig& config, std::shared_ptr<device::DeviceInterface> device);

TestScript export_test_script(const TaskExecution& execution, const std::string& app_package);

nlohmann::ordered_json build_report(const RunResult& result, const RunConfig& config,
                                    const device::DeviceInterface& device);

// Adds viability/completion labels ({"tasks": {"<k>": {"viable": b, "completed": b}}})
// to the report's tasks and statistics.
void merge_labels(nlohmann::ordered_json& report, const nlohmann::json& labels);

// report.json, transcript.ndjson, coverage_timeline.csv, scripts/ and memory/.
void write_run_directory(const std::filesystem::path& dir, const RunResult& result);

std::string coverage_csv(const std::vector<CoveragePoint>& timeline);

}  // namespace intent_explorer::runner
