#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "intent_explorer/cli/config.hpp"
#include "intent_explorer/device/reachability.hpp"
#include "intent_explorer/runner/runner.hpp"
#include "support/sim_helpers.hpp"

using namespace intent_explorer;
using namespace intent_explorer::runner;
using nlohmann::json;

namespace {

std::string data_path(const std::string& rel) { return std::string(INTENT_EXPLORER_DATA_DIR) + "/" + rel; }

cli::LoadedConfig config(const std::string& name) { return cli::load_config(data_path("configs/" + name + ".toml")); }

std::shared_ptr<device::SimulatedDevice> sim(const std::string& model) {
    return std::make_shared<device::SimulatedDevice>(device::load_app_model(intent_explorer::testing::model_path(model)));
}

RunResult run_bundled(const std::string& name, const std::function<void(RunConfig&)>& tweak = {}) {
    auto cfg = config(name);
    if (tweak) tweak(cfg.run);
    Explorer explorer(cfg.run, cli::make_device(cfg.run), cli::make_backend(cfg.backend));
    return explorer.run();
}

// Rules answering the Critic, Observer, Reflector and widget summaries, with
// `actor` prepended.
std::shared_ptr<llm::ScriptedBackend> backend_with(json actor) {
    json rules = json::array();
    for (auto& r : actor) rules.push_back(r);
    rules.push_back({{"role", "strong"}, {"last", {"Review the task execution so far"}},
                     {"response", "Critique of task execution so far: Fine.\nNeed a workaround plan?: No\n"}});
    rules.push_back({{"role", "strong"}, {"last", {"Decide whether the task was accomplished"}},
                     {"response", "Summary of the task result: Done.\nTask done successfully?: Yes\nReflections on the task:\n- ok\n"}});
    rules.push_back({{"role", "fast"}, {"functions", false}, {"response", "Something happened."}});
    rules.push_back({{"role", "fast_short"}, {"response", "A widget."}});
    return std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::from_json({{"rules", rules}}));
}

json call(const std::string& fn, json args = json::object()) {
    json r{{"function", fn}};
    if (!args.empty()) r["arguments"] = args;
    return r;
}

json touch_rid(const std::string& rid) { return call("touch", {{"target_widget_ID", {{"$widget", {{"resource_id", rid}}}}}}); }

RunConfig small_config(int max_tasks = 1) {
    RunConfig c;
    c.persona = {"Jade Green", "", {{"username", "jade.green"}, {"password", "Secret123!"}}, {}};
    c.budget.max_tasks = max_tasks;
    c.deterministic = true;
    c.seed = 7;
    return c;
}

memory::Task task(const std::string& description) { return {description, "done", "", "Jade Green"}; }

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string transcript_text(const RunResult& r) {
    std::string out;
    for (const auto& rec : r.transcript) out += rec.dump() + "\n";
    return out;
}

}  // namespace

TEST(Explorer, ThreeActionTaskHasOneCritique) {
    auto backend = backend_with(json::array({{{"functions", true},
                                              {"responses", {touch_rid("open_settings"), touch_rid("dark_mode_switch"),
                                                             touch_rid("dark_mode_switch"), call("end_task")}}}}));
    Explorer ex(small_config(), sim("notesapp"), backend);
    const auto e = ex.execute_task(task("Toggle dark mode twice"));
    EXPECT_EQ(e.termination, agents::Termination::end_task);
    ASSERT_EQ(e.steps.size(), 3u);
    ASSERT_EQ(e.critiques.size(), 1u);
    EXPECT_EQ(e.critiques[0].after_action, 3);
    EXPECT_EQ(e.steps[0].activity_after, "Settings");
}

TEST(Explorer, TaskWithoutEndStopsAtCap) {
    auto backend = backend_with(json::array({{{"functions", true}, {"response", call("wait")}}}));
    Explorer ex(small_config(), sim("notesapp"), backend);
    const auto e = ex.execute_task(task("Wait forever"));
    EXPECT_EQ(e.termination, agents::Termination::cap);
    EXPECT_EQ(e.steps.size(), 13u);
    EXPECT_EQ(e.critiques.size(), 4u);
}

TEST(Explorer, CapAndCadenceFollowConfiguration) {
    auto cfg = small_config();
    cfg.max_actions_per_task = 5;
    cfg.critique_period = 2;
    auto backend = backend_with(json::array({{{"functions", true}, {"response", call("wait")}}}));
    Explorer ex(cfg, sim("notesapp"), backend);
    const auto e = ex.execute_task(task("Wait"));
    EXPECT_EQ(e.steps.size(), 5u);
    ASSERT_EQ(e.critiques.size(), 2u);
    EXPECT_EQ(e.critiques[1].after_action, 4);
}

TEST(Explorer, InvalidActorAnswersEndWithError) {
    auto backend = backend_with(json::array({{{"functions", true}, {"response", call("touch", {{"target_widget_ID", 999}})}}}));
    Explorer ex(small_config(), sim("notesapp"), backend);
    const auto e = ex.execute_task(task("Touch nothing"));
    EXPECT_EQ(e.termination, agents::Termination::error);
    EXPECT_TRUE(e.steps.empty());
    EXPECT_FALSE(e.detail.empty());
    EXPECT_EQ(ex.tasks().records().size(), 1u);
}

json excursion_rules() {
    return json::array(
        {{{"functions", true}, {"last", {"\"page_name\": \"Main\""}}, {"response", touch_rid("open_help")}},
         {{"functions", true}, {"last", {"\"page_name\": \"Help\""}}, {"absent", {"brought back"}},
          {"response", touch_rid("visit_website")}},
         {{"functions", true}, {"last", {"\"page_name\": \"Help\""}}, {"response", call("end_task")}},
         {{"functions", true}, {"last", {"\"page_name\": \"BrowserPage\""}}, {"response", touch_rid("home_link")}},
         {{"functions", true}, {"last", {"\"page_name\": \"Browser\""}}, {"response", touch_rid("docs_link")}}});
}

TEST(Explorer, ExternalExcursionIsCutShort) {
    auto device = sim("notesapp");
    Explorer ex(small_config(), device, backend_with(excursion_rules()));
    const auto e = ex.execute_task(task("Browse the website"));

    // help, website, then docs, home, docs from inside the browser. Every
    // link pushes a page, so four backs unwind to Help.
    ASSERT_EQ(e.steps.size(), 5u);
    for (int i = 2; i < 5; ++i) EXPECT_TRUE(e.steps[i].left_app);
    EXPECT_EQ(e.steps[4].activity_after, "BrowserPage");
    EXPECT_EQ(e.steps[4].forced_backs, 4);
    EXPECT_EQ(e.steps[4].returned_to, "Help");
    EXPECT_FALSE(e.steps[4].reset_after);
    EXPECT_NE(e.steps[4].observation.find("brought back"), std::string::npos);
    EXPECT_EQ(e.termination, agents::Termination::end_task);
    EXPECT_EQ(device->current_activity(), "Help");
    EXPECT_TRUE(device->is_internal(device->current_activity()));

    const auto script = export_test_script(e, device->package_name());
    std::size_t forced = 0;
    for (const auto& s : script.steps) forced += s.forced ? 1 : 0;
    EXPECT_EQ(forced, 4u);
    EXPECT_EQ(script.steps.size(), 9u);
    EXPECT_EQ(script.expected_terminal_activity, "Help");
    EXPECT_TRUE(replay(script, *sim("notesapp")).passed);
}

TEST(Explorer, ExcursionLimitIsConfigurable) {
    auto cfg = small_config();
    cfg.external_limit = 1;
    Explorer ex(cfg, sim("notesapp"), backend_with(excursion_rules()));
    const auto e = ex.execute_task(task("Browse the website"));
    ASSERT_EQ(e.steps.size(), 3u);
    EXPECT_EQ(e.steps[2].forced_backs, 2);
}

TEST(Explorer, ExcursionFallsBackToReset) {
    auto cfg = small_config();
    cfg.max_forced_backs = 1;
    auto device = sim("notesapp");
    Explorer ex(cfg, device, backend_with(excursion_rules()));
    const auto e = ex.execute_task(task("Browse the website"));
    ASSERT_GE(e.steps.size(), 5u);
    EXPECT_EQ(e.steps[4].forced_backs, 1);
    EXPECT_TRUE(e.steps[4].reset_after);
    EXPECT_EQ(e.steps[4].returned_to, "Main");

    const auto script = export_test_script(e, device->package_name());
    EXPECT_TRUE(script.steps[5].forced);
    EXPECT_TRUE(script.steps[6].reset);
    EXPECT_EQ(script_from_json(json::parse(to_json(script).dump())), script);
    EXPECT_TRUE(replay(script, *sim("notesapp")).passed);
}

TEST(Explorer, BudgetOfOneTaskRunsOneTask) {
    const auto r = run_bundled("notesapp", [](RunConfig& c) {
        c.budget = {};
        c.budget.max_tasks = 1;
    });
    EXPECT_EQ(r.executions.size(), 1u);
    EXPECT_EQ(r.report["tasks"].size(), 1u);
}

TEST(Explorer, ZeroBudgetGivesEmptyReport) {
    const auto r = run_bundled("notesapp", [](RunConfig& c) {
        c.budget = {};
        c.budget.max_tasks = 0;
    });
    EXPECT_TRUE(r.executions.empty());
    EXPECT_EQ(r.total_actions, 0);
    EXPECT_EQ(r.report["statistics"]["task_count"], 0);
}

TEST(Explorer, ActionBudgetIsCheckedBetweenTasks) {
    const auto r = run_bundled("notesapp", [](RunConfig& c) {
        c.budget = {};
        c.budget.max_actions = 7;
    });
    // The first task has 6 actions, the second 5; the run stops after it.
    ASSERT_EQ(r.executions.size(), 2u);
    EXPECT_EQ(r.total_actions, 11);
}

TEST(Explorer, PlanningFailuresAbortAfterThreeInARow) {
    auto backend = std::make_shared<llm::ScriptedBackend>(
        llm::ScriptedBackend::from_json({{"rules", {{{"response", "no template here"}}}}}));
    auto cfg = small_config(10);
    Explorer ex(cfg, sim("notesapp"), backend);
    const auto r = ex.run();
    EXPECT_TRUE(r.executions.empty());
    EXPECT_EQ(r.planning_failures, 3);
    EXPECT_EQ(r.report["statistics"]["planning_failures"], 3);
}

TEST(Explorer, ThirtyTaskRunKeepsCapAndCadence) {
    const auto r = run_bundled("notesapp_cycle");
    ASSERT_EQ(r.executions.size(), 30u);
    int capped = 0;
    for (const auto& e : r.executions) {
        EXPECT_LE(e.steps.size(), 13u);
        EXPECT_EQ(e.critiques.size(), e.steps.size() / 3) << "task " << e.index;
        EXPECT_EQ(e.skipped_critiques, 0);
        capped += e.termination == agents::Termination::cap ? 1 : 0;
    }
    EXPECT_EQ(capped, 10);
}

TEST(Explorer, WorkaroundPlanReachesTheActor) {
    const auto r = run_bundled("notesapp_cycle", [](RunConfig& c) { c.budget.max_tasks = 1; });
    bool seen = false;
    for (const auto& rec : r.transcript) {
        if (!rec.contains("request") || rec["role"] != "fast") continue;
        if (rec["request"]["messages"].back()["content"].get<std::string>().find(
                "Suggested workaround plan: Check whether the theme text changes") != std::string::npos) {
            seen = true;
        }
    }
    EXPECT_TRUE(seen);
}

TEST(Explorer, CoverageMatchesTranscriptAndReachability) {
    for (const char* name : {"notesapp", "notesapp_cycle", "notesapp_gym", "crashapp"}) {
        const auto r = run_bundled(name);
        std::set<std::string> pages;
        for (const auto& rec : r.transcript) {
            if (rec.contains("event") && rec["page_name"].is_string() && rec["internal"].get<bool>()) {
                pages.insert(rec["page_name"].get<std::string>());
            }
        }
        EXPECT_EQ(r.coverage.covered_count(), pages.size()) << name;
        const auto model = device::load_app_model(config(name).run.app_model);
        const auto reach = device::explore_reachable(model);
        for (const auto& a : r.coverage.covered) EXPECT_TRUE(reach.internal.count(a)) << name << ": " << a;

        std::size_t last = 0;
        for (const auto& p : r.timeline) {
            EXPECT_GE(p.covered, last);
            last = p.covered;
        }
    }
}

TEST(Explorer, BundledNotesRunCoversEveryActivity) {
    const auto r = run_bundled("notesapp");
    EXPECT_EQ(r.coverage.covered_count(), 12u);
    EXPECT_LE(r.total_actions, 150);
    EXPECT_TRUE(r.crashes.empty());
}

TEST(Explorer, EveryTaskRecordIsStored) {
    auto cfg = config("notesapp");
    Explorer ex(cfg.run, cli::make_device(cfg.run), cli::make_backend(cfg.backend));
    const auto r = ex.run();
    ASSERT_EQ(ex.tasks().records().size(), r.executions.size());
    for (std::size_t i = 0; i < r.executions.size(); ++i) {
        EXPECT_EQ(ex.tasks().records()[i].description, r.executions[i].task.description);
    }
}

TEST(Explorer, IdenticalRunsProduceIdenticalBytes) {
    const auto a = run_bundled("notesapp");
    const auto b = run_bundled("notesapp");
    EXPECT_EQ(a.report.dump(2), b.report.dump(2));
    EXPECT_EQ(transcript_text(a), transcript_text(b));
}

TEST(Explorer, CrashIsLoggedAndTheRunContinues) {
    const auto r = run_bundled("crashapp");
    ASSERT_EQ(r.crashes.size(), 1u);
    EXPECT_EQ(r.crashes[0].task_index, 1);
    EXPECT_EQ(r.crashes[0].step, 4);
    EXPECT_NE(r.crashes[0].task.find("upload"), std::string::npos);
    ASSERT_EQ(r.executions.size(), 2u);
    EXPECT_EQ(r.executions[0].termination, agents::Termination::crash);
    EXPECT_FALSE(r.executions[0].record.success);
    EXPECT_EQ(r.executions[0].critiques.size(), 1u);
    EXPECT_EQ(r.executions[1].steps.front().activity_before, "Main");
    EXPECT_TRUE(r.executions[1].setup.empty());
}

TEST(Scripts, ExportRoundTrips) {
    const auto r = run_bundled("notesapp");
    const auto dir = std::filesystem::temp_directory_path() / "ie_script_roundtrip";
    for (const auto& e : r.executions) {
        const auto script = export_test_script(e, r.app_package);
        EXPECT_EQ(script_from_json(json::parse(to_json(script).dump())), script);
        save_script(dir / "s.json", script);
        EXPECT_EQ(load_script(dir / "s.json"), script);
        for (const auto& s : script.steps) EXPECT_EQ(s.target.has_value(), gui::requires_target(s.type));
    }
    std::filesystem::remove_all(dir);
}

TEST(Scripts, CreatedNoteScriptEndsOnSave) {
    const auto r = run_bundled("notesapp");
    const auto script = export_test_script(r.executions[1], r.app_package);
    ASSERT_TRUE(script.steps.back().target);
    EXPECT_EQ(script.steps.back().target->content_description, "Save");
    EXPECT_EQ(script.setup.size(), r.executions[0].steps.size());
}

TEST(Scripts, EmptyExecutionCannotBeExported) {
    TaskExecution e;
    EXPECT_THROW(export_test_script(e, "p"), ScriptExportError);
}

TEST(Scripts, BundledScriptsReplayGreen) {
    const auto r = run_bundled("notesapp");
    for (const auto& e : r.executions) {
        const auto v = replay(export_test_script(e, r.app_package), *sim("notesapp"));
        EXPECT_TRUE(v.passed) << e.index << ": " << v.summary();
        EXPECT_TRUE(v.all_steps_executed);
        EXPECT_TRUE(v.terminal_activity_matches);
    }
}

TEST(Scripts, RenamedWidgetBreaksReplayAtItsStep) {
    const auto r = run_bundled("notesapp");
    auto text = read(intent_explorer::testing::model_path("notesapp"));
    const std::string from = "content-desc=\"Save\"", to = "content-desc=\"Store\"";
    text.replace(text.find(from), from.size(), to);
    for (const auto& e : r.executions) {
        const auto script = export_test_script(e, r.app_package);
        std::optional<int> first_save;
        for (std::size_t i = 0; i < script.steps.size() && !first_save; ++i) {
            const auto& t = script.steps[i].target;
            if (t && t->content_description == "Save") first_save = static_cast<int>(i) + 1;
        }
        device::SimulatedDevice mutated(device::load_app_model_from_string(text));
        const auto v = replay(script, mutated);
        if (first_save) {
            EXPECT_FALSE(v.passed);
            ASSERT_TRUE(v.broken_step) << e.index;
            EXPECT_EQ(*v.broken_step, *first_save);
            EXPECT_EQ(v.broken_phase, "steps");
            EXPECT_NE(v.summary().find("broken script at step " + std::to_string(*first_save)), std::string::npos);
        } else {
            bool setup_uses_save = false;
            for (const auto& s : script.setup) setup_uses_save |= s.target && s.target->content_description == "Save";
            EXPECT_EQ(v.passed, !setup_uses_save) << e.index << ": " << v.summary();
        }
    }
}

TEST(Scripts, CrashReplaysAtTheSameStep) {
    const auto r = run_bundled("crashapp");
    const auto script = export_test_script(r.executions[0], r.app_package);
    ASSERT_EQ(script.expected_crash_step, 4);
    const auto v = replay(script, *sim("crashapp"));
    EXPECT_TRUE(v.passed) << v.summary();
    EXPECT_EQ(v.crash_step, 4);
    EXPECT_NE(v.crash_message.find("IllegalStateException"), std::string::npos);
}

TEST(Scripts, AmbiguousSignatureBreaksReplay) {
    const auto model = device::load_app_model_from_string(R"(package: com.example.twins
app_name: Twins
initial: Main
activities:
  - name: Main
    template: |
      <node class="android.widget.LinearLayout" bounds="[0,0][1080,1920]">
        <node class="android.widget.Button" text="Go" bounds="[0,0][500,100]" clickable="true"/>
        <node class="android.widget.Button" text="Go" bounds="[0,200][500,300]" clickable="true"/>
      </node>
transitions: []
)");
    device::SimulatedDevice d(model);
    const auto state = d.observe();
    TestScript s;
    s.app_package = "com.example.twins";
    s.steps = {{gui::ActionType::wait, {}, {}, {}, false},
               {gui::ActionType::touch, gui::compute_signature(*state.find(1), "Main"), {}, {}, false}};
    const auto v = replay(s, d);
    ASSERT_TRUE(v.broken_step);
    EXPECT_EQ(*v.broken_step, 2);
    EXPECT_EQ(v.steps_executed, 1);
    EXPECT_NE(v.broken_reason.find("2 widgets match"), std::string::npos);
}

TEST(Baseline, SameSeedSameReport) {
    auto cfg = config("notesapp");
    const auto a = random_baseline(cfg.run, cli::make_device(cfg.run));
    const auto b = random_baseline(cfg.run, cli::make_device(cfg.run));
    EXPECT_EQ(a.report.dump(), b.report.dump());
    EXPECT_EQ(transcript_text(a), transcript_text(b));
}

TEST(Baseline, ActionCountEqualsBudgetAndNoModelCalls) {
    auto cfg = config("notesapp");
    const auto r = random_baseline(cfg.run, cli::make_device(cfg.run));
    EXPECT_EQ(r.total_actions, 150);
    EXPECT_EQ(r.report["statistics"]["total_actions"], 150);
    for (const auto& rec : r.transcript) EXPECT_FALSE(rec.contains("request"));
    EXPECT_TRUE(r.report["model_usage"].empty());
}

TEST(Baseline, TaskBudgetBecomesActionBudget) {
    auto cfg = config("notesapp");
    cfg.run.budget = {};
    cfg.run.budget.max_tasks = 2;
    const auto r = random_baseline(cfg.run, cli::make_device(cfg.run));
    EXPECT_EQ(r.total_actions, 26);
}

TEST(Baseline, CoverageMatchesTranscript) {
    auto cfg = config("notesapp");
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.run.seed = seed;
        const auto r = random_baseline(cfg.run, cli::make_device(cfg.run));
        std::set<std::string> pages;
        for (const auto& rec : r.transcript) {
            if (rec["page_name"].is_string() && rec["internal"].get<bool>()) pages.insert(rec["page_name"]);
        }
        EXPECT_EQ(r.coverage.covered_count(), pages.size());
    }
}

TEST(Baseline, CannotPassTheLoginGate) {
    auto cfg = config("notesapp");
    const std::set<std::string> gated{"NoteList", "NoteEditor", "NoteView", "Search", "Profile"};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        cfg.run.seed = seed;
        const auto r = random_baseline(cfg.run, cli::make_device(cfg.run));
        for (const auto& a : r.coverage.covered) EXPECT_FALSE(gated.count(a)) << "seed " << seed << " reached " << a;
    }
}

TEST(Report, CredentialsAreRedacted) {
    const auto r = run_bundled("notesapp", [](RunConfig& c) { c.budget.max_tasks = 1; });
    EXPECT_EQ(r.report["persona"]["credentials"]["password"], "***");
    EXPECT_EQ(r.report.dump().find("Secret123!"), std::string::npos);
    const auto plain = run_bundled("notesapp", [](RunConfig& c) {
        c.budget.max_tasks = 1;
        c.redact_credentials = false;
    });
    EXPECT_EQ(plain.report["persona"]["credentials"]["password"], "Secret123!");
}

TEST(Report, StatisticsDescribeTheRun) {
    const auto r = run_bundled("notesapp_cycle");
    const auto& st = r.report["statistics"];
    EXPECT_EQ(st["task_count"], 30);
    EXPECT_EQ(st["unique_tasks"], 3);
    EXPECT_EQ(st["success_count"], 20);
    EXPECT_EQ(st["length_histogram"]["13"], 10);
    EXPECT_EQ(st["length_histogram"]["2"], 20);
    EXPECT_GT(r.report["model_usage"]["strong"]["requests"].get<int>(), 0);
}

TEST(Report, LabelsAreMerged) {
    auto r = run_bundled("notesapp", [](RunConfig& c) { c.budget.max_tasks = 2; });
    merge_labels(r.report, json::parse(R"({"tasks": {"1": {"viable": true, "completed": true},
                                                    "2": {"viable": true, "completed": false}}})"));
    EXPECT_EQ(r.report["tasks"][1]["labels"]["completed"], false);
    EXPECT_EQ(r.report["statistics"]["viable_count"], 2);
    EXPECT_EQ(r.report["statistics"]["completed_count"], 1);
    EXPECT_THROW(merge_labels(r.report, json::parse(R"({"tasks": {"1": {"viable": "yes"}}})")), ParseError);
    EXPECT_THROW(merge_labels(r.report, json::parse("[]")), ParseError);
}

TEST(Report, RunDirectoryLayout) {
    const auto r = run_bundled("notesapp");
    const auto dir = std::filesystem::temp_directory_path() / "ie_run_dir";
    std::filesystem::remove_all(dir);
    write_run_directory(dir, r);
    for (const char* f : {"report.json", "transcript.ndjson", "coverage_timeline.csv", "scripts/task_1.script.json",
                          "scripts/task_10.script.json", "memory/tasks.ndjson"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    const auto csv = read(dir / "coverage_timeline.csv");
    EXPECT_EQ(csv.rfind("timestamp,covered,total\n", 0), 0u);
    EXPECT_EQ(csv, coverage_csv(r.timeline));
    const auto loaded = memory::load_memory(dir / "memory");
    EXPECT_EQ(loaded.tasks.size(), r.executions.size());
    EXPECT_EQ(json::parse(read(dir / "report.json")), json::parse(r.report.dump()));
    std::filesystem::remove_all(dir);
}

TEST(Config, BundledConfigsLoad) {
    for (const char* name : {"notesapp", "notesapp_cycle", "notesapp_gym", "crashapp"}) {
        const auto c = config(name);
        EXPECT_TRUE(std::filesystem::exists(c.run.app_model)) << name;
        EXPECT_TRUE(std::filesystem::exists(c.backend.rules)) << name;
        EXPECT_EQ(c.run.max_actions_per_task, 13);
        EXPECT_EQ(c.run.critique_period, 3);
        EXPECT_EQ(c.run.recent_tasks, 20u);
        EXPECT_EQ(c.run.relevant_tasks, 5u);
    }
}

TEST(Config, UnknownKeysAreRejected) {
    const std::string base = "app_model = \"m\"\n[budget]\nmax_tasks = 1\n[persona]\nname = \"A\"\n";
    EXPECT_NO_THROW(cli::parse_config(base, "/tmp"));
    EXPECT_THROW(cli::parse_config(base + "colour = \"red\"\n", "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config("typo = 1\n" + base, "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config(base + "[agent]\nmax_action = 3\n", "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config(base + "[models.fast]\nname = \"x\"\n", "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config(base + "[models.huge]\nmodel = \"x\"\n", "/tmp"), ValidationError);
}

TEST(Config, InvalidValuesAreRejected) {
    const std::string persona = "[persona]\nname = \"A\"\n";
    EXPECT_THROW(cli::parse_config("[budget]\nmax_tasks = 1\n" + persona, "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config("app_model = \"m\"\n" + persona, "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config("app_model = \"m\"\n[budget]\nmax_tasks = -1\n" + persona, "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config("app_model = 3\n[budget]\nmax_tasks = 1\n" + persona, "/tmp"), ValidationError);
    EXPECT_THROW(cli::parse_config("app_model = \"m\"\n[budget]\nmax_tasks = 1\n[agent]\nmax_actions_per_task = 0\n" + persona, "/tmp"),
                 ValidationError);
    EXPECT_THROW(cli::parse_config("app_model = \"m\n", "/tmp"), ParseError);
}

TEST(Config, DefaultsAndOverrides) {
    const auto c = cli::parse_config(
        "app_model = \"models/a.model\"\nseed = 3\n[budget]\nwall_seconds = 7200\n[agent]\ncritique_period = 4\n"
        "[persona]\nname = \"A\"\ntraits = [\"t\"]\n[persona.credentials]\nuser = \"u\"\n"
        "[models.strong]\nmodel = \"big\"\n[backend]\nkind = \"http\"\nendpoint = \"https://example.com/v1\"\n",
        "/base");
    EXPECT_EQ(c.run.app_model, std::filesystem::path("/base/models/a.model"));
    EXPECT_EQ(c.run.seed, 3u);
    EXPECT_EQ(c.run.budget.wall_seconds, 7200.0);
    EXPECT_EQ(c.run.critique_period, 4);
    EXPECT_EQ(c.run.external_limit, 3);
    EXPECT_EQ(c.run.persona.credentials.at("user"), "u");
    EXPECT_EQ(c.run.roles.at(llm::RoleTag::strong).model, "big");
    EXPECT_EQ(c.run.roles.at(llm::RoleTag::fast).model, "gpt-3.5-turbo-16k-0613");
    EXPECT_EQ(c.backend.kind, cli::BackendKind::http);
}
