#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "intent_explorer/agents/agents.hpp"
#include "intent_explorer/gui/hierarchy.hpp"
#include "support/sim_helpers.hpp"

using namespace intent_explorer;
using namespace intent_explorer::agents;
using memory::Task;
using memory::TaskRecord;
using memory::WorkingMemory;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(INTENT_EXPLORER_FIXTURE_DIR) + "/" + name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<llm::RoleTag, llm::ModelRole> roles() {
    std::map<llm::RoleTag, llm::ModelRole> out;
    for (auto t : {llm::RoleTag::fast, llm::RoleTag::fast_short, llm::RoleTag::strong}) out[t] = {t, "m", 16000, 0.0};
    return out;
}

struct Harness {
    std::shared_ptr<llm::ScriptedBackend> backend;
    llm::Gateway gateway;
    std::vector<nlohmann::ordered_json> records;

    explicit Harness(const std::string& rules)
        : backend(std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::from_json(nlohmann::json::parse(rules)))),
          gateway(backend, roles()) {
        gateway.set_transcript_sink([this](const nlohmann::ordered_json& r) { records.push_back(r); });
    }
    std::size_t requests() const { return records.size(); }
    std::string prompt(std::size_t i) const {
        return records.at(i)["request"]["messages"].back()["content"].get<std::string>();
    }
};

// Wraps a text into a rule document answering every request with it.
std::string answer_all(const std::string& text) {
    return nlohmann::json{{"rules", {{{"response", text}}}}}.dump();
}

PersonaProfile jade() { return {"Jade Green", "", {{"username", "jade.green"}, {"password", "Secret123!"}}, {}}; }

TaskRecord record(int i, bool success = true) {
    TaskRecord r;
    r.description = "past task " + std::to_string(i);
    r.summary = "summary " + std::to_string(i) + ".";
    r.success = success;
    r.start_state_key = "page_name: Main " + std::to_string(i);
    r.reflections = {"reflection " + std::to_string(i)};
    return r;
}

memory::Coverage coverage(std::vector<std::string> covered, std::vector<std::string> uncovered) {
    memory::Coverage c;
    for (const auto& a : covered) c.counts[a] = 1;
    c.covered = std::move(covered);
    c.uncovered = std::move(uncovered);
    c.total_known = c.covered.size() + c.uncovered.size();
    return c;
}

std::size_t occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = haystack.find(needle); p != std::string::npos; p = haystack.find(needle, p + needle.size())) ++n;
    return n;
}

gui::GuiState note_editor() {
    auto s = gui::parse_hierarchy(read_fixture("note_editor.xml"));
    return s;
}

}  // namespace

TEST(Persona, DefaultGoalAndValidation) {
    EXPECT_EQ(jade().effective_goal(),
              "Jade Green's ultimate goal is to visit as many pages as possible and try their core functionalities.");
    EXPECT_THROW((PersonaProfile{"", "goal", {}, {}}.validate()), ValidationError);
    EXPECT_NE(jade().profile_text().find("- password: Secret123!"), std::string::npos);
}

TEST(Planner, ParsesFlashcardAnswer) {
    Harness h(answer_all(read_fixture("planner_answer.txt")));
    Planner planner(h.gateway, jade(), "AnkiDroid");
    const Task task = planner.plan({{}, {}, coverage({}, {"NoteEditor"}), "DeckPicker", "{}", 13});
    EXPECT_EQ(task.description,
              "Create a new flashcard in the \"My Deck\" deck with the question \"What is the capital city of "
              "France?\" and the answer \"Paris\".");
    EXPECT_EQ(task.end_condition,
              "The task is known to be completed when a new flashcard with [...truncated...] is successfully added "
              "to the \"My Deck\" deck.");
    EXPECT_EQ(task.persona, "Jade Green");
    EXPECT_EQ(h.records[0]["request"]["model"], "m");
    EXPECT_EQ(h.records[0]["role"], "strong");
}

TEST(Planner, FreshAppMentionsStart) {
    Harness h(answer_all(read_fixture("planner_answer.txt")));
    Planner planner(h.gateway, jade(), "Notes");
    planner.plan({{}, {}, coverage({}, {"Main"}), "Main", "{}", 13});
    EXPECT_NE(planner.last_prompt().find("Jade Green started Notes."), std::string::npos);
    EXPECT_NE(planner.last_prompt().find("Jade Green's ultimate goal"), std::string::npos);
}

TEST(Planner, PromptCompleteness) {
    Harness h(answer_all("unused"));
    Planner planner(h.gateway, jade(), "Notes");
    std::vector<TaskRecord> recent;
    for (int i = 5; i < 25; ++i) recent.push_back(record(i));
    std::vector<TaskRecord> relevant{record(1), record(2), record(3), record(4), record(30, false)};
    const std::vector<std::string> uncovered{"NoteList", "NoteEditor", "Search", "Profile", "NoteView"};
    const auto prompt = planner.build_prompt({recent, relevant, coverage({"Main", "Login"}, uncovered), "Main", "{}", 13});
    EXPECT_EQ(occurrences(prompt, "- Task: past task "), 20u);
    EXPECT_EQ(occurrences(prompt, "* Past task: "), 5u);
    for (const auto& a : uncovered) EXPECT_NE(prompt.find(a), std::string::npos) << a;
    EXPECT_NE(prompt.find("Covered activities (visit count): Main (1), Login (1)"), std::string::npos);
    EXPECT_NE(prompt.find("reflection 30"), std::string::npos);
    EXPECT_NE(prompt.find("Outcome: failed. summary 30."), std::string::npos);
    EXPECT_EQ(prompt.find("started Notes"), std::string::npos);
    EXPECT_NE(prompt.find("feasible within 13 actions"), std::string::npos);

    // Fixed section order.
    std::size_t last = 0;
    for (const char* marker : {"Name: Jade Green", "ultimate goal", "Uncovered activities", "most recent tasks",
                               "Knowledge from past tasks", "The current page", "Diversity", "Answer in exactly"}) {
        const auto pos = prompt.find(marker);
        ASSERT_NE(pos, std::string::npos) << marker;
        if (last) EXPECT_GT(pos, last) << marker;
        last = pos;
    }
}

TEST(Planner, RepromptsOnceThenFails) {
    Harness ok(R"({"rules": [{"name": "bad", "times": 1, "response": "I think Jade should add a note."},
                             {"name": "good", "response": )" +
               nlohmann::json(read_fixture("planner_answer.txt")).dump() + "}]}");
    Planner planner(ok.gateway, jade(), "AnkiDroid");
    EXPECT_NO_THROW(planner.plan({{}, {}, {}, "Main", "{}", 13}));
    EXPECT_EQ(ok.requests(), 2u);
    EXPECT_NE(ok.prompt(1).find("did not follow the required format"), std::string::npos);

    Harness bad(answer_all(read_fixture("planner_answer_truncated.txt")));
    Planner failing(bad.gateway, jade(), "AnkiDroid");
    EXPECT_THROW(failing.plan({{}, {}, {}, "Main", "{}", 13}), PlanningError);
    EXPECT_EQ(bad.requests(), 2u);
}

TEST(Actor, DescribesActionsInPlainWords) {
    const auto s = note_editor();
    EXPECT_EQ(describe_action(gui::Action::set_text(9, "Paris"), s), "Fill a textfield that has content_desc \"Back\" with \"Paris\"");
    EXPECT_EQ(describe_action(gui::Action::touch(11), s), "Touch a TextView that has content_desc \"Save\"");
    EXPECT_EQ(describe_action(gui::Action::touch(7), s), "Touch a Spinner that has resource_id \"note_deck_spinner\"");
    EXPECT_EQ(describe_action(gui::Action::back(), s), "Press the back button");
}

TEST(Actor, FunctionMenuFollowsCapabilities) {
    const auto fns = Actor::functions(note_editor());
    std::vector<std::string> names;
    for (const auto& f : fns) names.push_back(f.name);
    EXPECT_EQ(names, (std::vector<std::string>{"touch", "long_touch", "set_text", "scroll", "wait", "back", "end_task"}));
    EXPECT_EQ(fns[2].parameters[0].allowed_integers, (std::set<int>{8, 9}));
    EXPECT_EQ(fns[0].parameters[0].allowed_integers.count(10), 0u);  // zero area
    EXPECT_TRUE(fns[4].parameters.empty());
}

TEST(Actor, SelectsSaveOnNoteEditor) {
    Harness h(R"JSON({"rules": [{"functions": true, "last": ["\"page_name\": \"NoteEditor\""],
       "response": {"function": "touch", "arguments": {"target_widget_ID": {"$widget": {"content_description": "Save"}}}}}]})JSON");
    Actor actor(h.gateway, jade(), "AnkiDroid");
    WorkingMemory wm;
    wm.register_task({"Create a new flashcard", "The card is saved.", "", "Jade Green"});
    const auto state = note_editor();
    wm.add_action(gui::Action::set_text(8, "What is the capital city of France?"),
                  describe_action(gui::Action::set_text(8, "What is the capital city of France?"), state));
    wm.add_observation({"the Front field was filled.", {}, gui::Action::set_text(8, "x")});
    wm.add_action(gui::Action::set_text(9, "Paris"), describe_action(gui::Action::set_text(9, "Paris"), state));
    wm.add_observation({"the textfield that had the content_desc \"Back\" was filled with \"Paris\".", {}, gui::Action::set_text(9, "Paris")});

    const auto action = actor.select(wm, state, gui::serialize_state(state));
    EXPECT_EQ(action, gui::Action::touch(11));
    EXPECT_EQ(h.records[0]["role"], "fast");

    const auto thread = actor.thread(wm, gui::serialize_state(state));
    ASSERT_EQ(thread.size(), 6u);
    EXPECT_EQ(thread[0].role, llm::MessageRole::system);
    EXPECT_EQ(thread[1].content.rfind("My name is Jade Green and I am using an application named AnkiDroid", 0), 0u);
    EXPECT_NE(thread[1].content.find("The task is complete when: The card is saved."), std::string::npos);
    EXPECT_EQ(thread[2].content, "Fill a textfield that has content_desc \"Front\" with \"What is the capital city of France?\"");
    EXPECT_EQ(thread[3].content, "I performed the action, and as a result, the Front field was filled. What should be the next action?");
    EXPECT_EQ(thread[4].role, llm::MessageRole::assistant);
    EXPECT_EQ(thread[5].content.rfind("I performed the action, and as a result, the textfield that had the content_desc "
                                      "\"Back\" was filled with \"Paris\". This time, I'll give you the full content",
                                      0),
              0u);
}

TEST(Actor, FirstTurnCarriesStateAndTask) {
    Harness h(R"({"rules": [{"functions": true, "response": {"function": "wait"}}]})");
    Actor actor(h.gateway, jade(), "Notes");
    WorkingMemory wm;
    wm.register_task({"Log in", "The main page greets Jade.", "", "Jade Green"});
    const auto state = note_editor();
    EXPECT_EQ(actor.select(wm, state, "STATE"), gui::Action::wait());
    const auto thread = actor.thread(wm, "STATE");
    ASSERT_EQ(thread.size(), 2u);
    EXPECT_NE(thread[1].content.find("What should be the first action?\nThis time, I'll give you the full content of "
                                     "the current page as follows:\nSTATE\nSelect the next action"),
              std::string::npos);
    EXPECT_NE(thread[0].content.find("Secret123!"), std::string::npos);
}

TEST(Actor, WaitsOnLoadingScreen) {
    Harness h(R"({"rules": [{"functions": true, "last": ["Loading..."], "response": {"function": "wait"}},
                            {"functions": true, "response": {"function": "back"}}]})");
    Actor actor(h.gateway, jade(), "Notes");
    device::SimulatedDevice d(device::load_app_model(intent_explorer::testing::model_path("notesapp")));
    intent_explorer::testing::tap(d, "open_login");
    intent_explorer::testing::type(d, "username_input", "jade.green");
    intent_explorer::testing::type(d, "password_input", "Secret123!");
    intent_explorer::testing::tap(d, "login_button");
    WorkingMemory wm;
    wm.register_task({"Log in", "Main greets Jade.", "", "Jade Green"});
    const auto loading = d.observe();
    EXPECT_EQ(actor.select(wm, loading, gui::serialize_state(loading)), gui::Action::wait());
    d.perform(gui::Action::wait());
    d.perform(gui::Action::wait());
    const auto done = d.observe();
    EXPECT_EQ(actor.select(wm, done, gui::serialize_state(done)), gui::Action::back());
}

TEST(Actor, InvalidTargetsExhaustRetries) {
    Harness h(R"({"rules": [{"functions": true, "response": {"function": "set_text", "arguments": {"target_widget_ID": 11, "text": "x"}}}]})");
    Actor actor(h.gateway, jade(), "AnkiDroid");
    WorkingMemory wm;
    wm.register_task({"t", "e", "", "Jade Green"});
    const auto state = note_editor();
    EXPECT_THROW(actor.select(wm, state, gui::serialize_state(state)), ActorError);
    EXPECT_EQ(h.requests(), 4u);
}

TEST(Actor, AdversarialBackendNeverYieldsInvalidActions) {
    const auto state = note_editor();
    const std::vector<std::string> names{"touch", "long_touch", "set_text", "scroll", "wait", "back", "end_task", "fly"};
    std::mt19937 rng(11);
    int accepted = 0;
    for (int trial = 0; trial < 200; ++trial) {
        nlohmann::json responses = nlohmann::json::array();
        for (int i = 0; i < 4; ++i) {
            nlohmann::json args = nlohmann::json::object();
            if (rng() % 4) args["target_widget_ID"] = static_cast<int>(rng() % 14) - 1;
            if (rng() % 2) args["text"] = "abc";
            if (rng() % 2) args["direction"] = (rng() % 3 == 0) ? "sideways" : "down";
            responses.push_back({{"function", names[rng() % names.size()]}, {"arguments", args}});
        }
        Harness h(nlohmann::json{{"rules", {{{"functions", true}, {"responses", responses}}}}}.dump());
        Actor actor(h.gateway, jade(), "AnkiDroid");
        WorkingMemory wm;
        wm.register_task({"t", "e", "", "Jade Green"});
        try {
            const auto a = actor.select(wm, state, gui::serialize_state(state));
            a.validate();
            if (gui::requires_target(a.type)) {
                const auto* w = state.find(*a.target);
                ASSERT_NE(w, nullptr);
                EXPECT_TRUE(gui::widget_supports(*w, a.type));
                EXPECT_TRUE(w->bounds.has_area());
            }
            ++accepted;
        } catch (const ActorError&) {
        }
    }
    EXPECT_GT(accepted, 20);
}

TEST(Critic, FlashcardCritiqueNeedsWorkaround) {
    Harness h(answer_all(read_fixture("critique_answer.txt")));
    Critic critic(h.gateway, jade(), "AnkiDroid");
    WorkingMemory wm;
    wm.register_task({"Create a card", "saved", "", "Jade Green"});
    const auto c = critic.criticise(wm, "{}");
    ASSERT_TRUE(c);
    EXPECT_TRUE(c->needs_workaround);
    ASSERT_TRUE(c->plan);
    EXPECT_NE(c->plan->find("the correct deck (\"My Deck\") is selected"), std::string::npos);
    EXPECT_EQ(h.records[0]["role"], "strong");
}

TEST(Critic, FlagAndPlanAgree) {
    WorkingMemory wm;
    wm.register_task({"t", "e", "", "Jade Green"});
    {
        Harness h(answer_all("Critique of task execution so far: On track.\nNeed a workaround plan?: No\n"
                             "Workaround plan for Jade Green: none needed"));
        const auto c = Critic(h.gateway, jade(), "Notes").criticise(wm, "{}");
        ASSERT_TRUE(c);
        EXPECT_FALSE(c->needs_workaround);
        EXPECT_FALSE(c->plan);
    }
    {
        Harness h(answer_all("Critique of task execution so far: Lost.\nNeed a workaround plan?: Yes"));
        EXPECT_FALSE(Critic(h.gateway, jade(), "Notes").criticise(wm, "{}"));
    }
    {
        Harness h(answer_all("looks fine to me"));
        EXPECT_FALSE(Critic(h.gateway, jade(), "Notes").criticise(wm, "{}"));
    }
}

TEST(Critic, CritiqueReachesNextActorPrompt) {
    Harness h(R"({"rules": [{"functions": true, "response": {"function": "back"}}]})");
    Actor actor(h.gateway, jade(), "Notes");
    WorkingMemory wm;
    wm.register_task({"t", "e", "", "Jade Green"});
    const auto state = note_editor();
    for (int i = 0; i < 3; ++i) {
        wm.add_action(gui::Action::wait(), "Wait for the page to load");
        wm.add_observation({memory::kNoChangeSummary, {}, gui::Action::wait()});
    }
    wm.add_critique({"Three waits achieved nothing.", true, "Open the editor first."});
    actor.select(wm, state, "STATE");
    EXPECT_NE(h.prompt(0).find("A reviewer looked at my progress so far: Three waits achieved nothing.\n"
                               "Suggested workaround plan: Open the editor first."),
              std::string::npos);
}

TEST(Observer, EmptyDiffSkipsTheModel) {
    Harness h(answer_all("x"));
    Observer observer(h.gateway);
    const auto o = observer.observe(gui::Action::wait(), "Wait", {});
    EXPECT_EQ(o.summary, "The action produced no visible change.");
    EXPECT_EQ(h.requests(), 0u);
    EXPECT_EQ(observer.model_calls(), 0u);
}

TEST(Observer, SummarizesFilledField) {
    Harness h(R"JSON({"rules": [{"role": "fast", "regex": "\\+ +\"text\": \"([^\"]+)\"",
       "response": "The textfield that had the content_desc \"Back\" was filled with \"$1\". Nothing else changed. Extra."}]})JSON");
    Observer observer(h.gateway);
    const auto before = gui::serialize_state(gui::parse_hierarchy(read_fixture("note_editor.xml")));
    const auto after = gui::serialize_state(gui::parse_hierarchy(read_fixture("note_editor_back_filled.xml")));
    const auto diff = gui::diff_states(before, after);
    const auto o = observer.observe(gui::Action::set_text(9, "Paris"), "Fill", diff);
    EXPECT_EQ(o.summary, "The textfield that had the content_desc \"Back\" was filled with \"Paris\". Nothing else changed.");
    EXPECT_EQ(o.diff.added, diff.added);
}

TEST(Observer, CrashAndFallback) {
    Harness h(R"({"rules": [{"response": ""}]})");
    Observer observer(h.gateway);
    const auto crash = observer.observe(gui::Action::touch(1), "Touch", gui::crash_diff("{}", "NullPointerException"));
    EXPECT_NE(crash.summary.find("terminated"), std::string::npos);
    EXPECT_EQ(h.requests(), 0u);

    gui::StateDiff d;
    d.added = {"+a", "+b"};
    d.removed = {"-c"};
    EXPECT_EQ(observer.observe(gui::Action::touch(1), "Touch", d).summary, "The page changed: 2 lines were added and 1 removed.");
}

TEST(Reflector, FlashcardReflectionStored) {
    Harness h(answer_all(read_fixture("reflection_answer.txt")));
    Reflector reflector(h.gateway, jade(), "AnkiDroid");
    memory::TaskStore store(std::make_shared<memory::HashedNgramEmbedder>());
    WorkingMemory wm;
    wm.register_task({"Create a new flashcard", "saved", "", "Jade Green"});
    const auto r = reflector.reflect({&wm, Termination::end_task, "", "{}", "page_name: NoteEditor", 13}, store);
    EXPECT_TRUE(r.success);
    ASSERT_EQ(r.reflections.size(), 3u);
    EXPECT_NE(r.reflections[1].find("provides a dropdown field"), std::string::npos);
    EXPECT_EQ(store.records().size(), 1u);
    const auto got = store.retrieve("page_name: NoteEditor", 1);
    EXPECT_EQ(got[0].description, "Create a new flashcard");
    EXPECT_NEAR(memory::cosine(got[0].embedding, memory::HashedNgramEmbedder().embed("page_name: NoteEditor")), 1.0, 1e-12);
    EXPECT_NE(h.prompt(0).find("Jade Green's ultimate goal"), std::string::npos);
    EXPECT_NE(h.prompt(0).find("the end_task action was chosen"), std::string::npos);
}

TEST(Reflector, CrashForcesFailure) {
    Harness h(answer_all(read_fixture("reflection_answer.txt")));
    memory::TaskStore store(std::make_shared<memory::HashedNgramEmbedder>());
    WorkingMemory wm;
    wm.register_task({"Cancel the upload", "gone", "", "Jade Green"});
    const auto r = Reflector(h.gateway, jade(), "Notes").reflect({&wm, Termination::crash, "boom", "", "k", 13}, store);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.reflections.size(), 3u);
    EXPECT_NE(h.prompt(0).find("the app crashed (boom)"), std::string::npos);
}

TEST(Reflector, ParseFailureRecordsReflectionFailed) {
    Harness h(answer_all("It went well."));
    memory::TaskStore store(std::make_shared<memory::HashedNgramEmbedder>());
    WorkingMemory wm;
    wm.register_task({"t", "e", "", "Jade Green"});
    const auto r = Reflector(h.gateway, jade(), "Notes").reflect({&wm, Termination::cap, "", "{}", "k", 13}, store);
    EXPECT_EQ(r.summary, "reflection failed");
    EXPECT_FALSE(r.success);
    EXPECT_EQ(h.requests(), 2u);
    EXPECT_EQ(store.records().size(), 1u);
}

TEST(History, TextListsEventsInOrder) {
    WorkingMemory wm;
    EXPECT_EQ(history_text(wm), "(no actions yet)");
    wm.register_task({"t", "e", "", "J"});
    wm.add_action(gui::Action::back(), "Press the back button");
    wm.add_observation({"Went to Main.", {}, gui::Action::back()});
    wm.add_critique({"Fine.", true, "Go on."});
    EXPECT_EQ(history_text(wm),
              "1. Action: Press the back button\n   Observation: Went to Main.\n   Critique: Fine.\n   Workaround plan: Go on.");
}
