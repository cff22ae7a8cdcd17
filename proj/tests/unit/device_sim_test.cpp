#include <gtest/gtest.h>

#include <random>

#include "intent_explorer/device/app_model.hpp"
#include "intent_explorer/device/expression.hpp"
#include "intent_explorer/device/reachability.hpp"
#include "intent_explorer/device/sim_device.hpp"
#include "intent_explorer/gui/serialize.hpp"
#include "support/sim_helpers.hpp"

using namespace intent_explorer;
using namespace intent_explorer::device;
using gui::Action;
using intent_explorer::testing::find_rid;
using intent_explorer::testing::find_text;
using intent_explorer::testing::log_in;
using intent_explorer::testing::model_path;
using intent_explorer::testing::tap;
using intent_explorer::testing::type;

namespace {

constexpr const char* kMinimal = R"(
package: com.example.min
app_name: Min
initial: A
activities:
  - name: A
    template: |
      <node class="android.widget.Button" resource-id="go" text="Go" bounds="[0,0][100,100]" clickable="true"/>
  - name: B
    template: |
      <node class="android.widget.TextView" text="B" bounds="[0,0][100,100]"/>
transitions:
  - {from: A, on: touch, match: {resource_id: go}, to: B}
)";

}  // namespace

TEST(Expression, EvaluatesOperators) {
    Variables vars{{"n", std::int64_t{3}}, {"s", std::string("abc")}, {"l", StringList{"x", "y"}}, {"b", true}};
    EvalContext ctx{&vars, nullptr, "tapped", "typed"};
    EXPECT_TRUE(Expression::parse("n >= 3 && n < 4").test(ctx));
    EXPECT_TRUE(Expression::parse("s contains 'b' || false").test(ctx));
    EXPECT_TRUE(Expression::parse("l contains \"y\"").test(ctx));
    EXPECT_FALSE(Expression::parse("!b").test(ctx));
    EXPECT_TRUE(Expression::parse("$target.text == 'tapped' && $input != ''").test(ctx));
    EXPECT_TRUE(Expression::parse("l != []").test(ctx));
    EXPECT_THROW(Expression::parse("n == "), ParseError);
    EXPECT_THROW(Expression::parse("n == 'three'").test(ctx), ModelError);
}

TEST(Expression, MutationsAreTyped) {
    Variables vars{{"n", std::int64_t{1}}, {"l", StringList{}}, {"s", std::string("a")}};
    EvalContext ctx{&vars, nullptr, "T", {}};
    Mutation::parse("n += 2").apply(vars, ctx);
    Mutation::parse("l += $target.text").apply(vars, ctx);
    Mutation::parse("s += 'b'").apply(vars, ctx);
    EXPECT_EQ(std::get<std::int64_t>(vars["n"]), 3);
    EXPECT_EQ(std::get<StringList>(vars["l"]), StringList{"T"});
    EXPECT_EQ(std::get<std::string>(vars["s"]), "ab");
    Mutation::parse("l -= 'T'").apply(vars, ctx);
    EXPECT_TRUE(std::get<StringList>(vars["l"]).empty());
    EXPECT_THROW(Mutation::parse("n = 'x'").apply(vars, ctx), ModelError);
}

TEST(AppModel, LoadsMinimalModel) {
    const auto m = load_app_model_from_string(kMinimal);
    EXPECT_EQ(m.package_name, "com.example.min");
    EXPECT_EQ(m.initial_activity, "A");
    EXPECT_EQ(m.internal_activity_names(), (std::vector<std::string>{"A", "B"}));
    SimulatedDevice d(m);
    EXPECT_EQ(d.observe().activity_name, "A");
    EXPECT_EQ(tap(d, "go").state->activity_name, "B");
}

TEST(AppModel, RejectsUndeclaredTarget) {
    std::string bad = kMinimal;
    bad.replace(bad.find("to: B}"), 6, "to: C}");
    try {
        load_app_model_from_string(bad);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("target activity C is not declared"), std::string::npos);
    }
}

TEST(AppModel, RejectsUnknownKeysAndBadYaml) {
    EXPECT_THROW(load_app_model_from_string(std::string(kMinimal) + "colour: red\n"), ParseError);
    EXPECT_THROW(load_app_model_from_string("package: [unclosed\n"), ParseError);
}

TEST(AppModel, BundledModelsLoad) {
    const auto notes = load_app_model(model_path("notesapp"));
    EXPECT_EQ(notes.internal_activity_names().size(), 12u);
    EXPECT_EQ(notes.external_activity_names(), (std::vector<std::string>{"Browser", "BrowserPage"}));
    EXPECT_NO_THROW(load_app_model(model_path("crashapp")));
    EXPECT_NO_THROW(load_app_model(model_path("chatapp")));
}

TEST(SimulatedDevice, LoginRequiresExactCredentials) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    tap(d, "open_login");
    type(d, "username_input", "jade.green");
    type(d, "password_input", "wrong");
    auto out = tap(d, "login_button");
    ASSERT_TRUE(out.state);
    EXPECT_EQ(out.state->activity_name, "Login");
    EXPECT_GE(find_text(*out.state, "Invalid username or password"), 0);

    type(d, "password_input", "Secret123!");
    out = tap(d, "login_button");
    EXPECT_TRUE(out.loading);
    EXPECT_EQ(out.state->activity_name, "Main");
    EXPECT_GE(find_text(*out.state, "Loading..."), 0);
    EXPECT_TRUE(d.perform(Action::wait()).loading);
    out = d.perform(Action::wait());
    EXPECT_FALSE(out.loading);
    EXPECT_GE(find_rid(*out.state, "open_notes"), 0);
    EXPECT_TRUE(std::get<bool>(d.variables().at("logged_in")));
}

TEST(SimulatedDevice, BackDuringLoadingCancels) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    tap(d, "open_login");
    type(d, "username_input", "jade.green");
    type(d, "password_input", "Secret123!");
    tap(d, "login_button");
    const auto out = d.perform(Action::back());
    EXPECT_FALSE(out.loading);
    EXPECT_TRUE(out.back_at_root);
    EXPECT_EQ(out.state->activity_name, "Main");
}

TEST(SimulatedDevice, CreatedNoteAppearsInList) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    log_in(d);
    tap(d, "open_notes");
    tap(d, "new_note");
    auto state = d.observe();
    // Save without a title shows an error and stays put
    const int save = state.roots[0].children.back().id;
    auto out = d.perform(Action::touch(save));
    EXPECT_EQ(out.state->activity_name, "NoteEditor");
    EXPECT_GE(find_text(*out.state, "A title is required"), 0);

    type(d, "note_title", "Gym Workout");
    out = d.perform(Action::touch(d.observe().roots[0].children.back().id));
    ASSERT_EQ(out.state->activity_name, "NoteList");
    EXPECT_GE(find_text(*out.state, "Gym Workout"), 0);

    tap(d, "open_search");
    type(d, "search_input", "Gym");
    out = tap(d, "search_result");
    EXPECT_EQ(out.state->activity_name, "NoteView");
    EXPECT_GE(find_text(*out.state, "Gym Workout"), 0);
}

TEST(SimulatedDevice, UnboundEditableKeepsTypedText) {
    SimulatedDevice d(load_app_model_from_string(R"(
package: p
app_name: P
initial: A
activities:
  - name: A
    template: |
      <node class="android.widget.EditText" resource-id="free" bounds="[0,0][100,100]" editable="true" max-len="5"/>
)"));
    const auto out = d.perform(Action::set_text(0, "abcdefgh"));
    EXPECT_EQ(out.state->roots[0].text, "abcde");
}

TEST(SimulatedDevice, MaxLenTruncatesBoundValue) {
    SimulatedDevice d(load_app_model(model_path("chatapp")));
    tap(d, "create_account");
    type(d, "signup_email", "a.very.long.address@example.com");
    EXPECT_EQ(std::get<std::string>(d.variables().at("email")), "a.very.long.address@");
    type(d, "signup_name", "Jade");
    const auto out = tap(d, "signup_submit");
    EXPECT_EQ(out.state->activity_name, "Inbox");
    EXPECT_GE(find_text(*out.state, "a.very.long.address@"), 0);
}

TEST(SimulatedDevice, CrashIsTerminalUntilReset) {
    SimulatedDevice d(load_app_model(model_path("crashapp")));
    tap(d, "open_gallery");
    d.perform(Action::touch(find_rid(d.observe(), "photo")));
    tap(d, "upload_button");
    const auto out = tap(d, "cancel_upload");
    EXPECT_TRUE(out.crashed);
    EXPECT_FALSE(out.state);
    EXPECT_NE(out.crash_message.find("IllegalStateException"), std::string::npos);
    EXPECT_THROW(d.perform(Action::back()), DeviceCrashedError);
    EXPECT_THROW(d.observe(), DeviceCrashedError);

    d.reset();
    EXPECT_FALSE(d.crashed());
    EXPECT_EQ(d.observe().activity_name, "Main");
}

TEST(SimulatedDevice, WaitCompletesUpload) {
    SimulatedDevice d(load_app_model(model_path("crashapp")));
    tap(d, "open_gallery");
    d.perform(Action::touch(find_rid(d.observe(), "photo")));
    tap(d, "upload_button");
    auto out = d.perform(Action::wait());
    EXPECT_EQ(out.state->activity_name, "UploadDone");
    out = tap(d, "done_button");
    EXPECT_GE(find_text(*out.state, "Uploaded: 1"), 0);
}

TEST(SimulatedDevice, StaleTargetIsRejected) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    EXPECT_THROW(d.perform(Action::touch(999)), StaleTargetError);
    EXPECT_EQ(d.observe().activity_name, "Main");
}

TEST(SimulatedDevice, BackAtRootIsNoOp) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    const auto before = gui::serialize_state(d.observe());
    const auto out = d.perform(Action::back());
    EXPECT_TRUE(out.back_at_root);
    EXPECT_EQ(gui::serialize_state(*out.state), before);
}

TEST(SimulatedDevice, LeavingTheAppIsReported) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    tap(d, "open_help");
    auto out = tap(d, "visit_website");
    EXPECT_TRUE(out.left_app);
    EXPECT_EQ(out.state->package_name, "com.android.browser");
    EXPECT_FALSE(d.is_internal("Browser"));
    out = d.perform(Action::back());
    EXPECT_FALSE(out.left_app);
    EXPECT_EQ(out.state->activity_name, "Help");
}

TEST(SimulatedDevice, VisitCounterAndClockAreInjected) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    d.set_visit_counter([](const std::string& a, bool) { return a == "Main" ? 7 : 1; });
    d.set_clock([] { return std::int64_t{42}; });
    const auto s = d.observe();
    EXPECT_EQ(s.visit_count, 7);
    EXPECT_EQ(s.timestamp_ms, 42);
}

TEST(SimulatedDevice, ResetThenSameSequenceIsIdentical) {
    SimulatedDevice d(load_app_model(model_path("notesapp")));
    std::mt19937 rng(99);
    for (int round = 0; round < 20; ++round) {
        std::vector<Action> sequence;
        std::vector<std::string> first;
        d.reset();
        for (int step = 0; step < 40 && !d.crashed(); ++step) {
            const auto state = d.observe();
            const auto options = gui::enumerate_actions(state);
            Action a = Action::back();
            if (!options.empty() && rng() % 5 != 0) {
                const auto& wa = options[rng() % options.size()];
                a = wa.type == gui::ActionType::set_text ? Action::set_text(wa.target, "jade.green")
                    : wa.type == gui::ActionType::scroll ? Action::scroll(wa.target, gui::ScrollDirection::down)
                                                         : Action{wa.type, wa.target, {}, {}};
            }
            sequence.push_back(a);
            first.push_back(gui::serialize_state(*d.perform(a).state));
        }
        d.reset();
        for (std::size_t i = 0; i < sequence.size(); ++i) {
            ASSERT_EQ(gui::serialize_state(*d.perform(sequence[i]).state), first[i]) << "round " << round;
        }
    }
}

TEST(SimulatedDevice, ResetAfterManyActionsMatchesFreshDevice) {
    const auto model = load_app_model(model_path("notesapp"));
    SimulatedDevice used(model);
    log_in(used);
    tap(used, "open_notes");
    for (int i = 0; i < 30; ++i) {
        tap(used, "new_note");
        type(used, "note_title", "n" + std::to_string(i));
        used.perform(Action::touch(3));
    }
    ASSERT_EQ(used.current_activity(), "NoteList");
    used.reset();
    SimulatedDevice fresh(model);
    EXPECT_EQ(gui::serialize_state(used.observe()), gui::serialize_state(fresh.observe()));
    log_in(used);
    log_in(fresh);
    tap(used, "open_notes");
    tap(fresh, "open_notes");
    EXPECT_EQ(gui::serialize_state(used.observe()), gui::serialize_state(fresh.observe()));
}

TEST(SimulatedDevice, ResetTwiceIsIdempotent) {
    SimulatedDevice d(load_app_model(model_path("crashapp")));
    tap(d, "open_gallery");
    d.reset();
    const auto once = gui::serialize_state(d.observe());
    d.reset();
    EXPECT_EQ(gui::serialize_state(d.observe()), once);
    EXPECT_FALSE(d.crashed());
}

TEST(Reachability, NotesAppReachesAllInternalActivities) {
    const auto model = load_app_model(model_path("notesapp"));
    const auto r = explore_reachable(model);
    EXPECT_FALSE(r.truncated);
    EXPECT_EQ(r.internal.size(), 12u);
    EXPECT_EQ(r.external, (std::set<std::string>{"Browser", "BrowserPage"}));
}

TEST(Reachability, GuardedActivitiesNeedTheirLiterals) {
    const auto model = load_app_model(model_path("chatapp"));
    const auto r = explore_reachable(model);
    EXPECT_EQ(r.internal.size(), model.internal_activity_names().size());
}
