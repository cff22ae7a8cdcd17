#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "intent_explorer/device/app_model.hpp"
#include "intent_explorer/device/device.hpp"

namespace intent_explorer::device {

// Deterministic device backed by an AppModel. Rules are tried in model
// order; the first one whose source, action, matcher and guard all agree is
// applied.
class SimulatedDevice final : public DeviceInterface {
public:
    struct Frame {
        std::string activity;
        std::map<std::string, std::string> text_overrides;  // slot -> typed text

        bool operator==(const Frame&) const = default;
    };

    struct Snapshot {
        std::vector<Frame> stack;
        Variables variables;
        int loading_ticks = 0;
        bool crashed = false;
        std::string crash_message;
        std::int64_t ticks = 0;
    };

    explicit SimulatedDevice(std::shared_ptr<const AppModel> model);
    explicit SimulatedDevice(AppModel model);

    gui::GuiState observe() override;
    DeviceOutcome perform(const gui::Action& action) override;
    void reset() override;
    std::string current_activity() const override;
    bool is_internal(const std::string& activity) const override;
    std::vector<std::string> declared_activities() const override;
    std::string app_name() const override;
    std::string package_name() const override;
    void set_visit_counter(VisitCounterFn counter) override;
    void set_clock(ClockFn clock) override;

    const AppModel& model() const noexcept { return *model_; }
    const Variables& variables() const noexcept { return snapshot_.variables; }
    bool crashed() const noexcept { return snapshot_.crashed; }
    bool loading() const noexcept { return snapshot_.loading_ticks > 0; }
    std::size_t stack_depth() const noexcept { return snapshot_.stack.size(); }

    Snapshot snapshot() const { return snapshot_; }
    void restore(const Snapshot& snapshot) { snapshot_ = snapshot; }

    // Per-ordinal metadata of the rendered screen.
    struct RenderedSlot {
        std::string slot;
        std::optional<std::string> bind;
        std::optional<int> max_len;
    };

    struct Rendered {
        gui::GuiState state;
        std::vector<RenderedSlot> slots;  // indexed by ordinal
    };

    Rendered render() const;

private:
    std::shared_ptr<const AppModel> model_;
    Snapshot snapshot_;
    VisitCounterFn visit_counter_;
    ClockFn clock_;

    const TransitionRule* find_rule(const gui::Action& action, const gui::Widget* target,
                                    const EvalContext& ctx) const;
    DeviceOutcome outcome();
};

}  // namespace intent_explorer::device
