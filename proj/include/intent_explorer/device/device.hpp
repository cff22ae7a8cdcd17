#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "intent_explorer/error.hpp"
#include "intent_explorer/gui/action.hpp"
#include "intent_explorer/gui/widget.hpp"

namespace intent_explorer::device {

struct DeviceOutcome {
    std::optional<gui::GuiState> state;  // absent on crash
    bool crashed = false;
    std::string crash_message;
    bool loading = false;
    bool left_app = false;      // current activity is external
    bool back_at_root = false;  // `back` with a single-entry stack, recorded as a no-op
};

class DeviceCrashedError : public Error {
public:
    explicit DeviceCrashedError(const std::string& message) : Error("device crashed: " + message) {}
};

// The action addressed an ordinal that is not on the current screen.
class StaleTargetError : public Error {
public:
    explicit StaleTargetError(int target)
        : Error("stale target: widget " + std::to_string(target) + " is not on the current screen"), target_(target) {}
    int target() const noexcept { return target_; }

private:
    int target_;
};

// Returns the visit count to stamp on a state captured on `activity`.
using VisitCounterFn = std::function<int(const std::string& activity, bool internal)>;
using ClockFn = std::function<std::int64_t()>;

// Callers serialize observe/perform on one instance.
class DeviceInterface {
public:
    virtual ~DeviceInterface() = default;

    virtual gui::GuiState observe() = 0;
    virtual DeviceOutcome perform(const gui::Action& action) = 0;
    virtual void reset() = 0;
    virtual std::string current_activity() const = 0;
    virtual bool is_internal(const std::string& activity) const = 0;

    // Internal activities declared by the app (manifest analogue).
    virtual std::vector<std::string> declared_activities() const = 0;
    virtual std::string app_name() const = 0;
    virtual std::string package_name() const = 0;

    virtual void set_visit_counter(VisitCounterFn counter) = 0;
    virtual void set_clock(ClockFn clock) = 0;
};

}  // namespace intent_explorer::device
