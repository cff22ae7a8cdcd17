#include "intent_explorer/gui/widget.hpp"

namespace intent_explorer::gui {

std::string Bounds::to_string() const {
    return "[" + std::to_string(left) + "," + std::to_string(top) + "][" + std::to_string(right) + "," +
           std::to_string(bottom) + "]";
}

namespace {

void collect(const std::vector<Widget>& widgets, std::vector<const Widget*>& out) {
    for (const auto& w : widgets) {
        out.push_back(&w);
        collect(w.children, out);
    }
}

int number(std::vector<Widget>& widgets, int next) {
    for (auto& w : widgets) {
        w.id = next++;
        next = number(w.children, next);
    }
    return next;
}

}  // namespace

std::vector<const Widget*> GuiState::preorder() const {
    std::vector<const Widget*> out;
    collect(roots, out);
    return out;
}

const Widget* GuiState::find(int id) const {
    if (id < 0) return nullptr;
    for (const Widget* w : preorder()) {
        if (w->id == id) return w;
    }
    return nullptr;
}

std::size_t GuiState::widget_count() const { return preorder().size(); }

void assign_ordinals(GuiState& state) { number(state.roots, 0); }

void for_each_widget(const std::vector<Widget>& roots, const std::function<void(const Widget&)>& fn) {
    for (const auto& w : roots) {
        fn(w);
        for_each_widget(w.children, fn);
    }
}

}  // namespace intent_explorer::gui
