#include "intent_explorer/prompts.hpp"

#include <set>
#include <utility>

#include "intent_explorer/error.hpp"

namespace intent_explorer {

namespace {

const std::map<std::string, std::string>& table() {
    static const std::map<std::string, std::string> templates{
#include "intent_explorer/prompt_templates.inc"
    };
    return templates;
}

std::vector<std::string> slots_of(const std::string& text) {
    std::vector<std::string> out;
    for (auto pos = text.find("{{"); pos != std::string::npos; pos = text.find("{{", pos + 2)) {
        const auto close = text.find("}}", pos);
        if (close == std::string::npos) break;
        out.push_back(text.substr(pos + 2, close - pos - 2));
    }
    return out;
}

}  // namespace

const std::string& prompt_template(const std::string& name) {
    const auto it = table().find(name);
    if (it == table().end()) throw ValidationError("unknown prompt template " + name);
    return it->second;
}

std::vector<std::string> prompt_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : table()) out.push_back(name);
    return out;
}

std::vector<std::string> prompt_slots(const std::string& name) { return slots_of(prompt_template(name)); }

std::string render_prompt(const std::string& name, const std::map<std::string, std::string>& slots) {
    const std::string& text = prompt_template(name);
    std::set<std::string> used;
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text, pos);
            break;
        }
        const auto close = text.find("}}", open);
        if (close == std::string::npos) throw ValidationError("unterminated slot in prompt " + name);
        out.append(text, pos, open - pos);
        const std::string slot = text.substr(open + 2, close - open - 2);
        const auto it = slots.find(slot);
        if (it == slots.end()) throw ValidationError("prompt " + name + " needs slot " + slot);
        out += it->second;
        used.insert(slot);
        pos = close + 2;
    }
    for (const auto& [slot, _] : slots) {
        if (!used.count(slot)) throw ValidationError("prompt " + name + " has no slot " + slot);
    }
    // Files end with a newline; prompts do not.
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

}  // namespace intent_explorer
