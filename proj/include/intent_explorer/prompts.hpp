#pragma once

#include <map>
#include <string>
#include <vector>

namespace intent_explorer {

// Prompt templates compiled in from data/prompts/<name>.txt. Slots are
// written {{slot}}; every slot in the template must be supplied and every
// supplied slot must appear.
const std::string& prompt_template(const std::string& name);
std::vector<std::string> prompt_names();
std::vector<std::string> prompt_slots(const std::string& name);

std::string render_prompt(const std::string& name, const std::map<std::string, std::string>& slots);

}  // namespace intent_explorer
