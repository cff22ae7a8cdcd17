#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "intent_explorer/device/device.hpp"
#include "intent_explorer/llm/backend.hpp"
#include "intent_explorer/runner/config.hpp"

namespace intent_explorer::cli {

enum class BackendKind { scripted, replay, http };

struct BackendConfig {
    BackendKind kind = BackendKind::scripted;
    std::filesystem::path rules;       // scripted
    std::filesystem::path transcript;  // replay
    std::string endpoint;              // http
    int timeout_seconds = 120;
};

struct LoadedConfig {
    runner::RunConfig run;
    BackendConfig backend;
};

// Parses a TOML run configuration. Relative paths are resolved against
// `base_dir`. Unknown keys and wrong value types are ValidationErrors;
// TOML syntax errors are ParseErrors.
LoadedConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                          const std::string& origin = "<config>");
LoadedConfig load_config(const std::filesystem::path& path);

std::shared_ptr<llm::Backend> make_backend(const BackendConfig& config);
std::shared_ptr<device::DeviceInterface> make_device(const runner::RunConfig& config);

}  // namespace intent_explorer::cli
