#pragma once

#include <filesystem>
#include <span>

#include <nlohmann/json.hpp>

#include "taxograft/nn.hpp"

namespace taxograft::nn {

// Flat little-endian float64 blob `<stem>.bin` plus `<stem>.json` listing each
// parameter's name, shape and offset. `extra` is stored verbatim.
void save_checkpoint(const std::filesystem::path& stem, std::span<ParameterXd* const> params,
                     const nlohmann::json& extra = nlohmann::json::object());

// Fills the given parameters by name; names and shapes must match exactly.
// Returns the manifest's `extra` object.
nlohmann::json load_checkpoint(const std::filesystem::path& stem, std::span<ParameterXd* const> params);

// Reads only the manifest (e.g. to size parameters before loading).
nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem);

}  // namespace taxograft::nn
