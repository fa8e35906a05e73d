#pragma once

#include <filesystem>
#include <string>

#include "privkt/net.hpp"

namespace privkt {

inline constexpr int kCheckpointFormatVersion = 1;

// JSON record: {"format_version", "input_dim", "layers": [{"units",
// "activation", "weights": [...], "biases": [...]}]}.
std::string checkpoint_to_json(const DenseNet& net);
DenseNet checkpoint_from_json(const std::string& text);

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_checkpoint(const std::filesystem::path& path);

}  // namespace privkt
