#pragma once

#include <string>
#include <utility>

#include "flexenc/config.hpp"
#include "flexenc/model.hpp"

namespace flexenc {

// Checkpoint container: a plain-text manifest (config echo, input dimension,
// layer dims, activation, tie flag, value precision, array directory) followed
// by raw little-endian float32 arrays in manifest order — encoder weights,
// encoder biases, decoder biases, then decoder weights when untied. Parameters
// are stored at float32 both in memory and on disk, so a save/load round trip
// reproduces evaluation outputs bit for bit.
void save_checkpoint(const std::string& path, const FlexModel& model, const ModelConfig& config);

std::pair<FlexModel, ModelConfig> load_checkpoint(const std::string& path);

}  // namespace flexenc
