#pragma once

#include <cstdint>
#include <string>

#include "scbm/models.hpp"

namespace scbm::io {

/// "SCBM" container, format version 1. Stores the model spec, every
/// parameter tensor, the Cox baseline or Beran background, the training log,
/// and provenance (config hash, seed).
void save_checkpoint(const model::TrainedModel& model, const std::string& path,
                     std::uint64_t seed = 0, const std::string& config_hash = "");

model::TrainedModel load_checkpoint(const std::string& path);

}  // namespace scbm::io
