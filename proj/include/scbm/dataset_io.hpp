#pragma once

#include <string>

#include "scbm/datagen.hpp"

namespace scbm::io {

/// "SCDS" container, format version 1.
void save_dataset(const data::ConceptSurvivalDataset& ds, const std::string& path);
data::ConceptSurvivalDataset load_dataset(const std::string& path);

}  // namespace scbm::io
