#pragma once

#include <json.hpp>

#include "elmc/model.hpp"

namespace elmc {

/// Every TrainConfig field, keyed by its member name; unset width lists are omitted.
nlohmann::json config_to_json(const TrainConfig& cfg);

/// Overlays the keys present in `j` onto `base`; unknown keys are a ValidationError.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace elmc
