#pragma once

#include <string>

#include "spar/ensemble.hpp"

namespace spar {

// Readers accept any 1.x document.
inline constexpr const char* kModelFormatVersion = "1.0";

/// Canonical JSON text of a fitted ensemble: standardization stats, per-model
/// index sets, projection triplets or dense values, coefficients, grids,
/// selection table, chosen cells, seed and config echo. Worker count is not
/// part of the document.
std::string model_to_json(const SparEnsemble& ens);
SparEnsemble model_from_json(const std::string& text);

void save_model(const std::string& path, const SparEnsemble& ens);
SparEnsemble load_model(const std::string& path);

std::string config_to_json(const SparConfig& cfg);
SparConfig config_from_json(const std::string& text);

std::string coefficients_to_json(const Coefficients& c);
Coefficients coefficients_from_json(const std::string& text);

}  // namespace spar
