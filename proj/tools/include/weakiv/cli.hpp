#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "weakiv/model.hpp"

namespace weakiv::cli {

inline constexpr int kSchemaVersion = 1;

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitValidation = 2;

struct ModelInput {
  ModelConfig config;
  std::optional<Vector> mu;
  std::optional<Vector> mu_hat;
  std::optional<double> alpha;
};

/// Strict reader for {"schema":1, "k", "beta0", "sigma", "mu"?, "mu_hat"?, "alpha"?}.
/// Throws Error(InvalidInput / DimensionMismatch / NonPositiveDefinite).
ModelInput parse_model(const nlohmann::json& doc);

nlohmann::json model_to_json(const ModelConfig& config, const std::optional<Vector>& mu = std::nullopt,
                             const std::optional<Vector>& mu_hat = std::nullopt);

/// --threads wins over WEAKIV_THREADS; 0 means hardware concurrency.
unsigned resolve_cli_threads(std::optional<int> flag, const char* env_value);

/// Table formatting: 7 significant digits.
std::string format7(double x);

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace weakiv::cli
