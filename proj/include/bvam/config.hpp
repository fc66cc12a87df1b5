#pragma once

#include "bvam/model.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace bvam {

/// Fully resolved run description. Defaults reproduce the published linear-regime setup.
struct RunConfig {
  Regime regime = Regime::linear;
  ModelParameters parameters{};

  // [solver]
  int N = 300;
  double dt = 8e-5;
  bool dealias = false;
  double newton_tol = 1e-10;
  int newton_max_iterations = 50;
  double orbit_tol = 5e-4;
  int orbit_max_iterations = 20;
  double period_guess = 3.0;
  double monodromy_h = 1e-3;
  int monodromy_stride = 1;
  double C_start = -0.5;
  double C_end = -1.5;
  int C_steps = 100;
  double delta_C = -0.01;
  int orbit_max_steps = 200;
  double C_limit = -3.0;
  double t_end = 200.0;
  double tau = 100.0;
  int record_every = 125;
  double seed_transient = 50.0;
  double seed_max_transient = 3000.0;
  double guess_amplitude1 = 0.5;
  double guess_amplitude2 = 0.5;
  int guess_mode1 = 3;
  int guess_mode2 = 3;
  double broadband_threshold = 0.5;
  double bound = 10.0;

  // [output]
  std::string out_dir = "out";

  void validate() const;
};

/// Parses `key = value` text with `#` comments and the sections [reaction],
/// [diffusion], [solver], [output]; `regime` may only appear before the first
/// section. The regime preset is applied first and explicit keys override it,
/// whatever their order. `regime_override` replaces the file's regime (CLI flag).
/// Errors carry the offending line number.
RunConfig parse_config(std::string_view text, std::optional<Regime> regime_override = std::nullopt);

/// Reads and parses a file; a missing file is a ConfigError.
RunConfig load_config(const std::string& path, std::optional<Regime> regime_override = std::nullopt);

/// Output directory default: $BVAM_OUT_DIR when set, otherwise "out".
std::string default_out_dir();

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace bvam
