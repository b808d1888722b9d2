#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpp/media.hpp"
#include "kpp/speed.hpp"

// Reproducible experiment runner: JSON configs, named presets, the
// validate -> eigen -> pde -> speed pipeline, and manifest-stamped outputs
// (manifest.json, speeds.json, hamiltonian.csv, fronts.csv, eigen.csv).
namespace kpp::runner {

inline constexpr const char* tool_name = "kppspread";
inline constexpr const char* tool_version = "0.1.0";

struct RunConfig {
  std::string preset;      // preset name ("" when the medium is inline only)
  nlohmann::json medium;   // medium description (object with "type")
  std::optional<std::uint64_t> seed;  // overrides the medium's seed

  // pde stage
  double dx = 0.1, dt = 0.02, t_final = 200.0, theta = 0.5;
  double min_right_extent = 0.0;
  int snapshot_count = 41;
  double u0_lo = -1.0, u0_hi = 1.0;

  // eigen stage
  std::string engine = "auto";  // or an explicit speed::Engine name
  double p_min = -4.0, p_max = 4.0, p_step = 0.125;
  std::vector<double> epsilons{0.2, 0.1, 0.05};
  int periodic_nodes = 256;
  double riccati_span = 2000.0, riccati_dx = 0.02;
  double corrector_window = 60.0, corrector_dx = 0.02;
  std::vector<double> R_sequence{10.0, 20.0, 40.0, 80.0};
  double window_width = 50.0;
  int refine_rounds = 3;

  // speed stage
  double delta = 0.05;
  double w_grid_step = 0.005;
  double sandwich_tol_rel = 0.10;
  bool expect_gap = false;

  // output
  std::string out_dir = "out";
  bool write_snapshots = false;

  // stage toggles
  bool stage_validate = true, stage_eigen = true, stage_pde = true, stage_speed = true;
};

// Canonical serialization (keys sorted) and its FNV-1a hash; the hash is
// what manifests and reports record as config provenance.
std::string canonical_dump(const nlohmann::json& j);
std::string config_hash(const nlohmann::json& j);

// Parses and validates a config object; unknown keys, wrong types, missing
// presets and nonpositive tolerances are config errors with a JSON-pointer
// diagnostic. A "preset" key pulls in that preset's defaults first; explicit
// keys override them.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

struct PresetInfo {
  std::string name;
  std::string description;
};

// The shipped presets, one per medium class plus the slow-oscillation pair.
std::vector<PresetInfo> list_presets();
bool is_preset(const std::string& name);
RunConfig preset_config(const std::string& name);
nlohmann::json preset_medium_json(const std::string& name);

// Builds the Medium from cfg.medium (applying cfg.seed to seeded media).
media::Medium build_medium(const RunConfig& cfg);

// Executes the pipeline, writes outputs under cfg.out_dir, returns the
// process exit code: 0 pass, 1 verdict failure, 2 config error, 3 numerical
// failure. config_json is the original document (hashed into the manifest).
int run(const RunConfig& cfg, const nlohmann::json& config_json, bool quiet);

// Maps a sweep parameter name onto the config document (e.g. "seed", "b0",
// "alpha", "t_final", "epsilon"); unknown names are config errors.
void apply_sweep_param(nlohmann::json& config_json, const std::string& param,
                       const nlohmann::json& value);

// Runs the pipeline once per value (worker threads across items, each item
// in its own subdirectory), then writes an aggregate sweep.csv. Returns the
// worst item exit code; an empty value list is a config error.
int sweep(const nlohmann::json& base_config, const std::string& param,
          const std::vector<nlohmann::json>& values, int workers, bool quiet);

}  // namespace kpp::runner
