#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "popagg/aggregation.hpp"
#include "popagg/domain.hpp"
#include "popagg/error.hpp"
#include "popagg/experiments.hpp"

namespace popagg {

class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// Flat `key = value` settings. Keys whose default depends on the subcommand are tracked in
// `explicit_keys` and resolved by the *_config builders below.
struct RunConfig {
  std::string subcommand;
  std::filesystem::path base_dir;  // relative paths resolve against the config file's directory
  std::set<std::string> explicit_keys;

  std::uint64_t seed = 1;
  int threads = 0;  // 0: POPAGG_THREADS or 1
  int n_draws = 1000;
  int quad_order = 25;
  int n_replicates = 100;

  // Domain: built-in synthetic country, or CSV inputs.
  std::string domain = "desk";
  DeskDomainOptions desk;
  std::string density_csv, partition_csv, rural_fraction_csv;

  std::string frame_csv, survey_csv, ensemble_csv, truth_csv;

  ResponseParams response{-2.9, -1.0, FieldParams{1.0 / 9.0, 400.0, 1.0}, 0.4};
  FitOptions fit;

  DeskDesign design = default_gridres_design();
  double r_pop = 1.0;
  double r_samp = 1.0;

  double resolution = 5.0;
  std::vector<ModelKind> models{ModelKind::Gridded, ModelKind::SmoothLatent, ModelKind::Latent,
                                ModelKind::Empirical};

  std::vector<double> resolutions{0.5, 2.5, 12.5, 62.5};
  int target_admin1 = 0;
  double truth_lattice_km = 2.5;
  Level score_level = Level::Admin2;
  Quantity score_quantity = Quantity::Prevalence;

  std::vector<double> scenario_beta0{-4.0};
  std::vector<double> scenario_phi{1.0 / 9.0, 1.0};
  std::vector<double> scenario_r_pop{0.2, 5.0};
  std::vector<double> scenario_r_samp{1.0};
  double scenario_range_km = 450.0;
  double scenario_sigma2_eps = 0.45;
  double scenario_beta_urb = -1.0;

  int mse_specs = 20;
  long mse_sims = 100000;

  bool is_set(const std::string& key) const { return explicit_keys.count(key) > 0; }
  std::filesystem::path resolve(const std::string& path) const;
};

std::vector<std::string> config_keys();

// Parses and validates; throws ConfigError listing every problem. A non-empty subcommand also
// checks the keys that subcommand needs.
RunConfig parse_config_text(const std::string& text, const std::string& subcommand = "",
                            const std::filesystem::path& base_dir = {});
RunConfig parse_config(const std::filesystem::path& path, const std::string& subcommand = "");

// Closest known key by edit distance, if any is reasonably close.
std::optional<std::string> suggest_key(const std::string& unknown);

GridResConfig gridres_config(const RunConfig& config);
ScenarioStudyConfig scenario_config(const RunConfig& config);

}  // namespace popagg
