#include "popagg/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>

#include <CLI11.hpp>

#include "popagg/csv_io.hpp"
#include "popagg/experiments.hpp"
#include "popagg/latent_inference.hpp"
#include "popagg/parallel.hpp"
#include "popagg/response_survey.hpp"
#include "popagg/weights_mse.hpp"

namespace popagg::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<int> threads;
  std::optional<int> replicates;
};

RunConfig load_config(const std::string& sub, const Flags& f) {
  RunConfig c = f.config.empty() ? parse_config_text("", sub) : parse_config(f.config, sub);
  c.subcommand = sub;
  if (f.seed) {
    c.seed = *f.seed;
    c.explicit_keys.insert("seed");
  }
  if (f.replicates) {
    c.n_replicates = *f.replicates;
    c.explicit_keys.insert("n_replicates");
  }
  c.threads = resolve_threads(f.threads ? *f.threads : c.threads);
  return c;
}

void write_summary(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "key,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

void cmd_simulate(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Domain d = load_domain(c);
  const TruthSimulator field(d, c.response.field, c.truth_lattice_km);
  const auto truth = simulate_truth(d, c.design.frame(c.r_pop), c.response, field,
                                    rng::derive(c.seed, rng::Stream::TruthFrame));
  csv::write_density(out / "density.csv", d.fine);
  csv::write_partition(out / "partition.csv", d.partition);
  csv::write_rural_fraction(out / "rural_fraction.csv", d.partition, d.rural_fraction);
  csv::write_frame(out / "frame.csv", truth.frame, d.partition);
  csv::write_truth(out / "truth.csv", truth.truth, d.partition);
  log << "simulated " << truth.frame.eas.size() << " EAs -> " << (out / "frame.csv").string() << '\n';
}

void cmd_survey(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Domain d = load_domain(c);
  const auto frame = csv::read_frame(c.resolve(c.frame_csv), d.partition);
  const auto obs = draw_survey(frame, c.design.survey(c.r_samp), rng::derive(c.seed, rng::Stream::Survey));
  csv::write_survey(out / "survey.csv", obs, d.partition);
  log << "sampled " << obs.size() << " clusters -> " << (out / "survey.csv").string() << '\n';
}

void cmd_aggregate(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Domain d = load_domain(c);
  const auto obs = csv::read_survey(c.resolve(c.survey_csv), d.partition);
  const auto post = laplace_fit(obs, c.response, c.fit);
  const Grid grid = ensure_area_representation(aggregation_grid(d.fine, c.resolution), d.partition, d.fine);
  const auto ens = predictive_ensemble(post, grid, d.partition, c.design.frame(c.r_pop), c.models, c.response,
                                       c.n_draws, rng::derive(c.seed, rng::Stream::PosteriorTheta),
                                       {c.quad_order, c.threads});
  csv::write_ensembles(out / "ensemble.csv", ens.ensembles, d.partition);
  log << "fit converged in " << post.iterations() << " iterations; " << ens.ensembles.size() << " ensembles -> "
      << (out / "ensemble.csv").string() << '\n';
}

void cmd_score(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Domain d = load_domain(c);
  const auto ens = csv::read_ensembles(c.resolve(c.ensemble_csv), d.partition);
  const auto truth = csv::read_truth(c.resolve(c.truth_csv), d.partition);
  const auto reports = score_ensembles(ens, truth);
  csv::write_scores(out / "score.csv", reports);
  log << reports.size() << " score reports -> " << (out / "score.csv").string() << '\n';
}

void cmd_grid_res(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Domain d = load_domain(c);
  const auto result = run_grid_resolution_test(gridres_config(c), d);
  csv::write_gridres_report(out / "gridres_report.csv", result);
  write_summary(out / "run_summary.csv", {{"n_replicates_ok", std::to_string(result.n_replicates)},
                                          {"n_fit_failures", std::to_string(result.n_failed)}});
  log << "grid resolution test: " << result.n_replicates << " replicates (" << result.n_failed
      << " failed fits) in " << result.runtime_minutes << " min\n";
}

void cmd_scenario(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Domain d = load_domain(c);
  const auto result = run_scenario_study(scenario_config(c), d);
  csv::write_scenario_report(out / "scenario_report.csv", result);
  write_summary(out / "run_summary.csv", {{"n_fit_failures", std::to_string(result.n_failed)}});
  log << "scenario study: " << result.rows.size() << " rows (" << result.n_failed << " failed fits) in "
      << result.runtime_minutes << " min\n";
}

void cmd_mse(const RunConfig& c, const fs::path& out, std::ostream& log) {
  auto engine = rng::make_engine(rng::derive(c.seed, rng::Stream::Mse, 0, 1));
  std::vector<csv::MseRow> rows;
  for (int i = 0; i < c.mse_specs; ++i) {
    csv::MseRow r;
    r.spec = random_two_region_spec(engine);
    r.analytic = analytic_mse(r.spec);
    r.common_noise = analytic_mse_common_noise(r.spec);
    r.mc = mc_mse(r.spec, c.mse_sims, rng::derive(c.seed, rng::Stream::Mse, static_cast<std::uint64_t>(i)));
    rows.push_back(r);
  }
  csv::write_mse_report(out / "mse_report.csv", rows);
  log << rows.size() << " specs -> " << (out / "mse_report.csv").string() << '\n';
}

}  // namespace

Domain load_domain(const RunConfig& c) {
  if (c.domain == "csv") {
    const auto partition = csv::read_partition(c.resolve(c.partition_csv));
    return make_domain(csv::read_density(c.resolve(c.density_csv)), partition,
                       csv::read_rural_fraction(c.resolve(c.rural_fraction_csv), partition));
  }
  return make_desk_domain(c.desk);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and areal aggregation of spatial prevalence, risk and burden"};
  app.name("popagg");
  app.require_subcommand(1);
  Flags flags;
  const std::map<std::string, std::string> commands = {
      {"simulate", "Draw a synthetic population frame and its true areal quantities"},
      {"survey", "Draw a stratified cluster survey from a frame CSV"},
      {"aggregate", "Fit the response model to a survey and write predictive ensembles"},
      {"score", "Score an ensemble CSV against a truth CSV"},
      {"grid-res-test", "Run the integration grid resolution test"},
      {"scenario-run", "Run the scenario study of relative scores"},
      {"mse-check", "Compare closed-form and Monte Carlo aggregation-weight MSE"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", flags.threads, "Worker threads (default: POPAGG_THREADS or 1)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--replicates", flags.replicates, "Replicate count override")->check(CLI::NonNegativeNumber);
  }
  if (argc <= 1) {
    out << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const RunConfig config = load_config(sub, flags);
    const fs::path dir(flags.out);
    fs::create_directories(dir);
    if (sub == "simulate") cmd_simulate(config, dir, out);
    else if (sub == "survey") cmd_survey(config, dir, out);
    else if (sub == "aggregate") cmd_aggregate(config, dir, out);
    else if (sub == "score") cmd_score(config, dir, out);
    else if (sub == "grid-res-test") cmd_grid_res(config, dir, out);
    else if (sub == "scenario-run") cmd_scenario(config, dir, out);
    else cmd_mse(config, dir, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace popagg::cli
