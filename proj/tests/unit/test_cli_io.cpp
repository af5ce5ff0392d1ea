#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "popagg/cli.hpp"
#include "popagg/config.hpp"
#include "popagg/csv_io.hpp"
#include "popagg/error.hpp"

using namespace popagg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("popagg_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "popagg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace

TEST_CASE("config defaults") {
  const auto c = parse_config_text("");
  CHECK(c.quad_order == 25);
  CHECK(c.n_draws == 1000);
  CHECK(c.response.field.smoothness == 1.0);
  CHECK(c.response.sigma2_eps == doctest::Approx(0.4));
}

TEST_CASE("config values and fractions") {
  const auto c = parse_config_text("seed = 9\nsigma2_s = 1/9\nresolutions = 1, 5\n# note\n\nmodels = latent\n");
  CHECK(c.seed == 9);
  CHECK(c.response.field.sigma2_s == doctest::Approx(1.0 / 9.0));
  CHECK(c.resolutions == std::vector<double>{1.0, 5.0});
  CHECK(c.models == std::vector<ModelKind>{ModelKind::Latent});
  CHECK(c.is_set("seed"));
  CHECK_FALSE(c.is_set("n_draws"));
}

TEST_CASE("config errors are collected") {
  try {
    parse_config_text("resolution = -1\nsigmaeps = 0.4\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors().size() == 2);
    const std::string all = e.what();
    CHECK(all.find("resolution") != std::string::npos);
    CHECK(all.find("sigma2_eps") != std::string::npos);
  }
  CHECK(suggest_key("sigmaeps") == std::optional<std::string>("sigma2_eps"));
  CHECK_THROWS_AS(parse_config_text("seed = 1\nseed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("", "score"), ConfigError);
}

TEST_CASE("reals round-trip through text") {
  for (double x : {0.1, 1.0 / 3.0, -2.9, 1e-300, 123456.789}) CHECK(std::stod(csv::format_real(x)) == x);
  CHECK(csv::format_real(std::nan("")) == "nan");
}

TEST_CASE("CSV round trips") {
  const Domain d = testing::strip_domain();
  const fs::path dir = scratch("roundtrip");

  csv::write_partition(dir / "partition.csv", d.partition);
  const auto part = csv::read_partition(dir / "partition.csv");
  CHECK(part.n_areas(Level::Admin2) == 3);
  CHECK(csv::area_index(part, Level::Admin2, "E.2") == csv::area_index(d.partition, Level::Admin2, "E.2"));

  csv::write_density(dir / "density.csv", d.fine);
  const auto dens = csv::read_density(dir / "density.csv");
  CHECK(dens.ncols == 4);
  CHECK(dens.nrows == 2);

  csv::write_rural_fraction(dir / "rf.csv", d.partition, d.rural_fraction);
  CHECK(csv::read_rural_fraction(dir / "rf.csv", d.partition) == d.rural_fraction);

  std::vector<ClusterObservation> obs(2);
  obs[0] = {{0.25, 0.5}, true, 25, 4, 0, 3};
  obs[1] = {{2.5, 1.5}, false, 20, 0, 1, 7};
  csv::write_survey(dir / "survey.csv", obs, d.partition);
  const auto back = csv::read_survey(dir / "survey.csv", d.partition);
  REQUIRE(back.size() == 2);
  CHECK(back[1].location.x == 2.5);
  CHECK(back[0].urban);
  CHECK(back[0].y == 4);
  CHECK(back[1].n == 20);

  ArealEnsemble e;
  e.level = Level::Admin2Stratum;
  e.area = 1;
  e.quantity = Quantity::Burden;
  e.model = ModelKind::Latent;
  e.draws = {1.5, std::nan(""), 0.1};
  e.defined = {1, 0, 1};
  csv::write_ensembles(dir / "ens.csv", {e}, d.partition);
  const auto es = csv::read_ensembles(dir / "ens.csv", d.partition);
  REQUIRE(es.size() == 1);
  CHECK(es[0].defined == e.defined);
  CHECK(es[0].draws[2] == 0.1);
  CHECK(es[0].level == Level::Admin2Stratum);

  const std::vector<AreaQuantity> truth{{Level::Admin1, 1, Quantity::Prevalence, 0.25, true},
                                        {Level::Admin2, 0, Quantity::RelativePrevalence, 0.0, false}};
  csv::write_truth(dir / "truth.csv", truth, d.partition);
  const auto t = csv::read_truth(dir / "truth.csv", d.partition);
  REQUIRE(t.size() == 2);
  CHECK(t[0].value == 0.25);
  CHECK_FALSE(t[1].defined);

  std::ofstream(dir / "bad.csv") << "a,b\n1,2\n";
  CHECK_THROWS_AS(csv::read_survey(dir / "bad.csv", d.partition), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("CLI usage errors") {
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"no-such-command"}) == 2);
  CHECK(run_cli({"simulate", "--threads", "-1"}) == 2);
}

TEST_CASE("CLI output is identical across runs and thread counts") {
  const fs::path dir = scratch("determinism");
  std::ofstream(dir / "run.cfg") << "mse_specs = 3\nmse_sims = 2000\n";
  const std::string cfg = (dir / "run.cfg").string();
  REQUIRE(run_cli({"mse-check", "--config", cfg, "--out", (dir / "a").string(), "--threads", "1"}) == 0);
  REQUIRE(run_cli({"mse-check", "--config", cfg, "--out", (dir / "b").string(), "--threads", "2"}) == 0);
  CHECK(slurp(dir / "a" / "mse_report.csv") == slurp(dir / "b" / "mse_report.csv"));
  CHECK_FALSE(slurp(dir / "a" / "mse_report.csv").empty());
  fs::remove_all(dir);
}
