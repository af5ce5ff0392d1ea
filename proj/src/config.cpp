#include "popagg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace popagg {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = "invalid configuration:";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

// Accepts plain numbers and simple fractions such as 1/9.
std::optional<double> to_real(const std::string& s) {
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    auto a = to_real(trim(s.substr(0, slash)));
    auto b = to_real(trim(s.substr(slash + 1)));
    if (!a || !b || *b == 0.0) return std::nullopt;
    return *a / *b;
  }
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> to_int(const std::string& s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  return std::nullopt;
}

using Errors = std::vector<std::string>;
using Setter = std::function<void(RunConfig&, const std::string&, Errors&)>;

struct Bound {
  double lo = -HUGE_VAL;
  double hi = HUGE_VAL;
  bool lo_open = false;
};
inline constexpr double kInf = HUGE_VAL;
Bound at_least(double lo) { return {lo, kInf, false}; }
Bound above(double lo) { return {lo, kInf, true}; }

bool in_bounds(double v, const Bound& b) {
  if (!std::isfinite(v)) return false;
  if (b.lo_open ? !(v > b.lo) : !(v >= b.lo)) return false;
  return v <= b.hi;
}

std::string bound_text(const Bound& b) {
  std::ostringstream os;
  if (std::isfinite(b.lo)) os << (b.lo_open ? "> " : ">= ") << b.lo;
  if (std::isfinite(b.hi)) os << (std::isfinite(b.lo) ? " and <= " : "<= ") << b.hi;
  return os.str();
}

Setter real(double RunConfig::*field, Bound b = {}) {
  return [field, b](RunConfig& c, const std::string& v, Errors& e) {
    const auto x = to_real(v);
    if (!x) e.push_back("expected a number, got '" + v + "'");
    else if (!in_bounds(*x, b)) e.push_back("must be " + bound_text(b) + ", got " + v);
    else c.*field = *x;
  };
}

Setter real_ref(std::function<double&(RunConfig&)> ref, Bound b = {}) {
  return [ref, b](RunConfig& c, const std::string& v, Errors& e) {
    const auto x = to_real(v);
    if (!x) e.push_back("expected a number, got '" + v + "'");
    else if (!in_bounds(*x, b)) e.push_back("must be " + bound_text(b) + ", got " + v);
    else ref(c) = *x;
  };
}

template <class Int>
Setter integer_ref(std::function<Int&(RunConfig&)> ref, Int lo, Int hi = std::numeric_limits<Int>::max()) {
  return [ref, lo, hi](RunConfig& c, const std::string& v, Errors& e) {
    const auto x = to_int<Int>(v);
    if (!x) e.push_back("expected an integer, got '" + v + "'");
    else if (*x < lo || *x > hi) e.push_back("must be >= " + std::to_string(lo) + (hi == std::numeric_limits<Int>::max() ? "" : " and <= " + std::to_string(hi)) + ", got " + v);
    else ref(c) = *x;
  };
}

Setter real_list(std::function<std::vector<double>&(RunConfig&)> ref, Bound b = {}) {
  return [ref, b](RunConfig& c, const std::string& v, Errors& e) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) {
      const auto x = to_real(item);
      if (!x) return e.push_back("expected a list of numbers, got '" + item + "'");
      if (!in_bounds(*x, b)) return e.push_back("every entry must be " + bound_text(b) + ", got " + item);
      out.push_back(*x);
    }
    if (out.empty()) return e.push_back("list is empty");
    ref(c) = std::move(out);
  };
}

Setter count_list(std::function<std::vector<long>&(RunConfig&)> ref) {
  return [ref](RunConfig& c, const std::string& v, Errors& e) {
    std::vector<long> out;
    for (const auto& item : split_list(v)) {
      const auto x = to_int<long>(item);
      if (!x || *x < 0) return e.push_back("expected a list of counts >= 0, got '" + item + "'");
      out.push_back(*x);
    }
    if (out.empty()) return e.push_back("list is empty");
    ref(c) = std::move(out);
  };
}

Setter text(std::string RunConfig::*field) {
  return [field](RunConfig& c, const std::string& v, Errors& e) {
    if (v.empty()) e.push_back("value is empty");
    else c.*field = v;
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["seed"] = integer_ref<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.seed; }, 0);
    t["threads"] = integer_ref<int>([](RunConfig& c) -> int& { return c.threads; }, 0, 1024);
    t["n_draws"] = integer_ref<int>([](RunConfig& c) -> int& { return c.n_draws; }, 2);
    t["quad_order"] = integer_ref<int>([](RunConfig& c) -> int& { return c.quad_order; }, 1, 200);
    t["n_replicates"] = integer_ref<int>([](RunConfig& c) -> int& { return c.n_replicates; }, 0);

    t["domain"] = [](RunConfig& c, const std::string& v, Errors& e) {
      if (v == "desk" || v == "csv") c.domain = v;
      else e.push_back("must be 'desk' or 'csv', got '" + v + "'");
    };
    t["desk_extent_km"] = real_ref([](RunConfig& c) -> double& { return c.desk.extent_km; }, above(0));
    t["desk_fine_resolution"] = real_ref([](RunConfig& c) -> double& { return c.desk.fine_resolution; }, above(0));
    t["desk_capital_km"] = real_ref([](RunConfig& c) -> double& { return c.desk.capital_km; }, above(0));
    t["desk_capital_split"] = integer_ref<int>([](RunConfig& c) -> int& { return c.desk.capital_split; }, 1, 64);
    t["desk_other_split"] = integer_ref<int>([](RunConfig& c) -> int& { return c.desk.other_split; }, 1, 64);
    t["desk_rural_fraction"] =
        real_list([](RunConfig& c) -> std::vector<double>& { return c.desk.rural_fraction; }, {0.0, 1.0, false});
    t["desk_seed"] = integer_ref<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.desk.seed; }, 0);
    t["density_csv"] = text(&RunConfig::density_csv);
    t["partition_csv"] = text(&RunConfig::partition_csv);
    t["rural_fraction_csv"] = text(&RunConfig::rural_fraction_csv);
    t["frame_csv"] = text(&RunConfig::frame_csv);
    t["survey_csv"] = text(&RunConfig::survey_csv);
    t["ensemble_csv"] = text(&RunConfig::ensemble_csv);
    t["truth_csv"] = text(&RunConfig::truth_csv);

    t["beta0"] = real_ref([](RunConfig& c) -> double& { return c.response.beta0; });
    t["beta_urb"] = real_ref([](RunConfig& c) -> double& { return c.response.beta_urb; });
    t["sigma2_s"] = real_ref([](RunConfig& c) -> double& { return c.response.field.sigma2_s; }, at_least(0));
    t["sigma2_eps"] = real_ref([](RunConfig& c) -> double& { return c.response.sigma2_eps; }, at_least(0));
    t["range_km"] = real_ref([](RunConfig& c) -> double& { return c.response.field.range_km; }, above(0));
    t["smoothness"] = real_ref([](RunConfig& c) -> double& { return c.response.field.smoothness; }, above(0));
    t["prior_var_intercept"] = real_ref([](RunConfig& c) -> double& { return c.fit.prior_var_intercept; }, above(0));
    t["prior_var_urban"] = [](RunConfig& c, const std::string& v, Errors& e) {
      if (v == "inf" || v == "flat") {
        c.fit.prior_var_urban = kInf;
        return;
      }
      const auto x = to_real(v);
      if (!x || !(*x > 0)) e.push_back("must be > 0 or 'inf', got '" + v + "'");
      else c.fit.prior_var_urban = *x;
    };
    t["nugget_mode"] = [](RunConfig& c, const std::string& v, Errors& e) {
      if (v == "integrated") c.fit.nugget = NuggetMode::Integrated;
      else if (v == "latent") c.fit.nugget = NuggetMode::Latent;
      else e.push_back("must be 'integrated' or 'latent', got '" + v + "'");
    };
    t["nugget_quad_order"] = integer_ref<int>([](RunConfig& c) -> int& { return c.fit.nugget_quad_order; }, 1, 200);

    t["r_pop"] = real(&RunConfig::r_pop, above(0));
    t["r_samp"] = real(&RunConfig::r_samp, above(0));
    t["eas_urban"] = count_list([](RunConfig& c) -> std::vector<long>& { return c.design.eas_urban; });
    t["eas_rural"] = count_list([](RunConfig& c) -> std::vector<long>& { return c.design.eas_rural; });
    t["households_per_ea"] = real_ref([](RunConfig& c) -> double& { return c.design.households_per_ea; },
                                      at_least(kMinHouseholds));
    t["target_per_ea"] = real_ref([](RunConfig& c) -> double& { return c.design.target_per_ea; }, at_least(0));
    t["fixed_per_ea"] = [](RunConfig& c, const std::string& v, Errors& e) {
      if (auto b = to_bool(v)) c.design.fixed_per_ea = *b;
      else e.push_back("expected true or false, got '" + v + "'");
    };
    t["clusters_urban"] = count_list([](RunConfig& c) -> std::vector<long>& { return c.design.clusters_urban; });
    t["clusters_rural"] = count_list([](RunConfig& c) -> std::vector<long>& { return c.design.clusters_rural; });
    t["households_per_cluster"] =
        integer_ref<int>([](RunConfig& c) -> int& { return c.design.households_per_cluster; }, 1);

    t["resolution"] = real(&RunConfig::resolution, above(0));
    t["models"] = [](RunConfig& c, const std::string& v, Errors& e) {
      std::vector<ModelKind> out;
      for (const auto& item : split_list(v)) {
        try {
          out.push_back(parse_model(item));
        } catch (const ValidationError&) {
          return e.push_back("unknown model '" + item + "' (gridded, smooth_latent, latent, empirical)");
        }
      }
      if (out.empty()) return e.push_back("list is empty");
      c.models = std::move(out);
    };
    t["resolutions"] = real_list([](RunConfig& c) -> std::vector<double>& { return c.resolutions; }, above(0));
    t["target_admin1"] = integer_ref<int>([](RunConfig& c) -> int& { return c.target_admin1; }, 0);
    t["truth_lattice_km"] = real(&RunConfig::truth_lattice_km, above(0));
    t["score_level"] = [](RunConfig& c, const std::string& v, Errors& e) {
      try {
        c.score_level = parse_level(v);
      } catch (const ValidationError&) {
        e.push_back("unknown level '" + v + "' (admin1, admin2, admin2_stratum)");
      }
    };
    t["score_quantity"] = [](RunConfig& c, const std::string& v, Errors& e) {
      try {
        c.score_quantity = parse_quantity(v);
      } catch (const ValidationError&) {
        e.push_back("unknown quantity '" + v + "' (prevalence, burden, relative_prevalence)");
      }
    };

    t["scenario_beta0"] = real_list([](RunConfig& c) -> std::vector<double>& { return c.scenario_beta0; });
    t["scenario_phi"] = real_list([](RunConfig& c) -> std::vector<double>& { return c.scenario_phi; }, at_least(0));
    t["scenario_r_pop"] = real_list([](RunConfig& c) -> std::vector<double>& { return c.scenario_r_pop; }, above(0));
    t["scenario_r_samp"] = real_list([](RunConfig& c) -> std::vector<double>& { return c.scenario_r_samp; }, above(0));
    t["scenario_range_km"] = real(&RunConfig::scenario_range_km, above(0));
    t["scenario_sigma2_eps"] = real(&RunConfig::scenario_sigma2_eps, at_least(0));
    t["scenario_beta_urb"] = real(&RunConfig::scenario_beta_urb);

    t["mse_specs"] = integer_ref<int>([](RunConfig& c) -> int& { return c.mse_specs; }, 1);
    t["mse_sims"] = integer_ref<long>([](RunConfig& c) -> long& { return c.mse_sims; }, 100);
    return t;
  }();
  return table;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string squash(const std::string& s) {
  std::string out;
  for (char ch : s)
    if (ch != '_' && ch != '-') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

void check_required(const RunConfig& c, const std::string& sub, Errors& errors) {
  auto need = [&](const std::string& key, const std::string& value) {
    if (value.empty()) errors.push_back("missing key '" + key + "' (required by " + sub + ")");
  };
  const bool uses_domain = sub == "simulate" || sub == "survey" || sub == "aggregate" || sub == "grid-res-test" ||
                           sub == "scenario-run";
  if (uses_domain && c.domain == "csv") {
    need("density_csv", c.density_csv);
    need("partition_csv", c.partition_csv);
    need("rural_fraction_csv", c.rural_fraction_csv);
  }
  if (sub == "survey") need("frame_csv", c.frame_csv);
  if (sub == "aggregate") need("survey_csv", c.survey_csv);
  if (sub == "score") {
    need("ensemble_csv", c.ensemble_csv);
    need("truth_csv", c.truth_csv);
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : ValidationError(join_errors(errors)), errors_(std::move(errors)) {}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : setters()) out.push_back(k);
  return out;
}

std::optional<std::string> suggest_key(const std::string& unknown) {
  const std::string u = squash(unknown);
  std::optional<std::string> best;
  std::size_t best_d = 0, best_raw = 0;
  for (const auto& [key, setter] : setters()) {
    const std::size_t d = edit_distance(u, squash(key));
    const std::size_t raw = edit_distance(unknown, key);
    if (!best || d < best_d || (d == best_d && raw < best_raw)) {
      best = key;
      best_d = d;
      best_raw = raw;
    }
  }
  if (!best || best_d > std::max<std::size_t>(2, u.size() / 3)) return std::nullopt;
  return best;
}

RunConfig parse_config_text(const std::string& text, const std::string& subcommand,
                            const std::filesystem::path& base_dir) {
  RunConfig c;
  c.subcommand = subcommand;
  c.base_dir = base_dir;
  Errors errors;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) {
      errors.push_back(where + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      std::string msg = where + ": unknown key '" + key + "'";
      if (auto s = suggest_key(key)) msg += " (did you mean '" + *s + "'?)";
      errors.push_back(msg);
      continue;
    }
    if (!c.explicit_keys.insert(key).second) {
      errors.push_back(where + ": duplicate key '" + key + "'");
      continue;
    }
    Errors local;
    it->second(c, value, local);
    for (const auto& e : local) errors.push_back(where + ": " + key + " " + e);
  }

  const std::pair<const char*, std::string RunConfig::*> paths[] = {
      {"density_csv", &RunConfig::density_csv},   {"partition_csv", &RunConfig::partition_csv},
      {"rural_fraction_csv", &RunConfig::rural_fraction_csv}, {"frame_csv", &RunConfig::frame_csv},
      {"survey_csv", &RunConfig::survey_csv},     {"ensemble_csv", &RunConfig::ensemble_csv},
      {"truth_csv", &RunConfig::truth_csv}};
  for (const auto& [key, field] : paths) {
    const std::string& value = c.*field;
    const std::string k(key);
    const bool domain_file = k == "density_csv" || k == "partition_csv" || k == "rural_fraction_csv";
    const bool read = subcommand.empty() || (domain_file && c.domain == "csv") ||
                      (k == "frame_csv" && subcommand == "survey") ||
                      (k == "survey_csv" && subcommand == "aggregate") ||
                      ((k == "ensemble_csv" || k == "truth_csv") && subcommand == "score");
    if (read && c.is_set(key) && !value.empty() && !std::filesystem::exists(c.resolve(value)))
      errors.push_back(std::string(key) + ": file not found: " + c.resolve(value).string());
  }
  if (c.desk.capital_km >= c.desk.extent_km) errors.push_back("desk_capital_km must be < desk_extent_km");
  if (!subcommand.empty()) check_required(c, subcommand, errors);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

RunConfig parse_config(const std::filesystem::path& path, const std::string& subcommand) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), subcommand, path.parent_path());
}

namespace {

DeskDesign merged_design(const RunConfig& c, DeskDesign d) {
  if (c.is_set("eas_urban")) d.eas_urban = c.design.eas_urban;
  if (c.is_set("eas_rural")) d.eas_rural = c.design.eas_rural;
  if (c.is_set("households_per_ea")) d.households_per_ea = c.design.households_per_ea;
  if (c.is_set("target_per_ea")) d.target_per_ea = c.design.target_per_ea;
  if (c.is_set("fixed_per_ea")) d.fixed_per_ea = c.design.fixed_per_ea;
  if (c.is_set("clusters_urban")) d.clusters_urban = c.design.clusters_urban;
  if (c.is_set("clusters_rural")) d.clusters_rural = c.design.clusters_rural;
  if (c.is_set("households_per_cluster")) d.households_per_cluster = c.design.households_per_cluster;
  return d;
}

}  // namespace

GridResConfig gridres_config(const RunConfig& c) {
  GridResConfig g;
  g.truth = c.response;
  g.resolutions = c.resolutions;
  g.target_admin1 = c.target_admin1;
  g.score_level = c.score_level;
  g.score_quantity = c.score_quantity;
  g.models = c.models;
  g.design = merged_design(c, default_gridres_design());
  g.fit = c.fit;
  g.n_replicates = c.n_replicates;
  g.n_draws = c.n_draws;
  g.quad_order = c.quad_order;
  g.truth_lattice_km = c.truth_lattice_km;
  g.seed = c.seed;
  g.threads = c.threads;
  return g;
}

ScenarioStudyConfig scenario_config(const RunConfig& c) {
  ScenarioStudyConfig s;
  for (double beta0 : c.scenario_beta0)
    for (double phi : c.scenario_phi)
      for (double r_pop : c.scenario_r_pop)
        for (double r_samp : c.scenario_r_samp) {
          ScenarioConfig sc;
          sc.beta0 = beta0;
          sc.phi = phi;
          sc.r_pop = r_pop;
          sc.r_samp = r_samp;
          sc.range_km = c.scenario_range_km;
          sc.sigma2_eps = c.scenario_sigma2_eps;
          sc.beta_urb = c.scenario_beta_urb;
          sc.n_replicates = c.is_set("n_replicates") ? c.n_replicates : 25;
          s.scenarios.push_back(sc);
        }
  s.design = merged_design(c, default_scenario_design());
  s.resolution = c.resolution;
  s.fit = c.fit;
  s.n_draws = c.is_set("n_draws") ? c.n_draws : 500;
  s.quad_order = c.quad_order;
  s.truth_lattice_km = c.truth_lattice_km;
  s.seed = c.seed;
  s.threads = c.threads;
  return s;
}

}  // namespace popagg
