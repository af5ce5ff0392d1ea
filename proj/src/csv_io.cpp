#include "popagg/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "popagg/error.hpp"

namespace popagg::csv {

namespace {

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::string& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << header << '\n';
  }
  Writer& field(const std::string& s) {
    sep();
    out_ << s;
    return *this;
  }
  Writer& field(double v) { return field(format_real(v)); }
  Writer& integer(long long v) { return field(std::to_string(v)); }
  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ofstream out_;
  bool first_ = true;
};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

double parse_real(const std::string& s, const std::string& what) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ValidationError("bad number '" + s + "' in " + what);
  return v;
}

long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ValidationError("bad integer '" + s + "' in " + what);
  return v;
}

bool parse_flag(const std::string& s, const std::string& what) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ValidationError("bad 0/1 flag '" + s + "' in " + what);
}

void check_name(const std::string& name) {
  POPAGG_REQUIRE(name.find_first_of(",\n\r") == std::string::npos, "area names may not contain commas or newlines");
}

struct Lattice {
  Point origin;
  double resolution = 0.0;
  int ncols = 0, nrows = 0;
};

Lattice infer_lattice(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& what) {
  auto axis = [&](std::vector<double> v, double& lo, double& step, int& n) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    lo = v.front();
    step = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double d = v[i] - v[i - 1];
      if (step == 0.0 || d < step) step = d;
    }
    n = step > 0.0 ? static_cast<int>(std::lround((v.back() - v.front()) / step)) + 1 : 1;
  };
  POPAGG_REQUIRE(!xs.empty(), what + " has no rows");
  Lattice l;
  double x0 = 0, y0 = 0, sx = 0, sy = 0;
  axis(xs, x0, sx, l.ncols);
  axis(ys, y0, sy, l.nrows);
  l.resolution = std::max(sx, sy);
  POPAGG_REQUIRE(l.resolution > 0.0, what + " needs at least two distinct coordinates");
  POPAGG_REQUIRE(sx == 0.0 || sy == 0.0 || std::abs(sx - sy) <= 1e-9 * l.resolution,
                 what + " must lie on a square lattice");
  l.origin = {x0 - 0.5 * l.resolution, y0 - 0.5 * l.resolution};
  return l;
}

int lattice_index(const Lattice& l, double x, double y, const std::string& what) {
  const double fi = (x - l.origin.x) / l.resolution - 0.5;
  const double fj = (y - l.origin.y) / l.resolution - 0.5;
  const long i = std::lround(fi), j = std::lround(fj);
  POPAGG_REQUIRE(std::abs(fi - static_cast<double>(i)) < 1e-6 && std::abs(fj - static_cast<double>(j)) < 1e-6,
                 what + ": point (" + format_real(x) + ", " + format_real(y) + ") is off the lattice");
  return static_cast<int>(j * l.ncols + i);
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path,
                                                 const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty (header row required)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != join(expected))
    throw ValidationError(path.string() + ": expected header '" + join(expected) + "', got '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      row.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != expected.size())
      throw ValidationError(path.string() + " line " + std::to_string(lineno) + ": expected " +
                            std::to_string(expected.size()) + " fields, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

int area_index(const ArealPartition& partition, Level level, const std::string& name) {
  for (int a = 0; a < partition.n_areas(level); ++a)
    if (partition.area_name(level, a) == name) return a;
  throw ValidationError("unknown " + std::string(level_name(level)) + " area '" + name + "'");
}

void write_density(const std::filesystem::path& path, const Grid& fine) {
  Writer w(path, "x_km,y_km,density");
  for (const auto& c : fine.cells) {
    if (c.lattice < 0) continue;
    w.field(c.center.x).field(c.center.y).field(c.density);
    w.end();
  }
}

DensityRaster read_density(const std::filesystem::path& path) {
  const auto rows = read_table(path, {"x_km", "y_km", "density"});
  const std::string what = path.string();
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(parse_real(r[0], what));
    ys.push_back(parse_real(r[1], what));
  }
  const Lattice l = infer_lattice(xs, ys, what);
  DensityRaster d{l.origin, l.resolution, l.ncols, l.nrows,
                  std::vector<double>(static_cast<std::size_t>(l.ncols) * static_cast<std::size_t>(l.nrows), 0.0)};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = parse_real(rows[i][2], what);
    POPAGG_REQUIRE(v >= 0.0 && std::isfinite(v), what + ": density must be finite and >= 0");
    d.values[static_cast<std::size_t>(lattice_index(l, xs[i], ys[i], what))] = v;
  }
  return d;
}

void write_partition(const std::filesystem::path& path, const ArealPartition& p) {
  for (const auto& a : p.admin1()) check_name(a.name);
  for (const auto& a : p.admin2()) check_name(a.name);
  Writer w(path, "x_km,y_km,admin1,admin2");
  const auto& labels = p.labels();
  for (int j = 0; j < p.raster_rows(); ++j)
    for (int i = 0; i < p.raster_cols(); ++i) {
      const int a2 = labels[static_cast<std::size_t>(j * p.raster_cols() + i)];
      if (a2 < 0) continue;
      w.field(p.raster_origin().x + (i + 0.5) * p.raster_resolution())
          .field(p.raster_origin().y + (j + 0.5) * p.raster_resolution())
          .field(p.admin1()[static_cast<std::size_t>(p.admin1_of(a2))].name)
          .field(p.admin2()[static_cast<std::size_t>(a2)].name);
      w.end();
    }
}

ArealPartition read_partition(const std::filesystem::path& path) {
  const auto rows = read_table(path, {"x_km", "y_km", "admin1", "admin2"});
  const std::string what = path.string();
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(parse_real(r[0], what));
    ys.push_back(parse_real(r[1], what));
  }
  const Lattice l = infer_lattice(xs, ys, what);
  std::vector<AreaInfo> admin1, admin2;
  std::map<std::string, int> a1_index, a2_index;
  std::vector<int> labels(static_cast<std::size_t>(l.ncols) * static_cast<std::size_t>(l.nrows), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& n1 = rows[i][2];
    const auto& n2 = rows[i][3];
    POPAGG_REQUIRE(!n1.empty() && !n2.empty(), what + ": empty area name");
    auto [it1, new1] = a1_index.try_emplace(n1, static_cast<int>(admin1.size()));
    if (new1) admin1.push_back({n1, -1});
    auto [it2, new2] = a2_index.try_emplace(n2, static_cast<int>(admin2.size()));
    if (new2) admin2.push_back({n2, it1->second});
    POPAGG_REQUIRE(admin2[static_cast<std::size_t>(it2->second)].parent == it1->second,
                   what + ": Admin2 area '" + n2 + "' appears under two Admin1 areas");
    labels[static_cast<std::size_t>(lattice_index(l, xs[i], ys[i], what))] = it2->second;
  }
  return ArealPartition(std::move(admin1), std::move(admin2), l.origin, l.resolution, l.ncols, l.nrows,
                        std::move(labels));
}

void write_rural_fraction(const std::filesystem::path& path, const ArealPartition& partition,
                          const std::vector<double>& rural_fraction) {
  POPAGG_REQUIRE(rural_fraction.size() == partition.admin1().size(), "one rural fraction per Admin1 area");
  Writer w(path, "admin1,p_rur");
  for (std::size_t a = 0; a < rural_fraction.size(); ++a) {
    w.field(partition.admin1()[a].name).field(rural_fraction[a]);
    w.end();
  }
}

std::vector<double> read_rural_fraction(const std::filesystem::path& path, const ArealPartition& partition) {
  const auto rows = read_table(path, {"admin1", "p_rur"});
  std::vector<double> out(partition.admin1().size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    const int a = area_index(partition, Level::Admin1, r[0]);
    const double p = parse_real(r[1], path.string());
    POPAGG_REQUIRE(p >= 0.0 && p <= 1.0, path.string() + ": p_rur must be in [0,1]");
    out[static_cast<std::size_t>(a)] = p;
  }
  for (std::size_t a = 0; a < out.size(); ++a)
    POPAGG_REQUIRE(!std::isnan(out[a]), path.string() + ": missing p_rur for '" + partition.admin1()[a].name + "'");
  return out;
}

void write_frame(const std::filesystem::path& path, const SamplingFrame& frame, const ArealPartition& partition) {
  Writer w(path, "ea_id,x_km,y_km,urban,admin1,admin2,h,n,eps,risk,z");
  for (std::size_t i = 0; i < frame.eas.size(); ++i) {
    const auto& ea = frame.eas[i];
    w.integer(static_cast<long long>(i))
        .field(ea.location.x)
        .field(ea.location.y)
        .integer(ea.urban ? 1 : 0)
        .field(partition.area_name(Level::Admin1, ea.admin1))
        .field(partition.area_name(Level::Admin2, ea.admin2))
        .integer(ea.h)
        .integer(ea.n_target)
        .field(ea.eps)
        .field(ea.risk)
        .integer(ea.z);
    w.end();
  }
}

SamplingFrame read_frame(const std::filesystem::path& path, const ArealPartition& partition) {
  const auto rows =
      read_table(path, {"ea_id", "x_km", "y_km", "urban", "admin1", "admin2", "h", "n", "eps", "risk", "z"});
  const std::string what = path.string();
  SamplingFrame f;
  std::map<std::pair<int, bool>, StratumTotals> totals;
  for (const auto& r : rows) {
    EnumerationArea ea;
    ea.location = {parse_real(r[1], what), parse_real(r[2], what)};
    ea.urban = parse_flag(r[3], what);
    ea.admin1 = area_index(partition, Level::Admin1, r[4]);
    ea.admin2 = area_index(partition, Level::Admin2, r[5]);
    ea.h = parse_int(r[6], what);
    ea.n_target = parse_int(r[7], what);
    ea.eps = parse_real(r[8], what);
    ea.risk = parse_real(r[9], what);
    ea.z = parse_int(r[10], what);
    POPAGG_REQUIRE(ea.h >= kMinHouseholds && ea.n_target >= 0 && ea.z >= 0 && ea.z <= ea.n_target,
                   what + ": EA needs h >= 25 and 0 <= z <= n");
    auto& t = totals[{ea.admin1, ea.urban}];
    t.admin1 = ea.admin1;
    t.urban = ea.urban;
    ++t.m;
    t.h += ea.h;
    t.n += ea.n_target;
    f.eas.push_back(ea);
  }
  for (const auto& [k, t] : totals) f.totals.push_back(t);
  return f;
}

void write_survey(const std::filesystem::path& path, const std::vector<ClusterObservation>& obs,
                  const ArealPartition& partition) {
  Writer w(path, "cluster_id,x_km,y_km,urban,admin1,n,y");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    w.integer(static_cast<long long>(i))
        .field(o.location.x)
        .field(o.location.y)
        .integer(o.urban ? 1 : 0)
        .field(o.admin1 >= 0 ? partition.area_name(Level::Admin1, o.admin1) : std::string())
        .integer(o.n)
        .integer(o.y);
    w.end();
  }
}

std::vector<ClusterObservation> read_survey(const std::filesystem::path& path, const ArealPartition& partition) {
  const auto rows = read_table(path, {"cluster_id", "x_km", "y_km", "urban", "admin1", "n", "y"});
  const std::string what = path.string();
  std::vector<ClusterObservation> out;
  for (const auto& r : rows) {
    ClusterObservation o;
    o.location = {parse_real(r[1], what), parse_real(r[2], what)};
    o.urban = parse_flag(r[3], what);
    o.admin1 = r[4].empty() ? -1 : area_index(partition, Level::Admin1, r[4]);
    o.n = static_cast<int>(parse_int(r[5], what));
    o.y = static_cast<int>(parse_int(r[6], what));
    POPAGG_REQUIRE(o.n >= 0 && o.y >= 0 && o.y <= o.n, what + ": cluster needs 0 <= y <= n");
    out.push_back(o);
  }
  return out;
}

void write_ensembles(const std::filesystem::path& path, const std::vector<ArealEnsemble>& ensembles,
                     const ArealPartition& partition) {
  Writer w(path, "level,area_id,quantity,model,draw,value,defined");
  for (const auto& e : ensembles) {
    const std::string level(level_name(e.level)), area = partition.area_name(e.level, e.area);
    const std::string quantity(quantity_name(e.quantity)), model(model_name(e.model));
    for (std::size_t d = 0; d < e.draws.size(); ++d) {
      w.field(level).field(area).field(quantity).field(model).integer(static_cast<long long>(d)).field(e.draws[d]).integer(
          e.defined[d] ? 1 : 0);
      w.end();
    }
  }
}

std::vector<ArealEnsemble> read_ensembles(const std::filesystem::path& path, const ArealPartition& partition) {
  const auto rows = read_table(path, {"level", "area_id", "quantity", "model", "draw", "value", "defined"});
  const std::string what = path.string();
  std::vector<ArealEnsemble> out;
  std::map<std::tuple<int, int, int, int>, std::size_t> index;
  for (const auto& r : rows) {
    const Level level = parse_level(r[0]);
    const int area = area_index(partition, level, r[1]);
    const Quantity q = parse_quantity(r[2]);
    const ModelKind m = parse_model(r[3]);
    const auto key = std::make_tuple(static_cast<int>(m), static_cast<int>(level), area, static_cast<int>(q));
    auto [it, fresh] = index.try_emplace(key, out.size());
    if (fresh) out.push_back({level, area, q, m, {}, {}});
    auto& e = out[it->second];
    const auto d = parse_int(r[4], what);
    POPAGG_REQUIRE(d == static_cast<long long>(e.draws.size()), what + ": draws must be listed in order from 0");
    e.draws.push_back(parse_real(r[5], what));
    e.defined.push_back(parse_flag(r[6], what) ? 1 : 0);
  }
  return out;
}

void write_truth(const std::filesystem::path& path, const std::vector<AreaQuantity>& truth,
                 const ArealPartition& partition) {
  Writer w(path, "level,area_id,quantity,value,defined");
  for (const auto& t : truth) {
    w.field(std::string(level_name(t.level)))
        .field(partition.area_name(t.level, t.area))
        .field(std::string(quantity_name(t.quantity)))
        .field(t.defined ? t.value : std::numeric_limits<double>::quiet_NaN())
        .integer(t.defined ? 1 : 0);
    w.end();
  }
}

std::vector<AreaQuantity> read_truth(const std::filesystem::path& path, const ArealPartition& partition) {
  const auto rows = read_table(path, {"level", "area_id", "quantity", "value", "defined"});
  std::vector<AreaQuantity> out;
  for (const auto& r : rows) {
    AreaQuantity t;
    t.level = parse_level(r[0]);
    t.area = area_index(partition, t.level, r[1]);
    t.quantity = parse_quantity(r[2]);
    t.value = parse_real(r[3], path.string());
    t.defined = parse_flag(r[4], path.string());
    out.push_back(t);
  }
  return out;
}

void write_scores(const std::filesystem::path& path, const std::vector<ScoreReport>& reports) {
  Writer w(path, "level,quantity,model,metric,value,n_areas");
  for (const auto& r : reports) {
    const std::pair<const char*, double> metrics[] = {
        {"crps", r.crps},
        {"interval_score_95", r.interval_score_95},
        {"fuzzy_coverage_95", r.fuzzy_coverage_95},
        {"fuzzy_ci_width_95_type7", r.fuzzy_ci_width_95},
        {"interval_score_50", r.interval_score_50},
        {"fuzzy_coverage_50", r.fuzzy_coverage_50},
        {"fuzzy_ci_width_50_type7", r.fuzzy_ci_width_50},
        {"n_areas_excluded", static_cast<double>(r.n_areas_excluded)},
    };
    for (const auto& [name, value] : metrics) {
      w.field(std::string(level_name(r.level)))
          .field(std::string(quantity_name(r.quantity)))
          .field(std::string(model_name(r.model)))
          .field(name)
          .field(value)
          .integer(r.n_areas_scored);
      w.end();
    }
  }
}

void write_gridres_report(const std::filesystem::path& path, const GridResResult& result) {
  Writer w(path, "model,resolution,metric,value");
  for (const auto& r : result.rows) {
    w.field(std::string(model_name(r.model))).field(r.resolution).field(r.metric).field(r.value);
    w.end();
  }
}

void write_scenario_report(const std::filesystem::path& path, const ScenarioResult& result) {
  Writer w(path, "beta0,phi,r_pop,r_samp,level,quantity,metric,relative_pct,n_reps");
  for (const auto& r : result.rows) {
    w.field(r.scenario.beta0)
        .field(r.scenario.phi)
        .field(r.scenario.r_pop)
        .field(r.scenario.r_samp)
        .field(std::string(level_name(r.level)))
        .field(std::string(quantity_name(r.quantity)))
        .field(r.metric)
        .field(r.relative_pct)
        .integer(r.n_reps);
    w.end();
  }
}

void write_mse_report(const std::filesystem::path& path, const std::vector<MseRow>& rows) {
  Writer w(path,
           "spec_id,mu1,mu2,q1,q2,qhat1,qhat2,sigma2,bias,analytic_mse,common_noise_mse,mc_mse,mc_se,n_sims");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    w.integer(static_cast<long long>(i))
        .field(r.spec.mu1)
        .field(r.spec.mu2)
        .field(r.spec.q1)
        .field(r.spec.q2)
        .field(r.spec.qhat1)
        .field(r.spec.qhat2)
        .field(r.spec.sigma2)
        .field(r.analytic.bias)
        .field(r.analytic.mse)
        .field(r.common_noise.mse)
        .field(r.mc.mse)
        .field(r.mc.se)
        .integer(r.mc.n_sims);
    w.end();
  }
}

}  // namespace popagg::csv
