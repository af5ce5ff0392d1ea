#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "popagg/aggregation.hpp"
#include "popagg/domain.hpp"
#include "popagg/experiments.hpp"
#include "popagg/response_survey.hpp"
#include "popagg/sampling_frame.hpp"
#include "popagg/scoring.hpp"
#include "popagg/weights_mse.hpp"

namespace popagg::csv {

// Reals use 17 significant digits; NaN is written as "nan".
std::string format_real(double value);

// Rows of a headered, comma-separated file. Throws ValidationError when the header differs from
// `expected` or a row has the wrong number of fields.
std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path,
                                                 const std::vector<std::string>& expected);

int area_index(const ArealPartition& partition, Level level, const std::string& name);

void write_density(const std::filesystem::path& path, const Grid& fine);
DensityRaster read_density(const std::filesystem::path& path);

void write_partition(const std::filesystem::path& path, const ArealPartition& partition);
ArealPartition read_partition(const std::filesystem::path& path);

void write_rural_fraction(const std::filesystem::path& path, const ArealPartition& partition,
                          const std::vector<double>& rural_fraction);
std::vector<double> read_rural_fraction(const std::filesystem::path& path, const ArealPartition& partition);

void write_frame(const std::filesystem::path& path, const SamplingFrame& frame, const ArealPartition& partition);
SamplingFrame read_frame(const std::filesystem::path& path, const ArealPartition& partition);

void write_survey(const std::filesystem::path& path, const std::vector<ClusterObservation>& obs,
                  const ArealPartition& partition);
std::vector<ClusterObservation> read_survey(const std::filesystem::path& path, const ArealPartition& partition);

void write_ensembles(const std::filesystem::path& path, const std::vector<ArealEnsemble>& ensembles,
                     const ArealPartition& partition);
std::vector<ArealEnsemble> read_ensembles(const std::filesystem::path& path, const ArealPartition& partition);

void write_truth(const std::filesystem::path& path, const std::vector<AreaQuantity>& truth,
                 const ArealPartition& partition);
std::vector<AreaQuantity> read_truth(const std::filesystem::path& path, const ArealPartition& partition);

void write_scores(const std::filesystem::path& path, const std::vector<ScoreReport>& reports);
void write_gridres_report(const std::filesystem::path& path, const GridResResult& result);
void write_scenario_report(const std::filesystem::path& path, const ScenarioResult& result);

struct MseRow {
  TwoRegionSpec spec;
  MseTerms analytic;
  MseTerms common_noise;
  MseEstimate mc;
};
void write_mse_report(const std::filesystem::path& path, const std::vector<MseRow>& rows);

}  // namespace popagg::csv
