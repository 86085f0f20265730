#pragma once

// Per-timestep sample sets and their CSV interchange.
//
// Long-format CSV (the format every command reads and writes):
//
//   # kind=expression knockout_dims=0        <- optional metadata line
//   time,sample_id,<feature 0>,<feature 1>,...
//   0,c17,3,0,...
//
// Expression count matrices can also be read from the triplet form
// `gene,day,cell_id,count`, or from a gene x cell matrix plus a
// `cell_id,day` sidecar.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace snodep {

enum class DataKind { expression, normalized, flux, balance };

DataKind parse_data_kind(const std::string& name);
std::string to_string(DataKind kind);

/// Samples observed at one timestep: conceptually dim x count, stored one
/// contiguous column per sample.
struct SampleMatrix {
  std::size_t dim = 0;
  std::vector<double> data;
  std::vector<std::string> ids;

  std::size_t count() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> sample(std::size_t j) const { return {data.data() + j * dim, dim}; }
  double at(std::size_t feature, std::size_t j) const { return data[j * dim + feature]; }
  void append(std::span<const double> values, std::string id);
};

struct TimeSeriesDataset {
  DataKind kind = DataKind::expression;
  std::vector<double> times;
  std::vector<SampleMatrix> steps;
  std::vector<std::string> features;
  /// Trailing feature columns holding a knockout indicator b^g.
  std::size_t knockout_dims = 0;

  std::size_t num_timesteps() const { return times.size(); }
  std::size_t dim() const { return features.size(); }
  std::size_t total_samples() const;

  /// Throws ValidationError on a broken invariant (empty timestep,
  /// non-ascending times, non-integer counts for expression data, ...).
  void validate() const;
};

TimeSeriesDataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path);

/// Triplet (`gene,day,cell_id,count`) or long-format expression counts.
TimeSeriesDataset load_expression_csv(const std::filesystem::path& path);
/// Gene x cell matrix (`gene,<cell ids>`) plus a `cell_id,day` sidecar.
TimeSeriesDataset load_expression_matrix(const std::filesystem::path& matrix_path,
                                         const std::filesystem::path& day_path);

/// log1p then per-feature standardization with mean and population std taken
/// over the first `window` timesteps (0 = all). Zero-std features map to 0.
TimeSeriesDataset log_normalize_scale(const TimeSeriesDataset& ds, std::size_t window = 0);

/// Restriction to the named features, in the given order.
TimeSeriesDataset select_features(const TimeSeriesDataset& ds, const std::vector<std::string>& names);

/// Knockout indicator suffix of sample j at timestep t as a string key; empty
/// when the dataset has no indicator columns.
std::string sample_group(const TimeSeriesDataset& ds, std::size_t t, std::size_t j);

/// Sample indices at each timestep per group, for the groups present at every
/// timestep (sorted by key). Without indicator columns there is one group.
struct SampleGroups {
  std::vector<std::string> keys;
  std::vector<std::vector<std::vector<std::size_t>>> members;  // [group][timestep] -> indices
};
SampleGroups group_samples(const TimeSeriesDataset& ds);

/// Per-timestep random split of samples into {train, test}, stratified by
/// knockout group; each group keeps at least one sample on each side.
std::pair<TimeSeriesDataset, TimeSeriesDataset> split_samples(const TimeSeriesDataset& ds,
                                                              double test_fraction,
                                                              std::uint64_t seed);

}  // namespace snodep
