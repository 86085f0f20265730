#include "snodep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "snodep/error.hpp"

namespace snodep {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& token, const std::filesystem::path& path, std::size_t row,
                    const std::string& column) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || !std::isfinite(v)) {
    throw ValidationError(path.string() + ": row " + std::to_string(row) + ": non-numeric " +
                          column + " '" + token + "'");
  }
  return v;
}

double parse_count(const std::string& token, const std::filesystem::path& path, std::size_t row) {
  const double v = parse_number(token, path, row, "count");
  if (v < 0.0 || std::floor(v) != v) {
    throw ValidationError(path.string() + ": row " + std::to_string(row) +
                          ": count must be a non-negative integer, got '" + token + "'");
  }
  return v;
}

bool is_nonneg_integer(double v) { return v >= 0.0 && std::floor(v) == v; }

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

// Assembles a dataset from per-time groups keyed by time value.
TimeSeriesDataset from_groups(DataKind kind, std::vector<std::string> features,
                              std::map<double, SampleMatrix> groups) {
  TimeSeriesDataset ds;
  ds.kind = kind;
  ds.features = std::move(features);
  for (auto& [t, m] : groups) {
    ds.times.push_back(t);
    ds.steps.push_back(std::move(m));
  }
  return ds;
}

}  // namespace

DataKind parse_data_kind(const std::string& name) {
  if (name == "expression") return DataKind::expression;
  if (name == "normalized") return DataKind::normalized;
  if (name == "flux") return DataKind::flux;
  if (name == "balance") return DataKind::balance;
  throw ValidationError("unknown data kind '" + name +
                        "' (expected expression, normalized, flux or balance)");
}

std::string to_string(DataKind kind) {
  switch (kind) {
    case DataKind::expression: return "expression";
    case DataKind::normalized: return "normalized";
    case DataKind::flux: return "flux";
    case DataKind::balance: return "balance";
  }
  return "?";
}

void SampleMatrix::append(std::span<const double> values, std::string id) {
  if (values.size() != dim) {
    throw ShapeError("sample of length " + std::to_string(values.size()) + " for dim " +
                     std::to_string(dim));
  }
  data.insert(data.end(), values.begin(), values.end());
  ids.push_back(std::move(id));
}

std::size_t TimeSeriesDataset::total_samples() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.count();
  return n;
}

void TimeSeriesDataset::validate() const {
  if (times.empty()) throw ValidationError("dataset has no timesteps");
  if (steps.size() != times.size()) throw ValidationError("dataset: timestep count mismatch");
  if (features.empty()) throw ValidationError("dataset has no features");
  if (knockout_dims > features.size()) throw ValidationError("dataset: knockout_dims exceeds dim");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw ValidationError("dataset: times must be strictly ascending");
    }
    const SampleMatrix& s = steps[i];
    if (s.dim != features.size()) throw ValidationError("dataset: sample dim mismatch at timestep " + std::to_string(i));
    if (s.count() == 0) {
      throw ValidationError("dataset: timestep " + std::to_string(i) + " (t=" +
                            std::to_string(times[i]) + ") has no samples");
    }
    if (s.ids.size() != s.count()) throw ValidationError("dataset: sample id count mismatch");
    for (double v : s.data) {
      if (!std::isfinite(v)) throw ValidationError("dataset: non-finite value at timestep " + std::to_string(i));
      if (kind == DataKind::expression && !is_nonneg_integer(v)) {
        throw ValidationError("dataset: expression values must be non-negative integers (timestep " +
                              std::to_string(i) + ")");
      }
    }
  }
}

TimeSeriesDataset read_dataset_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t row = 0;
  bool have_kind = false;
  DataKind kind = DataKind::flux;
  std::size_t knockout_dims = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string tok;
      while (meta >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        if (key == "kind") {
          kind = parse_data_kind(value);
          have_kind = true;
        } else if (key == "knockout_dims") {
          knockout_dims = static_cast<std::size_t>(parse_number(value, path, row, "knockout_dims"));
        }
      }
      continue;
    }
    header = split_csv(line);
    break;
  }
  if (header.size() < 3 || header[0] != "time" || header[1] != "sample_id") {
    throw ValidationError(path.string() + ": expected header 'time,sample_id,<features...>'");
  }
  std::vector<std::string> features(header.begin() + 2, header.end());
  std::map<double, SampleMatrix> groups;
  std::vector<double> values(features.size());
  bool all_integer = true;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(header.size()));
    }
    const double t = parse_number(cells[0], path, row, "time");
    for (std::size_t f = 0; f < features.size(); ++f) {
      values[f] = parse_number(cells[f + 2], path, row, features[f]);
      all_integer = all_integer && is_nonneg_integer(values[f]);
    }
    auto& m = groups[t];
    m.dim = features.size();
    m.append(values, cells[1]);
  }
  if (!have_kind) kind = all_integer ? DataKind::expression : DataKind::flux;
  TimeSeriesDataset ds = from_groups(kind, std::move(features), std::move(groups));
  ds.knockout_dims = knockout_dims;
  ds.validate();
  return ds;
}

void write_dataset_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "# kind=" << to_string(ds.kind) << " knockout_dims=" << ds.knockout_dims << '\n';
  out << "time,sample_id";
  for (const auto& f : ds.features) out << ',' << f;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < ds.num_timesteps(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.times[i]);
    const std::string t = buf;
    const SampleMatrix& s = ds.steps[i];
    for (std::size_t j = 0; j < s.count(); ++j) {
      out << t << ',' << s.ids[j];
      for (double v : s.sample(j)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

TimeSeriesDataset load_expression_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.size() >= 2 && header[0] == "time" && header[1] == "sample_id") {
    TimeSeriesDataset ds = read_dataset_csv(path);
    ds.kind = DataKind::expression;
    ds.validate();
    return ds;
  }
  if (header != std::vector<std::string>{"gene", "day", "cell_id", "count"}) {
    throw ValidationError(path.string() +
                          ": expected header 'gene,day,cell_id,count' or 'time,sample_id,...'");
  }
  struct Entry {
    std::size_t gene, cell;
    double count;
  };
  std::vector<std::string> genes;
  std::unordered_map<std::string, std::size_t> gene_index;
  std::vector<std::string> cells;
  std::vector<double> cell_day;
  std::unordered_map<std::string, std::size_t> cell_index;
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto f = split_csv(line);
    if (f.size() != 4) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + " needs 4 columns");
    }
    const double day = parse_number(f[1], path, row, "day");
    const double count = parse_count(f[3], path, row);
    auto [git, gnew] = gene_index.try_emplace(f[0], genes.size());
    if (gnew) genes.push_back(f[0]);
    auto [cit, cnew] = cell_index.try_emplace(f[2], cells.size());
    if (cnew) {
      cells.push_back(f[2]);
      cell_day.push_back(day);
    } else if (cell_day[cit->second] != day) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + ": cell '" + f[2] +
                            "' appears under two days");
    }
    entries.push_back({git->second, cit->second, count});
  }
  if (cells.empty()) throw ValidationError(path.string() + ": no counts");
  std::vector<std::vector<double>> columns(cells.size(), std::vector<double>(genes.size(), 0.0));
  for (const auto& e : entries) columns[e.cell][e.gene] += e.count;
  std::map<double, SampleMatrix> groups;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& m = groups[cell_day[c]];
    m.dim = genes.size();
    m.append(columns[c], cells[c]);
  }
  TimeSeriesDataset ds = from_groups(DataKind::expression, genes, std::move(groups));
  ds.validate();
  return ds;
}

TimeSeriesDataset load_expression_matrix(const std::filesystem::path& matrix_path,
                                         const std::filesystem::path& day_path) {
  std::unordered_map<std::string, double> day_of;
  std::vector<std::pair<std::string, double>> day_rows;
  {
    auto in = open_input(day_path);
    std::string line;
    std::size_t row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
      ++row;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      auto f = split_csv(line);
      if (!header_seen) {
        if (f != std::vector<std::string>{"cell_id", "day"}) {
          throw ValidationError(day_path.string() + ": expected header 'cell_id,day'");
        }
        header_seen = true;
        continue;
      }
      if (f.size() != 2) throw ValidationError(day_path.string() + ": row " + std::to_string(row) + " needs 2 columns");
      const double day = parse_number(f[1], day_path, row, "day");
      day_of[f[0]] = day;
      day_rows.emplace_back(f[0], day);
    }
  }
  auto in = open_input(matrix_path);
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  std::vector<std::string> genes;
  std::vector<std::vector<double>> by_gene;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto f = split_csv(line);
    if (header.empty()) {
      if (f.size() < 2 || f[0] != "gene") {
        throw ValidationError(matrix_path.string() + ": expected header 'gene,<cell ids...>'");
      }
      header = f;
      continue;
    }
    if (f.size() != header.size()) {
      throw ValidationError(matrix_path.string() + ": row " + std::to_string(row) + " has " +
                            std::to_string(f.size()) + " columns, expected " +
                            std::to_string(header.size()));
    }
    genes.push_back(f[0]);
    std::vector<double> counts;
    for (std::size_t c = 1; c < f.size(); ++c) counts.push_back(parse_count(f[c], matrix_path, row));
    by_gene.push_back(std::move(counts));
  }
  if (genes.empty()) throw ValidationError(matrix_path.string() + ": no genes");
  std::map<double, SampleMatrix> groups;
  for (const auto& [cell, day] : day_rows) groups[day].dim = genes.size();
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto it = day_of.find(header[c]);
    if (it == day_of.end()) {
      throw ValidationError(day_path.string() + ": no day label for cell '" + header[c] + "'");
    }
    std::vector<double> col(genes.size());
    for (std::size_t g = 0; g < genes.size(); ++g) col[g] = by_gene[g][c - 1];
    groups[it->second].append(col, header[c]);
  }
  for (const auto& [day, m] : groups) {
    if (m.count() == 0) {
      throw ValidationError(day_path.string() + ": day " + std::to_string(day) +
                            " is labelled but has no cells in the matrix");
    }
  }
  TimeSeriesDataset ds = from_groups(DataKind::expression, genes, std::move(groups));
  ds.validate();
  return ds;
}

TimeSeriesDataset log_normalize_scale(const TimeSeriesDataset& ds, std::size_t window) {
  if (ds.kind != DataKind::expression) {
    throw ValidationError("log_normalize_scale: expects raw expression counts, got kind '" +
                          to_string(ds.kind) + "'");
  }
  ds.validate();
  const std::size_t dim = ds.dim();
  const std::size_t span = window == 0 ? ds.num_timesteps() : std::min(window, ds.num_timesteps());
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < span; ++i) {
    const auto& s = ds.steps[i];
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t f = 0; f < dim; ++f) mean[f] += std::log1p(s.at(f, j));
      n += 1.0;
    }
  }
  for (double& m : mean) m /= n;
  for (std::size_t i = 0; i < span; ++i) {
    const auto& s = ds.steps[i];
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t f = 0; f < dim; ++f) {
        const double d = std::log1p(s.at(f, j)) - mean[f];
        var[f] += d * d;
      }
    }
  }
  TimeSeriesDataset out = ds;
  out.kind = DataKind::normalized;
  for (auto& s : out.steps) {
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t f = 0; f < dim; ++f) {
        const double sd = std::sqrt(var[f] / n);
        double& v = s.data[j * dim + f];
        v = sd > 0.0 ? (std::log1p(v) - mean[f]) / sd : 0.0;
      }
    }
  }
  return out;
}

TimeSeriesDataset select_features(const TimeSeriesDataset& ds, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto it = std::find(ds.features.begin(), ds.features.end(), n);
    if (it == ds.features.end()) throw ValidationError("dataset has no feature '" + n + "'");
    idx.push_back(static_cast<std::size_t>(it - ds.features.begin()));
  }
  TimeSeriesDataset out;
  out.kind = ds.kind;
  out.times = ds.times;
  out.features = names;
  for (const auto& s : ds.steps) {
    SampleMatrix m;
    m.dim = names.size();
    std::vector<double> v(names.size());
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t k = 0; k < idx.size(); ++k) v[k] = s.at(idx[k], j);
      m.append(v, s.ids[j]);
    }
    out.steps.push_back(std::move(m));
  }
  return out;
}

std::string sample_group(const TimeSeriesDataset& ds, std::size_t t, std::size_t j) {
  if (ds.knockout_dims == 0) return {};
  std::string key;
  const auto v = ds.steps[t].sample(j);
  for (std::size_t f = ds.dim() - ds.knockout_dims; f < ds.dim(); ++f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v[f]);
    if (!key.empty()) key += ' ';
    key += buf;
  }
  return key;
}

SampleGroups group_samples(const TimeSeriesDataset& ds) {
  std::map<std::string, std::vector<std::vector<std::size_t>>> groups;
  const std::size_t steps = ds.num_timesteps();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < ds.steps[t].count(); ++j) {
      auto& g = groups[sample_group(ds, t, j)];
      g.resize(steps);
      g[t].push_back(j);
    }
  }
  SampleGroups out;
  for (auto& [key, members] : groups) {
    const bool everywhere =
        std::all_of(members.begin(), members.end(), [](const auto& m) { return !m.empty(); });
    if (!everywhere) continue;
    out.keys.push_back(key);
    out.members.push_back(std::move(members));
  }
  if (out.keys.empty()) throw ValidationError("dataset: no sample group covers every timestep");
  return out;
}

std::pair<TimeSeriesDataset, TimeSeriesDataset> split_samples(const TimeSeriesDataset& ds,
                                                              double test_fraction,
                                                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  TimeSeriesDataset train = ds, test = ds;
  for (std::size_t i = 0; i < ds.num_timesteps(); ++i) {
    const SampleMatrix& s = ds.steps[i];
    std::map<std::string, std::vector<std::size_t>> buckets;
    for (std::size_t j = 0; j < s.count(); ++j) buckets[sample_group(ds, i, j)].push_back(j);
    std::vector<char> to_test(s.count(), 0);
    for (auto& [key, order] : buckets) {
      const std::size_t n = order.size();
      if (n < 2) {
        throw ValidationError("cannot split timestep " + std::to_string(i) + " with " +
                              std::to_string(n) + " sample(s)" +
                              (key.empty() ? std::string() : " in knockout group [" + key + "]"));
      }
      std::shuffle(order.begin(), order.end(), rng);
      auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
      n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
      for (std::size_t k = 0; k < n_test; ++k) to_test[order[k]] = 1;
    }
    SampleMatrix a, b;
    a.dim = b.dim = s.dim;
    for (std::size_t j = 0; j < s.count(); ++j) (to_test[j] ? b : a).append(s.sample(j), s.ids[j]);
    train.steps[i] = std::move(a);
    test.steps[i] = std::move(b);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace snodep
