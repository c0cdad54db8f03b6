#include "vsdn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vsdn/errors.hpp"

namespace vsdn {

void TimeSeries::validate() const {
  const int n = frames();
  if (values.rows() != n || mask.rows() != n || values.cols() != mask.cols())
    throw IngestionError("TimeSeries: shape mismatch between times/values/mask");
  for (int i = 1; i < n; ++i)
    if (!(times[static_cast<std::size_t>(i)] > times[static_cast<std::size_t>(i - 1)]))
      throw IngestionError("TimeSeries: times must be strictly ascending");
  for (int i = 0; i < n; ++i) {
    bool any = false;
    for (int j = 0; j < dims(); ++j) {
      const double m = mask(i, j);
      if (m != 0.0 && m != 1.0) throw IngestionError("TimeSeries: mask must be 0/1");
      if (m == 1.0) any = true;
      if (m == 0.0 && values(i, j) != 0.0)
        throw IngestionError("TimeSeries: masked-out cell not zero-filled");
    }
    if (!any) throw IngestionError("TimeSeries: row with no observed dimension");
  }
}

void OUParams::validate() const {
  if (theta.size() == 0 || theta.size() != mu.size() || theta.size() != sigma.size())
    throw ConfigError("OUParams: theta/mu/sigma must share a nonzero length");
  if ((theta.array() <= 0.0).any()) throw ConfigError("OUParams: theta must be positive");
  if ((sigma.array() <= 0.0).any()) throw ConfigError("OUParams: sigma must be positive");
}

std::vector<TimeSeries> simulate_double_ou(const OUParams& params, int n_seq, double horizon,
                                           double lattice_dt, double sim_dt,
                                           std::uint64_t seed) {
  params.validate();
  if (n_seq < 1) throw ConfigError("simulate_double_ou: n_seq must be >= 1");
  if (!(horizon > 0.0) || !(lattice_dt > 0.0) || !(sim_dt > 0.0))
    throw ConfigError("simulate_double_ou: horizon/lattice_dt/sim_dt must be positive");
  const double theta_max = params.theta.maxCoeff();
  if (theta_max * sim_dt >= 1.0)
    throw ConfigError("simulate_double_ou: unstable configuration (theta*sim_dt >= 1)");
  if (sim_dt > 0.01 / theta_max * (1.0 + 1e-12))
    throw ConfigError("simulate_double_ou: sim_dt must be <= 0.01*min(1/theta)");

  const int d = params.dims();
  const int n_frames = static_cast<int>(std::floor(horizon / lattice_dt + 1e-9)) + 1;
  const int steps_per_frame = std::max(1, static_cast<int>(std::llround(lattice_dt / sim_dt)));
  const double h = lattice_dt / steps_per_frame;
  const Eigen::ArrayXd stat_std = (params.sigma.array().square() / (2.0 * params.theta.array())).sqrt();

  std::vector<TimeSeries> out(static_cast<std::size_t>(n_seq));
  for (int s = 0; s < n_seq; ++s) {
    Rng rng(seed, {0x0541u, static_cast<std::uint64_t>(s)});  // per-sequence stream
    TimeSeries& ts = out[static_cast<std::size_t>(s)];
    ts.times.resize(static_cast<std::size_t>(n_frames));
    ts.values.resize(n_frames, d);
    ts.mask = Mat::Ones(n_frames, d);

    Eigen::ArrayXd x(d);
    for (int j = 0; j < d; ++j) x(j) = params.mu(j) + stat_std(j) * rng.normal();
    ts.times[0] = 0.0;
    ts.values.row(0) = x.matrix().transpose();
    const double sqrt_h = std::sqrt(h);
    for (int f = 1; f < n_frames; ++f) {
      for (int k = 0; k < steps_per_frame; ++k)
        for (int j = 0; j < d; ++j)
          x(j) += params.theta(j) * (params.mu(j) - x(j)) * h +
                  params.sigma(j) * sqrt_h * rng.normal();
      ts.times[static_cast<std::size_t>(f)] = lattice_dt * f;
      ts.values.row(f) = x.matrix().transpose();
    }
  }
  return out;
}

TimeSeries sporadify(const TimeSeries& series, double p_time, double p_dim,
                     std::uint64_t seed) {
  if (p_time < 0.0 || p_time >= 1.0 || p_dim < 0.0 || p_dim >= 1.0)
    throw ConfigError("sporadify: p_time and p_dim must be in [0,1)");
  if (series.frames() < 2) throw ConfigError("sporadify: need at least 2 input frames");
  Rng rng(seed, {0x5904u});
  const int n = series.frames(), d = series.dims();

  std::vector<int> kept;
  for (int attempt = 0; attempt < 1000 && kept.size() < 2; ++attempt) {
    kept.clear();
    for (int i = 0; i < n; ++i)
      if (rng.uniform() >= p_time) kept.push_back(i);
  }
  if (kept.size() < 2)
    throw ConfigError("sporadify: could not retain 2 frames (p_time too aggressive)");

  TimeSeries out;
  out.norm = series.norm;
  out.times.reserve(kept.size());
  out.values.resize(static_cast<int>(kept.size()), d);
  out.mask.resize(static_cast<int>(kept.size()), d);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const int i = kept[r];
    out.times.push_back(series.times[static_cast<std::size_t>(i)]);
    // Redraw the row's cell pattern until at least one original observation
    // survives; rows observed in the source always keep >= 1 cell.
    Eigen::RowVectorXd m(d);
    bool any = false;
    do {
      any = false;
      for (int j = 0; j < d; ++j) {
        const bool keep = series.mask(i, j) == 1.0 && rng.uniform() >= p_dim;
        m(j) = keep ? 1.0 : 0.0;
        any = any || keep;
      }
    } while (!any);
    out.mask.row(static_cast<int>(r)) = m;
    out.values.row(static_cast<int>(r)) =
        series.values.row(i).cwiseProduct(m);  // zero-fill dropped cells
  }
  out.validate();
  return out;
}

TimeSeries heldout_complement(const TimeSeries& dense, const TimeSeries& observed) {
  const int d = dense.dims();
  std::vector<int> rows;
  std::vector<Eigen::RowVectorXd> masks;
  std::size_t k = 0;
  for (int i = 0; i < dense.frames(); ++i) {
    Eigen::RowVectorXd m = dense.mask.row(i);
    if (k < observed.times.size() && observed.times[k] == dense.times[static_cast<std::size_t>(i)]) {
      m -= observed.mask.row(static_cast<int>(k));
      ++k;
    }
    if (m.sum() > 0.0) {
      rows.push_back(i);
      masks.push_back(m);
    }
  }
  if (k != observed.times.size())
    throw ContractViolation("heldout_complement: observed series is not a subset of dense");
  TimeSeries out;
  out.norm = dense.norm;
  out.values.resize(static_cast<int>(rows.size()), d);
  out.mask.resize(static_cast<int>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.times.push_back(dense.times[static_cast<std::size_t>(rows[r])]);
    out.mask.row(static_cast<int>(r)) = masks[r];
    out.values.row(static_cast<int>(r)) =
        dense.values.row(rows[r]).cwiseProduct(masks[r]);
  }
  return out;
}

// ---- CSV -------------------------------------------------------------------

namespace {

struct CsvRow {
  std::string series_id;
  double time;
  std::vector<double> values;
  std::vector<double> mask;
  int line_no;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<TimeSeries> load_sporadic_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("empty CSV file: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "series_id" || header[1] != "time")
    throw IngestionError("CSV header must start with series_id,time: " + path);
  if ((header.size() - 2) % 2 != 0)
    throw IngestionError("CSV header needs matching value_*/mask_* columns: " + path);
  const int d = static_cast<int>((header.size() - 2) / 2);

  std::vector<CsvRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IngestionError("CSV row " + std::to_string(line_no) + ": wrong column count");
    CsvRow row;
    row.line_no = line_no;
    row.series_id = cells[0];
    try {
      row.time = std::stod(cells[1]);
      for (int j = 0; j < d; ++j) {
        const std::string& mv = cells[static_cast<std::size_t>(2 + d + j)];
        const double m = std::stod(mv);
        if (m != 0.0 && m != 1.0)
          throw IngestionError("CSV row " + std::to_string(line_no) + ": mask must be 0/1");
        const std::string& vv = cells[static_cast<std::size_t>(2 + j)];
        double v = 0.0;
        if (vv.empty()) {
          if (m == 1.0)
            throw IngestionError("CSV row " + std::to_string(line_no) +
                                 ": mask bit set on empty value");
        } else {
          v = std::stod(vv);
        }
        row.values.push_back(m == 1.0 ? v : 0.0);
        row.mask.push_back(m);
      }
    } catch (const std::invalid_argument&) {
      throw IngestionError("CSV row " + std::to_string(line_no) + ": unparsable number");
    }
    rows.push_back(std::move(row));
  }

  // Group by series_id in first-appearance order; stable sort by time.
  std::vector<std::string> order;
  std::map<std::string, std::vector<CsvRow>> groups;
  for (auto& r : rows) {
    if (groups.find(r.series_id) == groups.end()) order.push_back(r.series_id);
    groups[r.series_id].push_back(std::move(r));
  }

  std::vector<TimeSeries> out;
  for (const auto& id : order) {
    auto& g = groups[id];
    std::stable_sort(g.begin(), g.end(),
                     [](const CsvRow& a, const CsvRow& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < g.size(); ++i)
      if (g[i].time == g[i - 1].time)
        throw IngestionError("duplicate (series_id, time) at CSV row " +
                             std::to_string(g[i].line_no));
    TimeSeries ts;
    ts.values.resize(static_cast<int>(g.size()), d);
    ts.mask.resize(static_cast<int>(g.size()), d);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ts.times.push_back(g[i].time);
      for (int j = 0; j < d; ++j) {
        ts.values(static_cast<int>(i), j) = g[i].values[static_cast<std::size_t>(j)];
        ts.mask(static_cast<int>(i), j) = g[i].mask[static_cast<std::size_t>(j)];
      }
    }
    ts.validate();
    out.push_back(std::move(ts));
  }
  return out;
}

void save_sporadic_csv(const std::string& path, const std::vector<TimeSeries>& series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write CSV file: " + path);
  if (series.empty()) throw ConfigError("save_sporadic_csv: nothing to write");
  const int d = series.front().dims();
  out << "series_id,time";
  for (int j = 1; j <= d; ++j) out << ",value_" << j;
  for (int j = 1; j <= d; ++j) out << ",mask_" << j;
  out << "\n";
  out.precision(17);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const TimeSeries& ts = series[s];
    for (int i = 0; i < ts.frames(); ++i) {
      out << s << "," << ts.times[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j) out << "," << ts.values(i, j);
      for (int j = 0; j < d; ++j) out << "," << static_cast<int>(ts.mask(i, j));
      out << "\n";
    }
  }
}

// ---- normalization -----------------------------------------------------------

NormStats compute_norm_stats(const Dataset& train) {
  if (train.empty()) throw ConfigError("compute_norm_stats: empty training split");
  const int d = train.series.front().dims();
  std::vector<double> sum(static_cast<std::size_t>(d), 0.0), sq(static_cast<std::size_t>(d), 0.0);
  std::vector<long> count(static_cast<std::size_t>(d), 0);
  for (const auto& ts : train.series)
    for (int i = 0; i < ts.frames(); ++i)
      for (int j = 0; j < d; ++j)
        if (ts.mask(i, j) == 1.0) {
          sum[static_cast<std::size_t>(j)] += ts.values(i, j);
          sq[static_cast<std::size_t>(j)] += ts.values(i, j) * ts.values(i, j);
          ++count[static_cast<std::size_t>(j)];
        }
  NormStats stats;
  stats.active = true;
  for (int j = 0; j < d; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (count[ju] == 0)
      throw ConfigError("normalize: dimension " + std::to_string(j + 1) +
                        " has no training observations");
    const double mean = sum[ju] / static_cast<double>(count[ju]);
    const double var = sq[ju] / static_cast<double>(count[ju]) - mean * mean;
    if (!(var > 0.0))
      throw ConfigError("normalize: dimension " + std::to_string(j + 1) + " has zero std");
    stats.mean.push_back(mean);
    stats.std.push_back(std::sqrt(var));
  }
  return stats;
}

void apply_normalization(TimeSeries& s, const NormStats& stats) {
  if (!stats.active) return;
  if (static_cast<int>(stats.mean.size()) != s.dims())
    throw ConfigError("apply_normalization: dimension mismatch");
  for (int i = 0; i < s.frames(); ++i)
    for (int j = 0; j < s.dims(); ++j)
      if (s.mask(i, j) == 1.0)
        s.values(i, j) =
            (s.values(i, j) - stats.mean[static_cast<std::size_t>(j)]) /
            stats.std[static_cast<std::size_t>(j)];
  s.norm = stats;
}

void apply_normalization(Dataset& ds, const NormStats& stats) {
  for (auto& s : ds.series) apply_normalization(s, stats);
  ds.norm = stats;
}

double denormalize_value(double v, const NormStats& stats, int dim) {
  if (!stats.active) return v;
  return v * stats.std[static_cast<std::size_t>(dim)] + stats.mean[static_cast<std::size_t>(dim)];
}

Splits split_dataset(const std::vector<TimeSeries>& all, const SplitSpec& spec,
                     std::uint64_t seed) {
  if (all.size() < 3) throw ConfigError("split_dataset: need at least 3 sequences");
  if (!(spec.train > 0.0) || !(spec.val > 0.0) || !(spec.test > 0.0) ||
      std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw ConfigError("split_dataset: fractions must be positive and sum to 1");
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed, {0x59171u});
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  const auto n = all.size();
  auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  auto n_val = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  n_train = std::max<std::size_t>(1, std::min(n_train, n - 2));
  n_val = std::max<std::size_t>(1, std::min(n_val, n - n_train - 1));
  Splits sp;
  for (std::size_t i = 0; i < n; ++i) {
    const TimeSeries& s = all[idx[i]];
    if (i < n_train)
      sp.train.series.push_back(s);
    else if (i < n_train + n_val)
      sp.val.series.push_back(s);
    else
      sp.test.series.push_back(s);
  }
  return sp;
}

}  // namespace vsdn
