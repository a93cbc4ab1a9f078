#include "dvarimax/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

#include "dvarimax/error.hpp"
#include "dvarimax/io.hpp"

namespace dvarimax {

// Shortest augmenting path (Jonker-Volgenant style potentials), O(r^3).
std::vector<Index> solve_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) {
    throw Error(ErrorKind::Dimension, "assignment cost must be square");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = match[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(n, 0);
  for (Index j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

PermutationError signed_permutation_error(const Matrix& estimate,
                                          const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw Error(ErrorKind::Dimension, "estimate and truth shapes differ");
  }
  const Index r = truth.cols();
  // cost(j, k): true column j placed in estimated slot k.
  Matrix cost(r, r);
  Matrix sign(r, r);
  for (Index j = 0; j < r; ++j) {
    for (Index k = 0; k < r; ++k) {
      const double plus = (estimate.col(k) - truth.col(j)).squaredNorm();
      const double minus = (estimate.col(k) + truth.col(j)).squaredNorm();
      cost(j, k) = std::min(plus, minus);
      sign(j, k) = minus < plus ? -1.0 : 1.0;
    }
  }
  const std::vector<Index> assign = solve_assignment(cost);
  PermutationError out;
  out.permutation = Matrix::Zero(r, r);
  double total = 0.0;
  for (Index j = 0; j < r; ++j) {
    const Index k = assign[static_cast<std::size_t>(j)];
    out.permutation(j, k) = sign(j, k);
    total += cost(j, k);
  }
  out.error = std::sqrt(total);
  return out;
}

const char* to_string(SweepParameter s) {
  switch (s) {
    case SweepParameter::N: return "n";
    case SweepParameter::P: return "p";
    case SweepParameter::R: return "r";
    case SweepParameter::Varepsilon2: return "varepsilon2";
    case SweepParameter::Theta: return "theta";
  }
  return "n";
}

SweepParameter parse_sweep(const std::string& name) {
  if (name == "n") return SweepParameter::N;
  if (name == "p") return SweepParameter::P;
  if (name == "r") return SweepParameter::R;
  if (name == "varepsilon2") return SweepParameter::Varepsilon2;
  if (name == "theta") return SweepParameter::Theta;
  throw Error(ErrorKind::Config, "unknown sweep parameter '" + name + "'");
}

std::string init_label(const InitScheme& scheme) {
  if (std::holds_alternative<RandomInit>(scheme)) return "random";
  if (std::holds_alternative<MultiRandomInit>(scheme)) return "multi_random";
  return std::get<MomInit>(scheme).improved ? "mom_improved" : "mom";
}

void ExperimentGrid::validate() const {
  if (values.empty()) throw Error(ErrorKind::Config, "sweep has no values");
  if (variants.empty()) throw Error(ErrorKind::Config, "no variants given");
  if (init_schemes.empty()) throw Error(ErrorKind::Config, "no init schemes given");
  if (replications < 1) throw Error(ErrorKind::Config, "replications must be >= 1");
  if (threads < 1) throw Error(ErrorKind::Config, "threads must be >= 1");
  for (std::size_t i = 0; i < values.size(); ++i) cell_config(i).validate();
  solve.validate(base.r);
}

SyntheticConfig ExperimentGrid::cell_config(std::size_t index) const {
  SyntheticConfig c = base;
  const double v = values.at(index);
  auto as_index = [v](const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw Error(ErrorKind::Config, std::string(what) + " sweep values must be positive integers");
    }
    return static_cast<Index>(v);
  };
  switch (sweep) {
    case SweepParameter::N: c.n = as_index("n"); break;
    case SweepParameter::P: c.p = as_index("p"); break;
    case SweepParameter::R: c.r = as_index("r"); break;
    case SweepParameter::Varepsilon2: c.varepsilon2 = v; break;
    case SweepParameter::Theta: c.theta = v; break;
  }
  return c;
}

int ExperimentRecord::iters_total() const {
  return std::accumulate(iters.begin(), iters.end(), 0);
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t cell,
                               int rep) {
  return Stream::derive(master_seed, Purpose::Dataset, cell)
      .child(Purpose::Dataset, static_cast<std::uint64_t>(rep))
      .key();
}

std::vector<ExperimentRecord> run_experiment(const ExperimentGrid& grid) {
  grid.validate();
  const std::size_t n_cells = grid.values.size();
  const std::size_t n_var = grid.variants.size();
  const std::size_t n_init = grid.init_schemes.size();
  const std::size_t n_rep = static_cast<std::size_t>(grid.replications);
  std::vector<ExperimentRecord> records(n_cells * n_var * n_init * n_rep);

  auto run_task = [&](std::size_t task) {
    const std::size_t cell = task / n_rep;
    const int rep = static_cast<int>(task % n_rep);
    SyntheticConfig config = grid.cell_config(cell);
    config.seed = replication_seed(grid.master_seed, cell, rep);
    std::optional<Dataset> data;
    std::string data_failure;
    try {
      data.emplace(generate_dataset(config));
    } catch (const std::exception& e) {
      data_failure = e.what();
    }
    const Stream est_rng = Stream::derive(config.seed, Purpose::Estimate);
    for (std::size_t v = 0; v < n_var; ++v) {
      for (std::size_t i = 0; i < n_init; ++i) {
        ExperimentRecord& rec =
            records[((cell * n_var + v) * n_init + i) * n_rep +
                    static_cast<std::size_t>(rep)];
        rec.variant = to_string(grid.variants[v]);
        rec.init = init_label(grid.init_schemes[i]);
        rec.sweep_name = to_string(grid.sweep);
        rec.sweep_value = grid.values[cell];
        rec.rep = rep;
        rec.seed = config.seed;
        rec.error = std::numeric_limits<double>::quiet_NaN();
        if (!data) {
          rec.failure = data_failure;
          continue;
        }
        try {
          EstimateOptions options;
          options.variant = grid.variants[v];
          options.init = grid.init_schemes[i];
          options.solve = grid.solve;
          options.mom_subtraction = grid.mom_subtraction;
          options.auto_fallback = true;
          const LoadingEstimate est =
              estimate_loading(data->observations, config.r, options, est_rng);
          rec.error = signed_permutation_error(est.lambda_hat, data->truth.loading).error;
          rec.iters = est.diagnostics.iter_counts;
          rec.fallback = est.diagnostics.fallback;
          rec.runtime_ms = grid.timing ? est.diagnostics.runtime_ms : 0.0;
        } catch (const std::exception& e) {
          rec.failure = e.what();
        }
      }
    }
  };

  const std::size_t n_tasks = n_cells * n_rep;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(grid.threads), n_tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) run_task(t);
      });
    }
  }
  return records;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorKind::Parameter, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> aggregate(std::span<const ExperimentRecord> records) {
  if (records.empty()) throw Error(ErrorKind::Parameter, "no records to aggregate");
  using Key = std::tuple<std::string, std::string, std::string, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ExperimentRecord*>> cells;
  for (const auto& rec : records) {
    Key key{rec.variant, rec.init, rec.sweep_name, rec.sweep_value};
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&rec);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(order.size());
  for (const auto& key : order) {
    SummaryRow row;
    std::tie(row.variant, row.init, row.sweep_name, row.sweep_value) = key;
    std::vector<double> errors;
    std::vector<double> iters;
    for (const auto* rec : cells[key]) {
      if (std::isnan(rec->error)) {
        ++row.n_fail;
        continue;
      }
      errors.push_back(rec->error);
      iters.push_back(static_cast<double>(rec->iters_total()));
    }
    row.n_ok = static_cast<int>(errors.size());
    if (errors.empty()) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.mean = row.median = row.q25 = row.q75 = row.median_iters = nan;
    } else {
      row.mean = std::accumulate(errors.begin(), errors.end(), 0.0) /
                 static_cast<double>(errors.size());
      row.median = quantile(errors, 0.5);
      row.q25 = quantile(errors, 0.25);
      row.q75 = quantile(errors, 0.75);
      row.median_iters = quantile(iters, 0.5);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_records_csv(std::ostream& os,
                       std::span<const ExperimentRecord> records) {
  os << "variant,init,sweep_name,sweep_value,rep,seed,error,iters_total,"
        "fallback,runtime_ms\n";
  for (const auto& rec : records) {
    os << rec.variant << ',' << rec.init << ',' << rec.sweep_name << ','
       << format_short(rec.sweep_value) << ',' << rec.rep << ',' << rec.seed
       << ',' << format_real(rec.error) << ',' << rec.iters_total() << ','
       << (rec.fallback ? 1 : 0) << ',' << format_short(rec.runtime_ms) << '\n';
  }
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
  os << "variant,init,sweep_name,sweep_value,n_ok,n_fail,mean,median,q25,q75\n";
  for (const auto& row : rows) {
    os << row.variant << ',' << row.init << ',' << row.sweep_name << ','
       << format_short(row.sweep_value) << ',' << row.n_ok << ',' << row.n_fail
       << ',' << format_real(row.mean) << ',' << format_real(row.median) << ','
       << format_real(row.q25) << ',' << format_real(row.q75) << '\n';
  }
}

}  // namespace dvarimax
