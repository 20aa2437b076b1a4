#include "fedbcd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fedbcd {

SyntheticTask task_from_string(const std::string& name) {
  if (name == "logistic_separable") return SyntheticTask::LogisticSeparable;
  if (name == "linear_noisy") return SyntheticTask::LinearNoisy;
  throw ConfigError("unknown synthetic task '" + name +
                    "' (expected logistic_separable or linear_noisy)");
}

std::string to_string(SyntheticTask task) {
  return task == SyntheticTask::LogisticSeparable ? "logistic_separable" : "linear_noisy";
}

SyntheticData gen_synthetic(Index n, Index d, SyntheticTask task, double noise,
                            std::uint64_t seed) {
  if (n < 1) throw ConfigError("gen_synthetic: n must be >= 1");
  if (d < 1) throw ConfigError("gen_synthetic: d must be >= 1");
  if (noise < 0.0) throw ConfigError("gen_synthetic: noise must be >= 0");

  SeededRng features_rng(seed, 1);
  SeededRng wstar_rng(seed, 2);
  SeededRng noise_rng(seed, 3);

  SyntheticData out;
  out.features = features_rng.gaussian_matrix(n, d);
  out.w_star = wstar_rng.gaussian_vector(d);
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double clean = out.features.row(i).dot(out.w_star);
    const double noisy = clean + noise * noise_rng.gaussian();
    out.labels(i) = task == SyntheticTask::LogisticSeparable ? (noisy >= 0.0 ? 1.0 : -1.0) : noisy;
  }
  return out;
}

VerticalDataset split_vertical(const Matrix& features, const Vector& labels,
                               const std::vector<std::pair<Index, Index>>& ranges) {
  if (labels.size() != features.rows())
    throw ConfigError("split_vertical: labels and features disagree on the sample count");
  if (ranges.empty()) throw ConfigError("split_vertical: no column ranges");
  Index expected = 0;
  for (const auto& [begin, end] : ranges) {
    if (begin != expected || end <= begin)
      throw ConfigError("split_vertical: ranges must be ordered, disjoint and covering (bad range [" +
                        std::to_string(begin) + "," + std::to_string(end) + "))");
    expected = end;
  }
  if (expected != features.cols())
    throw ConfigError("split_vertical: ranges cover " + std::to_string(expected) + " of " +
                      std::to_string(features.cols()) + " columns");

  VerticalDataset data;
  data.column_ranges = ranges;
  data.labels = labels;
  for (const auto& [begin, end] : ranges)
    data.slices.push_back(features.middleCols(begin, end - begin));
  return data;
}

std::vector<std::pair<Index, Index>> even_column_ranges(Index d, int parties) {
  if (parties < 1 || d < parties)
    throw ConfigError("even_column_ranges: need at least one column per party");
  std::vector<std::pair<Index, Index>> ranges;
  const Index base = d / parties;
  const Index extra = d % parties;
  Index begin = 0;
  for (int k = 0; k < parties; ++k) {
    const Index width = base + (k < extra ? 1 : 0);
    ranges.emplace_back(begin, begin + width);
    begin += width;
  }
  return ranges;
}

namespace {

Matrix load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw ParseError(path + ":1: missing header");

  auto split_cells = [](const std::string& text) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream stream(text);
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (!text.empty() && text.back() == ',') cells.emplace_back();
    return cells;
  };

  const std::size_t cols = split_cells(line).size();
  if (cols == 0) throw ParseError(path + ":1: empty header");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_cells(line);
    if (cells.size() != cols)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                       " cells, got " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const char* text = cells[c].c_str();
      char* end = nullptr;
      row[c] = std::strtod(text, &end);
      if (end == text || *end != '\0' || !std::isfinite(row[c]))
        throw ParseError(path + ":" + std::to_string(lineno) + ": non-numeric cell '" + cells[c] +
                         "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

}  // namespace

VerticalDataset load_csv_vertical(const std::vector<std::string>& party_paths,
                                  const std::string& label_path) {
  if (party_paths.empty()) throw ConfigError("load_csv_vertical: no party files");

  VerticalDataset data;
  Index begin = 0;
  for (const std::string& path : party_paths) {
    Matrix slice = load_csv_matrix(path);
    if (!data.slices.empty() && slice.rows() != data.n())
      throw ParseError(path + ": has " + std::to_string(slice.rows()) + " rows, expected " +
                       std::to_string(data.n()));
    data.column_ranges.emplace_back(begin, begin + slice.cols());
    begin += slice.cols();
    data.slices.push_back(std::move(slice));
  }

  const Matrix label_col = load_csv_matrix(label_path);
  if (label_col.cols() != 1)
    throw ParseError(label_path + ": label file must have exactly one column");
  if (label_col.rows() != data.n())
    throw ParseError(label_path + ": has " + std::to_string(label_col.rows()) +
                     " rows, expected " + std::to_string(data.n()));
  data.labels = label_col.col(0);
  return data;
}

std::pair<VerticalDataset, VerticalDataset> split_train_eval(const VerticalDataset& data,
                                                             double eval_fraction,
                                                             std::uint64_t seed) {
  if (eval_fraction < 0.0 || eval_fraction >= 1.0)
    throw ConfigError("split_train_eval: eval_fraction must be in [0, 1)");
  const Index n = data.n();
  const Index n_eval = static_cast<Index>(std::llround(eval_fraction * static_cast<double>(n)));

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  SeededRng rng(seed, 0x6576616cULL);  // "eval"
  rng.shuffle(perm);

  std::vector<Index> eval_ids(perm.begin(), perm.begin() + n_eval);
  std::vector<Index> train_ids(perm.begin() + n_eval, perm.end());
  std::sort(eval_ids.begin(), eval_ids.end());
  std::sort(train_ids.begin(), train_ids.end());

  auto take = [&](const std::vector<Index>& ids) {
    VerticalDataset part;
    part.column_ranges = data.column_ranges;
    part.labels.resize(static_cast<Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j)
      part.labels(static_cast<Index>(j)) = data.labels(ids[j]);
    for (const Matrix& slice : data.slices) {
      Matrix sub(static_cast<Index>(ids.size()), slice.cols());
      for (std::size_t j = 0; j < ids.size(); ++j) sub.row(static_cast<Index>(j)) = slice.row(ids[j]);
      part.slices.push_back(std::move(sub));
    }
    return part;
  };
  return {take(train_ids), take(eval_ids)};
}

SweepTable run_sweep(const SweepSpec& spec, const TrainingConfig& base,
                     const VerticalDataset& data) {
  if (spec.q_values.empty()) throw ConfigError("sweep: empty Q list");
  if (spec.algos.empty()) throw ConfigError("sweep: empty algorithm list");
  if (spec.max_rounds < 1) throw ConfigError("sweep: max_rounds must be >= 1");

  const auto [train, eval] = split_train_eval(data, 0.2, base.seed);

  SweepTable table;
  table.max_rounds = spec.max_rounds;
  for (const AlgoKind algo : spec.algos) {
    for (const int q : spec.q_values) {
      TrainingConfig cfg = base;
      cfg.algo = algo;
      cfg.local_iters = algo == AlgoKind::FedSGD ? 1 : q;
      cfg.sync_rounds = spec.max_rounds;
      const RunResult run = run_training(cfg, train, &eval);

      SweepCell cell;
      cell.algo = algo;
      cell.q = cfg.local_iters;
      cell.status = run.status;
      cell.rounds_to_target = spec.max_rounds + 1;
      cell.dnf = true;
      for (const RoundMetrics& row : run.metrics) {
        const bool hit = spec.target == SweepSpec::Target::AucAbove
                             ? (std::isfinite(row.eval_metric) && row.eval_metric >= spec.target_value)
                             : (std::isfinite(row.full_loss) && row.full_loss <= spec.target_value);
        if (hit) {
          cell.rounds_to_target = row.sync_round;
          cell.dnf = false;
          break;
        }
      }
      table.cells.push_back(cell);
    }
  }
  return table;
}

RunResult centralized_baseline(const TrainingConfig& cfg, const VerticalDataset& train,
                               const VerticalDataset* eval) {
  cfg.validate();
  if (train.parties() != cfg.parties)
    throw ConfigError("config: parties=" + std::to_string(cfg.parties) + " but the dataset has " +
                      std::to_string(train.parties()) + " slices");
  check_labels(cfg.loss, train.labels);

  const Index n = train.n();
  const Index d = train.dim();
  Matrix x(n, d);
  Vector theta(d);
  Index col = 0;
  for (int k = 0; k < cfg.parties; ++k) {
    const Matrix& slice = train.slices[static_cast<std::size_t>(k)];
    x.middleCols(col, slice.cols()) = slice;
    theta.segment(col, slice.cols()) = init_block_theta(cfg, k, slice.cols());
    col += slice.cols();
  }

  Matrix x_eval;
  if (eval != nullptr && eval->n() > 0) {
    x_eval.resize(eval->n(), d);
    col = 0;
    for (const Matrix& slice : eval->slices) {
      x_eval.middleCols(col, slice.cols()) = slice;
      col += slice.cols();
    }
  }

  const BatchPlan plan =
      make_batch_plan(n, cfg.batch_size, cfg.sync_rounds, cfg.sampling, cfg.seed);

  RunResult result;
  result.lipschitz = estimate_lipschitz(train, cfg.loss, cfg.lambda);
  const auto started = std::chrono::steady_clock::now();

  auto push_metrics = [&](int completed) {
    RoundMetrics row;
    row.sync_round = completed;
    row.total_local_iters = completed;
    const Vector h = x * theta;
    const std::vector<ModelBlock> one{ModelBlock{0, theta}};
    row.full_loss = full_loss(cfg.loss, h, train.labels, one, cfg.lambda);
    std::vector<Index> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), Index{0});
    const GradSignal gsig = grad_signal(cfg.loss, h, train.labels, ids);
    Vector grad = Vector::Zero(d);
    for (Index i = 0; i < n; ++i) grad.noalias() += gsig.values(i) * x.row(i).transpose();
    grad /= static_cast<double>(n);
    if (cfg.lambda != 0.0) grad.noalias() += cfg.lambda * theta;
    row.grad_norm_sq = grad.squaredNorm();
    if (eval != nullptr && eval->n() > 0) {
      const Vector scores = x_eval * theta;
      try {
        row.eval_metric = cfg.loss == LossKind::LogisticBinary ? eval_auc(scores, eval->labels)
                                                               : eval_rmse(scores, eval->labels);
      } catch (const MetricUndefined&) {
        row.eval_metric = std::nan("");
      }
    } else {
      row.eval_metric = std::nan("");
    }
    row.ledger = result.ledger;
    row.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
    result.metrics.push_back(row);
  };

  push_metrics(0);
  for (int t = 0; t < cfg.sync_rounds; ++t) {
    const Vector snapshot = theta;
    const std::vector<Index>& batch = plan.schedule[static_cast<std::size_t>(t)];
    const double eta = lr_at(cfg.lr_schedule, cfg.eta0, t, cfg.parties);

    Vector h(static_cast<Index>(batch.size()));
    Vector y(static_cast<Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
      h(static_cast<Index>(j)) = x.row(batch[j]).dot(theta);
      y(static_cast<Index>(j)) = train.labels(batch[j]);
    }
    const GradSignal gsig = grad_signal(cfg.loss, h, y, batch);
    Vector acc = Vector::Zero(d);
    for (std::size_t j = 0; j < batch.size(); ++j)
      acc.noalias() += gsig.values(static_cast<Index>(j)) * x.row(batch[j]).transpose();
    Vector grad = acc / static_cast<double>(batch.size());
    if (cfg.lambda != 0.0) grad.noalias() += cfg.lambda * theta;
    theta -= eta * grad;

    result.ledger.sync_rounds += 1;
    double loss_now = 0.0;
    {
      const Vector h_all = x * theta;
      const std::vector<ModelBlock> one{ModelBlock{0, theta}};
      loss_now = theta.allFinite() ? full_loss(cfg.loss, h_all, train.labels, one, cfg.lambda)
                                   : std::nan("");
    }
    if (!std::isfinite(loss_now)) {
      theta = snapshot;
      result.status = RunStatus::Diverged;
      break;
    }
    push_metrics(t + 1);
  }

  // Report per-party blocks so callers can compare against federated runs.
  col = 0;
  for (int k = 0; k < cfg.parties; ++k) {
    const Index width = train.slices[static_cast<std::size_t>(k)].cols();
    result.blocks.push_back(ModelBlock{k, theta.segment(col, width)});
    col += width;
  }
  return result;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<RoundMetrics>& metrics,
                       bool deterministic) {
  out << "sync_round,total_local_iters,loss,grad_norm_sq,eval_metric,messages,scalars,elapsed_ms\n";
  for (const RoundMetrics& row : metrics) {
    out << row.sync_round << ',' << row.total_local_iters << ',' << format_double(row.full_loss)
        << ',' << format_double(row.grad_norm_sq) << ',' << format_double(row.eval_metric) << ','
        << row.ledger.messages << ',' << row.ledger.scalars_transferred << ','
        << (deterministic ? "0" : format_double(row.elapsed_ms)) << '\n';
  }
}

std::string SweepTable::to_csv() const {
  std::string out = "algo,q,rounds_to_target\n";
  for (const SweepCell& cell : cells) {
    out += to_string(cell.algo);
    out += ',' + std::to_string(cell.q) + ',';
    out += cell.dnf ? std::to_string(max_rounds + 1) : std::to_string(cell.rounds_to_target);
    out += '\n';
  }
  return out;
}

std::string SweepTable::to_text() const {
  char buf[96];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-10s %6s %18s\n", "algo", "Q", "rounds-to-target");
  out += buf;
  for (const SweepCell& cell : cells) {
    if (cell.dnf)
      std::snprintf(buf, sizeof buf, "%-10s %6d %18s\n", to_string(cell.algo).c_str(), cell.q, "-");
    else
      std::snprintf(buf, sizeof buf, "%-10s %6d %18d\n", to_string(cell.algo).c_str(), cell.q,
                    cell.rounds_to_target);
    out += buf;
  }
  return out;
}

}  // namespace fedbcd
