#include "scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "aperm/errors.hpp"
#include "aperm/parallel.hpp"
#include "aperm/rng.hpp"

namespace aperm::sim {

namespace {

std::vector<double> normal_draws(std::size_t n, double mean, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(mean, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = normal(rng);
  return out;
}

double log2_or_missing(double p) { return std::isnan(p) ? kMissing : std::log2(p); }

template <typename Fn>
std::vector<Replicate> sweep(const std::vector<double>& grid, std::size_t reps, std::size_t threads,
                             Fn&& one) {
  if (grid.empty()) throw DomainError("scenario grid is empty");
  if (reps == 0) throw DomainError("scenario needs at least one replicate");
  std::vector<Replicate> out(grid.size() * reps);
  parallel_for(out.size(), threads, [&](std::size_t idx) {
    const std::size_t g = idx / reps;
    const std::size_t rep = idx % reps;
    Replicate r = one(grid[g], idx);
    r.x = grid[g];
    r.rep = rep;
    out[idx] = r;
  });
  return out;
}

std::vector<std::string> group_labels(std::size_t k, std::size_t m) {
  std::vector<std::string> labels;
  labels.reserve(k * m);
  for (std::size_t g = 0; g < k; ++g) {
    for (std::size_t i = 0; i < m; ++i) labels.push_back("g" + std::to_string(g));
  }
  return labels;
}

Eigen::VectorXd sin_profile(const Eigen::VectorXd& grid) {
  return (std::numbers::pi * grid.array()).sin().matrix();
}

}  // namespace

std::vector<SummaryRow> summarize(std::span<const Replicate> replicates) {
  std::vector<SummaryRow> rows;
  for (const auto& r : replicates) {
    auto it = std::find_if(rows.begin(), rows.end(), [&r](const SummaryRow& s) { return s.x == r.x; });
    if (it == rows.end()) {
      rows.push_back(SummaryRow{});
      rows.back().x = r.x;
    }
  }
  for (auto& row : rows) {
    const auto mean_of = [&](double Replicate::*field, bool log) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& r : replicates) {
        if (r.x != row.x || std::isnan(r.*field)) continue;
        sum += log ? log2_or_missing(r.*field) : r.*field;
        ++count;
      }
      return count == 0 ? kMissing : sum / static_cast<double>(count);
    };
    row.reps = static_cast<std::size_t>(
        std::count_if(replicates.begin(), replicates.end(), [&row](const Replicate& r) { return r.x == row.x; }));
    row.mean_p_raw = mean_of(&Replicate::p_raw, false);
    row.mean_p_adjusted = mean_of(&Replicate::p_adjusted, false);
    row.mean_p_mc = mean_of(&Replicate::p_mc, false);
    row.mean_p_classical = mean_of(&Replicate::p_classical, false);
    row.mean_log2_raw = mean_of(&Replicate::p_raw, true);
    row.mean_log2_adjusted = mean_of(&Replicate::p_adjusted, true);
    row.mean_log2_mc = mean_of(&Replicate::p_mc, true);
    row.mean_log2_classical = mean_of(&Replicate::p_classical, true);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<Replicate> run_uni_two_sample(const UniTwoSampleConfig& cfg) {
  const SampleSplit split(cfg.m1, cfg.m2);
  return sweep(cfg.mu, cfg.reps, cfg.threads, [&](double mu, std::size_t idx) {
    auto rng = substream(cfg.seed, Stream::data, idx);
    std::vector<double> a = normal_draws(cfg.m1, 0.0, rng);
    const std::vector<double> b = normal_draws(cfg.m2, mu, rng);
    Replicate r;
    r.p_classical = t_test_pvalue(a, b);
    a.insert(a.end(), b.begin(), b.end());
    const UnivariateStatistic stat(a);
    const double t = stat.evaluate(canonical_signs(cfg.m1, cfg.m2));
    r.p_raw = univariate_tail_bound(TestStatistic{t, stat.pooled_sd(), StatisticKind::univariate}, split);
    r.p_adjusted = analytic_beta_adjust(r.p_raw, split);
    if (cfg.mc_perms > 0) {
      const StatisticFn fn = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
      r.p_mc = mc_pvalue(fn, t, split.n(), cfg.m1, cfg.mc_perms,
                         derive_seed(cfg.seed, Stream::monte_carlo, idx))
                   .p_hat;
    }
    return r;
  });
}

std::vector<Replicate> run_uni_ksample(const UniKSampleConfig& cfg) {
  if (cfg.k < 2 || cfg.n < 1) throw DomainError("need k >= 2 groups of n >= 1");
  return sweep(cfg.shift, cfg.reps, cfg.threads, [&](double shift, std::size_t idx) {
    auto rng = substream(cfg.seed, Stream::data, idx);
    std::vector<std::vector<double>> groups(cfg.k);
    LabeledSample sample;
    std::vector<double> values;
    for (std::size_t g = 0; g < cfg.k; ++g) {
      groups[g] = normal_draws(cfg.n, g + 1 == cfg.k ? shift : 0.0, rng);
      values.insert(values.end(), groups[g].begin(), groups[g].end());
    }
    sample.items = std::move(values);
    sample.labels = group_labels(cfg.k, cfg.n);
    TestOptions opt;
    opt.seed = derive_seed(cfg.seed, Stream::calibration, idx);
    opt.r = cfg.r;
    opt.mc_perms = cfg.mc_perms;
    const PValueReport rep = global_test(sample, opt);
    Replicate r;
    r.p_raw = rep.p_raw;
    r.p_adjusted = rep.p_adjusted;
    if (rep.p_mc) r.p_mc = rep.p_mc->p_hat;
    r.p_classical = f_test_pvalue(groups);
    return r;
  });
}

SymOperator exponential_kernel(const Eigen::VectorXd& grid, double length, double variance) {
  const Eigen::Index g = grid.size();
  Eigen::MatrixXd k(g, g);
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) {
      k(i, j) = variance * std::exp(-std::fabs(grid[i] - grid[j]) / length);
    }
  }
  return SymOperator(k);
}

SymOperator gaussian_kernel(const Eigen::VectorXd& grid, double length, double variance,
                            double nugget) {
  const Eigen::Index g = grid.size();
  Eigen::MatrixXd k(g, g);
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) {
      const double d = grid[i] - grid[j];
      k(i, j) = variance * std::exp(-d * d / (2.0 * length * length)) + (i == j ? nugget : 0.0);
    }
  }
  return SymOperator(k);
}

std::vector<Replicate> run_curves_mean(const CurvesMeanConfig& cfg) {
  const Eigen::VectorXd grid = uniform_grid(cfg.grid_points);
  const Eigen::MatrixXd root = matrix_sqrt(exponential_kernel(grid, 0.3)).matrix();
  const NormSpec norm(NormSpec::Space::function, cfg.q);
  return sweep(cfg.shift, cfg.reps, cfg.threads, [&](double shift, std::size_t idx) {
    const GridCurve zero(grid, Eigen::VectorXd::Zero(grid.size()));
    const GridCurve shifted(grid, shift * sin_profile(grid));
    const std::uint64_t data_seed = derive_seed(cfg.seed, Stream::data, idx);
    auto curves = simulate_gaussian_curves_sqrt(zero, root, cfg.n, derive_seed(data_seed, Stream::data, 0));
    const auto second = simulate_gaussian_curves_sqrt(shifted, root, cfg.n, derive_seed(data_seed, Stream::data, 1));
    curves.insert(curves.end(), second.begin(), second.end());
    LabeledSample sample;
    sample.items = std::move(curves);
    sample.labels = group_labels(2, cfg.n);
    TestOptions opt;
    opt.norm = norm;
    opt.seed = derive_seed(cfg.seed, Stream::calibration, idx);
    opt.r = cfg.r;
    opt.mc_perms = cfg.mc_perms;
    const PValueReport rep = two_sample_test(sample, opt);
    Replicate r;
    r.p_raw = rep.p_raw;
    r.p_adjusted = rep.p_adjusted;
    if (rep.p_mc) r.p_mc = rep.p_mc->p_hat;
    return r;
  });
}

OperatorPair procrustes_operators(const Eigen::VectorXd& grid) {
  return OperatorPair{exponential_kernel(grid, 0.3, 1.0), gaussian_kernel(grid, 0.2, 1.2, 0.05)};
}

std::vector<Replicate> run_procrustes(const ProcrustesConfig& cfg) {
  const Eigen::VectorXd grid = uniform_grid(cfg.grid_points);
  const OperatorPair ops = procrustes_operators(grid);
  const ProcrustesAlignment align = procrustes_align(ops.sigma_a, ops.sigma_b);
  const NormSpec norm(NormSpec::Space::schatten, cfg.q);
  const GridCurve zero(grid, Eigen::VectorXd::Zero(grid.size()));
  return sweep(cfg.gamma, cfg.reps, cfg.threads, [&](double gamma, std::size_t idx) {
    // Sigma(gamma) = L L^T with L = Sigma_a^{1/2} + gamma Delta.
    const Eigen::MatrixXd root_b = align.sqrt_a.matrix() + gamma * align.delta;
    const std::uint64_t data_seed = derive_seed(cfg.seed, Stream::data, idx);
    auto curves = simulate_gaussian_curves_sqrt(zero, align.sqrt_a.matrix(), cfg.n,
                                                derive_seed(data_seed, Stream::data, 0));
    const auto second =
        simulate_gaussian_curves_sqrt(zero, root_b, cfg.n, derive_seed(data_seed, Stream::data, 1));
    curves.insert(curves.end(), second.begin(), second.end());
    LabeledSample sample;
    sample.items = std::move(curves);
    sample.labels = group_labels(2, cfg.n);
    const LabeledSample operators = curves_to_rank_one_operators(sample);
    TestOptions opt;
    opt.norm = norm;
    opt.seed = derive_seed(cfg.seed, Stream::calibration, idx);
    opt.r = cfg.r;
    opt.mc_perms = cfg.mc_perms;
    const PValueReport rep = two_sample_test(operators, opt);
    Replicate r;
    r.p_raw = rep.p_raw;
    r.p_adjusted = rep.p_adjusted;
    if (rep.p_mc) r.p_mc = rep.p_mc->p_hat;
    return r;
  });
}

std::vector<Replicate> run_null_calibration(const NullCalibrationConfig& cfg) {
  const Eigen::VectorXd grid = uniform_grid(cfg.grid_points);
  const Eigen::MatrixXd root = matrix_sqrt(exponential_kernel(grid, 0.3)).matrix();
  const GridCurve zero(grid, Eigen::VectorXd::Zero(grid.size()));
  const bool ops = cfg.kind == NullKind::operators;
  const NormSpec norm(ops ? NormSpec::Space::schatten : NormSpec::Space::function, cfg.q);
  return sweep({0.0}, cfg.reps, cfg.threads, [&](double, std::size_t idx) {
    const std::size_t per_group = ops ? cfg.n * cfg.group_size : cfg.n;
    const std::uint64_t data_seed = derive_seed(cfg.seed, Stream::data, idx);
    LabeledSample sample;
    sample.items = simulate_gaussian_curves_sqrt(zero, root, 2 * per_group, data_seed);
    sample.labels = group_labels(2, per_group);
    if (ops) sample = curves_to_operators(sample, cfg.group_size, data_seed);
    TestOptions opt;
    opt.norm = norm;
    opt.seed = derive_seed(cfg.seed, Stream::calibration, idx);
    opt.r = cfg.r;
    const PValueReport rep = two_sample_test(sample, opt);
    Replicate r;
    r.p_raw = rep.p_raw;
    r.p_adjusted = rep.p_adjusted;
    return r;
  });
}

// ---------------------------------------------------------------------------

double t_test_pvalue(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 1 || b.size() < 1 || a.size() + b.size() < 3) {
    throw DomainError("t-test needs at least three observations");
  }
  const auto mean = [](std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double ma = mean(a);
  const double mb = mean(b);
  double ss = 0.0;
  for (const double v : a) ss += (v - ma) * (v - ma);
  for (const double v : b) ss += (v - mb) * (v - mb);
  const double df = static_cast<double>(a.size() + b.size() - 2);
  const double se = std::sqrt(ss / df * (1.0 / static_cast<double>(a.size()) +
                                         1.0 / static_cast<double>(b.size())));
  if (!(se > 0.0)) return ma == mb ? 1.0 : 0.0;
  const double t = std::fabs(ma - mb) / se;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

double f_test_pvalue(std::span<const std::vector<double>> groups) {
  const std::size_t k = groups.size();
  std::size_t n = 0;
  double total = 0.0;
  for (const auto& g : groups) {
    n += g.size();
    total += std::accumulate(g.begin(), g.end(), 0.0);
  }
  if (k < 2 || n <= k) throw DomainError("F-test needs k >= 2 and more observations than groups");
  const double grand = total / static_cast<double>(n);
  double between = 0.0;
  double within = 0.0;
  for (const auto& g : groups) {
    const double m = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (const double v : g) within += (v - m) * (v - m);
  }
  const double df1 = static_cast<double>(k - 1);
  const double df2 = static_cast<double>(n - k);
  if (!(within > 0.0)) return between > 0.0 ? 0.0 : 1.0;
  const double f = (between / df1) / (within / df2);
  const boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

KsResult ks_uniform(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw DomainError("KS test needs data");
  std::vector<double> u(values.begin(), values.end());
  std::sort(u.begin(), u.end());
  double d = 0.0;
  const auto nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::clamp(u[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / nd - x, x - static_cast<double>(i) / nd});
  }
  const double root_n = std::sqrt(nd);
  const double lambda = (root_n + 0.12 + 0.11 / root_n) * d;
  double q = 0.0;
  if (lambda < 0.2) {
    q = 1.0;
  } else {
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
      const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
      q += term;
      if (std::fabs(term) < 1e-12) break;
      sign = -sign;
    }
    q = std::clamp(2.0 * q, 0.0, 1.0);
  }
  return KsResult{d, q};
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman needs paired data");
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------

LabeledSample crbd_bench_sample(const CrbdBenchConfig& cfg) {
  if (cfg.dim == 0 || cfg.k < 2 || cfg.blocks < 1 || cfg.per_cell < 2) {
    throw DomainError("benchmark needs dim >= 1, k >= 2, blocks >= 1, per_cell >= 2");
  }
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  std::vector<Eigen::VectorXd> items;
  LabeledSample sample;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    for (std::size_t l = 0; l < cfg.k; ++l) {
      // Treatment-specific diagonal scaling; no decomposition needed.
      Eigen::VectorXd scale(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        scale[j] = 1.0 + 0.1 * static_cast<double>(l) * std::cos(static_cast<double>(j)) /
                             static_cast<double>(cfg.k);
      }
      auto rng = substream(cfg.seed, Stream::data, b * cfg.k + l);
      std::normal_distribution<double> normal;
      for (std::size_t i = 0; i < cfg.per_cell; ++i) {
        Eigen::VectorXd x(d);
        for (Eigen::Index j = 0; j < d; ++j) x[j] = scale[j] * normal(rng);
        items.push_back(std::move(x));
        sample.labels.push_back("t" + std::to_string(l));
        sample.design.block.push_back("b" + std::to_string(b));
      }
    }
  }
  sample.items = std::move(items);
  return curves_to_rank_one_operators(sample);
}

CrbdBenchReport run_crbd_bench(const CrbdBenchConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  if (cfg.timed_perms == 0) throw DomainError("timed_perms must be positive");
  const LabeledSample sample = crbd_bench_sample(cfg);
  CrbdBenchReport report;
  report.pairings = cfg.k * (cfg.k - 1) / 2;

  CrbdOptions opt;
  opt.test.norm = NormSpec(NormSpec::Space::schatten, cfg.q);
  opt.test.seed = cfg.seed;
  opt.test.bounds.calibrate = false;
  opt.test.scale_mode = ScaleMode::pooled;

  reset_decomposition_count();
  const auto t0 = clock::now();
  const CrbdResult analytic = crbd_test(sample, opt);
  const auto t1 = clock::now();
  report.analytic_seconds = seconds(t0, t1);
  report.analytic_decompositions = decomposition_count();
  for (const auto& r : analytic.pairwise.reports) report.statistics.push_back(r.statistic);

  reset_decomposition_count();
  CrbdOptions exact = opt;
  exact.test.scale_mode = ScaleMode::pairwise;
  (void)crbd_test(sample, exact);
  report.exact_scale_decompositions = decomposition_count();

  reset_decomposition_count();
  CrbdOptions calibrated = opt;
  calibrated.test.bounds.calibrate = true;
  (void)crbd_test(sample, calibrated);
  report.calibrated_decompositions = decomposition_count();

  // Monte-Carlo permutations: one synchronized sign vector per block, applied
  // to every pairing in that block, one decomposition per (pairing, block).
  const auto& ops = std::get<std::vector<SymOperator>>(sample.items);
  const auto levels = distinct_levels(sample.labels);
  const auto level_of = level_indices(sample.labels, levels);
  const auto blocks = distinct_levels(sample.design.block);
  const auto block_of = level_indices(sample.design.block, blocks);
  std::vector<std::vector<std::vector<std::size_t>>> cells(
      blocks.size(), std::vector<std::vector<std::size_t>>(levels.size()));
  for (std::size_t a = 0; a < ops.size(); ++a) cells[block_of[a]][level_of[a]].push_back(a);
  const auto pairs = level_pairs(levels.size());
  const NormSpec norm = opt.test.norm;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  Eigen::MatrixXd sum(d, d);
  double sink = 0.0;

  reset_decomposition_count();
  const auto t2 = clock::now();
  for (std::size_t perm = 0; perm < cfg.timed_perms; ++perm) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto rng = substream(cfg.seed, Stream::monte_carlo, perm * blocks.size() + b);
      const Signs signs = sample_sign_vector(2 * cfg.per_cell, rng);
      for (const auto& [i, j] : pairs) {
        sum.setZero();
        const auto& ci = cells[b][i];
        const auto& cj = cells[b][j];
        for (std::size_t a = 0; a < ci.size(); ++a) {
          sum += static_cast<double>(signs[a]) * ops[ci[a]].matrix();
        }
        for (std::size_t a = 0; a < cj.size(); ++a) {
          sum += static_cast<double>(signs[ci.size() + a]) * ops[cj[a]].matrix();
        }
        sink += schatten_norm_symmetric(sum, norm);
      }
    }
  }
  const auto t3 = clock::now();
  (void)sink;
  report.per_perm_seconds = seconds(t2, t3) / static_cast<double>(cfg.timed_perms);
  report.per_perm_decompositions = decomposition_count() / cfg.timed_perms;
  report.mc_permutations = report.pairings * cfg.n_perms;
  report.mc_extrapolated_seconds = report.per_perm_seconds * static_cast<double>(report.mc_permutations);
  report.mc_extrapolated_decompositions = report.per_perm_decompositions * report.mc_permutations;
  report.speedup = report.analytic_seconds > 0.0 ? report.mc_extrapolated_seconds / report.analytic_seconds
                                                 : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace aperm::sim
