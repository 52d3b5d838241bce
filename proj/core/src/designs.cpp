#include "aperm/designs.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "aperm/errors.hpp"
#include "aperm/parallel.hpp"
#include "aperm/rng.hpp"
#include "design_engine.hpp"

namespace aperm {

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::univariate:
      return "univariate";
    case Method::commutative:
      return "commutative";
    case Method::noncommutative:
      return "noncommutative";
    case Method::synchronized:
      return "synchronized";
  }
  return "unknown";
}

const char* to_string(Correction c) noexcept {
  switch (c) {
    case Correction::none:
      return "none";
    case Correction::bonferroni:
      return "bonferroni";
    case Correction::holm:
      return "holm";
  }
  return "unknown";
}

const char* to_string(ScaleMode s) noexcept {
  return s == ScaleMode::pooled ? "pooled" : "pairwise";
}

// ---------------------------------------------------------------------------

std::vector<double> bonferroni(std::span<const double> p) {
  const auto m = static_cast<double>(p.size());
  std::vector<double> out;
  out.reserve(p.size());
  for (const double v : p) out.push_back(std::min(1.0, m * v));
  return out;
}

std::vector<double> holm(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&p](std::size_t a, std::size_t b) {
    return p[a] < p[b];
  });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const double v = std::min(1.0, static_cast<double>(m - rank) * p[order[rank]]);
    running = std::max(running, v);
    out[order[rank]] = running;
  }
  return out;
}

std::vector<double> apply_correction(std::span<const double> p, Correction c) {
  switch (c) {
    case Correction::bonferroni:
      return bonferroni(p);
    case Correction::holm:
      return holm(p);
    case Correction::none:
      break;
  }
  return {p.begin(), p.end()};
}

namespace {

void apply_correction(PairwiseResult& result, Correction c) {
  std::vector<double> p;
  p.reserve(result.reports.size());
  for (const auto& r : result.reports) p.push_back(r.p_adjusted);
  const auto corrected = apply_correction(p, c);
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    result.reports[i].p_corrected = corrected[i];
    result.reports[i].correction = c;
  }
}

std::string pair_name(const std::vector<std::string>& levels, std::size_t i, std::size_t j) {
  return levels[i] + " vs " + levels[j];
}

std::vector<std::vector<double>> scalar_groups(const LabeledSample& sample,
                                               std::vector<std::string>& levels) {
  const auto& values = std::get<std::vector<double>>(sample.items);
  levels = distinct_levels(sample.labels);
  const auto idx = level_indices(sample.labels, levels);
  std::vector<std::vector<double>> groups(levels.size());
  for (std::size_t a = 0; a < values.size(); ++a) groups[idx[a]].push_back(values[a]);
  return groups;
}

PValueReport univariate_pair(const std::vector<double>& gi, const std::vector<double>& gj,
                             const TestOptions& opt, std::size_t pair_index) {
  std::vector<double> pooled = gi;
  pooled.insert(pooled.end(), gj.begin(), gj.end());
  const SampleSplit split(gi.size(), gj.size());
  const UnivariateStatistic stat(pooled);
  const double t = stat.evaluate(canonical_signs(split.m1(), split.m2()));
  PValueReport r;
  r.statistic = t;
  r.scale = stat.pooled_sd();
  r.method = Method::univariate;
  r.p_raw = univariate_tail_bound(TestStatistic{t, r.scale, StatisticKind::univariate}, split);
  r.p_adjusted = opt.bounds.calibrate ? analytic_beta_adjust(r.p_raw, split) : r.p_raw;
  r.p_corrected = r.p_adjusted;
  if (opt.mc_perms > 0) {
    const StatisticFn fn = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
    r.p_mc = mc_pvalue(fn, t, split.n(), split.m1(), opt.mc_perms,
                       derive_seed(opt.seed, Stream::monte_carlo, pair_index));
  }
  return r;
}

// Same error category, message prefixed with the pairing.
[[noreturn]] void rethrow_for_pair(const Error& e, const std::string& pair) {
  const std::string msg = "pair " + pair + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::degenerate_data:
      throw DegenerateDataError(msg);
    case ErrorKind::unsupported_design:
      throw UnsupportedDesignError(msg);
    case ErrorKind::calibration_failure:
      throw CalibrationError(msg);
    case ErrorKind::numeric:
      throw NumericError(msg);
    case ErrorKind::size:
      throw SizeError(msg);
    case ErrorKind::parse:
      throw ParseError(msg);
    case ErrorKind::domain:
      break;
  }
  throw DomainError(msg);
}

std::size_t require_levels(std::size_t k) {
  if (k < 2) throw DomainError("need at least two labels");
  return k;
}

}  // namespace

// ---------------------------------------------------------------------------

namespace detail {

BlockLayout make_layout(const LabeledSample& sample) {
  sample.validate();
  BlockLayout layout;
  layout.levels = distinct_levels(sample.labels);
  const auto li = level_indices(sample.labels, layout.levels);
  std::vector<std::size_t> bi(sample.size(), 0);
  if (sample.design.has_block()) {
    layout.blocks = distinct_levels(sample.design.block);
    bi = level_indices(sample.design.block, layout.blocks);
  } else {
    layout.blocks = {"all"};
  }
  layout.cells.assign(layout.blocks.size(),
                      std::vector<std::vector<std::size_t>>(layout.levels.size()));
  for (std::size_t a = 0; a < sample.size(); ++a) layout.cells[bi[a]][li[a]].push_back(a);
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    for (std::size_t l = 0; l < layout.levels.size(); ++l) {
      if (layout.cells[b][l].empty()) {
        throw UnsupportedDesignError("treatment '" + layout.levels[l] + "' is missing from block '" +
                                     layout.blocks[b] + "'");
      }
    }
  }
  return layout;
}

BanachItems to_banach(const ItemSet& items, const std::vector<std::size_t>& indices) {
  return std::visit(
      [&indices](const auto& list) -> BanachItems {
        using T = typename std::decay_t<decltype(list)>::value_type;
        if constexpr (std::is_same_v<T, double>) {
          std::vector<Eigen::VectorXd> out;
          out.reserve(indices.size());
          for (const auto i : indices) out.push_back(Eigen::VectorXd::Constant(1, list.at(i)));
          return out;
        } else {
          std::vector<T> out;
          out.reserve(indices.size());
          for (const auto i : indices) out.push_back(list.at(i));
          return out;
        }
      },
      items);
}

PairEngine::PairEngine(const ItemSet& items, const BlockLayout& layout, std::size_t i,
                       std::size_t j, const NormSpec& spec) {
  sums_.reserve(layout.blocks.size());
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    const auto& ci = layout.cells[b][i];
    const auto& cj = layout.cells[b][j];
    if (ci.size() != cj.size()) {
      throw UnsupportedDesignError("Banach-space bounds need balanced cells: '" +
                                   layout.levels[i] + "' and '" + layout.levels[j] +
                                   "' differ in size in block '" + layout.blocks[b] + "'");
    }
    std::vector<std::size_t> idx = ci;
    idx.insert(idx.end(), cj.begin(), cj.end());
    sums_.emplace_back(to_banach(items, idx), spec);
    offsets_.push_back(positions_);
    strata_.push_back(Stratum{idx.size(), ci.size()});
    positions_ += idx.size();
  }
}

double PairEngine::evaluate(std::span<const Sign> signs) const {
  if (signs.size() != positions_) throw DomainError("sign vector does not match the design");
  double total = 0.0;
  for (std::size_t b = 0; b < sums_.size(); ++b) {
    total += sums_[b].evaluate(signs.subspan(offsets_[b], strata_[b].size));
  }
  return total;
}

double PairEngine::observed() const {
  Signs signs;
  signs.reserve(positions_);
  for (const auto& s : strata_) {
    const auto c = canonical_signs(s.positives, s.size - s.positives);
    signs.insert(signs.end(), c.begin(), c.end());
  }
  return evaluate(signs);
}

double PairEngine::pairwise_scale() const {
  double total = 0.0;
  for (const auto& s : sums_) total += s.scale();
  return total;
}

std::vector<double> pooled_block_scales(const ItemSet& items, const BlockLayout& layout,
                                        const NormSpec& spec) {
  std::vector<double> out;
  out.reserve(layout.blocks.size());
  for (const auto& block : layout.cells) {
    std::vector<std::size_t> idx;
    for (const auto& cell : block) idx.insert(idx.end(), cell.begin(), cell.end());
    out.push_back(BanachSum(to_banach(items, idx), spec).scale());
  }
  return out;
}

Method banach_method(const ItemSet& items) {
  return item_kind(items) == ItemKind::op ? Method::noncommutative : Method::commutative;
}

double banach_bound(double t, double s, Method method, const BoundConfig& cfg) {
  const TestStatistic stat{t, s, StatisticKind::banach_sum};
  return method == Method::noncommutative ? noncommutative_tail_bound(stat, cfg)
                                  : commutative_tail_bound(stat, cfg);
}

void calibrate_report(PValueReport& report, const CalibrationContext& context,
                      const TestOptions& opt, std::uint64_t seed) {
  if (!opt.bounds.calibrate) {
    report.p_adjusted = report.p_raw;
    report.p_corrected = report.p_adjusted;
    return;
  }
  try {
    report.calibration = calibrate(context, opt.r, seed);
    report.p_adjusted = empirical_beta_transform(report.p_raw, *report.calibration);
  } catch (const CalibrationError& e) {
    if (opt.strict) throw;
    report.calibration.reset();
    report.p_adjusted = report.p_raw;
    report.flags.push_back(std::string("calibration failed, raw bound reported: ") + e.what());
  }
  report.p_corrected = report.p_adjusted;
}

BanachDesignResult run_banach_design(const ItemSet& items, const BlockLayout& layout,
                                     const TestOptions& opt, bool pairwise, bool global) {
  opt.bounds.validate();
  const std::size_t k = require_levels(layout.levels.size());
  const auto pairs = level_pairs(k);
  const Method method = banach_method(items);

  std::vector<std::unique_ptr<PairEngine>> engines(pairs.size());
  std::vector<double> observed(pairs.size(), 0.0);
  std::vector<double> scales(pairs.size(), 0.0);
  std::vector<std::vector<Stratum>> strata(pairs.size());
  std::vector<double> pooled;
  if (opt.scale_mode == ScaleMode::pooled) pooled = pooled_block_scales(items, layout, opt.norm);
  const double pooled_total = std::accumulate(pooled.begin(), pooled.end(), 0.0);

  // Engines hold copies of the items; keep them only if the global test
  // needs to redraw statistics.
  const bool keep_engines = global && (opt.bounds.calibrate || opt.mc_perms > 0);

  BanachDesignResult result;
  result.pairwise.levels = layout.levels;
  if (pairwise) result.pairwise.reports.resize(pairs.size());

  const auto report_pair = [&](std::size_t p, std::size_t i, std::size_t j) {
    PValueReport& r = result.pairwise.reports[p];
    r.name = pair_name(layout.levels, i, j);
    r.statistic = observed[p];
    r.scale = scales[p];
    r.norm = opt.norm;
    r.method = method;
    r.p_raw = banach_bound(observed[p], scales[p], method, opt.bounds);
    const PairEngine& eng = *engines[p];
    const double s = scales[p];
    CalibrationContext ctx{
        eng.strata(), [&eng](std::span<const Sign> signs) { return eng.evaluate(signs); },
        [s, method, &opt](double t) { return banach_bound(t, s, method, opt.bounds); }};
    calibrate_report(r, ctx, opt, derive_seed(opt.seed, Stream::calibration, p));
    if (opt.mc_perms > 0) {
      r.p_mc = mc_pvalue(ctx.statistic, observed[p], eng.strata(), opt.mc_perms,
                         derive_seed(opt.seed, Stream::monte_carlo, p));
    }
    if (opt.scale_mode == ScaleMode::pooled) r.flags.push_back("pooled bound scale");
    if (layout.blocks.size() > 1) r.flags.push_back("statistics and scales summed over blocks");
  };

  parallel_for(pairs.size(), opt.threads, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    try {
      engines[p] = std::make_unique<PairEngine>(items, layout, i, j, opt.norm);
      observed[p] = engines[p]->observed();
      strata[p] = engines[p]->strata();
      scales[p] = opt.scale_mode == ScaleMode::pooled ? pooled_total : engines[p]->pairwise_scale();
      if (!(scales[p] > 0.0)) {
        throw DegenerateDataError("all items of the pairing are identical");
      }
      if (pairwise) report_pair(p, i, j);
      if (!keep_engines) engines[p].reset();
    } catch (const Error& e) {
      rethrow_for_pair(e, pair_name(layout.levels, i, j));
    }
  });
  if (pairwise) apply_correction(result.pairwise, opt.correction);
  if (!global) return result;

  for (const auto& st : strata) {
    for (std::size_t b = 0; b < st.size(); ++b) {
      if (st[b].size != strata.front()[b].size) {
        throw UnsupportedDesignError("synchronized global test needs equal cell sizes");
      }
    }
  }
  PValueReport g;
  g.name = "global";
  g.norm = opt.norm;
  g.method = Method::synchronized;
  double t2 = 0.0;
  double s2 = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    t2 += observed[p] * observed[p];
    s2 += scales[p] * scales[p];
  }
  g.statistic = std::sqrt(t2);
  g.scale = s2;
  g.p_raw = sync_tail_bound(TestStatistic{g.statistic, s2, StatisticKind::sync_global}, opt.bounds);
  const StatisticFn global_fn = [&engines](std::span<const Sign> signs) {
    double total = 0.0;
    for (const auto& e : engines) {
      const double v = e->evaluate(signs);
      total += v * v;
    }
    return std::sqrt(total);
  };
  const BoundConfig cfg = opt.bounds;
  CalibrationContext ctx{strata.front(), global_fn, [s2, cfg](double t) {
                           return sync_tail_bound(TestStatistic{t, s2, StatisticKind::sync_global},
                                                  cfg);
                         }};
  calibrate_report(g, ctx, opt, derive_seed(opt.seed, Stream::calibration, pairs.size()));
  if (opt.mc_perms > 0) {
    g.p_mc = mc_pvalue(global_fn, g.statistic, ctx.strata, opt.mc_perms,
                       derive_seed(opt.seed, Stream::monte_carlo, pairs.size()), opt.threads);
  }
  g.flags.push_back("global statistic: root sum of squared pairwise sum-difference statistics");
  result.global = std::move(g);
  return result;
}

}  // namespace detail

// ---------------------------------------------------------------------------

PairwiseResult pairwise_tests(const LabeledSample& sample, const TestOptions& opt) {
  sample.validate();
  if (item_kind(sample.items) != ItemKind::scalar) {
    LabeledSample one_way = sample;
    one_way.design.block.clear();
    const auto layout = detail::make_layout(one_way);
    return detail::run_banach_design(one_way.items, layout, opt, true, false).pairwise;
  }
  PairwiseResult result;
  const auto groups = scalar_groups(sample, result.levels);
  require_levels(groups.size());
  const auto pairs = level_pairs(groups.size());
  result.reports.resize(pairs.size());
  parallel_for(pairs.size(), opt.threads, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    try {
      result.reports[p] = univariate_pair(groups[i], groups[j], opt, p);
    } catch (const Error& e) {
      rethrow_for_pair(e, pair_name(result.levels, i, j));
    }
    result.reports[p].name = pair_name(result.levels, i, j);
  });
  apply_correction(result, opt.correction);
  return result;
}

PValueReport two_sample_test(const LabeledSample& sample, const TestOptions& opt) {
  const auto levels = distinct_levels(sample.labels);
  if (levels.size() != 2) {
    throw DomainError("two-sample test needs exactly two labels, found " +
                      std::to_string(levels.size()));
  }
  TestOptions o = opt;
  o.correction = Correction::none;
  return pairwise_tests(sample, o).reports.front();
}

PValueReport global_test(const LabeledSample& sample, const TestOptions& opt) {
  sample.validate();
  opt.bounds.validate();
  if (item_kind(sample.items) != ItemKind::scalar) {
    LabeledSample one_way = sample;
    one_way.design.block.clear();
    const auto layout = detail::make_layout(one_way);
    return *detail::run_banach_design(one_way.items, layout, opt, false, true).global;
  }
  std::vector<std::string> levels;
  const auto groups = scalar_groups(sample, levels);
  require_levels(groups.size());
  const Eigen::MatrixXd x = center_columns(build_sync_matrix(groups));
  const std::size_t m = groups.front().size();
  const auto observed = sync_statistic(x, canonical_signs(m, m));
  if (!(observed.scale > 0.0)) {
    throw DegenerateDataError("all groups are constant and equal; the synchronized scale is zero");
  }
  PValueReport r;
  r.name = "global";
  r.method = Method::synchronized;
  r.statistic = observed.value;
  r.scale = observed.scale;
  r.p_raw = sync_tail_bound(observed, opt.bounds);
  const std::size_t index = groups.size() * (groups.size() - 1) / 2;
  const BoundConfig cfg = opt.bounds;
  const double s = observed.scale;
  CalibrationContext ctx{
      {Stratum{2 * m, m}},
      [&x](std::span<const Sign> signs) { return sync_statistic(x, signs).value; },
      [s, cfg](double t) {
        return sync_tail_bound(TestStatistic{t, s, StatisticKind::sync_global}, cfg);
      }};
  detail::calibrate_report(r, ctx, opt, derive_seed(opt.seed, Stream::calibration, index));
  if (opt.mc_perms > 0) {
    r.p_mc = mc_sync_pvalue(x, opt.mc_perms, derive_seed(opt.seed, Stream::monte_carlo, index),
                            opt.threads);
  }
  return r;
}

std::vector<std::vector<double>> log10_lower_triangle(const PairwiseResult& result,
                                                      bool use_corrected) {
  const std::size_t k = result.levels.size();
  const auto pairs = level_pairs(k);
  if (pairs.size() != result.reports.size()) {
    throw DomainError("pairwise result is incomplete");
  }
  std::vector<std::vector<double>> table(k);
  for (std::size_t i = 0; i < k; ++i) table[i].assign(i, 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    const auto& r = result.reports[p];
    table[j][i] = std::log10(use_corrected ? r.p_corrected : r.p_adjusted);
  }
  return table;
}

}  // namespace aperm
