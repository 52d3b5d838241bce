#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "aperm/designs.hpp"
#include "aperm/errors.hpp"
#include "aperm/rng.hpp"
#include "design_engine.hpp"

namespace aperm {

namespace {

// Items as columns of a matrix. Operators are flattened column-major.
Eigen::MatrixXd flatten(const ItemSet& items) {
  return std::visit(
      [](const auto& list) -> Eigen::MatrixXd {
        using T = typename std::decay_t<decltype(list)>::value_type;
        const auto n = static_cast<Eigen::Index>(list.size());
        if (list.empty()) return {};
        if constexpr (std::is_same_v<T, double>) {
          Eigen::MatrixXd m(1, n);
          for (Eigen::Index i = 0; i < n; ++i) m(0, i) = list[static_cast<std::size_t>(i)];
          return m;
        } else if constexpr (std::is_same_v<T, Eigen::VectorXd>) {
          Eigen::MatrixXd m(list.front().size(), n);
          for (Eigen::Index i = 0; i < n; ++i) m.col(i) = list[static_cast<std::size_t>(i)];
          return m;
        } else if constexpr (std::is_same_v<T, GridCurve>) {
          Eigen::MatrixXd m(list.front().size(), n);
          for (Eigen::Index i = 0; i < n; ++i) m.col(i) = list[static_cast<std::size_t>(i)].values();
          return m;
        } else {
          const Eigen::Index d = list.front().dim();
          Eigen::MatrixXd m(d * d, n);
          for (Eigen::Index i = 0; i < n; ++i) {
            m.col(i) = list[static_cast<std::size_t>(i)].matrix().reshaped();
          }
          return m;
        }
      },
      items);
}

ItemSet unflatten(const ItemSet& like, const Eigen::MatrixXd& m) {
  return std::visit(
      [&m](const auto& list) -> ItemSet {
        using T = typename std::decay_t<decltype(list)>::value_type;
        std::vector<T> out;
        out.reserve(list.size());
        for (std::size_t i = 0; i < list.size(); ++i) {
          const auto col = m.col(static_cast<Eigen::Index>(i));
          if constexpr (std::is_same_v<T, double>) {
            out.push_back(col[0]);
          } else if constexpr (std::is_same_v<T, Eigen::VectorXd>) {
            out.emplace_back(col);
          } else if constexpr (std::is_same_v<T, GridCurve>) {
            out.emplace_back(list[i].grid(), Eigen::VectorXd(col));
          } else {
            const Eigen::Index d = list[i].dim();
            Eigen::MatrixXd op = col.reshaped(d, d);
            out.emplace_back(0.5 * (op + op.transpose()));
          }
        }
        return out;
      },
      like);
}

struct Grid {
  std::vector<std::size_t> row;
  std::vector<std::size_t> col;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Requires every (row, col) cell exactly once among `members`.
Grid complete_grid(const LabeledSample& sample, const std::vector<std::size_t>& members) {
  std::vector<std::string> r;
  std::vector<std::string> c;
  for (const auto a : members) {
    r.push_back(sample.design.row[a]);
    c.push_back(sample.design.col[a]);
  }
  Grid g;
  const auto rl = distinct_levels(r);
  const auto cl = distinct_levels(c);
  g.row = level_indices(r, rl);
  g.col = level_indices(c, cl);
  g.rows = rl.size();
  g.cols = cl.size();
  if (g.rows * g.cols != members.size()) {
    throw DomainError("row x column grid is incomplete");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!seen.emplace(g.row[i], g.col[i]).second) {
      throw DomainError("row x column cell is observed more than once");
    }
  }
  return g;
}

// Factor statistic of a permuted layout: positions a carry item perm[a].
class FactorStatistic {
 public:
  FactorStatistic(const Eigen::MatrixXd& data, const Eigen::VectorXd& weights, const NormSpec& spec,
                  bool operators, Eigen::Index op_dim, std::size_t k)
      : data_(data), weights_(weights), spec_(spec), operators_(operators), op_dim_(op_dim), k_(k) {}

  double operator()(const std::vector<std::size_t>& level, const std::vector<std::size_t>& perm) const {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(data_.rows(), static_cast<Eigen::Index>(k_));
    for (std::size_t a = 0; a < perm.size(); ++a) {
      sums.col(static_cast<Eigen::Index>(level[a])) += data_.col(static_cast<Eigen::Index>(perm[a]));
    }
    double total = 0.0;
    for (const auto& [i, j] : level_pairs(k_)) {
      const Eigen::VectorXd diff =
          sums.col(static_cast<Eigen::Index>(i)) - sums.col(static_cast<Eigen::Index>(j));
      double norm = 0.0;
      if (operators_) {
        const Eigen::MatrixXd op = diff.reshaped(op_dim_, op_dim_);
        norm = schatten_norm_symmetric(0.5 * (op + op.transpose()), spec_);
      } else {
        norm = weighted_lq_norm(diff, weights_, spec_.q());
      }
      total += norm * norm;
    }
    return std::sqrt(total);
  }

 private:
  const Eigen::MatrixXd& data_;
  const Eigen::VectorXd& weights_;
  NormSpec spec_;
  bool operators_;
  Eigen::Index op_dim_;
  std::size_t k_;
};

// Positions grouped by the joint levels of the fixed factors.
std::vector<std::vector<std::size_t>> strata_of(const std::vector<const std::vector<std::size_t>*>& fixed,
                                                std::size_t n) {
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<std::size_t> key;
    for (const auto* f : fixed) key.push_back((*f)[a]);
    groups[key].push_back(a);
  }
  std::vector<std::vector<std::size_t>> out;
  for (auto& [key, members] : groups) out.push_back(std::move(members));
  return out;
}

std::vector<std::size_t> restricted_permutation(const std::vector<std::vector<std::size_t>>& strata,
                                                std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> values;
  for (const auto& s : strata) {
    values = s;
    std::shuffle(values.begin(), values.end(), rng);
    for (std::size_t i = 0; i < s.size(); ++i) perm[s[i]] = values[i];
  }
  return perm;
}

}  // namespace

LabeledSample center_by_design(const LabeledSample& sample) {
  sample.validate();
  if (!sample.design.has_row() || !sample.design.has_col()) {
    throw DomainError("design centering needs row and column columns");
  }
  std::vector<std::string> blocks(sample.size(), "");
  if (sample.design.has_block()) blocks = sample.design.block;
  const auto block_levels = distinct_levels(blocks);
  const auto block_of = level_indices(blocks, block_levels);
  const Eigen::MatrixXd data = flatten(sample.items);
  Eigen::MatrixXd out = data;
  for (std::size_t b = 0; b < block_levels.size(); ++b) {
    std::vector<std::size_t> members;
    for (std::size_t a = 0; a < sample.size(); ++a) {
      if (block_of[a] == b) members.push_back(a);
    }
    const Grid g = complete_grid(sample, members);
    const Eigen::Index d = data.rows();
    Eigen::MatrixXd row_mean = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(g.rows));
    Eigen::MatrixXd col_mean = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(g.cols));
    Eigen::VectorXd grand = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto x = data.col(static_cast<Eigen::Index>(members[i]));
      row_mean.col(static_cast<Eigen::Index>(g.row[i])) += x;
      col_mean.col(static_cast<Eigen::Index>(g.col[i])) += x;
      grand += x;
    }
    row_mean /= static_cast<double>(g.cols);
    col_mean /= static_cast<double>(g.rows);
    grand /= static_cast<double>(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto a = static_cast<Eigen::Index>(members[i]);
      out.col(a) = data.col(a) - row_mean.col(static_cast<Eigen::Index>(g.row[i])) -
                   col_mean.col(static_cast<Eigen::Index>(g.col[i])) + grand;
    }
  }
  LabeledSample result;
  result.items = unflatten(sample.items, out);
  result.labels = sample.labels;
  result.design = sample.design;
  return result;
}

const char* to_string(FactorStatus s) noexcept {
  switch (s) {
    case FactorStatus::rejected:
      return "rejected";
    case FactorStatus::not_rejected:
      return "not_rejected";
    case FactorStatus::not_tested:
      return "not_tested";
    case FactorStatus::untestable:
      return "untestable";
  }
  return "unknown";
}

std::vector<FactorDecision> latin_square_stepdown(const LabeledSample& sample,
                                                  const StepdownOptions& opt) {
  sample.validate();
  opt.test.bounds.validate();
  if (!(opt.level > 0.0) || !(opt.level < 1.0)) throw DomainError("level must lie in (0, 1)");
  if (!sample.design.has_row() || !sample.design.has_col()) {
    throw DomainError("Latin square needs row and column columns");
  }
  const std::size_t n = sample.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const Grid g = complete_grid(sample, all);
  const auto trt_levels = distinct_levels(sample.labels);
  const std::size_t k = trt_levels.size();
  if (k < 2 || g.rows != k || g.cols != k) {
    throw DomainError("not a Latin square: need k rows, k columns and k treatments");
  }
  const auto trt = level_indices(sample.labels, trt_levels);
  {
    std::set<std::pair<std::size_t, std::size_t>> in_row;
    std::set<std::pair<std::size_t, std::size_t>> in_col;
    for (std::size_t a = 0; a < n; ++a) {
      if (!in_row.emplace(g.row[a], trt[a]).second || !in_col.emplace(g.col[a], trt[a]).second) {
        throw DomainError("not a Latin square: a treatment repeats within a row or column");
      }
    }
  }

  // Grand-centred data; the statistic is unchanged by a common shift.
  const NormSpec& spec = opt.test.norm;
  const bool operators = item_kind(sample.items) == ItemKind::op;
  Eigen::MatrixXd data = flatten(sample.items);
  const Eigen::VectorXd grand = data.rowwise().mean();
  data.colwise() -= grand;
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(operators ? 0 : data.rows());
  Eigen::Index op_dim = 0;
  if (operators) {
    op_dim = std::get<std::vector<SymOperator>>(sample.items).front().dim();
  } else if (const auto* curves = std::get_if<std::vector<GridCurve>>(&sample.items)) {
    if (curves->front().size() >= 2) weights = trapezoid_weights(curves->front().grid());
  }
  // Validates the norm against the item kind and gives the pooled scale.
  const double pooled = BanachSum(detail::to_banach(sample.items, all), spec).scale();
  if (!(pooled > 0.0)) throw DegenerateDataError("all observations are identical");
  const double scale = std::sqrt(static_cast<double>(k * (k - 1) / 2)) * pooled;
  const Method method = detail::banach_method(sample.items);
  const FactorStatistic statistic(data, weights, spec, operators, op_dim, k);

  struct Factor {
    std::string name;
    const std::vector<std::size_t>* level;
    double observed;
  };
  std::vector<Factor> factors{{"row", &g.row, 0.0}, {"column", &g.col, 0.0}, {"treatment", &trt, 0.0}};
  for (auto& f : factors) f.observed = statistic(*f.level, all);
  std::stable_sort(factors.begin(), factors.end(),
                   [](const Factor& a, const Factor& b) { return a.observed > b.observed; });

  const std::size_t testable = k == 2 ? 1 : 2;
  const auto bound = [&](double t) { return detail::banach_bound(t, scale, method, opt.test.bounds); };

  std::vector<FactorDecision> decisions;
  std::vector<const std::vector<std::size_t>*> fixed;
  bool stopped = false;
  for (std::size_t stage = 0; stage < factors.size(); ++stage) {
    const Factor& f = factors[stage];
    FactorDecision d;
    d.factor = f.name;
    d.statistic = f.observed;
    d.scale = scale;
    d.flags.push_back("factor statistic: root sum of squared differences of level sums");
    if (stage >= testable) {
      d.status = FactorStatus::untestable;
      decisions.push_back(std::move(d));
      continue;
    }
    if (stopped) {
      d.status = FactorStatus::not_tested;
      decisions.push_back(std::move(d));
      continue;
    }
    const auto strata = strata_of(fixed, n);
    if (!fixed.empty()) d.flags.push_back("permutations restricted to strata of rejected factors");
    d.p_raw = bound(f.observed);
    const std::uint64_t stage_seed = derive_seed(opt.test.seed, Stream::partition, stage);
    const auto null_statistics = [&](std::size_t count, Stream stream) {
      std::vector<double> stats(count);
      for (std::size_t i = 0; i < count; ++i) {
        auto rng = substream(stage_seed, stream, i);
        stats[i] = statistic(*f.level, restricted_permutation(strata, n, rng));
      }
      return stats;
    };
    if (opt.mode == StepdownMode::monte_carlo) {
      if (opt.n_perms < 1) throw DomainError("n_perms must be positive");
      std::size_t exceed = 0;
      for (const double t : null_statistics(opt.n_perms, Stream::monte_carlo)) {
        if (ties_or_exceeds(t, f.observed)) ++exceed;
      }
      d.p_value = McEstimate::from_counts(exceed, opt.n_perms).p_hat;
    } else if (!opt.test.bounds.calibrate) {
      d.p_value = d.p_raw;
    } else {
      if (opt.test.r < 2) throw DomainError("calibration needs r >= 2 draws");
      try {
        const auto stats = null_statistics(opt.test.r, Stream::calibration);
        d.calibration = calibrate_from_statistics(stats, bound, stage_seed);
        d.p_value = empirical_beta_transform(*d.p_raw, *d.calibration);
      } catch (const CalibrationError& e) {
        if (opt.test.strict) throw;
        d.p_value = d.p_raw;
        d.flags.push_back(std::string("calibration failed, raw bound reported: ") + e.what());
      }
    }
    if (*d.p_value <= opt.level) {
      d.status = FactorStatus::rejected;
      fixed.push_back(f.level);
    } else {
      d.status = FactorStatus::not_rejected;
      stopped = true;
    }
    decisions.push_back(std::move(d));
  }
  return decisions;
}

}  // namespace aperm
