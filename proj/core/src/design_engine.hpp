#pragma once

// Shared machinery for one-way and blocked Banach-space designs.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aperm/designs.hpp"

namespace aperm::detail {

/// cells[b][l] lists the item positions of treatment level l in block b.
struct BlockLayout {
  std::vector<std::string> levels;
  std::vector<std::string> blocks;
  std::vector<std::vector<std::vector<std::size_t>>> cells;
};

/// Layout of a sample: treatment = label, block = design.block (or a single
/// block when absent).
[[nodiscard]] BlockLayout make_layout(const LabeledSample& sample);

/// Items at `indices`, scalars promoted to 1-vectors.
[[nodiscard]] BanachItems to_banach(const ItemSet& items, const std::vector<std::size_t>& indices);

/// Statistic of one treatment pairing summed over blocks. Within block b the
/// sign vector covers the pair's items, level i first, then level j.
class PairEngine {
 public:
  PairEngine(const ItemSet& items, const BlockLayout& layout, std::size_t i, std::size_t j,
             const NormSpec& spec);

  [[nodiscard]] double evaluate(std::span<const Sign> signs) const;
  [[nodiscard]] double observed() const;
  /// Sum over blocks of the pair's own bound scale.
  [[nodiscard]] double pairwise_scale() const;
  [[nodiscard]] const std::vector<Stratum>& strata() const noexcept { return strata_; }
  [[nodiscard]] std::size_t positions() const noexcept { return positions_; }

 private:
  std::vector<BanachSum> sums_;
  std::vector<std::size_t> offsets_;
  std::vector<Stratum> strata_;
  std::size_t positions_ = 0;
};

/// Per block: scale of all the block's items centred at the block mean.
[[nodiscard]] std::vector<double> pooled_block_scales(const ItemSet& items,
                                                      const BlockLayout& layout,
                                                      const NormSpec& spec);

[[nodiscard]] Method banach_method(const ItemSet& items);

/// Raw Banach bound for a statistic t with scale s.
[[nodiscard]] double banach_bound(double t, double s, Method method, const BoundConfig& cfg);

struct BanachDesignResult {
  PairwiseResult pairwise;
  std::optional<PValueReport> global;
};

/// Pairwise (and optionally global) Banach tests over a blocked layout.
[[nodiscard]] BanachDesignResult run_banach_design(const ItemSet& items,
                                                   const BlockLayout& layout,
                                                   const TestOptions& opt, bool pairwise,
                                                   bool global);

/// Empirical beta calibration of report.p_raw. Failures fall back to the raw
/// bound with a flag unless opt.strict is set.
void calibrate_report(PValueReport& report, const CalibrationContext& context,
                      const TestOptions& opt, std::uint64_t seed);

}  // namespace aperm::detail
