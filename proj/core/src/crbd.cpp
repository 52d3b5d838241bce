#include "aperm/designs.hpp"
#include "aperm/errors.hpp"
#include "design_engine.hpp"

namespace aperm {

CrbdResult crbd_test(const LabeledSample& sample, const CrbdOptions& opt) {
  sample.validate();
  CrbdResult result;
  result.notes.push_back("treatment x block interactions are assumed negligible");

  LabeledSample data = sample;
  if (opt.mode == CrbdMode::covariances) {
    if (opt.test.norm.space() != NormSpec::Space::schatten) {
      throw DomainError("covariance mode needs a Schatten norm");
    }
    const auto kind = item_kind(sample.items);
    if (kind == ItemKind::scalar) {
      throw DomainError("covariance mode needs vectors, curves or operators");
    }
    if (kind != ItemKind::op) {
      if (opt.operator_group_size >= 2) {
        data = curves_to_operators(sample, opt.operator_group_size, opt.test.seed);
        result.notes.push_back("covariance operators from groups of " +
                               std::to_string(opt.operator_group_size) + " curves per cell");
      } else {
        data = curves_to_rank_one_operators(sample);
        result.notes.push_back("rank-one operators centred at their cell means");
      }
    }
  }

  const auto layout = detail::make_layout(data);
  result.blocks = layout.blocks;
  if (layout.blocks.size() == 1) {
    // A single block is the one-way design.
    result.pairwise = pairwise_tests(data, opt.test);
    if (opt.compute_global) result.global = global_test(data, opt.test);
    return result;
  }
  result.notes.push_back("statistics and bound scales summed over " +
                         std::to_string(layout.blocks.size()) + " blocks");
  result.notes.push_back("calibration draws are synchronized within blocks");
  auto out = detail::run_banach_design(data.items, layout, opt.test, true, opt.compute_global);
  result.pairwise = std::move(out.pairwise);
  result.global = std::move(out.global);
  return result;
}

}  // namespace aperm
