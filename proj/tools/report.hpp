#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "aperm/designs.hpp"
#include "scenarios.hpp"

namespace aperm::cli {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

[[nodiscard]] json to_json(const McEstimate& mc);
[[nodiscard]] json to_json(const CalibrationRecord& record);
[[nodiscard]] json to_json(const NormSpec& norm);
[[nodiscard]] json to_json(const PValueReport& report);
[[nodiscard]] json to_json(const PairwiseResult& result);
[[nodiscard]] json to_json(const FactorDecision& decision);
[[nodiscard]] json to_json(const CrbdResult& result);
[[nodiscard]] json to_json(const sim::SummaryRow& row);
[[nodiscard]] json to_json(const sim::CrbdBenchReport& report);

[[nodiscard]] std::string norm_name(const NormSpec& norm);

/// Columns: name,method,statistic,scale,p_raw,p_adjusted,p_corrected,p_mc,
/// log2_p,log10_p,flags (log p of p_corrected).
void write_reports_csv(std::ostream& out, const std::vector<PValueReport>& reports);

/// Columns: factor,status,statistic,scale,p_raw,p_value,flags.
void write_decisions_csv(std::ostream& out, const std::vector<FactorDecision>& decisions);

/// Columns: x,reps, then mean_p_<m>, mean_log2_<m>, mean_log10_<m> for
/// m in raw, adjusted, mc, classical. Missing values are empty cells.
void write_summary_csv(std::ostream& out, const std::vector<sim::SummaryRow>& rows);

/// Columns: x,rep,p_raw,p_adjusted,p_mc,p_classical.
void write_replicates_csv(std::ostream& out, const std::vector<sim::Replicate>& reps);

}  // namespace aperm::cli
