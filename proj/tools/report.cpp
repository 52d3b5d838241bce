#include "report.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace aperm::cli {

namespace {

// JSON has no NaN or infinity; encode them as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json log_pair(double p) {
  if (!(p > 0.0)) return json{{"log2", nullptr}, {"log10", nullptr}};
  return json{{"log2", std::log2(p)}, {"log10", std::log10(p)}};
}

std::string cell(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::string joined(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += "; ";
    out += f;
  }
  // Quote for CSV.
  std::string quoted = "\"";
  for (const char c : out) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

std::string norm_name(const NormSpec& norm) {
  std::string prefix;
  switch (norm.space()) {
    case NormSpec::Space::sequence:
      prefix = "l";
      break;
    case NormSpec::Space::function:
      prefix = "L";
      break;
    case NormSpec::Space::schatten:
      prefix = "S";
      break;
  }
  if (norm.is_infinite()) return prefix + "inf";
  std::ostringstream ss;
  ss << norm.q();
  return prefix + ss.str();
}

json to_json(const McEstimate& mc) {
  return json{{"p_hat", mc.p_hat},
              {"n_perms", mc.n_perms},
              {"std_err", mc.std_err},
              {"exceed_count", mc.exceed_count}};
}

json to_json(const CalibrationRecord& record) {
  json j{{"r", record.r},
         {"seed", record.seed},
         {"null_pvalues", record.null_pvalues},
         {"alpha", record.params.alpha()},
         {"beta", record.params.beta()}};
  return j;
}

json to_json(const NormSpec& norm) {
  return json{{"name", norm_name(norm)}, {"q", number(norm.q())}};
}

json to_json(const PValueReport& r) {
  json j{{"name", r.name},
         {"method", to_string(r.method)},
         {"statistic", number(r.statistic)},
         {"scale", number(r.scale)},
         {"p_raw", number(r.p_raw)},
         {"p_adjusted", number(r.p_adjusted)},
         {"p_corrected", number(r.p_corrected)},
         {"log_p", log_pair(r.p_corrected)},
         {"correction", to_string(r.correction)},
         {"flags", r.flags}};
  j["norm"] = r.norm ? to_json(*r.norm) : json(nullptr);
  j["p_mc"] = r.p_mc ? to_json(*r.p_mc) : json(nullptr);
  j["calibration"] = r.calibration ? to_json(*r.calibration) : json(nullptr);
  return j;
}

json to_json(const PairwiseResult& result) {
  json reports = json::array();
  for (const auto& r : result.reports) reports.push_back(to_json(r));
  json table = json::array();
  for (const auto& row : log10_lower_triangle(result, true)) {
    json cells = json::array();
    for (const double v : row) cells.push_back(number(v));
    table.push_back(cells);
  }
  return json{{"levels", result.levels}, {"reports", reports}, {"log10_lower_triangle", table}};
}

json to_json(const FactorDecision& d) {
  json j{{"factor", d.factor},
         {"status", to_string(d.status)},
         {"statistic", number(d.statistic)},
         {"scale", number(d.scale)},
         {"flags", d.flags}};
  j["p_raw"] = d.p_raw ? number(*d.p_raw) : json(nullptr);
  j["p_value"] = d.p_value ? number(*d.p_value) : json(nullptr);
  j["calibration"] = d.calibration ? to_json(*d.calibration) : json(nullptr);
  return j;
}

json to_json(const CrbdResult& result) {
  json j{{"pairwise", to_json(result.pairwise)}, {"blocks", result.blocks}, {"notes", result.notes}};
  j["global"] = result.global ? to_json(*result.global) : json(nullptr);
  return j;
}

json to_json(const sim::SummaryRow& row) {
  const auto log10_of = [](double log2) { return std::isnan(log2) ? log2 : log2 * std::log10(2.0); };
  return json{{"x", row.x},
              {"reps", row.reps},
              {"mean_p_raw", number(row.mean_p_raw)},
              {"mean_p_adjusted", number(row.mean_p_adjusted)},
              {"mean_p_mc", number(row.mean_p_mc)},
              {"mean_p_classical", number(row.mean_p_classical)},
              {"mean_log2_raw", number(row.mean_log2_raw)},
              {"mean_log2_adjusted", number(row.mean_log2_adjusted)},
              {"mean_log2_mc", number(row.mean_log2_mc)},
              {"mean_log2_classical", number(row.mean_log2_classical)},
              {"mean_log10_raw", number(log10_of(row.mean_log2_raw))},
              {"mean_log10_adjusted", number(log10_of(row.mean_log2_adjusted))},
              {"mean_log10_mc", number(log10_of(row.mean_log2_mc))},
              {"mean_log10_classical", number(log10_of(row.mean_log2_classical))}};
}

json to_json(const sim::CrbdBenchReport& r) {
  return json{{"pairings", r.pairings},
              {"analytic_seconds", r.analytic_seconds},
              {"analytic_decompositions", r.analytic_decompositions},
              {"exact_scale_decompositions", r.exact_scale_decompositions},
              {"calibrated_decompositions", r.calibrated_decompositions},
              {"per_perm_seconds", r.per_perm_seconds},
              {"per_perm_decompositions", r.per_perm_decompositions},
              {"mc_permutations", r.mc_permutations},
              {"mc_extrapolated_seconds", r.mc_extrapolated_seconds},
              {"mc_extrapolated_decompositions", r.mc_extrapolated_decompositions},
              {"speedup", number(r.speedup)},
              {"statistics", r.statistics}};
}

void write_reports_csv(std::ostream& out, const std::vector<PValueReport>& reports) {
  out << "name,method,statistic,scale,p_raw,p_adjusted,p_corrected,p_mc,log2_p,log10_p,flags\n";
  for (const auto& r : reports) {
    out << r.name << ',' << to_string(r.method) << ',' << cell(r.statistic) << ',' << cell(r.scale)
        << ',' << cell(r.p_raw) << ',' << cell(r.p_adjusted) << ',' << cell(r.p_corrected) << ','
        << (r.p_mc ? cell(r.p_mc->p_hat) : "") << ',' << cell(std::log2(r.p_corrected)) << ','
        << cell(std::log10(r.p_corrected)) << ',' << joined(r.flags) << '\n';
  }
}

void write_decisions_csv(std::ostream& out, const std::vector<FactorDecision>& decisions) {
  out << "factor,status,statistic,scale,p_raw,p_value,flags\n";
  for (const auto& d : decisions) {
    out << d.factor << ',' << to_string(d.status) << ',' << cell(d.statistic) << ','
        << cell(d.scale) << ',' << (d.p_raw ? cell(*d.p_raw) : "") << ','
        << (d.p_value ? cell(*d.p_value) : "") << ',' << joined(d.flags) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<sim::SummaryRow>& rows) {
  out << "x,reps";
  for (const char* m : {"raw", "adjusted", "mc", "classical"}) {
    out << ",mean_p_" << m << ",mean_log2_" << m << ",mean_log10_" << m;
  }
  out << '\n';
  const double to10 = std::log10(2.0);
  for (const auto& r : rows) {
    out << cell(r.x) << ',' << r.reps;
    const std::pair<double, double> cols[] = {{r.mean_p_raw, r.mean_log2_raw},
                                              {r.mean_p_adjusted, r.mean_log2_adjusted},
                                              {r.mean_p_mc, r.mean_log2_mc},
                                              {r.mean_p_classical, r.mean_log2_classical}};
    for (const auto& [p, l2] : cols) out << ',' << cell(p) << ',' << cell(l2) << ',' << cell(l2 * to10);
    out << '\n';
  }
}

void write_replicates_csv(std::ostream& out, const std::vector<sim::Replicate>& reps) {
  out << "x,rep,p_raw,p_adjusted,p_mc,p_classical\n";
  for (const auto& r : reps) {
    out << cell(r.x) << ',' << r.rep << ',' << cell(r.p_raw) << ',' << cell(r.p_adjusted) << ','
        << cell(r.p_mc) << ',' << cell(r.p_classical) << '\n';
  }
}

}  // namespace aperm::cli
