#pragma once

// Plain CSV outputs of the CLI: evaluation tables, their merged report, and the
// domain-count estimate.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "shiftcp/calibration.hpp"
#include "shiftcp/domains.hpp"
#include "shiftcp/evaluation.hpp"

namespace shiftcp {

inline constexpr std::string_view kEvalCsvHeader =
    "alpha,mode,balance,coverage,efficiency,unanswerable_efficiency,rejection_rate,scope,n";

// One "all" row followed by one row per domain (scope = domain id). Per-domain
// rows leave unanswerable_efficiency and rejection_rate empty.
void write_eval_csv(std::ostream& out, double alpha, CalibrationMode mode, BalanceStrategy balance,
                    const EvalReport& report, bool header = true);

// Concatenates evaluation CSVs under one header, stably ordered by
// (alpha, mode, balance). Throws DataError on a header mismatch.
std::string merge_eval_csvs(const std::vector<std::string>& documents);

inline constexpr std::string_view kDomainCsvHeader = "domain,observed_n,estimated_n,calibration_share,weight";

void write_domain_estimate_csv(std::ostream& out, const DomainCountEstimate& estimate,
                               const std::vector<double>& calibration_shares, const std::vector<double>& weights);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace shiftcp
