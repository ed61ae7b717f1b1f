#include "shiftcp/csv.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "shiftcp/errors.hpp"

namespace shiftcp {

void write_eval_csv(std::ostream& out, double alpha, CalibrationMode mode, BalanceStrategy balance,
                    const EvalReport& report, bool header) {
  const auto old_precision = out.precision(10);
  if (header) out << kEvalCsvHeader << '\n';
  out << alpha << ',' << to_string(mode) << ',' << to_string(balance) << ',' << report.coverage << ','
      << report.efficiency << ',';
  if (report.unanswerable_efficiency) out << *report.unanswerable_efficiency;
  out << ',' << report.rejection_rate << ",all," << report.n_evaluated << '\n';
  for (const auto& [domain, d] : report.per_domain) {
    out << alpha << ',' << to_string(mode) << ',' << to_string(balance) << ',' << d.coverage << ',' << d.efficiency
        << ",,," << domain << ',' << d.n << '\n';
  }
  out.precision(old_precision);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string merge_eval_csvs(const std::vector<std::string>& documents) {
  struct Row {
    double alpha;
    std::string mode, balance, text;
  };
  std::vector<Row> rows;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::istringstream in(documents[d]);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (first) {
        if (line != kEvalCsvHeader) {
          throw DataError("report: input " + std::to_string(d + 1) + " does not have the evaluation CSV header");
        }
        first = false;
        continue;
      }
      const auto cells = split_csv_line(line);
      if (cells.size() != 9) throw DataError("report: input " + std::to_string(d + 1) + ": malformed row '" + line + "'");
      Row r;
      try {
        r.alpha = std::stod(cells[0]);
      } catch (const std::exception&) {
        throw DataError("report: input " + std::to_string(d + 1) + ": bad alpha '" + cells[0] + "'");
      }
      r.mode = cells[1];
      r.balance = cells[2];
      r.text = line;
      rows.push_back(std::move(r));
    }
    if (first) throw DataError("report: input " + std::to_string(d + 1) + " is empty");
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.alpha, a.mode, a.balance) < std::tie(b.alpha, b.mode, b.balance);
  });
  std::string out(kEvalCsvHeader);
  out += '\n';
  for (const auto& r : rows) out += r.text + '\n';
  return out;
}

void write_domain_estimate_csv(std::ostream& out, const DomainCountEstimate& estimate,
                               const std::vector<double>& calibration_shares, const std::vector<double>& weights) {
  const auto old_precision = out.precision(10);
  out << kDomainCsvHeader << '\n';
  for (std::size_t k = 0; k < estimate.domains.size(); ++k) {
    out << estimate.domains[k] << ',' << estimate.observed[k] << ',' << estimate.estimated[k] << ','
        << (k < calibration_shares.size() ? calibration_shares[k] : 0.0) << ','
        << (k < weights.size() ? weights[k] : 0.0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace shiftcp
