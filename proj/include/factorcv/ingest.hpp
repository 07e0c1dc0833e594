#pragma once

// Daily portfolio return panels from local CSV files, sliced into periods that
// start on the first trading day on or after July 1.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "factorcv/harness.hpp"

namespace factorcv {

using Date = std::chrono::year_month_day;

struct ReturnsPanel {
  std::vector<Date> dates;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
  std::size_t dropped_rows = 0;
  std::string units = "percent";
};

/// A bare numeric matrix, optionally preceded by a header row of labels.
struct PanelMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;
};

PanelMatrix parse_matrix_csv(std::istream& in);
PanelMatrix load_matrix_csv(const std::string& path);
void write_matrix_csv(const PanelMatrix& panel, std::ostream& out);

inline const std::vector<double> kDefaultMissingCodes = {-99.99, -999.0};

/// Header row of labels, first column a date (YYYYMMDD or YYYY-MM-DD), the
/// rest numeric. Rows containing a sentinel are dropped and counted. Dates
/// must be strictly increasing.
ReturnsPanel parse_returns_csv(std::istream& in,
                               const std::vector<double>& missing_codes = kDefaultMissingCodes);
ReturnsPanel load_returns_csv(const std::string& path,
                              const std::vector<double>& missing_codes = kDefaultMissingCodes);
void write_returns_csv(const ReturnsPanel& panel, std::ostream& out);

Date parse_date(const std::string& text);
std::string format_date(Date d);

/// Subtracts the named column from every other column and removes it.
ReturnsPanel subtract_risk_free(const ReturnsPanel& panel, const std::string& column);

struct PeriodWindow {
  Date start;  ///< July 1 of the start year
  int years = 1;
  Eigen::Index first_row = 0;
  Eigen::Index end_row = 0;  ///< exclusive

  Eigen::Index rows() const { return end_row - first_row; }
};

inline constexpr Eigen::Index kMinWindowRows = 60;
/// A window counts as covered when the panel starts no later than this many
/// days after its July 1 and ends no earlier than this many days before the
/// next period's July 1 (weekends and holidays).
inline constexpr int kCoverageSlackDays = 7;

/// One window per start year, years in [1, 3].
std::vector<PeriodWindow> window_periods(const ReturnsPanel& panel, int years);

Eigen::MatrixXd window_matrix(const ReturnsPanel& panel, const PeriodWindow& w);

struct EmpiricalRun {
  McSummary summary;
  std::vector<PeriodWindow> windows;
  /// outcomes[w][m] for window w and method m.
  std::vector<std::vector<Outcome>> outcomes;
};

/// Runs every method on every window (rows = days, columns = portfolios,
/// transposed automatically when there are fewer days than portfolios) and
/// tabulates the selected d. Cells use error_model "empirical", theta 0,
/// n = mean rows per window (rounded) and replications = window count.
EmpiricalRun empirical_frequencies(const ReturnsPanel& panel, int years,
                                   const std::vector<Method>& methods,
                                   Eigen::Index d_min, Eigen::Index d_max,
                                   std::uint64_t seed, unsigned threads);

}  // namespace factorcv
