#include "factorcv/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "factorcv/errors.hpp"
#include "factorcv/parallel.hpp"
#include "factorcv/seeding.hpp"

namespace factorcv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && trim(line).back() == ',') out.emplace_back();
  return out;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() == 8 && all_digits(text)) {
    y = std::stoi(text.substr(0, 4));
    m = static_cast<unsigned>(std::stoi(text.substr(4, 2)));
    d = static_cast<unsigned>(std::stoi(text.substr(6, 2)));
  } else if (text.size() == 10 && text[4] == '-' && text[7] == '-' &&
             all_digits(text.substr(0, 4)) && all_digits(text.substr(5, 2)) &&
             all_digits(text.substr(8, 2))) {
    y = std::stoi(text.substr(0, 4));
    m = static_cast<unsigned>(std::stoi(text.substr(5, 2)));
    d = static_cast<unsigned>(std::stoi(text.substr(8, 2)));
  } else {
    throw UsageError("unrecognized date '" + text + "' (want YYYYMMDD or YYYY-MM-DD)");
  }
  const Date out{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!out.ok()) throw UsageError("invalid calendar date '" + text + "'");
  return out;
}

std::string format_date(Date d) {
  std::ostringstream ss;
  ss << std::setfill('0') << std::setw(4) << int(d.year()) << std::setw(2)
     << unsigned(d.month()) << std::setw(2) << unsigned(d.day());
  return ss.str();
}

namespace {

bool parse_number(const std::string& f, double& out) {
  const char* first = f.data();
  if (!f.empty() && f[0] == '+') ++first;
  const auto res = std::from_chars(first, f.data() + f.size(), out);
  return !f.empty() && res.ec == std::errc() && res.ptr == f.data() + f.size() &&
         std::isfinite(out);
}

}  // namespace

PanelMatrix parse_matrix_csv(std::istream& in) {
  PanelMatrix out;
  std::vector<double> flat;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t s = 0; s < fields.size(); ++s)
      numeric = numeric && parse_number(fields[s], row[s]);
    if (!numeric) {
      if (rows == 0 && out.labels.empty()) {
        out.labels = fields;
        cols = fields.size();
        continue;
      }
      throw ParseError("non-numeric or non-finite entry", lineno);
    }
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    flat.insert(flat.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0 || cols == 0) throw EmptyPanel("matrix file has no data rows");
  out.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  return out;
}

PanelMatrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open matrix file '" + path + "'");
  return parse_matrix_csv(in);
}

void write_matrix_csv(const PanelMatrix& panel, std::ostream& out) {
  for (std::size_t s = 0; s < panel.labels.size(); ++s)
    out << (s ? "," : "") << panel.labels[s];
  if (!panel.labels.empty()) out << '\n';
  for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
    for (Eigen::Index s = 0; s < panel.values.cols(); ++s)
      out << (s ? "," : "") << format_double(panel.values(i, s));
    out << '\n';
  }
}

ReturnsPanel parse_returns_csv(std::istream& in, const std::vector<double>& missing_codes) {
  ReturnsPanel panel;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw EmptyPanel("returns file is empty");
  const auto header = split(line);
  if (header.size() < 2) throw ParseError("header needs a date column and at least one return column", lineno);
  panel.columns.assign(header.begin() + 1, header.end());
  const std::size_t p = panel.columns.size();

  std::vector<double> flat;
  std::optional<Date> last;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != p + 1)
      throw ParseError("expected " + std::to_string(p + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    Date date;
    try {
      date = parse_date(fields[0]);
    } catch (const UsageError& e) {
      throw ParseError(e.what(), lineno);
    }
    std::vector<double> row(p);
    bool missing = false;
    for (std::size_t s = 0; s < p; ++s) {
      const auto& f = fields[s + 1];
      if (!parse_number(f, row[s]))
        throw ParseError("column '" + panel.columns[s] + "': not a number '" + f + "'", lineno);
      for (double code : missing_codes)
        if (std::abs(row[s] - code) <= 1e-9 * std::max(1.0, std::abs(code))) missing = true;
    }
    // Ordering is checked on every row, dropped or not.
    if (last && !(*last < date))
      throw ParseError("dates must be strictly increasing (" + fields[0] + " after " +
                           format_date(*last) + ")",
                       lineno);
    last = date;
    if (missing) {
      ++panel.dropped_rows;
      continue;
    }
    panel.dates.push_back(date);
    flat.insert(flat.end(), row.begin(), row.end());
  }
  if (panel.dates.empty()) throw EmptyPanel("no usable rows in returns file");

  const auto n = static_cast<Eigen::Index>(panel.dates.size());
  panel.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), n, static_cast<Eigen::Index>(p));
  return panel;
}

ReturnsPanel load_returns_csv(const std::string& path, const std::vector<double>& missing_codes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open returns file '" + path + "'");
  return parse_returns_csv(in, missing_codes);
}

void write_returns_csv(const ReturnsPanel& panel, std::ostream& out) {
  out << "date";
  for (const auto& c : panel.columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
    out << format_date(panel.dates[static_cast<std::size_t>(i)]);
    for (Eigen::Index s = 0; s < panel.values.cols(); ++s)
      out << ',' << format_double(panel.values(i, s));
    out << '\n';
  }
}

ReturnsPanel subtract_risk_free(const ReturnsPanel& panel, const std::string& column) {
  const auto it = std::find(panel.columns.begin(), panel.columns.end(), column);
  if (it == panel.columns.end()) throw UsageError("no column named '" + column + "'");
  const auto rf = static_cast<Eigen::Index>(it - panel.columns.begin());

  ReturnsPanel out;
  out.dates = panel.dates;
  out.dropped_rows = panel.dropped_rows;
  out.units = panel.units;
  out.values.resize(panel.values.rows(), panel.values.cols() - 1);
  for (Eigen::Index s = 0, t = 0; s < panel.values.cols(); ++s) {
    if (s == rf) continue;
    out.columns.push_back(panel.columns[static_cast<std::size_t>(s)]);
    out.values.col(t++) = panel.values.col(s) - panel.values.col(rf);
  }
  if (out.columns.empty()) throw EmptyPanel("no return columns left after removing risk-free rate");
  return out;
}

std::vector<PeriodWindow> window_periods(const ReturnsPanel& panel, int years) {
  using namespace std::chrono;
  if (years < 1 || years > 3) throw UsageError("years must be in [1, 3]");
  std::vector<PeriodWindow> out;
  if (panel.dates.empty()) return out;

  const sys_days first{panel.dates.front()};
  const sys_days last{panel.dates.back()};
  const int y0 = int(panel.dates.front().year()) - 1;
  const int y1 = int(panel.dates.back().year());
  for (int y = y0; y <= y1; ++y) {
    const Date start{year{y}, July, day{1}};
    const Date stop{year{y + years}, July, day{1}};
    if (first > sys_days{start} + days{kCoverageSlackDays}) continue;
    if (last < sys_days{stop} - days{kCoverageSlackDays + 1}) continue;
    PeriodWindow w;
    w.start = start;
    w.years = years;
    w.first_row = std::lower_bound(panel.dates.begin(), panel.dates.end(), start) - panel.dates.begin();
    w.end_row = std::lower_bound(panel.dates.begin(), panel.dates.end(), stop) - panel.dates.begin();
    if (w.rows() >= kMinWindowRows) out.push_back(w);
  }
  return out;
}

Eigen::MatrixXd window_matrix(const ReturnsPanel& panel, const PeriodWindow& w) {
  return panel.values.middleRows(w.first_row, w.rows());
}

EmpiricalRun empirical_frequencies(const ReturnsPanel& panel, int years,
                                   const std::vector<Method>& methods,
                                   Eigen::Index d_min, Eigen::Index d_max,
                                   std::uint64_t seed, unsigned threads) {
  if (methods.empty()) throw UsageError("no methods requested");
  EmpiricalRun run;
  run.windows = window_periods(panel, years);
  if (run.windows.empty())
    throw EmptyPanel("no complete " + std::to_string(years) +
                     "-year windows with at least " + std::to_string(kMinWindowRows) +
                     " rows");

  run.outcomes.resize(run.windows.size());
  parallel_for(run.windows.size(), threads, [&](std::size_t w) {
    const auto X = window_matrix(panel, run.windows[w]);
    const auto fold_seed =
        derive_seed(seed, static_cast<std::uint64_t>(int(run.windows[w].start.year())));
    for (const auto& m : methods)
      run.outcomes[w].push_back(
          run_method(m, X, d_min, d_max, fold_seed, TransposePolicy::automatic));
  });

  double mean_rows = 0;
  for (const auto& w : run.windows) mean_rows += double(w.rows());
  mean_rows /= double(run.windows.size());

  auto& summary = run.summary;
  summary.metadata.source = "empirical";
  summary.metadata.master_seed = seed;
  summary.metadata.d_min = d_min;
  summary.metadata.d_max = d_max;
  summary.metadata.notes["years"] = std::to_string(years);
  summary.metadata.notes["windows"] = std::to_string(run.windows.size());
  summary.metadata.notes["dropped_rows"] = std::to_string(panel.dropped_rows);
  summary.metadata.notes["fold_seed"] = "derive(seed, start year)";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    SummaryCell cell;
    cell.method = methods[m].name;
    cell.n = static_cast<Eigen::Index>(std::lround(mean_rows));
    cell.p = panel.values.cols();
    cell.theta = 0;
    cell.error_model = "empirical";
    cell.replications = static_cast<int>(run.windows.size());
    double runtime = 0;
    for (const auto& per_window : run.outcomes) {
      const auto& o = per_window[m];
      runtime += o.runtime_ms;
      if (o.selected)
        ++cell.counts[*o.selected];
      else
        ++cell.failed;
    }
    cell.mean_runtime_ms = runtime / double(run.windows.size());
    summary.cells.push_back(std::move(cell));
  }
  return run;
}

}  // namespace factorcv
