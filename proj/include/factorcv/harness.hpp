#pragma once

// Monte-Carlo experiments over simulated panels: grid expansion, counter-based
// seeding, per-replication method runs, aggregation into selection-frequency
// tables and their CSV/JSON persistence.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "factorcv/dcv.hpp"
#include "factorcv/simgen.hpp"

namespace factorcv {

inline constexpr const char* kVersion = "0.3.0";

/// A factor-count selector: DCV with a given fold count (DCV1 is
/// leave-one-out), or IC1.
struct Method {
  enum class Kind { dcv, ic1 };
  std::string name;
  Kind kind = Kind::dcv;
  Eigen::Index folds = 10;  ///< DcvOptions::kLeaveOneOut for DCV1

  friend bool operator==(const Method&, const Method&) = default;
};

Method parse_method(std::string_view name);

/// Outcome of one method on one data matrix.
struct Outcome {
  std::optional<Eigen::Index> selected;  ///< empty when the method failed
  std::string failure;
  double runtime_ms = 0;
  std::uint64_t digest = 0;  ///< digest of the matrix the method consumed
};

/// Runs one method. Numerical failures become a failed outcome; usage errors
/// propagate.
Outcome run_method(const Method& method, const Eigen::MatrixXd& X,
                   Eigen::Index d_min, Eigen::Index d_max,
                   std::uint64_t fold_seed, TransposePolicy transpose);

std::uint64_t matrix_digest(const Eigen::MatrixXd& X);

struct ExperimentSpec {
  std::string name = "experiment";
  std::vector<Eigen::Index> n_values;
  std::vector<Eigen::Index> p_values;
  /// When nonempty, replaces the n x p cartesian product.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> np_pairs;
  std::vector<ErrorModel> error_models{ErrorModel::E1};
  std::map<ErrorModel, std::vector<double>> theta;
  Eigen::Index d0 = 5;
  std::vector<Method> methods;
  int replications = 1;
  Eigen::Index d_min = 1;
  Eigen::Index d_max = 8;
  std::uint64_t master_seed = 0;
  std::string output;
  std::string format = "csv";
  TransposePolicy transpose = TransposePolicy::never;
  bool e5_literal_exponent = false;
};

/// Throws UsageError describing the first violated constraint.
void validate(const ExperimentSpec& spec);

ExperimentSpec parse_experiment_spec(std::string_view json_text);
ExperimentSpec load_experiment_spec(const std::string& path);
std::string spec_to_json(const ExperimentSpec& spec);

struct GridPoint {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double theta = 0;
  ErrorModel error_model = ErrorModel::E1;
  Eigen::Index d0 = 0;
  std::uint64_t cell_seed = 0;
};

/// Cells in the order error model, (n, p), theta. Each cell seed depends on
/// the master seed and the cell's own parameters only, so adding grid points
/// leaves existing cells' draws unchanged.
std::vector<GridPoint> expand_grid(const ExperimentSpec& spec);

struct ReplicationRecord {
  std::size_t cell = 0;
  int replication = 0;
  std::uint64_t draw_seed = 0;
  std::uint64_t fold_seed = 0;
  std::vector<Outcome> outcomes;  ///< one per spec.methods entry
};

/// Replication r of one cell, reproducible in isolation.
ReplicationRecord run_replication(const ExperimentSpec& spec,
                                  const GridPoint& point, std::size_t cell,
                                  int replication);

/// Every replication of every cell; replications run on up to `threads`
/// workers. Output order is (cell, replication) regardless of scheduling.
std::vector<ReplicationRecord> run_replications(const ExperimentSpec& spec,
                                                unsigned threads);

struct SummaryCell {
  std::string method;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double theta = 0;
  std::string error_model;
  std::optional<Eigen::Index> d0;
  int replications = 0;
  std::map<Eigen::Index, int> counts;
  int failed = 0;
  double mean_runtime_ms = 0;

  double frequency(Eigen::Index d) const;
  /// counts[d0] / replications; failures count as misses. Empty without d0.
  std::optional<double> correct_frequency() const;
};

struct RunMetadata {
  std::string source = "simulate";
  std::uint64_t master_seed = 0;
  std::string version = kVersion;
  double wall_time_s = 0;
  Eigen::Index d_min = 0;
  Eigen::Index d_max = 0;
  std::map<std::string, std::string> notes;
};

struct McSummary {
  std::vector<SummaryCell> cells;
  RunMetadata metadata;

  const SummaryCell* find(std::string_view method, Eigen::Index n,
                          Eigen::Index p, double theta,
                          std::string_view error_model) const;
};

/// Aggregates records into one cell per (grid point, method).
McSummary summarize(const ExperimentSpec& spec,
                    const std::vector<GridPoint>& grid,
                    const std::vector<ReplicationRecord>& records);

McSummary run_experiment(const ExperimentSpec& spec, unsigned threads);

/// True when both summaries hold the same cells with the same counts.
/// Runtimes and metadata are ignored.
bool same_counts(const McSummary& a, const McSummary& b);

/// Header: method,n,p,theta,error_model,selected_d,count,replications,frequency
/// One row per (cell, selected d); failures use selected_d = "failed".
void write_csv(const McSummary& summary, std::ostream& out);
/// Timing fields (wall time, mean runtimes) are written only when
/// `with_timing` is set, so untimed output is reproducible byte for byte.
void write_json(const McSummary& summary, std::ostream& out, bool with_timing);
void export_summary(const McSummary& summary, const std::string& path,
                    const std::string& format, bool with_timing);

McSummary read_csv(std::istream& in);
McSummary read_json(std::istream& in);
McSummary import_summary(const std::string& path, const std::string& format);

/// Problems found in a results CSV (empty when it conforms).
std::vector<std::string> check_results_csv(std::istream& in);

/// Shortest round-trip decimal text of x.
std::string format_double(double x);

}  // namespace factorcv
