#include "factorcv/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "factorcv/criteria.hpp"
#include "factorcv/dcv.hpp"
#include "factorcv/errors.hpp"
#include "factorcv/harness.hpp"
#include "factorcv/ingest.hpp"
#include "factorcv/parallel.hpp"

namespace factorcv {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output;
  std::string format = "csv";
  bool no_timing = false;
};

struct SelectOptions {
  std::string input;
  Eigen::Index k = 10;
  Eigen::Index dmin = 0;
  Eigen::Index dmax = 8;
  std::string transpose = "auto";
  bool center = false;
  bool standardize = false;
};

struct SimulateOptions {
  std::string spec;
};

struct EmpiricalOptions {
  std::string input;
  int years = 1;
  Eigen::Index k = 10;
  Eigen::Index dmin = 0;
  Eigen::Index dmax = 15;
  std::vector<std::string> methods;
  std::vector<double> missing = kDefaultMissingCodes;
  std::string rf_column;
};

TransposePolicy to_policy(const std::string& s) {
  if (s == "never") return TransposePolicy::never;
  if (s == "always") return TransposePolicy::always;
  return TransposePolicy::automatic;
}

void write_output(const McSummary& summary, const GlobalOptions& g) {
  if (g.output.empty()) return;
  export_summary(summary, g.output, g.format, !g.no_timing);
}

void print_summary_table(const McSummary& summary, std::ostream& out) {
  out << "method,n,p,theta,error_model,replications,failed,correct_frequency,counts\n";
  for (const auto& c : summary.cells) {
    out << c.method << ',' << c.n << ',' << c.p << ',' << format_double(c.theta) << ','
        << c.error_model << ',' << c.replications << ',' << c.failed << ',';
    if (const auto cf = c.correct_frequency())
      out << format_double(*cf);
    else
      out << "NA";
    out << ',';
    bool first = true;
    for (const auto& [d, count] : c.counts) {
      out << (first ? "" : " ") << d << ':' << count;
      first = false;
    }
    out << '\n';
  }
}

int cmd_select(const SelectOptions& o, const GlobalOptions& g, std::ostream& out) {
  PanelMatrix panel = load_matrix_csv(o.input);
  Eigen::MatrixXd X = panel.values;
  if (o.center || o.standardize) X.rowwise() -= X.colwise().mean();
  if (o.standardize) {
    if (X.rows() < 2) throw UsageError("--standardize needs at least 2 rows");
    for (Eigen::Index s = 0; s < X.cols(); ++s) {
      const double sd = std::sqrt(X.col(s).squaredNorm() / double(X.rows() - 1));
      if (sd == 0) throw UsageError("column " + std::to_string(s + 1) + " is constant");
      X.col(s) /= sd;
    }
  }

  const auto policy = to_policy(o.transpose);
  const bool flip = policy == TransposePolicy::always ||
                    (policy == TransposePolicy::automatic && X.rows() < X.cols());
  const Eigen::Index rows = flip ? X.cols() : X.rows();
  const Eigen::Index vars = flip ? X.rows() : X.cols();
  if (o.dmin < 0 || o.dmin > o.dmax) throw UsageError("need 0 <= dmin <= dmax");
  if (o.dmax >= vars) throw UsageError("d_max must be < p (d_max=" + std::to_string(o.dmax) +
                                       ", p=" + std::to_string(vars) + ")");
  if (o.dmax >= std::min(X.rows(), X.cols()))
    throw UsageError("d_max must be < min(n, p) for IC1");
  if (o.k < 2 || o.k > rows)
    throw UsageError("--k must satisfy 2 <= k <= n (n=" + std::to_string(rows) + ")");

  out << "# factorcv select\n"
      << "# input=" << o.input << " n=" << X.rows() << " p=" << X.cols() << '\n'
      << "# k=" << o.k << " dmin=" << o.dmin << " dmax=" << o.dmax
      << " transpose=" << o.transpose << " center=" << (o.center ? 1 : 0)
      << " standardize=" << (o.standardize ? 1 : 0) << '\n'
      << "# fold_seed=" << g.seed << '\n';

  DcvOptions opt;
  opt.folds = o.k;
  opt.d_min = o.dmin;
  opt.d_max = o.dmax;
  opt.seed = g.seed;
  opt.transpose = policy;
  opt.threads = g.threads;
  const auto dcv = dcv_curve(X, opt);
  const auto ic = ic1_curve(X, o.dmin, o.dmax);

  out << "# transposed=" << (dcv.transposed ? 1 : 0) << '\n';
  std::ostringstream table;
  table << "d,dcv,ic1_v,ic1\n";
  for (Eigen::Index d = o.dmin; d <= o.dmax; ++d) {
    const auto j = d - o.dmin;
    table << d << ',' << num(dcv.values(j)) << ',' << num(ic.v_values(j)) << ','
          << num(ic.ic_values(j)) << '\n';
  }
  out << table.str();
  out << "DCV selects " << dcv.selected << "; IC1 selects " << ic.selected << '\n';

  if (!g.output.empty()) {
    std::ofstream f(g.output, std::ios::binary);
    if (!f) throw IoError("cannot write '" + g.output + "'");
    if (g.format == "json") {
      f << "{\n  \"dcv_selected\": " << dcv.selected << ",\n  \"ic1_selected\": "
        << ic.selected << ",\n  \"transposed\": " << (dcv.transposed ? "true" : "false")
        << ",\n  \"curve\": [";
      for (Eigen::Index d = o.dmin; d <= o.dmax; ++d) {
        const auto j = d - o.dmin;
        f << (j ? "," : "") << "\n    {\"d\": " << d << ", \"dcv\": " << format_double(dcv.values(j))
          << ", \"ic1_v\": " << format_double(ic.v_values(j))
          << ", \"ic1\": " << format_double(ic.ic_values(j)) << "}";
      }
      f << "\n  ]\n}\n";
    } else {
      f << table.str();
    }
  }
  return kExitOk;
}

int cmd_simulate(const SimulateOptions& o, const GlobalOptions& g, bool seed_given,
                 bool format_given, std::ostream& out) {
  ExperimentSpec spec = load_experiment_spec(o.spec);
  if (seed_given) spec.master_seed = g.seed;
  GlobalOptions eff = g;
  if (eff.output.empty()) eff.output = spec.output;
  if (!format_given) eff.format = spec.format;
  spec.output = eff.output;
  spec.format = eff.format;
  validate(spec);

  out << "# factorcv simulate\n# resolved spec:\n";
  std::istringstream resolved(spec_to_json(spec));
  for (std::string line; std::getline(resolved, line);) out << "# " << line << '\n';
  const auto grid = expand_grid(spec);
  out << "# cells=" << grid.size() << " (cell_seed = derive(master_seed, cell params); "
      << "rep r: draw = derive(derive(cell_seed, r), 0), folds = derive(derive(cell_seed, r), 1))\n";
  for (const auto& gp : grid)
    out << "# cell n=" << gp.n << " p=" << gp.p << " theta=" << format_double(gp.theta)
        << " model=" << to_string(gp.error_model) << " cell_seed=" << gp.cell_seed << '\n';

  const auto summary = run_experiment(spec, g.threads);
  print_summary_table(summary, out);
  write_output(summary, eff);
  if (!eff.output.empty()) out << "# wrote " << eff.output << " (" << eff.format << ")\n";
  return kExitOk;
}

int cmd_empirical(const EmpiricalOptions& o, const GlobalOptions& g, std::ostream& out) {
  if (o.years < 1 || o.years > 3) throw UsageError("--years must be 1, 2 or 3");
  std::vector<Method> methods;
  if (o.methods.empty()) {
    methods = {parse_method("DCV1"), parse_method("DCV" + std::to_string(o.k)),
               parse_method("IC1")};
  } else {
    for (const auto& m : o.methods) methods.push_back(parse_method(m));
  }

  ReturnsPanel panel = load_returns_csv(o.input, o.missing);
  if (!o.rf_column.empty()) panel = subtract_risk_free(panel, o.rf_column);
  if (o.dmin < 0 || o.dmin > o.dmax) throw UsageError("need 0 <= dmin <= dmax");
  if (o.dmax >= panel.values.cols())
    throw UsageError("d_max must be < p (d_max=" + std::to_string(o.dmax) +
                     ", p=" + std::to_string(panel.values.cols()) + ")");

  out << "# factorcv empirical\n"
      << "# input=" << o.input << " rows=" << panel.values.rows()
      << " portfolios=" << panel.values.cols() << " dropped_rows=" << panel.dropped_rows << '\n'
      << "# years=" << o.years << " dmin=" << o.dmin << " dmax=" << o.dmax << " methods=";
  for (std::size_t m = 0; m < methods.size(); ++m) out << (m ? "," : "") << methods[m].name;
  out << " rf_column=" << (o.rf_column.empty() ? "none" : o.rf_column) << '\n'
      << "# seed=" << g.seed << " (fold seed per window = derive(seed, start year))\n";

  const auto run = empirical_frequencies(panel, o.years, methods, o.dmin, o.dmax, g.seed, g.threads);
  for (std::size_t w = 0; w < run.windows.size(); ++w) {
    const auto& win = run.windows[w];
    out << "# window " << format_date(win.start) << " rows=" << win.rows();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& oc = run.outcomes[w][m];
      out << ' ' << methods[m].name << '='
          << (oc.selected ? std::to_string(*oc.selected) : std::string("failed"));
    }
    out << '\n';
  }
  print_summary_table(run.summary, out);
  write_output(run.summary, g);
  if (!g.output.empty()) out << "# wrote " << g.output << " (" << g.format << ")\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Number-of-factors selection by double cross-validation", "factorcv"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  g.threads = default_thread_count();
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for fold shuffling / master seed");
  app.add_option("--threads", g.threads, "Worker threads (default: FACTORCV_THREADS or cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--output", g.output, "Write results to this file");
  auto* format_opt = app.add_option("--format", g.format, "Output format")
                         ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--no-timing", g.no_timing, "Omit wall-clock fields from JSON output");

  SelectOptions sel;
  auto* select = app.add_subcommand("select", "Select d for one data matrix");
  select->add_option("--input", sel.input, "CSV matrix (optional header row)")->required();
  select->add_option("--k", sel.k, "Number of folds");
  select->add_option("--dmin", sel.dmin, "Smallest candidate d");
  select->add_option("--dmax", sel.dmax, "Largest candidate d");
  select->add_option("--transpose", sel.transpose, "Orientation policy")
      ->check(CLI::IsMember({"never", "auto", "always"}));
  select->add_flag("--center", sel.center, "Subtract column means first");
  select->add_flag("--standardize", sel.standardize, "Center and scale columns first");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo experiment spec");
  simulate->add_option("--spec", sim.spec, "Experiment spec (JSON)")->required();

  EmpiricalOptions emp;
  auto* empirical = app.add_subcommand("empirical", "Selection frequencies over July-1 periods");
  empirical->add_option("--input", emp.input, "Returns CSV with a date column")->required();
  empirical->add_option("--years", emp.years, "Period length in years (1-3)")->required();
  empirical->add_option("--k", emp.k, "Folds for the K-fold DCV method");
  empirical->add_option("--dmin", emp.dmin, "Smallest candidate d");
  empirical->add_option("--dmax", emp.dmax, "Largest candidate d");
  empirical->add_option("--methods", emp.methods, "Methods (default DCV1,DCV<k>,IC1)")
      ->delimiter(',');
  empirical->add_option("--missing", emp.missing, "Missing-value sentinels")->delimiter(',');
  empirical->add_option("--rf-column", emp.rf_column, "Risk-free column to subtract and drop");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*select) return cmd_select(sel, g, out);
    if (*simulate) return cmd_simulate(sim, g, seed_opt->count() > 0, format_opt->count() > 0, out);
    if (*empirical) return cmd_empirical(emp, g, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace factorcv
