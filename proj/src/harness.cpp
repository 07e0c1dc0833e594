#include "factorcv/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "factorcv/criteria.hpp"
#include "factorcv/errors.hpp"
#include "factorcv/parallel.hpp"
#include "factorcv/seeding.hpp"

namespace factorcv {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, const std::string& what) {
  double out = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("bad number for " + what + ": '" + std::string(s) + "'");
  return out;
}

long long parse_int(std::string_view s, const std::string& what) {
  long long out = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("bad integer for " + what + ": '" + std::string(s) + "'");
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

const char* transpose_name(TransposePolicy t) {
  switch (t) {
    case TransposePolicy::never: return "never";
    case TransposePolicy::automatic: return "auto";
    case TransposePolicy::always: return "always";
  }
  return "?";
}

TransposePolicy parse_transpose(const std::string& s) {
  if (s == "never") return TransposePolicy::never;
  if (s == "auto") return TransposePolicy::automatic;
  if (s == "always") return TransposePolicy::always;
  throw UsageError("transpose must be never, auto or always (got '" + s + "')");
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "IC1") return {std::string(name), Method::Kind::ic1, 0};
  if (name.starts_with("DCV") && name.size() > 3) {
    const auto k = parse_int(name.substr(3), "method fold count");
    if (k == 1) return {std::string(name), Method::Kind::dcv, DcvOptions::kLeaveOneOut};
    if (k >= 2) return {std::string(name), Method::Kind::dcv, static_cast<Eigen::Index>(k)};
  }
  throw UsageError("unknown method '" + std::string(name) +
                   "' (expected DCV1, DCV<K> with K >= 2, or IC1)");
}

std::uint64_t matrix_digest(const Eigen::MatrixXd& X) {
  std::uint64_t h = fnv1a_doubles({X.data(), static_cast<std::size_t>(X.size())});
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(X.rows()),
                                 static_cast<std::uint64_t>(X.cols())};
  return fnv1a({reinterpret_cast<const unsigned char*>(dims), sizeof dims}, h);
}

Outcome run_method(const Method& method, const Eigen::MatrixXd& X,
                   Eigen::Index d_min, Eigen::Index d_max,
                   std::uint64_t fold_seed, TransposePolicy transpose) {
  Outcome out;
  out.digest = matrix_digest(X);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (method.kind == Method::Kind::ic1) {
      out.selected = ic1_curve(X, d_min, d_max).selected;
    } else {
      DcvOptions opt;
      opt.folds = method.folds;
      opt.d_min = d_min;
      opt.d_max = d_max;
      opt.seed = fold_seed;
      opt.transpose = transpose;
      out.selected = dcv_curve(X, opt).selected;
    }
  } catch (const NumericalError& e) {
    out.selected.reset();
    out.failure = e.what();
  }
  out.runtime_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return out;
}

// ---------------------------------------------------------------------------
// Experiment spec

namespace {

std::vector<std::pair<Eigen::Index, Eigen::Index>> grid_pairs(const ExperimentSpec& spec) {
  if (!spec.np_pairs.empty()) return spec.np_pairs;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (auto n : spec.n_values)
    for (auto p : spec.p_values) out.emplace_back(n, p);
  return out;
}

}  // namespace

void validate(const ExperimentSpec& spec) {
  if (spec.replications < 1) throw UsageError("replications must be >= 1");
  if (spec.methods.empty()) throw UsageError("methods must be nonempty");
  if (spec.error_models.empty()) throw UsageError("error_models must be nonempty");
  const auto pairs = grid_pairs(spec);
  if (pairs.empty()) throw UsageError("grid has no (n, p) combinations");
  if (spec.d0 < 0) throw UsageError("d0 must be >= 0");
  if (spec.d_min < 0 || spec.d_min > spec.d_max)
    throw UsageError("need 0 <= d_min <= d_max");
  if (spec.format != "csv" && spec.format != "json")
    throw UsageError("format must be csv or json");

  for (auto [n, p] : pairs) {
    if (n < 1 || p < 1) throw UsageError("grid n and p must be >= 1");
    const bool flip = spec.transpose == TransposePolicy::always ||
                      (spec.transpose == TransposePolicy::automatic && n < p);
    const Eigen::Index rows = flip ? p : n;
    const Eigen::Index vars = flip ? n : p;
    if (spec.d_max >= vars)
      throw UsageError("d_max must be < p for every grid point (d_max=" +
                       std::to_string(spec.d_max) + ", p=" + std::to_string(vars) + ")");
    for (const auto& m : spec.methods) {
      if (m.kind == Method::Kind::ic1 && spec.d_max >= std::min(n, p))
        throw UsageError("IC1 needs d_max < min(n, p)");
      if (m.kind == Method::Kind::dcv && m.folds != DcvOptions::kLeaveOneOut &&
          m.folds > rows)
        throw UsageError(m.name + " needs at least " + std::to_string(m.folds) +
                         " rows, grid point has " + std::to_string(rows));
    }
  }
  for (auto model : spec.error_models) {
    auto it = spec.theta.find(model);
    if (it == spec.theta.end() || it->second.empty())
      throw UsageError("no theta values for error model " + to_string(model));
    for (double t : it->second)
      if (!(t >= 0) || !std::isfinite(t)) throw UsageError("theta must be finite and >= 0");
  }
}

ExperimentSpec parse_experiment_spec(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("experiment spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("experiment spec must be a JSON object");

  ExperimentSpec spec;
  try {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      const std::string& key = it.key();
      const auto& v = it.value();
      if (key == "name") spec.name = v.get<std::string>();
      else if (key == "n") spec.n_values = v.get<std::vector<Eigen::Index>>();
      else if (key == "p") spec.p_values = v.get<std::vector<Eigen::Index>>();
      else if (key == "np_pairs") {
        for (const auto& pr : v) {
          if (!pr.is_array() || pr.size() != 2)
            throw UsageError("np_pairs entries must be [n, p]");
          spec.np_pairs.emplace_back(pr[0].get<Eigen::Index>(), pr[1].get<Eigen::Index>());
        }
      } else if (key == "error_models") {
        spec.error_models.clear();
        for (const auto& m : v) spec.error_models.push_back(parse_error_model(m.get<std::string>()));
      } else if (key == "theta") {
        if (v.is_array()) {
          const auto grid = v.get<std::vector<double>>();
          for (auto m : {ErrorModel::E1, ErrorModel::E2, ErrorModel::E3,
                         ErrorModel::E4, ErrorModel::E5})
            spec.theta[m] = grid;
        } else if (v.is_object()) {
          for (auto jt = v.begin(); jt != v.end(); ++jt)
            spec.theta[parse_error_model(jt.key())] = jt.value().get<std::vector<double>>();
        } else {
          throw UsageError("theta must be an array or an object keyed by error model");
        }
      } else if (key == "d0") spec.d0 = v.get<Eigen::Index>();
      else if (key == "methods") {
        for (const auto& m : v) spec.methods.push_back(parse_method(m.get<std::string>()));
      } else if (key == "replications") spec.replications = v.get<int>();
      else if (key == "d_min") spec.d_min = v.get<Eigen::Index>();
      else if (key == "d_max") spec.d_max = v.get<Eigen::Index>();
      else if (key == "master_seed") spec.master_seed = v.get<std::uint64_t>();
      else if (key == "output") spec.output = v.get<std::string>();
      else if (key == "format") spec.format = v.get<std::string>();
      else if (key == "transpose") spec.transpose = parse_transpose(v.get<std::string>());
      else if (key == "e5_literal_exponent") spec.e5_literal_exponent = v.get<bool>();
      else if (key == "description") {
        // free text, ignored
      } else {
        throw UsageError("unknown experiment spec key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("experiment spec has a field of the wrong type: ") + e.what());
  }
  validate(spec);
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_spec(ss.str());
}

std::string spec_to_json(const ExperimentSpec& spec) {
  ordered_json doc;
  doc["name"] = spec.name;
  if (spec.np_pairs.empty()) {
    doc["n"] = spec.n_values;
    doc["p"] = spec.p_values;
  } else {
    ordered_json pairs = ordered_json::array();
    for (auto [n, p] : spec.np_pairs) pairs.push_back({n, p});
    doc["np_pairs"] = pairs;
  }
  ordered_json models = ordered_json::array();
  ordered_json theta = ordered_json::object();
  for (auto m : spec.error_models) {
    models.push_back(to_string(m));
    auto it = spec.theta.find(m);
    theta[to_string(m)] = it == spec.theta.end() ? std::vector<double>{} : it->second;
  }
  doc["error_models"] = models;
  doc["theta"] = theta;
  doc["d0"] = spec.d0;
  ordered_json methods = ordered_json::array();
  for (const auto& m : spec.methods) methods.push_back(m.name);
  doc["methods"] = methods;
  doc["replications"] = spec.replications;
  doc["d_min"] = spec.d_min;
  doc["d_max"] = spec.d_max;
  doc["master_seed"] = spec.master_seed;
  doc["output"] = spec.output;
  doc["format"] = spec.format;
  doc["transpose"] = transpose_name(spec.transpose);
  doc["e5_literal_exponent"] = spec.e5_literal_exponent;
  return doc.dump(2);
}

std::vector<GridPoint> expand_grid(const ExperimentSpec& spec) {
  std::vector<GridPoint> out;
  const auto pairs = grid_pairs(spec);
  for (auto model : spec.error_models) {
    const auto it = spec.theta.find(model);
    if (it == spec.theta.end()) continue;
    for (auto [n, p] : pairs) {
      for (double theta : it->second) {
        GridPoint g{n, p, theta, model, spec.d0, 0};
        const std::uint64_t key[5] = {static_cast<std::uint64_t>(n),
                                      static_cast<std::uint64_t>(p),
                                      double_bits(theta),
                                      static_cast<std::uint64_t>(model),
                                      static_cast<std::uint64_t>(spec.d0)};
        const auto cell_id =
            fnv1a({reinterpret_cast<const unsigned char*>(key), sizeof key});
        g.cell_seed = derive_seed(spec.master_seed, cell_id);
        out.push_back(g);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running

ReplicationRecord run_replication(const ExperimentSpec& spec,
                                  const GridPoint& point, std::size_t cell,
                                  int replication) {
  ReplicationRecord rec;
  rec.cell = cell;
  rec.replication = replication;
  const auto rep_seed =
      derive_seed(point.cell_seed, static_cast<std::uint64_t>(replication));
  rec.draw_seed = derive_seed(rep_seed, 0);
  rec.fold_seed = derive_seed(rep_seed, 1);

  SimConfig cfg;
  cfg.n = point.n;
  cfg.p = point.p;
  cfg.d0 = point.d0;
  cfg.theta = point.theta;
  cfg.error_model = point.error_model;
  cfg.seed = rec.draw_seed;
  cfg.e5_literal_exponent = spec.e5_literal_exponent;
  const auto draw = gen_factor_data(cfg);

  for (const auto& m : spec.methods)
    rec.outcomes.push_back(
        run_method(m, draw.X, spec.d_min, spec.d_max, rec.fold_seed, spec.transpose));
  return rec;
}

std::vector<ReplicationRecord> run_replications(const ExperimentSpec& spec,
                                                unsigned threads) {
  validate(spec);
  const auto grid = expand_grid(spec);
  const auto reps = static_cast<std::size_t>(spec.replications);
  std::vector<ReplicationRecord> records(grid.size() * reps);
  parallel_for(records.size(), threads, [&](std::size_t idx) {
    const std::size_t cell = idx / reps;
    records[idx] = run_replication(spec, grid[cell], cell, static_cast<int>(idx % reps));
  });
  return records;
}

// ---------------------------------------------------------------------------
// Summaries

double SummaryCell::frequency(Eigen::Index d) const {
  if (replications <= 0) return 0;
  const auto it = counts.find(d);
  return it == counts.end() ? 0.0 : double(it->second) / double(replications);
}

std::optional<double> SummaryCell::correct_frequency() const {
  if (!d0) return std::nullopt;
  return frequency(*d0);
}

const SummaryCell* McSummary::find(std::string_view method, Eigen::Index n,
                                   Eigen::Index p, double theta,
                                   std::string_view error_model) const {
  for (const auto& c : cells)
    if (c.method == method && c.n == n && c.p == p && c.theta == theta &&
        c.error_model == error_model)
      return &c;
  return nullptr;
}

McSummary summarize(const ExperimentSpec& spec,
                    const std::vector<GridPoint>& grid,
                    const std::vector<ReplicationRecord>& records) {
  McSummary out;
  out.metadata.source = "simulate";
  out.metadata.master_seed = spec.master_seed;
  out.metadata.d_min = spec.d_min;
  out.metadata.d_max = spec.d_max;
  out.metadata.notes["experiment"] = spec.name;
  out.metadata.notes["seeding"] =
      "cell_seed = derive(master_seed, fnv1a(n, p, theta, model, d0)); "
      "rep_seed = derive(cell_seed, r); draw_seed = derive(rep_seed, 0); "
      "fold_seed = derive(rep_seed, 1)";
  out.metadata.notes["transpose"] = transpose_name(spec.transpose);

  for (std::size_t c = 0; c < grid.size(); ++c) {
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      SummaryCell cell;
      cell.method = spec.methods[m].name;
      cell.n = grid[c].n;
      cell.p = grid[c].p;
      cell.theta = grid[c].theta;
      cell.error_model = to_string(grid[c].error_model);
      cell.d0 = grid[c].d0;
      double runtime = 0;
      for (const auto& rec : records) {
        if (rec.cell != c) continue;
        const auto& o = rec.outcomes.at(m);
        ++cell.replications;
        runtime += o.runtime_ms;
        if (o.selected)
          ++cell.counts[*o.selected];
        else
          ++cell.failed;
      }
      if (cell.replications > 0) cell.mean_runtime_ms = runtime / cell.replications;
      out.cells.push_back(std::move(cell));
    }
  }
  return out;
}

McSummary run_experiment(const ExperimentSpec& spec, unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  const auto records = run_replications(spec, threads);
  auto summary = summarize(spec, expand_grid(spec), records);
  summary.metadata.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

bool same_counts(const McSummary& a, const McSummary& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto& x = a.cells[i];
    const auto& y = b.cells[i];
    if (x.method != y.method || x.n != y.n || x.p != y.p || x.theta != y.theta ||
        x.error_model != y.error_model || x.replications != y.replications ||
        x.counts != y.counts || x.failed != y.failed)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr const char* kCsvHeader =
    "method,n,p,theta,error_model,selected_d,count,replications,frequency";

}  // namespace

void write_csv(const McSummary& summary, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& c : summary.cells) {
    const std::string prefix = c.method + ',' + std::to_string(c.n) + ',' +
                               std::to_string(c.p) + ',' + format_double(c.theta) +
                               ',' + c.error_model + ',';
    const std::string reps = std::to_string(c.replications);
    for (const auto& [d, count] : c.counts)
      out << prefix << d << ',' << count << ',' << reps << ','
          << format_double(double(count) / double(c.replications)) << '\n';
    if (c.failed > 0)
      out << prefix << "failed," << c.failed << ',' << reps << ','
          << format_double(double(c.failed) / double(c.replications)) << '\n';
  }
}

void write_json(const McSummary& summary, std::ostream& out, bool with_timing) {
  ordered_json doc;
  ordered_json meta;
  meta["source"] = summary.metadata.source;
  meta["master_seed"] = summary.metadata.master_seed;
  meta["version"] = summary.metadata.version;
  if (with_timing) meta["wall_time_s"] = summary.metadata.wall_time_s;
  meta["d_min"] = summary.metadata.d_min;
  meta["d_max"] = summary.metadata.d_max;
  meta["notes"] = summary.metadata.notes;
  doc["metadata"] = meta;

  ordered_json cells = ordered_json::array();
  for (const auto& c : summary.cells) {
    ordered_json j;
    j["method"] = c.method;
    j["n"] = c.n;
    j["p"] = c.p;
    j["theta"] = c.theta;
    j["error_model"] = c.error_model;
    j["d0"] = c.d0 ? ordered_json(*c.d0) : ordered_json(nullptr);
    j["replications"] = c.replications;
    j["failed"] = c.failed;
    ordered_json counts = ordered_json::object();
    for (const auto& [d, count] : c.counts) counts[std::to_string(d)] = count;
    j["counts"] = counts;
    const auto cf = c.correct_frequency();
    j["correct_frequency"] = cf ? ordered_json(*cf) : ordered_json(nullptr);
    if (with_timing) j["mean_runtime_ms"] = c.mean_runtime_ms;
    cells.push_back(j);
  }
  doc["cells"] = cells;
  out << doc.dump(2) << '\n';
}

void export_summary(const McSummary& summary, const std::string& path,
                    const std::string& format, bool with_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  if (format == "csv")
    write_csv(summary, out);
  else if (format == "json")
    write_json(summary, out, with_timing);
  else
    throw UsageError("format must be csv or json");
  if (!out) throw IoError("write to '" + path + "' failed");
}

McSummary read_csv(std::istream& in) {
  McSummary out;
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kCsvHeader)
    throw ParseError("results CSV header mismatch", 1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw ParseError("expected 9 fields", lineno);
    try {
      const auto n = static_cast<Eigen::Index>(parse_int(f[1], "n"));
      const auto p = static_cast<Eigen::Index>(parse_int(f[2], "p"));
      const double theta = parse_double(f[3], "theta");
      const int count = static_cast<int>(parse_int(f[6], "count"));
      const int reps = static_cast<int>(parse_int(f[7], "replications"));
      SummaryCell* cell = nullptr;
      if (!out.cells.empty()) {
        auto& last = out.cells.back();
        if (last.method == f[0] && last.n == n && last.p == p &&
            last.theta == theta && last.error_model == f[4])
          cell = &last;
      }
      if (!cell) {
        out.cells.emplace_back();
        cell = &out.cells.back();
        cell->method = f[0];
        cell->n = n;
        cell->p = p;
        cell->theta = theta;
        cell->error_model = f[4];
        cell->replications = reps;
      }
      if (f[5] == "failed")
        cell->failed = count;
      else
        cell->counts[static_cast<Eigen::Index>(parse_int(f[5], "selected_d"))] = count;
    } catch (const ParseError&) {
      throw;
    } catch (const UsageError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

McSummary read_json(std::istream& in) {
  McSummary out;
  try {
    const auto doc = ordered_json::parse(in);
    const auto& meta = doc.at("metadata");
    out.metadata.source = meta.at("source").get<std::string>();
    out.metadata.master_seed = meta.at("master_seed").get<std::uint64_t>();
    out.metadata.version = meta.at("version").get<std::string>();
    if (meta.contains("wall_time_s")) out.metadata.wall_time_s = meta["wall_time_s"].get<double>();
    out.metadata.d_min = meta.at("d_min").get<Eigen::Index>();
    out.metadata.d_max = meta.at("d_max").get<Eigen::Index>();
    out.metadata.notes = meta.at("notes").get<std::map<std::string, std::string>>();
    for (const auto& j : doc.at("cells")) {
      SummaryCell c;
      c.method = j.at("method").get<std::string>();
      c.n = j.at("n").get<Eigen::Index>();
      c.p = j.at("p").get<Eigen::Index>();
      c.theta = j.at("theta").get<double>();
      c.error_model = j.at("error_model").get<std::string>();
      if (!j.at("d0").is_null()) c.d0 = j["d0"].get<Eigen::Index>();
      c.replications = j.at("replications").get<int>();
      c.failed = j.at("failed").get<int>();
      for (auto it = j.at("counts").begin(); it != j.at("counts").end(); ++it)
        c.counts[static_cast<Eigen::Index>(parse_int(it.key(), "counts key"))] =
            it.value().get<int>();
      if (j.contains("mean_runtime_ms")) c.mean_runtime_ms = j["mean_runtime_ms"].get<double>();
      out.cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("results JSON is malformed: ") + e.what());
  }
  return out;
}

McSummary import_summary(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  if (format == "csv") return read_csv(in);
  if (format == "json") return read_json(in);
  throw UsageError("format must be csv or json");
}

std::vector<std::string> check_results_csv(std::istream& in) {
  std::vector<std::string> problems;
  std::string line;
  if (!std::getline(in, line)) {
    problems.push_back("empty file");
    return problems;
  }
  if (strip_cr(line) != kCsvHeader) problems.push_back("line 1: header mismatch");

  struct Tally {
    int reps = 0;
    long long sum = 0;
  };
  std::map<std::string, Tally> cells;
  std::vector<std::string> order;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.empty()) {
      problems.push_back(where + "blank line");
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 9) {
      problems.push_back(where + "expected 9 fields, found " + std::to_string(f.size()));
      continue;
    }
    try {
      if (f[0].empty()) throw UsageError("empty method");
      if (parse_int(f[1], "n") < 1) throw UsageError("n must be >= 1");
      if (parse_int(f[2], "p") < 1) throw UsageError("p must be >= 1");
      const double theta = parse_double(f[3], "theta");
      if (!(theta >= 0)) throw UsageError("theta must be >= 0");
      static const std::vector<std::string> models = {"E1", "E2", "E3", "E4", "E5", "empirical"};
      if (std::find(models.begin(), models.end(), f[4]) == models.end())
        throw UsageError("unknown error_model '" + f[4] + "'");
      if (f[5] != "failed" && parse_int(f[5], "selected_d") < 0)
        throw UsageError("selected_d must be >= 0 or 'failed'");
      const auto count = parse_int(f[6], "count");
      const auto reps = parse_int(f[7], "replications");
      if (reps < 1) throw UsageError("replications must be >= 1");
      if (count < 0 || count > reps) throw UsageError("count outside [0, replications]");
      const double freq = parse_double(f[8], "frequency");
      if (std::abs(freq - double(count) / double(reps)) > 1e-12)
        throw UsageError("frequency != count / replications");
      const std::string key = f[0] + ',' + f[1] + ',' + f[2] + ',' + f[3] + ',' + f[4];
      auto [it, fresh] = cells.try_emplace(key);
      if (fresh) {
        it->second.reps = static_cast<int>(reps);
        order.push_back(key);
      } else if (it->second.reps != reps) {
        throw UsageError("replications differ within a cell");
      }
      it->second.sum += count;
    } catch (const UsageError& e) {
      problems.push_back(where + e.what());
    }
  }
  for (const auto& key : order) {
    const auto& t = cells[key];
    if (t.sum != t.reps)
      problems.push_back("cell " + key + ": counts sum to " + std::to_string(t.sum) +
                         ", expected " + std::to_string(t.reps));
  }
  return problems;
}

}  // namespace factorcv
