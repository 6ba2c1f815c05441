#include "wellprobe/run.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "wellprobe/agmon.hpp"
#include "wellprobe/bounds.hpp"
#include "wellprobe/eigensolve.hpp"
#include "wellprobe/error.hpp"
#include "wellprobe/measure.hpp"
#include "wellprobe/parallel.hpp"

namespace wellprobe {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) fail(ErrorCode::PreconditionViolated, "csv row width differs from the header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& row : rows_) line(row);
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::PreconditionViolated, "sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::None: return "NONE";
  }
  return "NONE";
}

namespace {

using nlohmann::ordered_json;

// Husimi acceptance thresholds.
constexpr double kTubeMass = 0.9;
constexpr double kBranchTolerance = 0.05;
constexpr double kMarginalL1 = 0.1;
constexpr double kEnvelopeTolerance = 0.05;
constexpr int kEnvelopePoints = 10;

std::string fmt(double v) { return format_double(v); }

struct Product {
  std::string file;
  std::string text;
};

struct StepResult {
  Verdict verdict = Verdict::None;
  std::vector<std::string> notes;
  std::vector<Product> files;
};

class Context {
 public:
  explicit Context(const ExperimentConfig& config)
      : c(config),
        well(Potential::parse(config.V, config.L)),
        q(config.q.empty() ? Perturbation() : Perturbation::parse(config.q)) {}

  const Eigenpair& regime_pair(double eps) {
    auto it = pairs_.find(eps);
    if (it == pairs_.end()) it = pairs_.emplace(eps, regime_eigenpair(well, q, c.regime, eps)).first;
    return it->second;
  }

  double smallest() const { return c.schedule.back(); }

  const ExperimentConfig& c;
  const Well well;
  const Perturbation q;

 private:
  std::map<double, Eigenpair> pairs_;
};

std::string note(const std::string& label, double v) { return label + "=" + fmt(v); }

// Largest error ratio over the steps trend_ok inspects; steps below the floor count as 0.
double worst_growth(const std::vector<double>& errors, double floor = 1e-9) {
  double worst = 0.0;
  const std::size_t n = errors.size();
  for (std::size_t i = n >= 3 ? n - 2 : 1; i < n; ++i) {
    if (errors[i] <= floor) continue;
    worst = std::max(worst, errors[i - 1] > 0.0 ? errors[i] / errors[i - 1] : INFINITY);
  }
  return worst;
}

struct OracleSummary {
  double worst = 0.0;
  int worst_k = -1;
};

OracleSummary oracle_compare(const Context& ctx, double eps, const Grid& grid, const std::vector<int>& ks) {
  std::vector<double> rel(ks.size());
  parallel_for(ks.size(), [&](std::size_t i) {
    const double r = richardson_eigenvalue(ctx.well.potential(), ctx.q, eps, grid, ks[i]);
    const double s = shooting_eigenvalue(ctx.well.potential(), ctx.q, eps, ks[i]).E;
    rel[i] = std::abs(r - s) / std::abs(s);
  });
  OracleSummary out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (rel[i] > out.worst || out.worst_k < 0) {
      out.worst = rel[i];
      out.worst_k = ks[i];
    }
  }
  return out;
}

Grid spectrum_grid(const Context& ctx, double eps) {
  if (ctx.c.regime.grid_n > 0) return Grid(ctx.c.L, ctx.c.regime.grid_n);
  return auto_grid(ctx.c.L, spectrum_energy_span(ctx.c, ctx.well, eps), eps);
}

StepResult spectrum_step(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  const double eps = eps_or_smallest(c, c.spectrum_eps);
  const Grid grid = spectrum_grid(ctx, eps);
  const TridiagonalOperator op = assemble(ctx.well.potential(), ctx.q, eps, grid);
  const std::vector<double> energies = c.spectrum_window
                                           ? eigenvalues_in_window(op, c.spectrum_window->first, c.spectrum_window->second)
                                           : lowest_eigenvalues(op, c.spectrum_count);
  std::vector<Eigenpair> pairs(energies.size());
  parallel_for(energies.size(), [&](std::size_t i) { pairs[i] = eigenpair(op, energies[i]); });

  StepResult out;
  CsvTable table({"k", "E", "residual", "dpsi0", "dpsiL"});
  std::vector<int> ks;
  for (const Eigenpair& p : pairs) {
    table.add({std::to_string(p.index), fmt(p.E), fmt(p.residual_norm), fmt(p.dpsi0), fmt(p.dpsiL)});
    ks.push_back(p.index);
  }
  out.files.push_back({"spectrum.csv", table.str()});
  out.notes.push_back(note("eps", eps));
  out.notes.push_back("n_interior=" + std::to_string(grid.n_interior()));
  if (!op.warning.empty()) out.notes.push_back("warning: " + op.warning);
  if (c.spectrum_oracle) {
    const OracleSummary o = oracle_compare(ctx, eps, grid, ks);
    out.notes.push_back(note("oracle_max_rel_diff", o.worst) + " at k=" + std::to_string(o.worst_k));
    out.verdict = o.worst <= c.oracle_rel ? Verdict::Pass : Verdict::Fail;
    if (out.verdict == Verdict::Fail) out.notes.push_back("oracle disagreement above " + fmt(c.oracle_rel));
  }
  return out;
}

StepResult eigen_step(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  const double eps = ctx.smallest();
  Eigenpair pair;
  if (c.eigen_index) {
    const TridiagonalOperator op = assemble(ctx.well.potential(), ctx.q, eps, regime_grid(ctx.well, c.regime, eps));
    pair = eigenpair(op, eigenvalue_by_index(op, *c.eigen_index));
  } else {
    pair = ctx.regime_pair(eps);
  }
  CsvTable table({"x", "psi"});
  for (std::size_t i = 0; i < pair.x.size(); ++i) table.add({fmt(pair.x[i]), fmt(pair.psi[i])});
  StepResult out;
  out.files.push_back({"eigen.csv", table.str()});
  out.notes = {note("eps", eps), "k=" + std::to_string(pair.index), note("E", pair.E), note("residual", pair.residual_norm)};
  return out;
}

StepResult agmon_step(Context& ctx) {
  const double E = ctx.c.agmon_energy.value_or(ctx.regime_pair(ctx.smallest()).E);
  const AgmonProfile profile = agmon_profile(ctx.well, E, ctx.c.agmon_points);
  CsvTable table({"x", "E", "d_A"});
  for (std::size_t i = 0; i < profile.grid.size(); ++i) {
    table.add({fmt(profile.grid[i]), fmt(profile.energy), fmt(profile.values[i])});
  }
  StepResult out;
  out.files.push_back({"agmon.csv", table.str()});
  out.notes = {note("E", profile.energy), note("x_minus", profile.turning.x_minus),
               note("x_plus", profile.turning.x_plus)};
  return out;
}

MeasureReport measure_for(const Context& ctx) {
  return measure_convergence_report(ctx.well, ctx.q, ctx.c.regime, ctx.c.schedule,
                                    basket_from_names(ctx.c.L, ctx.c.phi, ctx.c.indicator_width));
}

StepResult measure_step(Context& ctx) {
  const MeasureReport report = measure_for(ctx);
  const double nan = std::nan("");
  const double t0 = report.has_trace_prediction ? report.trace0_predicted : nan;
  const double tL = report.has_trace_prediction ? report.traceL_predicted : nan;
  CsvTable table({"eps", "E", "phi_name", "empirical", "predicted", "abs_err", "trace0_emp", "trace0_pred",
                  "traceL_emp", "traceL_pred"});
  for (std::size_t s = 0; s < report.samples.size(); ++s) {
    const MeasureSample& m = report.samples[s];
    for (std::size_t p = 0; p < report.phi_names.size(); ++p) {
      table.add({fmt(m.eps), fmt(m.E), report.phi_names[p], fmt(m.empirical[p]), fmt(report.predicted[p]),
                 fmt(report.moment_error(s, p)), fmt(m.trace0), fmt(t0), fmt(m.traceL), fmt(tL)});
    }
  }
  const MeasureVerdict v = verdict(report, ctx.c.moment_tol, ctx.c.trace_rel, ctx.c.trace_zero);
  StepResult out;
  out.files.push_back({"measure.csv", table.str()});
  out.verdict = v.pass ? Verdict::Pass : Verdict::Fail;
  out.notes.push_back("regime=" + to_string(report.target.regime));
  if (!report.note.empty()) out.notes.push_back(report.note);
  out.notes.insert(out.notes.end(), v.failures.begin(), v.failures.end());
  return out;
}

struct HusimiRun {
  HusimiField field;
  HusimiDiagnostics diag;
};

HusimiRun husimi_for(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  const Eigenpair& pair = ctx.regime_pair(eps_or_smallest(c, c.husimi_eps));
  HusimiOptions options;
  options.nx = c.husimi_nx;
  options.nxi = c.husimi_nxi;
  options.xi_max = c.xi_max;
  HusimiRun out{husimi(pair, ctx.well, options), {}};
  out.diag = husimi_diagnostics(out.field, pair, ctx.well, c.tube_const);
  return out;
}

bool husimi_pass(const HusimiDiagnostics& d) {
  return d.tube_fraction >= kTubeMass && std::abs(d.positive_fraction - 0.5) <= kBranchTolerance &&
         d.marginal_l1 <= kMarginalL1;
}

StepResult husimi_step(Context& ctx) {
  const HusimiRun h = husimi_for(ctx);
  CsvTable table({"x", "xi", "H"});
  for (std::size_t j = 0; j < h.field.x.size(); ++j) {
    for (std::size_t k = 0; k < h.field.xi.size(); ++k) table.add({fmt(h.field.x[j]), fmt(h.field.xi[k]), fmt(h.field.at(j, k))});
  }
  StepResult out;
  out.files.push_back({"husimi.csv", table.str()});
  out.verdict = husimi_pass(h.diag) ? Verdict::Pass : Verdict::Fail;
  out.notes = {note("eps", h.field.eps),
               note("E", h.field.E),
               note("raw_mass", h.field.raw_mass),
               note("tube_fraction", h.diag.tube_fraction),
               note("positive_fraction", h.diag.positive_fraction),
               note("marginal_l1", h.diag.marginal_l1),
               note("marginal_l1_raw", h.diag.marginal_l1_raw)};
  return out;
}

BoundsReport bounds_for(const Context& ctx) {
  BoundsOptions options;
  options.window = ctx.c.window;
  options.alpha = ctx.c.alpha;
  return bounds_report(ctx.well, ctx.q, ctx.c.regime, ctx.c.schedule, options);
}

double delta_lower_of(const ExperimentConfig& c, const BoundsRow& row) {
  if (row.window) return row.window->delta_lower;
  return c.boundary && *c.boundary == "L" ? row.lower_L : row.lower_0;
}

bool row_pass(const ExperimentConfig& c, const BoundsRow& row) {
  return row.upper.delta_upper >= -tol::exp && delta_lower_of(c, row) >= -tol::exp && row.tunneling.pass &&
         row.gronwall.pass;
}

StepResult bounds_step(Context& ctx) {
  const BoundsReport report = bounds_for(ctx);
  CsvTable table({"eps", "E", "delta_upper", "delta_lower", "tunneling_margin", "gronwall_margin", "verdict"});
  for (const BoundsRow& row : report.rows) {
    const double tunneling = row.tunneling.pairs > 0 ? row.tunneling.worst_margin : std::nan("");
    table.add({fmt(row.eps), fmt(row.E), fmt(row.upper.delta_upper), fmt(delta_lower_of(ctx.c, row)), fmt(tunneling),
               fmt(row.gronwall.worst_margin), row_pass(ctx.c, row) ? "PASS" : "FAIL"});
  }
  const BoundsVerdict v = verdict(report);
  StepResult out;
  out.files.push_back({"bounds.csv", table.str()});
  out.verdict = v.pass ? Verdict::Pass : Verdict::Fail;
  out.notes = v.failures;
  return out;
}

// Forbidden-region points drawn uniformly with the configured seed.
std::vector<double> sample_forbidden(const TurningPoints& tp, double L, std::uint64_t seed, int count) {
  std::mt19937_64 gen(seed);
  const double left = tp.x_minus;
  const double total = left + (L - tp.x_plus);
  std::vector<double> points;
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(gen() >> 11) * 0x1.0p-53 * total;
    points.push_back(t < left ? t : tp.x_plus + (t - left));
  }
  return points;
}

struct ReportRow {
  std::string check;
  double value;
  double threshold;
  Verdict verdict;
};

StepResult report_step(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  std::vector<ReportRow> rows;
  auto at_most = [&](const std::string& name, double value, double limit) {
    rows.push_back({name, value, limit, value <= limit ? Verdict::Pass : Verdict::Fail});
  };
  auto at_least = [&](const std::string& name, double value, double limit) {
    rows.push_back({name, value, limit, value >= limit ? Verdict::Pass : Verdict::Fail});
  };
  auto trend = [&](const std::string& name, const std::vector<double>& errors) {
    rows.push_back({name, worst_growth(errors), 1.5, trend_ok(errors) ? Verdict::Pass : Verdict::Fail});
  };

  {
    const double eps = ctx.smallest();
    const Grid grid = spectrum_grid(ctx, eps);
    std::vector<int> ks;
    for (int k = 0; k < c.spectrum_count; ++k) ks.push_back(k);
    at_most("oracle.max_rel_diff", oracle_compare(ctx, eps, grid, ks).worst, c.oracle_rel);
  }

  const MeasureReport m = measure_for(ctx);
  for (std::size_t p = 0; p < m.phi_names.size(); ++p) {
    std::vector<double> errors;
    for (std::size_t s = 0; s < m.samples.size(); ++s) errors.push_back(m.moment_error(s, p));
    at_most("measure." + m.phi_names[p] + ".final_abs_err", errors.back(), c.moment_tol);
    trend("measure." + m.phi_names[p] + ".trend", errors);
  }
  if (m.has_trace_prediction) {
    auto traces = [&](const std::string& side, double predicted, double MeasureSample::*member) {
      std::vector<double> errors;
      for (const MeasureSample& s : m.samples) {
        errors.push_back(predicted > 0.0 ? std::abs(s.*member - predicted) / predicted : s.*member);
      }
      if (predicted > 0.0) {
        at_most("measure.trace" + side + ".final_rel_err", errors.back(), c.trace_rel);
      } else {
        at_most("measure.trace" + side + ".final_value", errors.back(), c.trace_zero);
      }
      trend("measure.trace" + side + ".trend", errors);
    };
    traces("0", m.trace0_predicted, &MeasureSample::trace0);
    traces("L", m.traceL_predicted, &MeasureSample::traceL);
  }

  const BoundsReport b = bounds_for(ctx);
  {
    std::vector<double> upper, lower;
    double tunneling = INFINITY, gronwall = INFINITY;
    for (const BoundsRow& row : b.rows) {
      upper.push_back(row.upper.delta_upper);
      lower.push_back(delta_lower_of(c, row));
      if (row.tunneling.pairs > 0) tunneling = std::min(tunneling, row.tunneling.worst_margin);
      gronwall = std::min(gronwall, row.gronwall.worst_margin);
    }
    at_least("bounds.delta_upper.min", *std::min_element(upper.begin(), upper.end()), -tol::exp);
    at_least("bounds.delta_lower.min", *std::min_element(lower.begin(), lower.end()), -tol::exp);
    trend("bounds.delta_upper.trend", upper);
    trend("bounds.delta_lower.trend", lower);
    if (std::isfinite(tunneling)) {
      at_least("bounds.tunneling.worst_margin", tunneling, -tol::exp);
    } else {
      rows.push_back({"bounds.tunneling.worst_margin", std::nan(""), -tol::exp, Verdict::None});
    }
    at_least("bounds.gronwall.worst_margin", gronwall, -tol::exp);
  }

  if (c.regime.regime == Regime::Ground) {
    const Eigenpair& pair = ctx.regime_pair(ctx.smallest());
    const AgmonProfile d0 = agmon_profile(ctx.well, ctx.well.E0(), pair.x);
    const TurningPoints tp = turning_points(ctx.well, pair.E);
    const std::vector<double> points = sample_forbidden(tp, c.L, c.seed, kEnvelopePoints);
    at_most("bounds.envelope_deviation", envelope_deviation(pair, ctx.well, d0, points), kEnvelopeTolerance);
  }

  const HusimiRun h = husimi_for(ctx);
  at_least("husimi.tube_fraction", h.diag.tube_fraction, kTubeMass);
  at_most("husimi.branch_imbalance", std::abs(h.diag.positive_fraction - 0.5), kBranchTolerance);
  at_most("husimi.marginal_l1", h.diag.marginal_l1, kMarginalL1);

  CsvTable table({"check", "value", "threshold", "verdict"});
  StepResult out;
  out.verdict = Verdict::Pass;
  for (const ReportRow& r : rows) {
    table.add({r.check, fmt(r.value), fmt(r.threshold), to_string(r.verdict)});
    if (r.verdict == Verdict::Fail) {
      out.verdict = Verdict::Fail;
      out.notes.push_back(r.check + " failed: " + fmt(r.value) + " vs " + fmt(r.threshold));
    }
  }
  out.files.push_back({"report.csv", table.str()});
  return out;
}

ordered_json effective_config(const ExperimentConfig& c) {
  auto pair_or_null = [](const std::optional<std::pair<double, double>>& p) {
    return p ? ordered_json::array({p->first, p->second}) : ordered_json();
  };
  ordered_json j;
  j["potential"] = {{"V", c.V}, {"L", c.L}, {"q", c.q.empty() ? "none" : c.q}};
  j["schedule"] = {{"eps", c.schedule}};
  j["run"] = {{"pipelines", c.pipelines}, {"regime", c.regime_text}, {"output", c.output},
              {"seed", c.seed},           {"threads", c.threads}};
  j["grid"] = {{"policy", c.regime.grid_n > 0 ? ordered_json(c.regime.grid_n) : ordered_json("auto")}};
  j["spectrum"] = {{"eps", eps_or_smallest(c, c.spectrum_eps)},
                   {"count", c.spectrum_count},
                   {"window", pair_or_null(c.spectrum_window)},
                   {"oracle", c.spectrum_oracle},
                   {"oracle_rel", c.oracle_rel}};
  j["eigen"] = {{"index", c.eigen_index ? ordered_json(*c.eigen_index) : ordered_json("regime")}};
  j["agmon"] = {{"energy", c.agmon_energy ? ordered_json(*c.agmon_energy) : ordered_json("regime")},
                {"points", c.agmon_points}};
  j["measure"] = {{"phi", c.phi},
                  {"indicator_width", c.indicator_width},
                  {"high_factor", c.regime.high_factor},
                  {"tolerance", c.moment_tol},
                  {"trace_rel", c.trace_rel},
                  {"trace_zero", c.trace_zero}};
  j["husimi"] = {{"eps", eps_or_smallest(c, c.husimi_eps)}, {"nx", c.husimi_nx}, {"nxi", c.husimi_nxi},
                 {"xi_max", c.xi_max}, {"tube", c.tube_const}};
  j["bounds"] = {{"window", pair_or_null(c.window)},
                 {"boundary", c.boundary ? ordered_json(*c.boundary) : ordered_json()},
                 {"alpha", c.alpha}};
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) fail(ErrorCode::ConfigError, "cannot write " + path.string());
}

}  // namespace

std::string RunManifest::json() const {
  ordered_json j;
  j["tool"] = tool;
  j["version"] = version;
  j["output_dir"] = output_dir;
  j["config"] = ordered_json::parse(config_json.empty() ? "{}" : config_json);
  ordered_json entries = ordered_json::array();
  for (const auto& [k, v] : config_echo) entries.push_back({{"key", k}, {"value", v}});
  j["config_entries"] = entries;
  ordered_json steps_json = ordered_json::array();
  for (const StepRecord& s : steps) {
    steps_json.push_back({{"pipeline", s.pipeline}, {"seconds", s.seconds}, {"verdict", to_string(s.verdict)},
                          {"notes", s.notes}});
  }
  j["steps"] = steps_json;
  ordered_json files = ordered_json::array();
  for (const OutputFile& f : outputs) files.push_back({{"file", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["outputs"] = files;
  j["status"] = pass ? "PASS" : "FAIL";
  return j.dump(2) + "\n";
}

RunManifest run(const ExperimentConfig& config) {
  validate(config);
  if (config.threads > 0) set_default_workers(config.threads);
  Context ctx(config);

  RunManifest manifest;
  manifest.output_dir = config.output;
  manifest.config_echo = config.echo;
  manifest.config_json = effective_config(config).dump();

  std::vector<Product> products;
  for (const std::string& name : kPipelineOrder) {
    if (std::find(config.pipelines.begin(), config.pipelines.end(), name) == config.pipelines.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    StepResult r;
    if (name == "spectrum") r = spectrum_step(ctx);
    else if (name == "eigen") r = eigen_step(ctx);
    else if (name == "agmon") r = agmon_step(ctx);
    else if (name == "measure") r = measure_step(ctx);
    else if (name == "husimi") r = husimi_step(ctx);
    else if (name == "bounds") r = bounds_step(ctx);
    else r = report_step(ctx);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    manifest.steps.push_back({name, elapsed.count(), r.verdict, r.notes});
    if (r.verdict == Verdict::Fail) manifest.pass = false;
    for (Product& p : r.files) products.push_back(std::move(p));
  }

  const std::filesystem::path dir(config.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::ConfigError, "[run] output: cannot create " + config.output + ": " + ec.message());
  for (const Product& p : products) {
    write_file(dir / p.file, p.text);
    manifest.outputs.push_back({p.file, sha256_hex(p.text), p.text.size()});
  }
  write_file(dir / "manifest.json", manifest.json());
  return manifest;
}

}  // namespace wellprobe
