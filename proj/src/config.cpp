#include "wellprobe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "wellprobe/error.hpp"

namespace wellprobe {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  const std::string& where;
  const std::string& section;
  const std::string& key;

  [[noreturn]] void bad(const std::string& what) const {
    fail(ErrorCode::ConfigError, where + ": [" + section + "] " + key + ": " + what);
  }

  double number(const std::string& text) const {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad("'" + text + "' is not a finite number");
    return v;
  }

  double positive(const std::string& text) const {
    const double v = number(text);
    if (!(v > 0.0)) bad("expected a positive number, got '" + text + "'");
    return v;
  }

  long integer(const std::string& text, long lo) const {
    long v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) bad("'" + text + "' is not an integer");
    if (v < lo) bad("expected an integer >= " + std::to_string(lo) + ", got '" + text + "'");
    return v;
  }

  std::vector<double> numbers(const std::string& text) const {
    std::vector<double> out;
    for (const std::string& item : split_list(text)) out.push_back(number(item));
    if (out.empty()) bad("empty list");
    return out;
  }

  std::pair<double, double> interval(const std::string& text) const {
    const std::vector<double> v = numbers(text);
    if (v.size() != 2) bad("expected two numbers 'a,b', got '" + text + "'");
    if (!(v[0] < v[1])) bad("interval '" + text + "' needs a < b");
    return {v[0], v[1]};
  }

  bool boolean(const std::string& text) const {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    bad("expected true or false, got '" + text + "'");
  }
};

// Shortest %g form that reads back as the same double.
std::string format_eps(double eps) {
  char buf[32];
  for (int digits = 6; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, eps);
    if (std::strtod(buf, nullptr) == eps) break;
  }
  return buf;
}

}  // namespace

RegimeTarget parse_regime(const std::string& text) {
  RegimeTarget t;
  const std::string s = trim(text);
  if (s == "ground") {
    t.regime = Regime::Ground;
  } else if (s == "high" || s == "highenergy") {
    t.regime = Regime::HighEnergy;
  } else if (s.rfind("interior=", 0) == 0) {
    const std::string value = s.substr(9);
    double E = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), E);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(E)) {
      fail(ErrorCode::ConfigError, "regime '" + text + "': interior energy is not a number");
    }
    t.regime = Regime::Interior;
    t.E_star = E;
  } else {
    fail(ErrorCode::ConfigError, "regime '" + text + "': expected ground, interior=E or high");
  }
  return t;
}

void apply_entry(ExperimentConfig& c, const std::string& section, const std::string& key, const std::string& raw,
                 const std::string& where) {
  const std::string value = trim(raw);
  const Field f{where, section, key};
  if (value.empty()) f.bad("missing value");
  const std::string id = section + "." + key;

  if (id == "potential.V") {
    c.V = value;
  } else if (id == "potential.L") {
    c.L = f.positive(value);
  } else if (id == "potential.q") {
    c.q = value == "none" ? std::string() : value;
  } else if (id == "schedule.eps") {
    c.schedule = f.numbers(value);
  } else if (id == "run.pipelines") {
    c.pipelines = split_list(value);
    for (const std::string& p : c.pipelines) {
      if (std::find(kPipelineOrder.begin(), kPipelineOrder.end(), p) == kPipelineOrder.end()) {
        f.bad("unknown pipeline '" + p + "'");
      }
    }
  } else if (id == "run.regime") {
    RegimeTarget t;
    try {
      t = parse_regime(value);
    } catch (const Error& e) {
      f.bad(e.what());
    }
    c.regime_text = value;
    c.regime.regime = t.regime;
    c.regime.E_star = t.E_star;
  } else if (id == "run.output") {
    c.output = value;
  } else if (id == "run.seed") {
    c.seed = static_cast<std::uint64_t>(f.integer(value, 0));
  } else if (id == "run.threads") {
    c.threads = static_cast<unsigned>(f.integer(value, 0));
  } else if (id == "grid.policy") {
    c.regime.grid_n = value == "auto" ? 0 : static_cast<int>(f.integer(value, 32));
  } else if (id == "spectrum.eps") {
    c.spectrum_eps = f.positive(value);
  } else if (id == "spectrum.count") {
    c.spectrum_count = static_cast<int>(f.integer(value, 1));
    c.spectrum_window.reset();
  } else if (id == "spectrum.window") {
    c.spectrum_window = f.interval(value);
  } else if (id == "spectrum.oracle") {
    c.spectrum_oracle = f.boolean(value);
  } else if (id == "spectrum.oracle_rel") {
    c.oracle_rel = f.positive(value);
  } else if (id == "eigen.index") {
    c.eigen_index = static_cast<int>(f.integer(value, 0));
  } else if (id == "agmon.energy") {
    c.agmon_energy = f.number(value);
  } else if (id == "agmon.points") {
    c.agmon_points = static_cast<int>(f.integer(value, 64));
  } else if (id == "measure.phi") {
    c.phi = split_list(value);
    if (c.phi.empty()) f.bad("empty list");
  } else if (id == "measure.indicator_width") {
    c.indicator_width = f.positive(value);
  } else if (id == "measure.high_factor") {
    c.regime.high_factor = f.positive(value);
  } else if (id == "measure.tolerance") {
    c.moment_tol = f.positive(value);
  } else if (id == "measure.trace_rel") {
    c.trace_rel = f.positive(value);
  } else if (id == "measure.trace_zero") {
    c.trace_zero = f.positive(value);
  } else if (id == "husimi.eps") {
    c.husimi_eps = f.positive(value);
  } else if (id == "husimi.nx") {
    c.husimi_nx = static_cast<int>(f.integer(value, 2));
  } else if (id == "husimi.nxi") {
    c.husimi_nxi = static_cast<int>(f.integer(value, 2));
  } else if (id == "husimi.xi_max") {
    c.xi_max = f.positive(value);
  } else if (id == "husimi.tube") {
    c.tube_const = f.positive(value);
  } else if (id == "bounds.window") {
    c.window = f.interval(value);
    c.boundary.reset();
  } else if (id == "bounds.boundary") {
    if (value != "0" && value != "L") f.bad("expected 0 or L, got '" + value + "'");
    c.boundary = value;
    c.window.reset();
  } else if (id == "bounds.alpha") {
    c.alpha = f.positive(value);
  } else {
    fail(ErrorCode::ConfigError, where + ": unknown key '" + key + "' in section [" + section + "]");
  }
  c.echo.emplace_back(id, value);
}

void apply_config_text(ExperimentConfig& config, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  // eps_max / ratio / count are only meaningful together, so they are
  // collected and turned into a schedule at the end.
  std::map<std::string, std::pair<std::string, std::string>> geometric;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail(ErrorCode::ConfigError, where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known{"potential", "schedule", "run",    "grid",  "spectrum",
                                                  "eigen",     "agmon",    "measure", "husimi", "bounds"};
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        fail(ErrorCode::ConfigError, where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigError, where + ": expected key = value");
    if (section.empty()) fail(ErrorCode::ConfigError, where + ": entry before any [section] header");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::ConfigError, where + ": empty key");
    if (section == "schedule" && (key == "eps_max" || key == "ratio" || key == "count")) {
      geometric[key] = {value, where};
    } else {
      apply_entry(config, section, key, value, where);
    }
  }

  if (geometric.empty()) return;
  for (const char* key : {"eps_max", "ratio", "count"}) {
    if (!geometric.count(key)) {
      fail(ErrorCode::ConfigError, source + ": [schedule] " + key + ": required with a geometric schedule");
    }
  }
  const std::string section_name = "schedule";
  const auto field = [&](const std::string& key) {
    return Field{geometric[key].second, section_name, key};
  };
  const std::string k_max = "eps_max", k_ratio = "ratio", k_count = "count";
  const double eps_max = field(k_max).positive(geometric[k_max].first);
  const double ratio = field(k_ratio).positive(geometric[k_ratio].first);
  if (!(ratio < 1.0)) field(k_ratio).bad("ratio must lie in (0, 1)");
  const long count = field(k_count).integer(geometric[k_count].first, 1);
  config.schedule.clear();
  for (long i = 0; i < count; ++i) config.schedule.push_back(eps_max * std::pow(ratio, static_cast<double>(i)));
  for (const char* key : {"eps_max", "ratio", "count"}) config.echo.emplace_back(std::string("schedule.") + key, geometric[key].first);
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ConfigError, path + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  apply_config_text(config, text.str(), path);
}

double spectrum_energy_span(const ExperimentConfig& c, const Well& well, double eps) {
  if (c.spectrum_window) return std::max(c.spectrum_window->second, well.v_max()) - well.E0();
  // Min-max against the flat well at height max V bounds E_{count-1}.
  return well.v_max() - well.E0() + std::pow(std::numbers::pi * c.spectrum_count * eps / c.L, 2);
}

double eps_or_smallest(const ExperimentConfig& config, double override_eps) {
  if (override_eps > 0.0) return override_eps;
  if (config.schedule.empty()) fail(ErrorCode::ConfigError, "[schedule] eps: empty schedule");
  return config.schedule.back();
}

void validate(const ExperimentConfig& c) {
  if (c.schedule.empty()) fail(ErrorCode::ConfigError, "[schedule] eps: empty schedule");
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    if (!(c.schedule[i] > 0.0)) {
      fail(ErrorCode::ConfigError, "[schedule] eps: eps=" + format_eps(c.schedule[i]) + " is not positive");
    }
    if (i > 0 && !(c.schedule[i] < c.schedule[i - 1])) {
      fail(ErrorCode::ConfigError, "[schedule] eps: schedule must be strictly decreasing, eps=" +
                                       format_eps(c.schedule[i]) + " follows eps=" + format_eps(c.schedule[i - 1]));
    }
  }
  if (c.pipelines.empty()) fail(ErrorCode::ConfigError, "[run] pipelines: nothing to run");
  if (c.window && (c.window->first < 0.0 || c.window->second > c.L)) {
    fail(ErrorCode::ConfigError, "[bounds] window: must lie inside [0, L]");
  }
  basket_from_names(c.L, c.phi, c.indicator_width);

  const Well well(Potential::parse(c.V, c.L));
  if (!c.q.empty()) Perturbation::parse(c.q);

  // Every eps the run solves at, largest first; the error names the largest offender.
  std::vector<double> used = c.schedule;
  used.push_back(eps_or_smallest(c, c.spectrum_eps));
  used.push_back(eps_or_smallest(c, c.husimi_eps));
  std::sort(used.begin(), used.end(), std::greater<>());

  if (c.regime.grid_n > 0) {
    const double h = c.L / (c.regime.grid_n + 1);
    for (double eps : used) {
      if (h > 0.5 * eps) {
        fail(ErrorCode::ConfigError, "[grid] policy: n=" + std::to_string(c.regime.grid_n) + " gives h=" +
                                         format_eps(h) + " > eps/2 at eps=" + format_eps(eps));
      }
    }
    return;
  }
  const double span = std::max(std::max(well.v_max(), target_energy(well, c.regime)) - well.E0(),
                               spectrum_energy_span(c, well, eps_or_smallest(c, c.spectrum_eps)));
  for (double eps : used) {
    const double n = std::ceil(20.0 * c.L * std::sqrt(span + 1.0) / eps);
    if (n > kMaxGridNodes) {
      fail(ErrorCode::ConfigError, "[grid] policy: auto grid needs " + format_eps(n) + " nodes at eps=" +
                                       format_eps(eps) + ", above the cap of " + std::to_string(kMaxGridNodes));
    }
  }
}

}  // namespace wellprobe
