#include "porodec/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace porodec {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

const std::vector<std::string>& fixed_keys() {
  static const std::vector<std::string> keys{
      "model.kind",      "model.name",
      "mesh.n",          "mesh.domain",        "mesh.hole_x",     "mesh.hole_y",    "mesh.hole_r",
      "params.lambda",   "params.mu",          "params.kappa_over_nu", "params.inv_M", "params.alpha",
      "params.m",        "params.pressure_bc",
      "time.tau",        "time.T",             "time.capture_every",
      "loads.f_x",       "loads.f_y",          "loads.f_time",    "loads.g_space",  "loads.g_time",
      "initial.p",
      "toy.omega",       "toy.p0",
      "study.mesh_ladder", "study.tau_ladder", "study.ref_n",     "study.ref_tau",  "study.omegas",
      "study.taus",      "study.fine_factor",  "study.sizes",     "study.reps",     "study.T",
      "study.history",   "study.gap_taus",
  };
  return keys;
}

// Per-network keys carry a 1-based index.
const std::regex& indexed_keys() {
  static const std::regex re(
      R"((params\.(kappa_over_nu|alpha)[1-9]|loads\.g[1-9]_(space|time)|initial\.p[1-9]|beta\.b[1-9][1-9]))");
  return re;
}

struct Preset {
  const char* name;
  const char* text;
};

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list{
      {"poro-5.1", R"(
[model]
kind = two-field
[mesh]
n = 16
[params]
lambda = 1.2e10
mu = 6.0e9
kappa_over_nu = 6.33e2
inv_M = 7.8e3
alpha = 0.79
pressure_bc = dirichlet
[time]
T = 10
tau = 1/16
[loads]
f_x = 0
f_y = 0
f_time = 1
g_space = 10
g_time = exp(t)
[initial]
p = 3000*x*(1-x)*y*(1-y)
)"},
      {"poro-5.1-desk", R"(
[model]
kind = two-field
[mesh]
n = 32
[params]
lambda = 1.2e10
mu = 6.0e9
kappa_over_nu = 6.33e2
inv_M = 7.8e3
alpha = 0.79
pressure_bc = dirichlet
[time]
T = 1
tau = 1/64
[loads]
f_x = 0
f_y = 0
f_time = 1
g_space = 10
g_time = exp(t)
[initial]
p = 3000*x*(1-x)*y*(1-y)
[study]
mesh_ladder = 8, 16, 32
tau_ladder = 1/16, 1/32, 1/64, 1/128
ref_n = 64
ref_tau = 1/512
)"},
      {"network-5.2", R"(
[model]
kind = network
[mesh]
n = 16
domain = punched
hole_x = 0.5
hole_y = 0.5
hole_r = 0.25
[params]
m = 4
lambda = 7786.42
mu = 3337.037
inv_M = 4.5e-2
kappa_over_nu1 = 3.75e-4
kappa_over_nu2 = 3.75e-4
kappa_over_nu3 = 1.57e-5
kappa_over_nu4 = 3.75e-5
alpha1 = 0.99
alpha2 = 0.99
alpha3 = 0.99
alpha4 = 0.99
[beta]
b12 = 1.5e-19
b21 = 1.5e-19
b24 = 1.5e-19
b42 = 1.5e-19
b23 = 2e-19
b32 = 2e-19
b34 = 1e-13
b43 = 1e-13
[time]
T = 10
tau = 1/16
[loads]
f_x = 0
f_y = 0
f_time = 1
[initial]
p1 = if((x-0.75)^2 + (y-0.75)^2 <= 1/256, 13300 - 3238400*((x-0.75)^2 + (y-0.75)^2), 650)
p2 = 650
p3 = 1000
p4 = 650
[study]
sizes = 4, 5
reps = 3
)"},
      {"network-m2", R"(
[model]
kind = network
[mesh]
n = 8
domain = square
[params]
m = 2
lambda = 7786.42
mu = 3337.037
inv_M = 4.5e-2
kappa_over_nu1 = 2e-3
kappa_over_nu2 = 1e-3
alpha1 = 0.99
alpha2 = 0.99
[beta]
b12 = 1e-3
b21 = 1e-3
[time]
T = 1
tau = 1/8
[loads]
f_x = 0
f_y = 0
f_time = 1
g1_space = 0
g1_time = 1
g2_space = 0
g2_time = 1
[initial]
p1 = 650 + 500*cos(pi*x)*cos(pi*y)
p2 = 650 - 300*cos(pi*x)*cos(2*pi*y)
[study]
mesh_ladder = 4, 8, 16
ref_n = 32
ref_tau = 1/64
)"},
      {"toy-5.3", R"(
[model]
kind = toy
[toy]
omega = 0.1
p0 = 1
[time]
T = 1
tau = 1e-2
[study]
omegas = 0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20, 0.22, 0.24, 0.26, 0.28, 0.30
taus = 1e-2, 1e-3
gap_taus = 1/8, 1/16, 1/32
fine_factor = 256
history = constant
)"},
  };
  return list;
}

}  // namespace

bool Config::known_key(const std::string& key) {
  const auto& k = fixed_keys();
  if (std::find(k.begin(), k.end(), key) != k.end()) return true;
  return std::regex_match(key, indexed_keys());
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of a section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (!known_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::vector<std::string> Config::preset_names() {
  std::vector<std::string> names;
  for (const auto& p : presets()) names.emplace_back(p.name);
  return names;
}

Config Config::preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (name == p.name) {
      Config c = parse(p.text, "preset " + name);
      c.values_["model.name"] = name;
      return c;
    }
  }
  std::string avail;
  for (const auto& n : preset_names()) avail += (avail.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "'; available presets: " + avail);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known_key(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = trim(value);
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::erase(const std::string& key) { values_.erase(key); }

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::number(const std::string& key) const {
  Expression e;
  try {
    e = Expression::parse(get(key));
  } catch (const ExpressionError& err) {
    throw ConfigError("key '" + key + "': " + err.what());
  }
  if (e.uses_space() || e.uses_time()) throw ConfigError("key '" + key + "' must be a constant");
  const double v = e.eval();
  if (!std::isfinite(v)) throw ConfigError("key '" + key + "' is not finite");
  return v;
}

double Config::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long Config::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v)) throw ConfigError("key '" + key + "' must be an integer");
  return static_cast<long>(v);
}

long Config::integer_or(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool Config::boolean_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = get(key);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' must be a boolean");
}

Expression Config::expression(const std::string& key) const {
  try {
    return Expression::parse(get(key));
  } catch (const ExpressionError& err) {
    throw ConfigError("key '" + key + "': " + err.what());
  }
}

Expression Config::expression_or(const std::string& key, const std::string& fallback) const {
  if (has(key)) return expression(key);
  return Expression::parse(fallback);
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      const Expression e = Expression::parse(item);
      if (e.uses_space() || e.uses_time()) throw ConfigError("key '" + key + "' must list constants");
      out.push_back(e.eval());
    } catch (const ExpressionError& err) {
      throw ConfigError("key '" + key + "': " + err.what());
    }
  }
  return out;
}

std::string Config::kind() const {
  const std::string k = get_or("model.kind", "");
  if (k != "two-field" && k != "network" && k != "toy") {
    throw ConfigError("model.kind must be one of two-field, network, toy (got '" + k + "')");
  }
  return k;
}

std::string Config::to_text() const {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      os << '[' << s << "]\n";
      section = s;
    }
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
  return os.str();
}

}  // namespace porodec
