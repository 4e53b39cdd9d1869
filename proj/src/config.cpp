#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "nelson/model.hpp"

namespace nelson {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

long long to_int(const std::string& s) {
  std::size_t used = 0;
  long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

std::vector<Lattice> parse_modes(const std::string& v) {
  std::vector<Lattice> out;
  for (const auto& t : tokens(v)) {
    auto parts = split(t, ',');
    if (parts.empty() || parts.size() > 3) throw std::invalid_argument(t);
    Lattice n = Lattice::Zero();
    for (std::size_t i = 0; i < parts.size(); ++i) n[i] = int(to_int(parts[i]));
    out.push_back(n);
  }
  return out;
}

VecXc parse_complex_list(const std::string& v) {
  auto ts = tokens(v);
  VecXc out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto parts = split(ts[i], ',');
    if (parts.size() == 1) out[i] = to_double(parts[0]);
    else if (parts.size() == 2) out[i] = cplx(to_double(parts[0]), to_double(parts[1]));
    else throw std::invalid_argument(ts[i]);
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& t : tokens(v)) out.push_back(to_double(t));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"model",
       {
           {"dimension", [](RunConfig& c, const std::string& v) { c.model.dimension = int(to_int(v)); }},
           {"box_length", [](RunConfig& c, const std::string& v) { c.model.box_length = to_double(v); }},
           {"particle_modes", [](RunConfig& c, const std::string& v) { c.model.particle_modes = parse_modes(v); }},
           {"field_modes", [](RunConfig& c, const std::string& v) { c.model.field_modes = parse_modes(v); }},
           {"field_mass", [](RunConfig& c, const std::string& v) { c.model.mass = to_double(v); }},
           {"form_factor", [](RunConfig& c, const std::string& v) { c.model.form_factor = parse_real_list(v); }},
           {"initial_u", [](RunConfig& c, const std::string& v) { c.model.initial_u = parse_complex_list(v); }},
           {"initial_alpha", [](RunConfig& c, const std::string& v) { c.model.initial_alpha = parse_complex_list(v); }},
       }},
      {"run",
       {
           {"kind", [](RunConfig& c, const std::string& v) { c.kind = v; }},
           {"n_values",
            [](RunConfig& c, const std::string& v) {
              c.model.n_values.clear();
              for (const auto& t : tokens(v)) c.model.n_values.push_back(int(to_int(t)));
            }},
           {"order", [](RunConfig& c, const std::string& v) { c.model.order = int(to_int(v)); }},
           {"t_final", [](RunConfig& c, const std::string& v) { c.model.t_final = to_double(v); }},
           {"dt", [](RunConfig& c, const std::string& v) { c.model.dt = to_double(v); }},
           {"seed", [](RunConfig& c, const std::string& v) { c.seed = std::uint64_t(to_int(v)); }},
           {"integrator", [](RunConfig& c, const std::string& v) { c.model.integrator = v; }},
           {"initial_excitation", [](RunConfig& c, const std::string& v) { c.initial_excitation = v; }},
       }},
      {"truncation",
       {
           {"n_b", [](RunConfig& c, const std::string& v) { c.model.n_b = int(to_int(v)); }},
           {"n_a", [](RunConfig& c, const std::string& v) { c.model.n_a = int(to_int(v)); }},
           {"exact_field_cap", [](RunConfig& c, const std::string& v) { c.model.exact_field_cap = int(to_int(v)); }},
           {"max_basis", [](RunConfig& c, const std::string& v) { c.model.max_basis = to_int(v); }},
           {"tol_norm_drift", [](RunConfig& c, const std::string& v) { c.model.tol.norm_drift = to_double(v); }},
           {"tol_symplectic", [](RunConfig& c, const std::string& v) { c.model.tol.symplectic_defect = to_double(v); }},
           {"tol_weyl_tail", [](RunConfig& c, const std::string& v) { c.model.tol.weyl_tail = to_double(v); }},
           {"tol_cap_doubling", [](RunConfig& c, const std::string& v) { c.model.tol.cap_doubling = to_double(v); }},
       }},
  };
  return s;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto& keys = schema().at(section);
    auto it = keys.find(key);
    if (it == keys.end()) fail("unknown key '" + key + "' in [" + section + "]");
    try {
      it->second(c, value);
    } catch (const std::exception&) {
      fail("cannot parse value for '" + key + "': " + value);
    }
  }
  static const char* kinds[] = {"skg-only", "bogoliubov", "hierarchy", "convergence", "densities"};
  if (std::find(std::begin(kinds), std::end(kinds), c.kind) == std::end(kinds))
    throw ConfigError("unknown scenario kind '" + c.kind + "'");
  if (c.model.integrator != "rk4" && c.model.integrator != "split")
    throw ConfigError("integrator must be rk4 or split");
  if (c.initial_excitation != "vacuum" && c.initial_excitation != "one-particle" &&
      c.initial_excitation != "two-excitation")
    throw ConfigError("unknown initial_excitation '" + c.initial_excitation + "'");
  try {
    validate(c.model);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  if ((c.kind == "convergence" || c.kind == "densities") && c.model.n_values.size() < 3)
    throw ConfigError("kind '" + c.kind + "' needs at least three n_values");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace nelson
