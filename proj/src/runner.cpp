#include "nelson/runner.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "nelson/densities.hpp"
#include "nelson/fit.hpp"

namespace nelson {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

// Per-module generator from the run seed.
std::mt19937_64 module_rng(std::uint64_t seed, const std::string& module) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : module) h = (h ^ ch) * 1099511628211ull;
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(h), std::uint32_t(h >> 32)};
  return std::mt19937_64(seq);
}

json complex_list(const VecXc& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

std::string basis_json(const ModeBasis& b) {
  json j;
  j["dimension"] = b.dimension;
  j["box_length"] = b.box_length;
  j["mass"] = b.mass;
  j["particle_modes"] = json::array();
  for (int p = 0; p < b.n_p(); ++p) {
    const Lattice& n = b.particle_index[p];
    j["particle_modes"].push_back({{"index", {n[0], n[1], n[2]}}, {"kappa", b.kappa[p]}});
  }
  j["field_modes"] = json::array();
  for (int k = 0; k < b.n_f(); ++k) {
    const Lattice& n = b.field_index[k];
    j["field_modes"].push_back({{"index", {n[0], n[1], n[2]}},
                                {"omega", b.omega[k]},
                                {"g", b.g[k]},
                                {"eta", b.eta[k]},
                                {"neg", b.neg[k]}});
  }
  return j.dump(2) + "\n";
}

std::string format(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

std::string trajectory_csv(const Trajectory& traj, const ModeBasis& b, double dt, double t_final) {
  std::ostringstream out;
  out << "t,norm_u,energy,theta";
  for (int p = 0; p < b.n_p(); ++p) out << ",re_u" << p << ",im_u" << p;
  for (int k = 0; k < b.n_f(); ++k) out << ",re_alpha" << k << ",im_alpha" << k;
  out << "\n";
  const int steps = int(std::lround(t_final / dt));
  for (int j = 0; j <= steps; ++j) {
    const ClassicalState s = traj.at(j * dt);
    out << format(j * dt) << ',' << format(s.u.norm()) << ',' << format(skg_energy(b, s)) << ',' << format(s.theta);
    for (int p = 0; p < b.n_p(); ++p) out << ',' << format(s.u[p].real()) << ',' << format(s.u[p].imag());
    for (int k = 0; k < b.n_f(); ++k) out << ',' << format(s.alpha[k].real()) << ',' << format(s.alpha[k].imag());
    out << "\n";
  }
  return out.str();
}

// Upper triangles of Hermitian matrices, one row per entry.
struct DensityTable {
  std::ostringstream out;
  DensityTable() { out << "source,N,block,i,j,re,im\n"; }
  void add(const std::string& source, int N, const std::string& block, const MatXc& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = i; j < m.cols(); ++j)
        out << source << ',' << N << ',' << block << ',' << i << ',' << j << ',' << format(m(i, j).real()) << ','
            << format(m(i, j).imag()) << "\n";
  }
};

json skg_section(const ModeBasis& b, const Trajectory& traj, double t_final) {
  const ClassicalState& s0 = traj.nodes().front();
  const double n0 = s0.u.norm(), e0 = skg_energy(b, s0);
  double norm_drift = 0.0, energy_drift = 0.0, free_flow = 0.0;
  const bool decoupled = b.g.cwiseAbs().maxCoeff() == 0.0;
  for (const auto& s : traj.nodes()) {
    if (s.t > t_final + 1e-12) break;
    norm_drift = std::max(norm_drift, std::abs(s.u.norm() - n0));
    energy_drift = std::max(energy_drift, std::abs(skg_energy(b, s) - e0));
    if (decoupled) {
      VecXc u = s0.u, a = s0.alpha;
      for (int p = 0; p < u.size(); ++p) u[p] *= std::exp(-I * b.kappa[p] * s.t);
      for (int k = 0; k < a.size(); ++k) a[k] *= std::exp(-I * b.omega[k] * s.t);
      free_flow = std::max(free_flow, (u - s.u).norm() + (a - s.alpha).norm());
    }
  }
  const ClassicalState end = traj.at(t_final);
  json j;
  j["t"] = t_final;
  j["norm_drift"] = norm_drift;
  j["energy_drift"] = energy_drift;
  j["energy"] = e0;
  if (decoupled) j["free_flow_error"] = free_flow;
  j["u"] = complex_list(end.u);
  j["alpha"] = complex_list(end.alpha);
  j["theta"] = end.theta;
  return j;
}

ConvergenceSetup convergence_setup(const RunConfig& rc, bool doubled) {
  const ModelConfig& m = rc.model;
  ConvergenceSetup s;
  const int f = doubled ? 2 : 1;
  s.n_b = f * m.n_b;
  s.n_a = f * m.n_a;
  s.field_cap = f * m.exact_field_cap;
  s.order = m.order;
  s.t = m.t_final;
  s.dt = m.dt;
  s.initial = parse_initial_excitation(rc.initial_excitation);
  s.max_basis = m.max_basis;
  s.weyl_tail = m.tol.weyl_tail;
  return s;
}

// Fitted slope over the points flagged valid; null when fewer than three.
json slope_json(const std::vector<int>& Ns, const std::vector<double>& e, const std::vector<bool>& valid) {
  std::vector<std::pair<int, double>> pts;
  for (std::size_t i = 0; i < Ns.size(); ++i)
    if (valid[i] && std::isfinite(e[i]) && e[i] > 0.0) pts.emplace_back(Ns[i], e[i]);
  if (pts.size() < 3) return nullptr;
  const SlopeFit f = fit_slope(pts);
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}, {"stderr", f.stderr_slope},
          {"points", pts.size()}};
}

struct SweepOutcome {
  std::vector<ConvergencePoint> points;
  std::vector<ConvergencePoint> doubled;
  EffectiveDynamics eff;
};

SweepOutcome run_sweep(const RunConfig& rc, const Trajectory& traj, const RunOptions& opt, std::ostream& log,
                       json& timing) {
  const ConvergenceSetup setup = convergence_setup(rc, false);
  auto start = std::chrono::steady_clock::now();
  SweepOutcome out{{}, {}, effective_dynamics(traj, setup)};
  log << "effective dynamics: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
      << " s\n";
  out.points = convergence_sweep(traj, out.eff, rc.model.n_values, setup, opt.threads);
  for (const auto& p : out.points) {
    log << "N = " << p.N << ": field cap " << p.field_cap << ", dim " << p.exact_dim << ", " << p.seconds << " s\n";
    timing["points"].push_back({{"N", p.N}, {"seconds", p.seconds}});
  }
  if (opt.doubled_caps) {
    const ConvergenceSetup big = convergence_setup(rc, true);
    const EffectiveDynamics eff2 = effective_dynamics(traj, big);
    out.doubled = convergence_sweep(traj, eff2, rc.model.n_values, big, opt.threads);
    for (const auto& p : out.doubled) {
      log << "doubled N = " << p.N << ": field cap " << p.field_cap << ", " << p.seconds << " s\n";
      timing["doubled_points"].push_back({{"N", p.N}, {"seconds", p.seconds}});
    }
  }
  return out;
}

double relative_change(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); }

json convergence_report(const RunConfig& rc, const SweepOutcome& sw, std::ostream& log) {
  const std::vector<int>& Ns = rc.model.n_values;
  const int R = rc.model.order;
  const double tol = rc.model.tol.cap_doubling;
  const std::size_t n = sw.points.size();
  std::vector<bool> valid(n, true);
  json points = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const ConvergencePoint& p = sw.points[i];
    json j{{"N", p.N},
           {"field_cap", p.field_cap},
           {"exact_dim", p.exact_dim},
           {"errors", p.errors},
           {"propagator_errors", p.propagator},
           {"psi_r_norms", p.psi_r_norms},
           {"initial_norm", p.initial_norm},
           {"dropped_mass", p.dropped_mass},
           {"exact_norm_drift", p.exact_norm_drift}};
    if (sw.eff.has_quad) j["density_errors"] = {{"part", p.density_part}, {"field", p.density_field}};
    if (p.exact_norm_drift > rc.model.tol.norm_drift)
      throw InvariantError("exact evolution norm drift " + std::to_string(p.exact_norm_drift) + " at N = " +
                           std::to_string(p.N));
    if (!sw.doubled.empty()) {
      const ConvergencePoint& q = sw.doubled[i];
      std::vector<double> de, dp;
      for (int r = 0; r <= R; ++r) {
        de.push_back(relative_change(p.errors[r], q.errors[r]));
        dp.push_back(relative_change(p.propagator[r], q.propagator[r]));
      }
      double worst = 0.0;
      for (double d : de) worst = std::max(worst, d);
      for (double d : dp) worst = std::max(worst, d);
      valid[i] = worst <= tol;
      j["doubling"] = {{"errors", q.errors}, {"propagator_errors", q.propagator}, {"relative_change", de},
                       {"propagator_relative_change", dp}, {"valid", bool(valid[i])}};
      if (!valid[i]) log << "N = " << p.N << ": cap doubling moved an error by " << worst << "\n";
    }
    points.push_back(std::move(j));
  }
  json slopes = json::array(), prop = json::array();
  for (int r = 0; r <= R; ++r) {
    std::vector<double> e, u;
    for (const auto& p : sw.points) {
      e.push_back(p.errors[r]);
      u.push_back(p.propagator[r]);
    }
    slopes.push_back(slope_json(Ns, e, valid));
    prop.push_back(slope_json(Ns, u, valid));
  }
  json rep{{"points", points}, {"slopes", slopes}, {"propagator_slopes", prop}};
  if (sw.eff.has_quad) {
    std::vector<double> dp, df;
    for (const auto& p : sw.points) {
      dp.push_back(p.density_part);
      df.push_back(p.density_field);
    }
    rep["density_slopes"] = {{"part", slope_json(Ns, dp, valid)}, {"field", slope_json(Ns, df, valid)}};
    const WickReport w = wick_check(sw.eff.family.chi[0], sw.eff.space);
    rep["parity"] = {{"one_point", w.one_point}, {"three_point", w.three_point}};
  }
  rep["doubled_caps"] = !sw.doubled.empty();
  bool all = true;
  for (bool v : valid) all = all && v;
  rep["valid"] = all;
  return rep;
}

json bogoliubov_report(const RunConfig& rc, const Trajectory& traj, DensityTable& dens) {
  const ModeBasis& b = traj.basis();
  const int steps = int(std::lround(rc.model.t_final / rc.model.dt));
  QuadState q = quad_initial(b, GeneralizedDensity::vacuum(b.n_p() + b.n_f()));
  double worst = 0.0;
  for (int j = 0; j < steps; ++j) {
    q = quad_step(q, traj, rc.model.dt);
    worst = std::max(worst, check_symplectic(q.map));
    if (worst > rc.model.tol.symplectic_defect)
      throw InvariantError("symplectic defect " + std::to_string(worst) + " at t = " + std::to_string(q.gamma.t));
  }
  const ClassicalState s = traj.at(rc.model.t_final);
  const MatXc normal = q.gamma.normal();
  dens.add("gamma", 0, "part", normal.topLeftCorner(b.n_p(), b.n_p()));
  dens.add("gamma", 0, "field", normal.bottomRightCorner(b.n_f(), b.n_f()));
  for (int N : rc.model.n_values) {
    const ReducedDensities d = densities_next_order(q.gamma, q.beta, s, N);
    dens.add("next_order", N, "part", d.part);
    dens.add("next_order", N, "field", d.field);
  }
  return {{"symplectic_defect", worst},
          {"block_conditions_defect", block_conditions_defect(q.map)},
          {"shale_stinespring", shale_stinespring(q.map)},
          {"gamma_hermiticity", hermiticity_defect(q.gamma.gamma)},
          {"beta01_part", complex_list(q.beta.part)},
          {"beta01_field", complex_list(q.beta.field)}};
}

json hierarchy_report(const RunConfig& rc, const Trajectory& traj, std::uint64_t seed) {
  const ModeBasis& b = traj.basis();
  const ModelConfig& m = rc.model;
  const ExcitationSpace sp(b, m.n_b, m.n_a);
  if (sp.dim() > m.max_basis) throw CapacityError("excitation space exceeds the basis guard");
  const int steps = int(std::lround(m.t_final / m.dt));
  CorrectionFamily fam{std::vector<MatXc>(m.order + 1, sp.zero()), 0.0};
  fam.chi[0] = initial_excitation(parse_initial_excitation(rc.initial_excitation), sp, b, traj.at(0.0).phi());
  for (int j = 0; j < steps; ++j) {
    fam = evolve_hierarchy(fam, sp, traj, m.dt);
    fam.t = (j + 1) * m.dt;
  }
  const ClassicalState s = traj.at(m.t_final);
  json chi = json::array();
  for (int l = 0; l <= m.order; ++l)
    chi.push_back({{"norm", fam.chi[l].norm()},
                   {"orthogonality_defect", orthogonality_defect(sp, fam.chi[l], s.phi())},
                   {"moment_1", moment_report(sp, fam.chi[l], 1)},
                   {"moment_2", moment_report(sp, fam.chi[l], 2)}});
  if (std::abs(fam.chi[0].norm() - 1.0) > m.tol.norm_drift)
    throw InvariantError("U_0 norm drift " + std::to_string(std::abs(fam.chi[0].norm() - 1.0)));

  // remainder bound ratios at the final state, particle cap above N
  std::mt19937_64 rng = module_rng(seed, "hierarchy");
  const FluctuationCoefficients c = fluctuation_coefficients(s, b);
  json rem = json::array();
  for (int r = 0; r <= m.order; ++r) {
    json row = json::array();
    std::vector<std::pair<int, double>> pts;
    double constant = 0.0;
    for (int N : m.n_values) {
      const ExcitationSpace big(b, N + 1, 2);
      const RemainderReport rep = check_remainder_bound(r, N, big, c, sector_samples(big, 100, rng));
      row.push_back({{"N", N}, {"max_ratio", rep.max_ratio}});
      if (rep.max_ratio > 0.0) pts.emplace_back(N, rep.max_ratio);
      constant = std::max(constant, rep.max_ratio * std::pow(double(N), 0.5 * (r + 1)));
    }
    json fit = nullptr;
    if (pts.size() >= 3) {
      const SlopeFit f = fit_slope(pts);
      fit = {{"slope", f.slope}, {"residual", f.residual}, {"expected", -0.5 * (r + 1)}};
    }
    rem.push_back({{"r", r}, {"points", row}, {"fit", fit}, {"constant", constant}});
  }
  const WickReport w = wick_check(fam.chi[0], sp);
  return {{"chi", chi}, {"parity", {{"one_point", w.one_point}, {"three_point", w.three_point}}}, {"remainder", rem}};
}

}  // namespace

int run_scenario(const RunOptions& opt, std::ostream& log) {
  RunConfig rc;
  try {
    rc = load_config(opt.config_path);
    if (opt.seed) rc.seed = *opt.seed;
    // sweep points are aggregated in increasing N
    auto& Ns = rc.model.n_values;
    std::sort(Ns.begin(), Ns.end());
    Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
    validate(rc.model);
    static const std::vector<std::string> kinds{"skg-only", "bogoliubov", "hierarchy", "convergence", "densities"};
    if (std::find(kinds.begin(), kinds.end(), rc.kind) == kinds.end())
      throw ConfigError("unknown scenario kind '" + rc.kind + "'");
    parse_initial_excitation(rc.initial_excitation);
    parse_integrator(rc.model.integrator);
    if ((rc.kind == "convergence" || rc.kind == "densities") && rc.model.n_values.empty())
      throw ConfigError("scenario '" + rc.kind + "' needs run.n_values");
    if (opt.threads < 1) throw ConfigError("--threads must be positive");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const PreconditionError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    const ModelConfig& m = rc.model;
    const ModeBasis b = build_basis(m);
    const Trajectory traj(b, initial_state(m, b), m.t_final, 0.5 * m.dt, parse_integrator(m.integrator),
                          m.tol.norm_drift);
    json report, timing;
    report["kind"] = rc.kind;
    report["seed"] = rc.seed;
    report["skg"] = skg_section(b, traj, m.t_final);
    DensityTable dens;
    const ClassicalState end = traj.at(m.t_final);
    dens.add("mean_field", 0, "part", end.phi() * end.phi().adjoint());
    dens.add("mean_field", 0, "field", end.alpha * end.alpha.adjoint());

    if (rc.kind == "bogoliubov") report["bogoliubov"] = bogoliubov_report(rc, traj, dens);
    if (rc.kind == "hierarchy") report["hierarchy"] = hierarchy_report(rc, traj, rc.seed);
    if (rc.kind == "convergence" || rc.kind == "densities") {
      if (rc.kind == "densities" && rc.initial_excitation != "vacuum")
        log << "warning: the next-order density model assumes a vacuum initial excitation\n";
      const SweepOutcome sw = run_sweep(rc, traj, opt, log, timing);
      report["convergence"] = convergence_report(rc, sw, log);
      if (sw.eff.has_quad)
        for (const auto& p : sw.points) {
          const ReducedDensities d = densities_next_order(sw.eff.quad.gamma, sw.eff.quad.beta, end, p.N);
          dens.add("next_order", p.N, "part", d.part);
          dens.add("next_order", p.N, "field", d.field);
        }
    }

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    write_atomic(dir / "basis.json", basis_json(b));
    write_atomic(dir / "trajectory.csv", trajectory_csv(traj, b, m.dt, m.t_final));
    write_atomic(dir / "densities.csv", dens.out.str());
    write_atomic(dir / "report.json", report.dump(2) + "\n");
    // kept out of report.json so that reports are reproducible byte for byte
    timing["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_atomic(dir / "timing.json", timing.dump(2) + "\n");
    log << "wall clock: " << timing["total_seconds"].get<double>() << " s\n";
    return exit_ok;
  } catch (const CapacityError& e) {
    log << "capacity: " << e.what() << "\n";
    return exit_capacity;
  } catch (const InvariantError& e) {
    log << "invariant violated: " << e.what() << "\n";
    return exit_invariant;
  } catch (const PreconditionError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace nelson
