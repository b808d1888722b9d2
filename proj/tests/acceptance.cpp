// Acceptance suite: one check per shipped claim, one PASS/FAIL line each.
// Every tolerance and time budget is pinned here in code; the binary exits
// nonzero when any criterion fails or the aggregate budget is exceeded.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "kpp/media.hpp"
#include "kpp/pde.hpp"
#include "kpp/runner.hpp"
#include "kpp/spectral.hpp"
#include "kpp/speed.hpp"

#ifdef KPP_HAVE_EIGEN3
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#endif

using namespace kpp;

namespace {

struct CriterionResult {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}
std::string f3(double v) { return fmt("%.3f", v); }
std::string e2(double v) { return fmt("%.2e", v); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1);
  return xs;
}

std::vector<double> w_grid(double step, double w_max) {
  std::vector<double> g;
  for (double w = step; w <= w_max; w += step) g.push_back(w);
  return g;
}

speed::FrontSpeedEstimate run_empirical(const media::Medium& m, double T, double dx,
                                        double dt, double delta, double w_step) {
  pde::SolverConfig scfg;
  scfg.dt = dt;
  scfg.snapshot_times = linspace(0.0, T, 41);
  const auto traj = pde::simulate(m, {}, T, dx, scfg);
  const auto& last = traj.snapshots.back();
  return speed::empirical_speeds(traj, w_grid(w_step, last.grid.x_right() / last.t), delta);
}

media::Medium cosine_reaction_medium() {
  return media::make_periodic({}, {}, {{0.5, 1, 0.0}}, 1.0, 1.0, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// criterion 1: homogeneous medium, eigenvalue route is exact
CriterionResult criterion_homogeneous_exact() {
  const auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  const auto th = speed::theoretical_speeds(m);
  const double err = std::max(std::abs(th.speeds.under.w - 2.0),
                              std::abs(th.speeds.over.w - 2.0));
  CriterionResult r;
  r.pass = err <= 1e-6;
  r.detail = "w_under=" + fmt("%.9f", th.speeds.under.w) +
             ", w_over=" + fmt("%.9f", th.speeds.over.w) + ", max |w-2|=" + e2(err) +
             " (tol 1e-6)";
  return r;
}

// criterion 2: homogeneous medium, direct simulation agrees and refines
CriterionResult criterion_homogeneous_pde() {
  const auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  const double w_step = 0.002;
  const auto coarse = run_empirical(m, 200.0, 0.1, 0.02, 0.05, w_step);
  const auto fine = run_empirical(m, 200.0, 0.05, 0.01, 0.05, w_step);
  CriterionResult r;
  if (!coarse.w_star_emp || !coarse.w_upper_emp || !fine.w_star_emp || !fine.w_upper_emp) {
    r.detail = "empirical speed criteria were not attained";
    return r;
  }
  const double cs = *coarse.w_star_emp, cu = *coarse.w_upper_emp;
  const double fs = *fine.w_star_emp, fu = *fine.w_upper_emp;
  const bool within = cs >= 1.8 && cs <= 2.2 && cu >= 1.8 && cu <= 2.2;
  // refinement may not move either estimate farther from 2 than one w-cell
  const double slack = w_step + 1e-12;
  const bool toward = std::abs(fs - 2.0) <= std::abs(cs - 2.0) + slack &&
                      std::abs(fu - 2.0) <= std::abs(cu - 2.0) + slack;
  r.pass = within && toward;
  r.detail = "coarse w*=" + f3(cs) + " w^=" + f3(cu) + ", refined w*=" + f3(fs) +
             " w^=" + f3(fu) + "; within 10% of 2: " + (within ? "yes" : "NO") +
             ", refinement toward 2 (one 0.002 cell slack): " + (toward ? "yes" : "NO");
  return r;
}

// criterion 3: compactly supported dip leaves the speed at 2 sqrt(b0)
CriterionResult criterion_compact() {
  const auto m = media::make_compact_perturbation(0.25, -0.2, 5.0);
  const auto th = speed::theoretical_speeds(m);
  const double errw = std::max(std::abs(th.speeds.under.w - 1.0),
                               std::abs(th.speeds.over.w - 1.0));
  // Horizon 600: at capped speed 1 the logarithmic front lag needs twice the
  // time of the homogeneous case to fit inside the 10% band.
  const auto emp = run_empirical(m, 600.0, 0.1, 0.02, 0.05, 0.005);
  CriterionResult r;
  if (!emp.w_star_emp || !emp.w_upper_emp) {
    r.detail = "empirical speed criteria were not attained";
    return r;
  }
  const double ws = *emp.w_star_emp, wu = *emp.w_upper_emp;
  const bool emp_ok = ws >= 0.9 && ws <= 1.1 && wu >= 0.9 && wu <= 1.1;
  r.pass = errw <= 1e-4 && emp_ok;
  r.detail = "theory w=" + fmt("%.6f", th.speeds.under.w) + " (|w-1|=" + e2(errw) +
             ", tol 1e-4); empirical w*=" + f3(ws) + " w^=" + f3(wu) +
             " within 10% of 1: " + (emp_ok ? "yes" : "NO");
  return r;
}

#ifdef KPP_HAVE_EIGEN3
// Independent full-spectrum oracle: rebuild the documented discretisation
// from scratch and take the eigenvalue of maximal real part from a dense
// solver.
double dense_periodic_top(const spectral::OperatorLp& op, double L, int n) {
  const double dx = L / n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double x = j * dx;
    const double a = op.coeff2(x), b = op.coeff1(x), c0 = op.coeff0(x);
    M(j, (j + n - 1) % n) += a / (dx * dx) - b / (2 * dx);
    M(j, j) += -2 * a / (dx * dx) + c0;
    M(j, (j + 1) % n) += a / (dx * dx) + b / (2 * dx);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  double lam = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) lam = std::max(lam, es.eigenvalues()(i).real());
  return lam;
}
#endif

// criterion 4: periodic engine against a dense oracle, then against the PDE
CriterionResult criterion_periodic_cross() {
  const auto m = cosine_reaction_medium();
  double worst = 0;
  for (double p : {0.0, -1.0, 1.0}) {
    const auto op = spectral::assemble_Lp(m, p);
    const double k = spectral::periodic_principal_eigenvalue(op, 256).value;
#ifdef KPP_HAVE_EIGEN3
    const double oracle = dense_periodic_top(op, 1.0, 256);
#else
    const double oracle = spectral::periodic_principal_eigenvalue(op, 2048).value;
#endif
    worst = std::max(worst, std::abs(k - oracle));
  }
  const auto th = speed::theoretical_speeds(m);
  const double w = th.speeds.under.w;
  const auto emp = run_empirical(m, 200.0, 0.1, 0.02, 0.05, 0.005);
  CriterionResult r;
  if (!emp.w_star_emp || !emp.w_upper_emp) {
    r.detail = "empirical speed criteria were not attained";
    return r;
  }
  const double ws = *emp.w_star_emp, wu = *emp.w_upper_emp;
  const bool emp_ok = ws >= 0.9 * w && wu <= 1.1 * w;
  r.pass = worst <= 1e-8 && emp_ok;
  r.detail = std::string("max |k - dense oracle|=") + e2(worst) +
#ifdef KPP_HAVE_EIGEN3
             " (n=256, tol 1e-8)" +
#else
             " (n=2048 self-convergence fallback, tol 1e-8)" +
#endif
             "; w=" + fmt("%.6f", w) + ", empirical w*=" + f3(ws) + " w^=" + f3(wu) +
             " within 10%: " + (emp_ok ? "yes" : "NO");
  return r;
}

// criterion 5: corrector route converges to the periodic eigenvalue
CriterionResult criterion_corrector() {
  const auto m = cosine_reaction_medium();
  const std::vector<double> epsilons{0.2, 0.1, 0.05};
  double worst = 0;
  for (double p : {-1.0, 0.0, 1.0}) {
    std::vector<spectral::CorrectorSolution> sols;
    for (double eps : epsilons)
      sols.push_back(spectral::approximate_corrector(m, p, eps, -30.0, 30.0, 3000));
    const double lam = spectral::richardson_lambda(sols).value;
    const double k =
        spectral::periodic_principal_eigenvalue(spectral::assemble_Lp(m, p), 256).value;
    worst = std::max(worst, std::abs(lam - k));
  }
  CriterionResult r;
  r.pass = worst <= 1e-3;
  r.detail = "max |richardson - periodic| over p in {-1,0,1} = " + e2(worst) +
             " (epsilons 0.2/0.1/0.05, tol 1e-3)";
  return r;
}

// criterion 6: decay-rate inversion against the periodic engine at -p
CriterionResult criterion_riccati() {
  std::vector<media::HarmonicMode> a_modes{{0.2, 1, 0.0}};
  const auto m = media::make_periodic(a_modes, media::derivative_modes(a_modes, 1.0),
                                      {{0.3, 1, 0.5}}, 1.0, 1.0, 0.0, 1.0);
  double worst = 0;
  std::optional<double> hint;
  for (double p : {0.5, 1.0, 2.0}) {
    const auto inv = spectral::lyapunov_inverse_k(m, p, 0.0, 2000.0, 0.02, hint);
    hint = inv.gamma_bar;
    const double k =
        spectral::periodic_principal_eigenvalue(spectral::assemble_Lp(m, -p), 256).value;
    worst = std::max(worst, std::abs(inv.estimate.value - k));
  }
  const auto homog = media::make_homogeneous(1.0, 0.0, 1.0);
  const double mu2 = spectral::riccati_mu(homog, 2.0, 0.0, 200.0, 0.02).mu;
  const double mu_err = std::abs(mu2 - 1.0);
  CriterionResult r;
  r.pass = worst <= 1e-4 && mu_err <= 1e-8;
  r.detail = "max |k(p) - periodic at -p)| over p in {0.5,1,2} = " + e2(worst) +
             " (tol 1e-4); homogeneous mu(2)=" + fmt("%.10f", mu2) + " (|mu-1|=" +
             e2(mu_err) + ", tol 1e-8)";
  return r;
}

// criterion 7: random media give the same speed from every draw
CriterionResult criterion_random_determinism() {
  std::vector<double> ws;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto m = media::make_random_ergodic(seed, 1.0, {0.5, 1.5}, {0.9, 1.1});
    ws.push_back(speed::theoretical_speeds(m).speeds.under.w);
  }
  double lo = ws[0], hi = ws[0], sum = 0;
  for (double w : ws) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
    sum += w;
  }
  const double spread = (hi - lo) / (sum / ws.size());
  CriterionResult r;
  r.pass = spread <= 0.05;
  r.detail = "8 seeds, averaging window 2000: w in [" + f3(lo) + ", " + f3(hi) +
             "], relative spread " + fmt("%.2f", 100 * spread) + "% (tol 5%)";
  return r;
}

// criterion 8: structural properties of the eigenvalue, three media or more
CriterionResult criterion_eigen_properties() {
  std::vector<std::string> issues;
  auto flag = [&](const std::string& s) {
    if (issues.size() < 4) issues.push_back(s);
  };

  const auto full = media::make_periodic({{0.2, 1, 0.3}}, {{0.1, 2, 1.0}}, {{0.4, 1, 0.0}},
                                         1.0, 1.0, 0.0, 1.0);
  const auto cosine = cosine_reaction_medium();
  const auto compact = media::make_compact_perturbation(0.25, -0.2, 5.0);
  const auto drift = media::make_homogeneous(1.0, 0.5, 1.0);
  const auto ap = media::make_almost_periodic(
      {}, {}, {{0.3, 1.0, 0.0}, {0.2, 1.4142135623730951, 0.5}}, 1.0, 0.0, 1.0);

  struct Entry {
    const media::Medium* m;
    const char* name;
    double slack;  // engine resolution for inequality checks
  };
  const std::vector<Entry> menagerie{{&full, "periodic(a,q,c)", 1e-6},
                                     {&cosine, "periodic(c)", 1e-6},
                                     {&compact, "compact", 1e-6},
                                     {&drift, "homogeneous+drift", 1e-6},
                                     {&ap, "almost-periodic", 5e-3}};
  const speed::EngineConfig ecfg;
  auto H = [&](const media::Medium& m, double p) {
    return speed::hamiltonian_at(m, p, speed::default_engine(m), ecfg);
  };
  const std::vector<double> ps{-2.0, -1.0, 0.0, 1.0, 2.0};

  // ordering and growth envelope
  for (const auto& ent : menagerie)
    for (double p : ps) {
      const auto [lo, hi] = H(*ent.m, p);
      if (lo > hi + 1e-12)
        flag(std::string("ordering broken on ") + ent.name + " at p=" + f3(p));
      const auto op = spectral::assemble_Lp(*ent.m, p);
      double c_lo = std::numeric_limits<double>::infinity(), c_hi = -c_lo;
      for (int i = 0; i <= 4800; ++i) {
        const double x = -60.0 + 120.0 * i / 4800.0;
        const double v = op.coeff0(x);
        c_lo = std::min(c_lo, v);
        c_hi = std::max(c_hi, v);
      }
      if (lo < c_lo - ent.slack || hi > c_hi + ent.slack)
        flag(std::string("envelope broken on ") + ent.name + " at p=" + f3(p) + ": [" +
             f3(lo) + "," + f3(hi) + "] vs [" + f3(c_lo) + "," + f3(c_hi) + "]");
    }

  // shift equivariance: moving c by s moves H by exactly s
  const double s = 0.37;
  for (const auto& ent : menagerie) {
    const auto shifted = media::with_shifted_reaction(*ent.m, s);
    for (double p : {-1.0, 0.0, 1.0}) {
      const auto [lo, hi] = H(*ent.m, p);
      const auto [slo, shi] = H(shifted, p);
      if (std::abs(slo - lo - s) > 1e-7 || std::abs(shi - hi - s) > 1e-7)
        flag(std::string("shift equivariance broken on ") + ent.name + " at p=" + f3(p) +
             ": moved by " + fmt("%.9f", slo - lo));
    }
  }

  // drift continuity with its explicit constant:
  // |H' - H| <= C dq + |p| dq + dq^2 / (4 inf a),  C = sqrt(sup coeff0) / inf a
  struct DriftCase {
    media::Medium base, pert;
    double dq;
    const char* name;
  };
  std::vector<DriftCase> drifts;
  for (double amp : {0.1, 0.3}) {
    drifts.push_back({cosine,
                      media::make_periodic({}, {{amp, 1, 0.0}}, {{0.5, 1, 0.0}}, 1.0, 1.0,
                                           0.0, 1.0),
                      amp, "periodic(c)"});
    drifts.push_back({full,
                      media::make_periodic({{0.2, 1, 0.3}}, {{0.1, 2, 1.0}, {amp, 1, 0.0}},
                                           {{0.4, 1, 0.0}}, 1.0, 1.0, 0.0, 1.0),
                      amp, "periodic(a,q,c)"});
    drifts.push_back({drift, media::make_homogeneous(1.0, 0.5 + amp, 1.0), amp,
                      "homogeneous+drift"});
  }
  for (const auto& dc : drifts)
    for (double p : {0.0, 1.0}) {
      const auto [lo, hi] = H(dc.base, p);
      const auto [plo, phi] = H(dc.pert, p);
      double inf_a = std::numeric_limits<double>::infinity(), sup_c0 = 0;
      for (int i = 0; i <= 2000; ++i) {
        const double x = -10.0 + 20.0 * i / 2000.0;
        inf_a = std::min({inf_a, dc.base.a(x), dc.pert.a(x)});
        sup_c0 = std::max({sup_c0, std::abs(spectral::assemble_Lp(dc.base, p).coeff0(x)),
                           std::abs(spectral::assemble_Lp(dc.pert, p).coeff0(x))});
      }
      const double bound = std::sqrt(sup_c0) / inf_a * dc.dq + std::abs(p) * dc.dq +
                           dc.dq * dc.dq / (4.0 * inf_a);
      const double change = std::max(std::abs(plo - lo), std::abs(phi - hi));
      if (change > bound + 1e-9)
        flag(std::string("drift bound broken on ") + dc.name + " at p=" + f3(p) +
             ": change " + e2(change) + " > bound " + e2(bound));
    }

  // midpoint convexity of p -> H(p)
  for (const auto& ent : menagerie)
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        const auto [l1, h1] = H(*ent.m, ps[i]);
        const auto [l2, h2] = H(*ent.m, ps[j]);
        const auto [lm, hm] = H(*ent.m, 0.5 * (ps[i] + ps[j]));
        const double tol = std::max(1e-6, ent.slack);
        if (lm > 0.5 * (l1 + l2) + tol || hm > 0.5 * (h1 + h2) + tol)
          flag(std::string("convexity broken on ") + ent.name + " between p=" + f3(ps[i]) +
               " and p=" + f3(ps[j]));
      }

  // Dirichlet eigenvalues grow with the domain
  const std::vector<Entry> dirichlet_media{{&full, "periodic(a,q,c)", 0},
                                           {&cosine, "periodic(c)", 0},
                                           {&compact, "compact", 0}};
  for (const auto& ent : dirichlet_media) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double L : {5.0, 10.0, 20.0, 40.0}) {
      const int n = static_cast<int>(2 * L / 0.005);
      const double lam = spectral::dirichlet_principal_eigenvalue(*ent.m, -L, L, n).value;
      if (lam < prev - 1e-6)
        flag(std::string("Dirichlet monotonicity broken on ") + ent.name + " at L=" +
             f3(L));
      prev = lam;
    }
  }

  CriterionResult r;
  r.pass = issues.empty();
  if (issues.empty()) {
    r.detail =
        "ordering, growth envelope, shift equivariance, drift-continuity bound, "
        "midpoint convexity on 5 media; Dirichlet domain monotonicity on 3 media: all hold";
  } else {
    std::ostringstream os;
    for (const auto& is : issues) os << is << "; ";
    r.detail = os.str();
  }
  return r;
}

// criterion 9: scaled solutions dominate the variational profile
CriterionResult criterion_wkb() {
  const auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  const auto th = speed::theoretical_speeds(m);
  const auto leg = speed::legendre_conjugate(th.table, speed::default_q_grid());

  pde::SolverConfig scfg;
  scfg.dt = 0.02;
  scfg.min_right_extent = 330.0;  // x/eps reaches 300 at eps = 0.01
  scfg.snapshot_times = {0.0, 25.0, 100.0};
  const auto traj = pde::simulate(m, {}, 100.0, 0.1, scfg);
  const auto rep =
      speed::wkb_compare(traj, leg, {0.04, 0.01}, 0.0, 3.0, 301, th.speeds.under.w);

  const double d_coarse = rep.deviations[0].one_sided_sup;
  const double d_fine = rep.deviations[1].one_sided_sup;
  CriterionResult r;
  r.pass = d_fine <= 0.15 && d_fine < d_coarse;
  r.detail = "one-sided sup on [0,3]: " + fmt("%.4f", d_coarse) + " at eps=0.04, " +
             fmt("%.4f", d_fine) + " at eps=0.01 (tol 0.15, must decrease)";
  return r;
}

// criterion 10: slowly oscillating medium separates the two speeds
CriterionResult criterion_speed_gap() {
  const auto cfg = runner::preset_config("slow_oscillation_slow");
  const auto m = runner::build_medium(cfg);
  pde::SolverConfig scfg;
  scfg.dt = cfg.dt;
  scfg.snapshot_times = linspace(0.0, cfg.t_final, 41);
  const auto traj = pde::simulate(m, {}, cfg.t_final, cfg.dx, scfg);
  const auto& last = traj.snapshots.back();
  const auto est = speed::empirical_speeds(
      traj, w_grid(cfg.w_grid_step, last.grid.x_right() / last.t), cfg.delta);
  CriterionResult r;
  if (!est.w_star_emp || !est.w_upper_emp) {
    r.detail = "empirical speed criteria were not attained";
    return r;
  }
  const double ws = *est.w_star_emp, wu = *est.w_upper_emp;
  const double w_lo_ref = 2.0 * std::sqrt(0.5), w_hi_ref = 2.0 * std::sqrt(1.5);
  const bool lo_ok = std::abs(ws - w_lo_ref) <= 0.25 * w_lo_ref;
  const bool hi_ok = std::abs(wu - w_hi_ref) <= 0.25 * w_hi_ref;
  const bool gap = ws < wu;
  r.pass = lo_ok && hi_ok && gap;
  r.detail = "w*=" + f3(ws) + " vs 2 sqrt(0.5)=" + f3(w_lo_ref) + " (" +
             (lo_ok ? "within" : "OUTSIDE") + " 25%); w^=" + f3(wu) +
             " vs 2 sqrt(1.5)=" + f3(w_hi_ref) + " (" + (hi_ok ? "within" : "OUTSIDE") +
             " 25%); strict gap: " + (gap ? "yes" : "NO");
  return r;
}

// criterion 11: every preset passes the 10% sandwich verdict
CriterionResult criterion_sandwich_all() {
  std::vector<std::string> issues;
  std::ostringstream summary;
  for (const auto& info : runner::list_presets()) {
    const auto cfg = runner::preset_config(info.name);
    const auto m = runner::build_medium(cfg);
    const auto th = speed::theoretical_speeds(m);
    pde::SolverConfig scfg;
    scfg.dt = cfg.dt;
    scfg.snapshot_times = linspace(0.0, cfg.t_final, 41);
    const auto traj = pde::simulate(m, {}, cfg.t_final, cfg.dx, scfg);
    const auto& last = traj.snapshots.back();
    const auto est = speed::empirical_speeds(
        traj, w_grid(cfg.w_grid_step, last.grid.x_right() / last.t), cfg.delta);
    const auto rep = speed::speed_report(m, th, est, {0.10, false});
    if (!rep.sandwich_pass) {
      std::ostringstream os;
      os << info.name << ": w_under=" << f3(rep.w_under) << " w_over=" << f3(rep.w_over)
         << " w*=" << (est.w_star_emp ? f3(*est.w_star_emp) : "none")
         << " w^=" << (est.w_upper_emp ? f3(*est.w_upper_emp) : "none");
      issues.push_back(os.str());
    } else {
      summary << info.name << " ";
    }
  }
  CriterionResult r;
  r.pass = issues.empty();
  if (issues.empty()) {
    r.detail = "all 8 presets inside w_under - 10% <= w* <= w^ <= w_over + 10%";
  } else {
    std::ostringstream os;
    os << issues.size() << " preset(s) outside the sandwich: ";
    for (const auto& is : issues) os << "[" << is << "] ";
    r.detail = os.str();
  }
  return r;
}

}  // namespace

int main() {
  struct Row {
    int id;
    const char* label;
    double budget_s;
    std::function<CriterionResult()> fn;
  };
  const std::vector<Row> rows{
      {1, "homogeneous eigen exactness", 1.0, criterion_homogeneous_exact},
      {2, "homogeneous PDE agreement", 120.0, criterion_homogeneous_pde},
      {3, "compactly perturbed medium", 120.0, criterion_compact},
      {4, "periodic cross-oracle", 300.0, criterion_periodic_cross},
      {5, "corrector convergence", 60.0, criterion_corrector},
      {6, "decay-rate cross-engine", 30.0, criterion_riccati},
      {7, "random-medium determinism", 600.0, criterion_random_determinism},
      {8, "eigenvalue property suite", 120.0, criterion_eigen_properties},
      {9, "scaled-solution lower bound", 180.0, criterion_wkb},
      {10, "speed-gap exhibit", 600.0, criterion_speed_gap},
      {11, "sandwich verdict on all presets", 1800.0, criterion_sandwich_all},
  };

  int passed = 0;
  double total = 0;
  for (const auto& row : rows) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = row.fn();
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    total += secs;
    const bool in_time = secs <= row.budget_s;
    const bool ok = res.pass && in_time;
    passed += ok ? 1 : 0;
    std::printf("%s criterion %2d: %s -- %s (%.2f s, budget %.0f s%s)\n",
                ok ? "PASS" : "FAIL", row.id, row.label, res.detail.c_str(), secs,
                row.budget_s, in_time ? "" : " EXCEEDED");
    std::fflush(stdout);
  }

  const bool in_budget = total <= 1800.0;
  std::printf("acceptance: %d/11 criteria passed, total %.1f s (aggregate budget 1800 s%s)\n",
              passed, total, in_budget ? "" : " EXCEEDED");
  return (passed == 11 && in_budget) ? 0 : 1;
}
