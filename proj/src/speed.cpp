#include "kpp/speed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "kpp/errors.hpp"
#include "kpp/numerics.hpp"

namespace kpp::speed {

using media::FieldClass;

const char* to_string(Engine e) {
  switch (e) {
    case Engine::exact_constant: return "exact_constant";
    case Engine::periodic_eigen: return "periodic_eigen";
    case Engine::window_const: return "window_const";
    case Engine::corrector: return "corrector";
    case Engine::riccati: return "riccati";
    case Engine::profile_extremes: return "profile_extremes";
  }
  return "unknown";
}

Engine default_engine(const Medium& m) {
  switch (m.c().field_class()) {
    case FieldClass::constant: return Engine::exact_constant;
    case FieldClass::periodic: return Engine::periodic_eigen;
    case FieldClass::compact_perturbation: return Engine::window_const;
    case FieldClass::trig_almost_periodic: return Engine::corrector;
    case FieldClass::asymptotic_sum:
      require(m.asymptotic_limit != nullptr, errc::invalid_argument,
              "default_engine: asymptotic medium lacks its limit medium");
      return default_engine(*m.asymptotic_limit);
    case FieldClass::random_realization: return Engine::riccati;
    case FieldClass::slow_oscillation: return Engine::profile_extremes;
  }
  fail(errc::invalid_argument, "default_engine: unknown medium class");
}

std::vector<double> default_p_grid() {
  std::vector<double> g;
  for (int i = -32; i <= 32; ++i) g.push_back(i * 0.125);
  return g;
}

std::vector<double> default_q_grid() {
  std::vector<double> g;
  for (int i = -80; i <= 80; ++i) g.push_back(i * 0.0625);
  return g;
}

std::pair<double, double> hamiltonian_at(const Medium& m, double p, Engine e,
                                         const EngineConfig& cfg) {
  // asymptotically trivial media inherit H from their limit medium
  if (m.c().field_class() == FieldClass::asymptotic_sum) {
    require(m.asymptotic_limit != nullptr, errc::invalid_argument,
            "hamiltonian_at: asymptotic medium lacks its limit medium");
    return hamiltonian_at(*m.asymptotic_limit, p, default_engine(*m.asymptotic_limit), cfg);
  }
  switch (e) {
    case Engine::exact_constant: {
      require(m.c().field_class() == FieldClass::constant &&
                  m.a.field_class() == FieldClass::constant,
              errc::invalid_argument, "hamiltonian_at: exact engine needs constant medium");
      const double H = m.a(0) * p * p + m.q(0) * p + m.c()(0);
      return {H, H};
    }
    case Engine::periodic_eigen: {
      const auto est =
          spectral::periodic_principal_eigenvalue(spectral::assemble_Lp(m, p),
                                                  cfg.periodic_nodes);
      return {est.value, est.value};
    }
    case Engine::window_const: {
      double r0 = m.c().support_radius().value_or(0.0);
      const double lo = std::max(cfg.window_R, r0 + 1.0);
      const auto [under, over] =
          spectral::const_testfn_bounds(spectral::assemble_Lp(m, p), lo,
                                        lo + cfg.window_width);
      return {under.value, over.value};
    }
    case Engine::corrector: {
      require(cfg.corrector_epsilons.size() >= 3, errc::invalid_argument,
              "hamiltonian_at: corrector engine needs at least three epsilons");
      double lo = -0.5 * cfg.corrector_window, hi = 0.5 * cfg.corrector_window;
      double dx = cfg.corrector_dx;
      if (const auto L = m.c().period()) {
        lo = 0.0;
        hi = *L;
        dx = std::min(dx, *L / 64.0);
      }
      const int n = std::max(64, static_cast<int>(std::ceil((hi - lo) / dx)));
      std::vector<spectral::CorrectorSolution> sols;
      for (double eps : cfg.corrector_epsilons)
        sols.push_back(spectral::approximate_corrector(m, p, eps, lo, hi, n));
      const auto est = spectral::richardson_lambda(sols);
      return {est.value, est.value};
    }
    case Engine::riccati: {
      const double gamma_bar =
          cfg.riccati_gamma_bar ? *cfg.riccati_gamma_bar
                                : spectral::whole_line_lambda1(m, 50.0, 400.0, 1e-5);
      if (p == 0.0) return {gamma_bar, gamma_bar};
      // divergence form makes H even in p, so only |p| is ever inverted
      const auto inv = spectral::lyapunov_inverse_k(m, std::abs(p), 0.0, cfg.riccati_span,
                                                    cfg.riccati_dx, gamma_bar);
      return {inv.estimate.value, inv.estimate.value};
    }
    case Engine::profile_extremes: {
      require(m.slow_profile.has_value(), errc::invalid_argument,
              "hamiltonian_at: profile engine needs slow-oscillation metadata");
      const double base = m.a(0) * p * p + m.q(0) * p;
      return {base + m.slow_profile->mu_min, base + m.slow_profile->mu_max};
    }
  }
  fail(errc::invalid_argument, "hamiltonian_at: unknown engine");
}

HamiltonianTable hamiltonian_table(const Medium& m, std::vector<double> p_grid, Engine e,
                                   EngineConfig cfg) {
  require(!p_grid.empty(), errc::invalid_argument, "hamiltonian_table: empty p grid");
  std::sort(p_grid.begin(), p_grid.end());
  for (std::size_t i = 1; i < p_grid.size(); ++i)
    require(p_grid[i] > p_grid[i - 1], errc::invalid_argument,
            "hamiltonian_table: repeated p values");
  if (e == Engine::riccati && !cfg.riccati_gamma_bar)
    cfg.riccati_gamma_bar = spectral::whole_line_lambda1(m, 50.0, 400.0, 1e-5);

  HamiltonianTable t;
  t.engine = e;
  t.medium_id = m.description;
  t.p = std::move(p_grid);
  for (double p : t.p) {
    const auto [lo, hi] = hamiltonian_at(m, p, e, cfg);
    t.H_under.push_back(lo);
    t.H_over.push_back(hi);
  }
  return t;
}

namespace {

SpeedEstimate minimize_row(const std::vector<double>& ps, const std::vector<double>& Hs) {
  // candidate momenta s = -p for the table's p < 0 entries
  std::vector<double> s, g;
  for (std::size_t i = ps.size(); i-- > 0;) {
    if (ps[i] < 0.0) {
      s.push_back(-ps[i]);
      g.push_back(Hs[i] / -ps[i]);
    }
  }
  require(s.size() >= 3, errc::invalid_argument,
          "spreading_speed: table needs at least three p < 0 points");
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (g[i] < g[best]) best = i;
  require(best > 0 && best + 1 < s.size(), errc::numerical_failure,
          "spreading_speed: argmin at the table edge (widen the p grid)");

  const num::Pchip H = num::Pchip::fit(std::vector<double>(ps), std::vector<double>(Hs));
  auto objective = [&H](double mom) { return H(-mom) / mom; };
  const auto res =
      num::golden_min(objective, s[best - 1], s[best + 1], 1e-10 * (1.0 + s[best]));

  SpeedEstimate est;
  est.p_star = res.x;
  est.w = res.value;
  est.H_at_pstar = H(-res.x);
  est.interior = res.x > s.front() + 1e-12 && res.x < s.back() - 1e-12;
  return est;
}

}  // namespace

SpeedResult spreading_speed(const HamiltonianTable& table) {
  require(table.p.size() == table.H_under.size() && table.p.size() == table.H_over.size(),
          errc::invalid_argument, "spreading_speed: ragged table");
  SpeedResult r;
  r.engine = table.engine;
  r.medium_id = table.medium_id;
  r.under = minimize_row(table.p, table.H_under);
  r.over = minimize_row(table.p, table.H_over);
  return r;
}

HamiltonianTable refine_near_argmin(const Medium& m, HamiltonianTable table,
                                    const EngineConfig& cfg, int rounds) {
  EngineConfig local = cfg;
  if (table.engine == Engine::riccati && !local.riccati_gamma_bar)
    local.riccati_gamma_bar = spectral::whole_line_lambda1(m, 50.0, 400.0, 1e-5);

  double spacing = 0.125;
  for (int round = 0; round < rounds; ++round) {
    spacing /= 4.0;
    const SpeedResult res = spreading_speed(table);
    std::vector<double> centers{res.under.p_star};
    if (std::abs(res.over.p_star - res.under.p_star) > spacing)
      centers.push_back(res.over.p_star);
    for (double s_star : centers) {
      for (int k = -3; k <= 3; ++k) {
        if (k == 0) continue;
        const double p_new = -(s_star + k * spacing);
        if (p_new >= -1e-9 || p_new <= table.p.front()) continue;
        const auto at = std::lower_bound(table.p.begin(), table.p.end(), p_new);
        // skip if an existing node is already this close
        const double gap_hi = (at == table.p.end()) ? 1e300 : *at - p_new;
        const double gap_lo = (at == table.p.begin()) ? 1e300 : p_new - *(at - 1);
        if (std::min(gap_lo, gap_hi) < 0.25 * spacing) continue;
        const auto [lo, hi] = hamiltonian_at(m, p_new, table.engine, local);
        const auto idx = static_cast<std::size_t>(at - table.p.begin());
        table.p.insert(table.p.begin() + idx, p_new);
        table.H_under.insert(table.H_under.begin() + idx, lo);
        table.H_over.insert(table.H_over.begin() + idx, hi);
      }
    }
  }
  return table;
}

TheoreticalSpeeds theoretical_speeds(const Medium& m, EngineConfig cfg) {
  const Engine e = default_engine(m);
  if (e == Engine::riccati && !cfg.riccati_gamma_bar)
    cfg.riccati_gamma_bar = spectral::whole_line_lambda1(m, 50.0, 400.0, 1e-5);
  TheoreticalSpeeds out;
  out.table = hamiltonian_table(m, default_p_grid(), e, cfg);
  out.table = refine_near_argmin(m, std::move(out.table), cfg);
  out.speeds = spreading_speed(out.table);
  return out;
}

LegendreTable legendre_conjugate(const HamiltonianTable& table,
                                 const std::vector<double>& q_grid) {
  require(table.p.size() >= 4, errc::invalid_argument, "legendre_conjugate: table too small");
  const num::Pchip H =
      num::Pchip::fit(std::vector<double>(table.p), std::vector<double>(table.H_under));
  LegendreTable leg;
  for (double q : q_grid) {
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.p.size(); ++i) {
      const double v = table.p[i] * q - table.H_under[i];
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    require(best > 0 && best + 1 < table.p.size(), errc::numerical_failure,
            "legendre_conjugate: conjugate argmax at the table edge (widen the p grid)");
    auto neg = [&](double p) { return H(p) - p * q; };
    const auto res = num::golden_min(neg, table.p[best - 1], table.p[best + 1], 1e-10);
    leg.q.push_back(q);
    leg.H_star.push_back(-res.value);
  }
  return leg;
}

std::vector<double> wkb_profile(const LegendreTable& leg, double t,
                                const std::vector<double>& xs) {
  require(t > 0, errc::invalid_argument, "wkb_profile: time must be positive");
  require(leg.q.size() >= 2, errc::invalid_argument, "wkb_profile: conjugate table too small");
  const num::Pchip Hstar =
      num::Pchip::fit(std::vector<double>(leg.q), std::vector<double>(leg.H_star));
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    const double q = -x / t;
    require(q >= leg.q.front() - 1e-12 && q <= leg.q.back() + 1e-12, errc::invalid_argument,
            "wkb_profile: x/t outside the conjugate table range");
    out.push_back(std::min(-t * Hstar(q), 0.0));
  }
  return out;
}

namespace {

// linear interpolation of a snapshot, zero beyond the grid
double sample_u(const pde::Snapshot& s, double x) {
  const double pos = (x - s.grid.x0) / s.grid.dx;
  if (pos <= 0.0) return s.u.front();
  if (pos >= s.grid.n - 1) return 0.0;
  const int i = static_cast<int>(pos);
  const double frac = pos - i;
  return s.u[i] * (1.0 - frac) + s.u[i + 1] * frac;
}

}  // namespace

WkbReport wkb_compare(const pde::Trajectory& traj, const LegendreTable& leg,
                      const std::vector<double>& epsilons, double x_lo, double x_hi, int nx,
                      double w_under) {
  require(!traj.snapshots.empty(), errc::invalid_argument, "wkb_compare: empty trajectory");
  require(nx >= 2 && x_hi > x_lo, errc::invalid_argument, "wkb_compare: bad x grid");
  std::vector<double> xs(nx);
  for (int i = 0; i < nx; ++i) xs[i] = x_lo + (x_hi - x_lo) * i / (nx - 1);
  const std::vector<double> profile = wkb_profile(leg, 1.0, xs);

  WkbReport report;
  report.w_under = w_under;
  for (double eps : epsilons) {
    require(eps > 0, errc::invalid_argument, "wkb_compare: epsilon must be positive");
    const double t_want = 1.0 / eps;
    const pde::Snapshot* snap = nullptr;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& s : traj.snapshots) {
      const double gap = std::abs(s.t - t_want);
      if (gap < best_gap) {
        best_gap = gap;
        snap = &s;
      }
    }
    require(best_gap <= 0.05 * t_want + 1e-9, errc::invalid_argument,
            "wkb_compare: no snapshot near t = 1/epsilon = " + num::format_g17(t_want));

    WkbDeviation dev;
    dev.epsilon = eps;
    dev.snapshot_time = snap->t;
    dev.min_u_interior = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nx; ++i) {
      const double u = sample_u(*snap, xs[i] / eps);
      const double z = eps * std::log(std::max(u, 1e-300));
      dev.one_sided_sup = std::max(dev.one_sided_sup, std::max(profile[i] - z, 0.0));
      if (xs[i] <= 0.9 * w_under) dev.min_u_interior = std::min(dev.min_u_interior, u);
    }
    report.deviations.push_back(dev);
  }
  return report;
}

FrontSpeedEstimate empirical_speeds(const pde::Trajectory& traj,
                                    const std::vector<double>& w_grid, double delta) {
  require(!traj.snapshots.empty(), errc::invalid_argument, "empirical_speeds: no snapshots");
  require(delta > 0 && delta < 1, errc::invalid_argument,
          "empirical_speeds: delta must lie in (0, 1)");
  require(!w_grid.empty(), errc::invalid_argument, "empirical_speeds: empty w grid");
  for (std::size_t i = 1; i < w_grid.size(); ++i)
    require(w_grid[i] > w_grid[i - 1], errc::invalid_argument,
            "empirical_speeds: w grid must increase");
  const pde::Snapshot& last = traj.snapshots.back();
  const double T = last.t;
  require(T > 0, errc::invalid_argument, "empirical_speeds: final time must be positive");

  FrontSpeedEstimate est;
  est.T_final = T;
  est.delta = delta;

  const int n = last.grid.n;
  est.saturated = last.u[n - 1] > 0.5;
  if (!est.saturated) {
    // the front must have room on the right for the sup criteria to mean
    // anything: require >= 50 cells between the 0.5-crossing and the edge
    const auto mid = pde::front_position(last, 0.5);
    require(!mid || *mid <= last.grid.x_right() - 50.0 * last.grid.dx,
            errc::numerical_failure,
            "empirical_speeds: front within 50 cells of the right boundary");
  }

  // prefix max of |u - 1| from x = 0 rightward; suffix max of u
  std::vector<double> prefix(n), suffix(n);
  const int i0 = std::clamp(static_cast<int>(std::ceil((0.0 - last.grid.x0) / last.grid.dx)),
                            0, n - 1);
  double acc = 0;
  for (int i = i0; i < n; ++i) {
    acc = std::max(acc, std::abs(last.u[i] - 1.0));
    prefix[i] = acc;
  }
  acc = 0;
  for (int i = n - 1; i >= 0; --i) {
    acc = std::max(acc, last.u[i]);
    suffix[i] = acc;
  }

  auto s1 = [&](double w) {  // sup over 0 <= x <= wT
    const double xr = w * T;
    const int i = std::clamp(static_cast<int>(std::floor((xr - last.grid.x0) / last.grid.dx)),
                             i0, n - 1);
    return prefix[i];
  };
  auto s2 = [&](double w) {  // sup over x >= wT
    const double xr = w * T;
    const int i = std::clamp(static_cast<int>(std::ceil((xr - last.grid.x0) / last.grid.dx)),
                             0, n - 1);
    if (xr > last.grid.x_right()) return 0.0;
    return suffix[i];
  };

  for (std::size_t i = w_grid.size(); i-- > 0;) {
    if (s1(w_grid[i]) <= delta) {
      est.w_star_emp = w_grid[i];
      break;
    }
  }
  for (double w : w_grid) {
    if (s2(w) <= delta) {
      est.w_upper_emp = w;
      break;
    }
  }
  if (est.saturated) est.w_upper_emp.reset();  // s2 cannot be trusted at the edge

  // per-level front slopes on [T/2, T]
  for (std::size_t li = 0; li < traj.levels.size(); ++li) {
    std::vector<double> ts, xs;
    for (const auto& rec : traj.fronts) {
      if (rec.t < 0.5 * T || rec.t <= 0.0) continue;
      if (li < rec.x_at_level.size() && rec.x_at_level[li]) {
        ts.push_back(rec.t);
        xs.push_back(*rec.x_at_level[li]);
      }
    }
    if (ts.size() < 3) continue;
    LevelFit fit;
    fit.level = traj.levels[li];
    fit.points = static_cast<int>(ts.size());
    const auto lin = num::fit_line(ts, xs);
    fit.slope = lin.slope;
    fit.intercept = lin.intercept;
    fit.rms = lin.rms;
    const auto logfit = num::fit_line_log(ts, xs);
    fit.slope_log = logfit.slope;
    fit.log_coeff = logfit.log_coeff;
    fit.rms_log = logfit.rms;
    est.level_fits.push_back(fit);
  }
  return est;
}

SpeedReport speed_report(const Medium& m, const TheoreticalSpeeds& th,
                         const FrontSpeedEstimate& emp, const SpeedReportConfig& rc) {
  SpeedReport rep;
  rep.medium_id = m.description;
  rep.engine = th.speeds.engine;
  rep.w_under = th.speeds.under.w;
  rep.w_over = th.speeds.over.w;
  rep.p_star_under = th.speeds.under.p_star;
  rep.p_star_over = th.speeds.over.p_star;
  rep.empirical = emp;
  rep.tol_rel = rc.sandwich_tol_rel;
  rep.gap_expected = rc.expect_gap;

  const bool have_both = emp.w_star_emp.has_value() && emp.w_upper_emp.has_value();
  if (have_both) {
    const double ws = *emp.w_star_emp, wu = *emp.w_upper_emp;
    rep.sandwich_pass = ws >= rep.w_under * (1.0 - rc.sandwich_tol_rel) &&
                        wu <= rep.w_over * (1.0 + rc.sandwich_tol_rel) && ws <= wu;
    rep.gap_observed = ws < wu;
  }
  rep.pass = rep.sandwich_pass && (!rc.expect_gap || rep.gap_observed);
  return rep;
}

}  // namespace kpp::speed
