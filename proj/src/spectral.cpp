#include "kpp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kpp/errors.hpp"
#include "kpp/numerics.hpp"

namespace kpp::spectral {

namespace {

// Tridiagonal Metzler matrix, optionally cyclic (wrap entries stored apart).
struct TriMat {
  std::vector<double> lower, diag, upper;
  double corner_ur = 0, corner_ll = 0;
  bool cyclic = false;

  std::size_t size() const { return diag.size(); }

  void multiply(const std::vector<double>& v, std::vector<double>& out) const {
    const std::size_t n = size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = diag[i] * v[i];
      if (i > 0) acc += lower[i] * v[i - 1];
      if (i + 1 < n) acc += upper[i] * v[i + 1];
      out[i] = acc;
    }
    if (cyclic) {
      out[0] += corner_ur * v[n - 1];
      out[n - 1] += corner_ll * v[0];
    }
  }

  double max_abs_row_sum() const {
    double m = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      double s = std::abs(diag[i]) + std::abs(lower[i]) + std::abs(upper[i]);
      m = std::max(m, s);
    }
    return m + std::abs(corner_ur) + std::abs(corner_ll);
  }
};

struct PerronResult {
  double value = 0;
  std::vector<double> vec;
  double residual = 0;
  int iterations = 0;
};

// Solve (sigma I - M) w = v; returns false when the solve fails or the
// result is not strictly positive (sigma dipped at or below the Perron root).
bool resolvent_apply(const TriMat& M, double sigma, const std::vector<double>& v,
                     std::vector<double>& w) {
  const std::size_t n = M.size();
  static thread_local std::vector<double> lo, di, up;
  lo.resize(n);
  di.resize(n);
  up.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = -M.lower[i];
    di[i] = sigma - M.diag[i];
    up[i] = -M.upper[i];
  }
  w = v;
  try {
    if (M.cyclic)
      num::solve_cyclic_tridiagonal(lo, di, up, -M.corner_ur, -M.corner_ll, w);
    else
      num::solve_tridiagonal(lo, di, up, w);
  } catch (const error&) {
    return false;
  }
  for (double wi : w) {
    if (!(wi > 0.0) || !std::isfinite(wi)) return false;
  }
  return true;
}

// Perron (largest-real) eigenpair of an irreducible Metzler tridiagonal
// matrix. sigma0 must dominate the Perron root; after a safe start the shift
// tracks the eigenvalue estimate, with positivity of the resolvent image as
// the guard that the shift stayed above the root. The returned positive
// eigenvector with a small residual certifies the eigenvalue.
PerronResult perron_principal(const TriMat& M, double sigma0, double tol_residual,
                              int max_iter = 500) {
  const std::size_t n = M.size();
  std::vector<double> v(n, 1.0), w, mv;
  double sigma = sigma0;
  double margin = 0;  // 0 = still on the safe start shift
  double lambda = -std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();
  const double scale = M.max_abs_row_sum() + 1.0;
  // components of M*v carry rounding noise of order eps * ||M||_inf, so no
  // residual below that floor is achievable regardless of the iterate
  const double float_floor = 8.0 * std::numeric_limits<double>::epsilon() * scale;
  int it = 0;

  for (; it < max_iter; ++it) {
    if (!resolvent_apply(M, sigma, v, w)) {
      // shift fell at/below the root: back off toward the safe start
      margin = (margin > 0 ? margin * 8.0 : 1e-6 * scale);
      sigma = std::isfinite(lambda) ? std::min(sigma0, lambda + margin) : sigma0;
      continue;
    }
    // Rayleigh quotients in resolvent space and directly
    double vv = 0, vw = 0;
    for (std::size_t i = 0; i < n; ++i) {
      vv += v[i] * v[i];
      vw += v[i] * w[i];
    }
    const double lambda_prev = lambda;
    lambda = sigma - vv / vw;
    double wmax = 0;
    for (double wi : w) wmax = std::max(wmax, wi);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wmax;

    M.multiply(v, mv);
    double num_ = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
      num_ += v[i] * mv[i];
      den += v[i] * v[i];
    }
    const double rayleigh = num_ / den;
    residual = 0;
    for (std::size_t i = 0; i < n; ++i)
      residual = std::max(residual, std::abs(mv[i] - rayleigh * v[i]));
    lambda = rayleigh;
    const double target =
        std::max(tol_residual * std::max(1.0, std::abs(rayleigh)), float_floor);
    if (residual <= target && it >= 1) break;

    const double delta = std::abs(lambda - lambda_prev);
    margin = std::max(4.0 * delta, 1e-9 * std::max(1.0, std::abs(lambda)));
    sigma = std::min(sigma0, lambda + margin);
  }
  require(residual <=
              10.0 * std::max(tol_residual * std::max(1.0, std::abs(lambda)), float_floor),
          errc::numerical_failure,
          "perron iteration failed to converge (residual " + num::format_g17(residual) + ")");
  PerronResult r;
  r.value = lambda;
  r.vec = std::move(v);
  r.residual = residual;
  r.iterations = it + 1;
  return r;
}

// residual |L phi - lambda phi| / phi, skipping components too small to trust
double pointwise_residual(const TriMat& M, const std::vector<double>& v, double lambda) {
  std::vector<double> mv;
  M.multiply(v, mv);
  double vmax = 0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  double r = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] >= 1e-8 * vmax) r = std::max(r, std::abs(mv[i] - lambda * v[i]) / v[i]);
  return r;
}

TriMat build_periodic_matrix(const Coefficient& a, const Coefficient& b, const Coefficient& c0,
                             double period, int n, std::vector<double>* xs_out) {
  require(n >= 16, errc::invalid_argument, "periodic eigenvalue: need n >= 16 per period");
  require(period > 0, errc::invalid_argument, "periodic eigenvalue: period must be positive");
  const double dx = period / n;
  TriMat M;
  M.cyclic = true;
  M.lower.resize(n);
  M.diag.resize(n);
  M.upper.resize(n);
  if (xs_out) xs_out->resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = j * dx;
    if (xs_out) (*xs_out)[j] = x;
    const double aj = a(x), bj = b(x), cj = c0(x);
    require(aj > 0, errc::hypothesis_violation, "periodic eigenvalue: nonpositive diffusion");
    const double lo = aj / (dx * dx) - bj / (2.0 * dx);
    const double up = aj / (dx * dx) + bj / (2.0 * dx);
    require(lo > 0 && up > 0, errc::invalid_argument,
            "periodic eigenvalue: grid too coarse for the drift (increase n)");
    M.lower[j] = lo;
    M.upper[j] = up;
    M.diag[j] = -2.0 * aj / (dx * dx) + cj;
  }
  M.corner_ur = M.lower[0];
  M.corner_ll = M.upper[n - 1];
  return M;
}

double spec_start_shift(const Coefficient& a, const Coefficient& c0, double lo, double hi,
                        int n, double dx) {
  double amax = 0, cmax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n; ++j) {
    const double x = lo + (hi - lo) * j / n;
    amax = std::max(amax, a(x));
    cmax = std::max(cmax, c0(x));
  }
  return cmax + 4.0 * amax / (dx * dx) + 1.0;
}

}  // namespace

OperatorLp assemble_Lp(const Medium& m, double p) { return OperatorLp{m, p}; }

const char* to_string(Method m) {
  switch (m) {
    case Method::periodic: return "periodic";
    case Method::dirichlet_window: return "dirichlet_window";
    case Method::corrector: return "corrector";
    case Method::riccati: return "riccati";
    case Method::const_testfn_lower: return "const_testfn_lower";
    case Method::const_testfn_upper: return "const_testfn_upper";
  }
  return "unknown";
}

EigenEstimate periodic_principal_coeffs(const Coefficient& a, const Coefficient& b,
                                        const Coefficient& c0, double period, int n) {
  std::vector<double> xs;
  TriMat M = build_periodic_matrix(a, b, c0, period, n, &xs);
  const double dx = period / n;
  const double sigma0 = spec_start_shift(a, c0, 0.0, period, n, dx);
  PerronResult pr = perron_principal(M, sigma0, 1e-12);
  EigenEstimate est;
  est.value = pr.value;
  est.method = Method::periodic;
  est.window_lo = 0.0;
  est.window_hi = period;
  est.residual = pointwise_residual(M, pr.vec, pr.value);
  est.xs = std::move(xs);
  est.phi = std::move(pr.vec);
  return est;
}

EigenEstimate periodic_principal_eigenvalue(const OperatorLp& op, int n) {
  const auto period = op.medium.c().period() ? op.medium.c().period()
                                             : op.medium.a.period();
  require(period.has_value(), errc::invalid_argument,
          "periodic eigenvalue: medium has no period");
  auto a = [&op](double x) { return op.coeff2(x); };
  auto b = [&op](double x) { return op.coeff1(x); };
  auto c = [&op](double x) { return op.coeff0(x); };
  return periodic_principal_coeffs(a, b, c, *period, n);
}

EigenEstimate dirichlet_principal_coeffs(const Coefficient& a, const Coefficient& b,
                                         const Coefficient& c0, double lo, double hi, int n) {
  require(n >= 16, errc::invalid_argument, "dirichlet eigenvalue: need n >= 16");
  require(hi > lo, errc::invalid_argument, "dirichlet eigenvalue: empty interval");
  const double h = (hi - lo) / n;
  TriMat M;
  M.cyclic = false;
  const int m = n - 1;  // interior nodes
  M.lower.resize(m);
  M.diag.resize(m);
  M.upper.resize(m);
  std::vector<double> xs(m);
  for (int k = 1; k <= m; ++k) {
    const double x = lo + k * h;
    xs[k - 1] = x;
    const double ak = a(x), bk = b(x), ck = c0(x);
    require(ak > 0, errc::hypothesis_violation, "dirichlet eigenvalue: nonpositive diffusion");
    const double l = ak / (h * h) - bk / (2.0 * h);
    const double u = ak / (h * h) + bk / (2.0 * h);
    require(l > 0 && u > 0, errc::invalid_argument,
            "dirichlet eigenvalue: grid too coarse for the drift (increase n)");
    M.lower[k - 1] = (k == 1) ? 0.0 : l;
    M.upper[k - 1] = (k == m) ? 0.0 : u;
    M.diag[k - 1] = -2.0 * ak / (h * h) + ck;
  }
  // stored but unused entries must still be Metzler-safe for the solver
  const double sigma0 = spec_start_shift(a, c0, lo, hi, n, h);
  PerronResult pr = perron_principal(M, sigma0, 1e-11);
  EigenEstimate est;
  est.value = pr.value;
  est.method = Method::dirichlet_window;
  est.window_lo = lo;
  est.window_hi = hi;
  est.residual = pointwise_residual(M, pr.vec, pr.value);
  est.xs = std::move(xs);
  est.phi = std::move(pr.vec);
  return est;
}

EigenEstimate dirichlet_principal_eigenvalue(const Medium& m, double lo, double hi, int n) {
  auto a = [&m](double x) { return m.a(x); };
  auto b = [&m](double x) { return m.q(x); };
  auto c = [&m](double x) { return m.c()(x); };
  return dirichlet_principal_coeffs(a, b, c, lo, hi, n);
}

double whole_line_lambda1(const Medium& m, double r0, double r_max, double tol) {
  require(r0 > 0 && r_max >= r0, errc::invalid_argument,
          "whole_line_lambda1: bad radius range");
  double prev = -std::numeric_limits<double>::infinity();
  double value = prev;
  for (double R = r0; R <= r_max * (1.0 + 1e-12); R *= 2.0) {
    const int n = std::clamp(static_cast<int>(2.0 * R / 0.02), 2000, 200000);
    value = dirichlet_principal_eigenvalue(m, -R, R, n).value;
    require(value >= prev - 1e-7 * std::max(1.0, std::abs(value)), errc::numerical_failure,
            "whole_line_lambda1: window eigenvalues not nondecreasing");
    if (prev > -std::numeric_limits<double>::infinity() &&
        std::abs(value - prev) < tol * std::max(1.0, std::abs(value)))
      return value;
    prev = value;
  }
  return value;
}

std::pair<EigenEstimate, EigenEstimate> const_testfn_bounds(const OperatorLp& op, double lo,
                                                            double hi, int samples) {
  require(samples >= 2 && hi > lo, errc::invalid_argument,
          "const_testfn_bounds: bad window or sample count");
  double inf = std::numeric_limits<double>::infinity();
  double sup = -inf;
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * i / (samples - 1);
    const double v = op.coeff0(x);
    inf = std::min(inf, v);
    sup = std::max(sup, v);
  }
  EigenEstimate under, over;
  under.value = inf;
  under.method = Method::const_testfn_lower;
  under.window_lo = lo;
  under.window_hi = hi;
  over.value = sup;
  over.method = Method::const_testfn_upper;
  over.window_lo = lo;
  over.window_hi = hi;
  return {under, over};
}

CorrectorSolution approximate_corrector(const Medium& m, double p, double epsilon,
                                        double window_lo, double window_hi, int n) {
  require(epsilon >= 0.02, errc::invalid_argument,
          "approximate_corrector: epsilon below the scheme's robust range (0.02)");
  require(n >= 16 && window_hi > window_lo, errc::invalid_argument,
          "approximate_corrector: bad window or node count");
  const double dx = (window_hi - window_lo) / n;
  require(dx <= 0.05 + 1e-12, errc::invalid_argument,
          "approximate_corrector: grid spacing must be <= 0.05");

  std::vector<double> xs(n), a(n), q(n), c(n);
  for (int j = 0; j < n; ++j) {
    xs[j] = window_lo + j * dx;
    a[j] = m.a(xs[j]);
    q[j] = m.q(xs[j]);
    c[j] = m.c()(xs[j]);
  }

  std::vector<double> w(n, 0.0), F(n), trial(n), Ftrial(n);
  auto eval_F = [&](const std::vector<double>& wv, std::vector<double>& out) {
    for (int j = 0; j < n; ++j) {
      const int jm = (j == 0) ? n - 1 : j - 1;
      const int jp = (j == n - 1) ? 0 : j + 1;
      const double d1 = (wv[jp] - wv[jm]) / (2.0 * dx);
      const double d2 = (wv[jp] - 2.0 * wv[j] + wv[jm]) / (dx * dx);
      const double g = d1 + p;
      out[j] = a[j] * d2 + a[j] * g * g + q[j] * g + c[j] - epsilon * wv[j];
    }
  };
  auto sup_norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  };

  double c_scale = 0, amax = 0;
  for (int j = 0; j < n; ++j) {
    c_scale = std::max(c_scale, std::abs(a[j] * p * p + q[j] * p + c[j]));
    amax = std::max(amax, a[j]);
  }
  // evaluating F rounds at eps_mach * (a/dx^2) * ||w||, which grows as
  // epsilon shrinks (w ~ lambda/epsilon); the tolerance must sit above it
  const double tol_base = 1e-11 * (1.0 + c_scale);
  auto tol_eff = [&](const std::vector<double>& wv) {
    double wmax = 0;
    for (double x : wv) wmax = std::max(wmax, std::abs(x));
    return tol_base + 32.0 * std::numeric_limits<double>::epsilon() * (amax / (dx * dx)) *
                          (1.0 + wmax);
  };

  eval_F(w, F);
  double Fnorm = sup_norm(F);
  std::vector<double> lo(n), di(n), up(n), z(n);
  int it = 0;
  for (; it < 60 && Fnorm > tol_eff(w); ++it) {
    for (int j = 0; j < n; ++j) {
      const int jm = (j == 0) ? n - 1 : j - 1;
      const int jp = (j == n - 1) ? 0 : j + 1;
      const double d1 = (w[jp] - w[jm]) / (2.0 * dx);
      const double drift = 2.0 * a[j] * (d1 + p) + q[j];
      lo[j] = a[j] / (dx * dx) - drift / (2.0 * dx);
      up[j] = a[j] / (dx * dx) + drift / (2.0 * dx);
      di[j] = -2.0 * a[j] / (dx * dx) - epsilon;
      z[j] = -F[j];
    }
    const double ur = lo[0], ll = up[n - 1];
    // rows 0 and n-1 wrap; solve the cyclic Newton system
    num::solve_cyclic_tridiagonal(lo, di, up, ur, ll, z);
    double t = 1.0;
    for (int halvings = 0; halvings < 25; ++halvings) {
      for (int j = 0; j < n; ++j) trial[j] = w[j] + t * z[j];
      eval_F(trial, Ftrial);
      const double fn = sup_norm(Ftrial);
      if (fn <= (1.0 - 0.25 * t) * Fnorm || fn <= tol_eff(trial)) {
        w.swap(trial);
        F.swap(Ftrial);
        Fnorm = fn;
        break;
      }
      t *= 0.5;
      if (halvings == 24)
        fail(errc::numerical_failure, "approximate_corrector: line search stalled");
    }
  }
  require(Fnorm <= tol_eff(w) * 100.0, errc::numerical_failure,
          "approximate_corrector: Newton failed to converge (residual " +
              num::format_g17(Fnorm) + ")");

  CorrectorSolution sol;
  sol.epsilon = epsilon;
  sol.p = p;
  sol.xs = std::move(xs);
  sol.newton_residual = Fnorm;

  // window core: whole window when it is a whole number of periods, else the
  // central half (the wrap seam pollutes the edges of aperiodic windows)
  int core_lo = 0, core_hi = n;
  const auto period = m.c().period();
  const double len = window_hi - window_lo;
  const bool commensurate =
      period && std::abs(len / *period - std::round(len / *period)) < 1e-9;
  if (!commensurate) {
    core_lo = n / 4;
    core_hi = 3 * n / 4;
  }
  double blo = std::numeric_limits<double>::infinity(), bhi = -blo;
  for (int j = core_lo; j < core_hi; ++j) {
    const double v = epsilon * w[j];
    blo = std::min(blo, v);
    bhi = std::max(bhi, v);
  }
  sol.band_lo = blo;
  sol.band_hi = bhi;
  sol.w = std::move(w);
  return sol;
}

EigenEstimate richardson_lambda(const std::vector<CorrectorSolution>& sols) {
  require(sols.size() >= 3, errc::invalid_argument,
          "richardson_lambda: need at least three epsilon values");
  std::vector<const CorrectorSolution*> sorted;
  for (const auto& s : sols) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->epsilon > b->epsilon; });
  const double p0 = sorted.front()->p;
  double band_max = 0;
  for (auto* s : sorted) {
    require(std::abs(s->p - p0) <= 1e-12, errc::invalid_argument,
            "richardson_lambda: solutions at inconsistent momenta");
    band_max = std::max(band_max, s->band_hi - s->band_lo);
  }
  for (std::size_t i = 1; i < sorted.size(); ++i)
    require(sorted[i]->epsilon < sorted[i - 1]->epsilon - 1e-15, errc::invalid_argument,
            "richardson_lambda: repeated epsilon values");

  std::vector<double> eps, mid;
  for (auto* s : sorted) {
    eps.push_back(s->epsilon);
    mid.push_back(0.5 * (s->band_lo + s->band_hi));
  }
  // midpoints should drift monotonically in epsilon up to the band scale
  const double mono_tol = band_max + 1e-9 * (1.0 + std::abs(mid.back()));
  const double dir = mid.back() - mid.front();
  for (std::size_t i = 1; i < mid.size(); ++i) {
    const double step = mid[i] - mid[i - 1];
    require(dir >= 0 ? step >= -mono_tol : step <= mono_tol, errc::numerical_failure,
            "richardson_lambda: band midpoints not monotone in epsilon");
  }

  const auto fit = num::fit_line(eps, mid);
  EigenEstimate est;
  est.value = fit.intercept;  // extrapolation to eps = 0
  est.method = Method::corrector;
  est.window_lo = sorted.front()->xs.front();
  est.window_hi = sorted.front()->xs.back();
  est.residual = sorted.back()->band_hi - sorted.back()->band_lo;
  return est;
}

namespace {

// Coefficient samples at half-step resolution, shared across every sweep on
// the same span (the bisection in lyapunov_inverse_k runs dozens of sweeps).
struct RiccatiWorkspace {
  double x_lo = 0, h = 0;
  long steps = 0, k_avg = 0;  // averaging window = [x_lo, x_lo + k_avg * h]
  std::vector<double> as, aps, cs;
  double a_lo = 0, c_lo = 0;
};

RiccatiWorkspace make_riccati_workspace(const Medium& m, double x_lo, double x_hi, double dx) {
  require(m.divergence_form && m.a_prime.has_value(), errc::invalid_argument,
          "riccati_mu: medium must be in divergence form (q == a')");
  require(x_hi > x_lo && dx > 0, errc::invalid_argument, "riccati_mu: bad span");
  RiccatiWorkspace ws;
  ws.x_lo = x_lo;
  ws.steps = static_cast<long>(std::ceil((x_hi - x_lo) / dx));
  ws.h = (x_hi - x_lo) / ws.steps;
  ws.as.resize(2 * ws.steps + 1);
  ws.aps.resize(2 * ws.steps + 1);
  ws.cs.resize(2 * ws.steps + 1);
  ws.a_lo = std::numeric_limits<double>::infinity();
  ws.c_lo = ws.a_lo;
  for (long j = 0; j <= 2 * ws.steps; ++j) {
    const double x = x_lo + 0.5 * ws.h * j;
    ws.as[j] = m.a(x);
    ws.aps[j] = (*m.a_prime)(x);
    ws.cs[j] = m.c()(x);
    ws.a_lo = std::min(ws.a_lo, ws.as[j]);
    ws.c_lo = std::min(ws.c_lo, ws.cs[j]);
  }
  require(ws.a_lo > 0, errc::hypothesis_violation, "riccati_mu: nonpositive diffusion");

  // averaging window: drop the burn-in fifth next to the initial condition at
  // x_hi; for periodic media snap the window length down to a whole number of
  // periods so the oscillatory part of r integrates out exactly
  ws.k_avg = ws.steps - ws.steps / 5;
  if (const auto L = m.c().period(); L && ws.k_avg * ws.h > *L) {
    const double snapped = std::floor(ws.k_avg * ws.h / *L) * *L;
    const long k_snap = static_cast<long>(std::llround(snapped / ws.h));
    if (k_snap >= 1 && std::abs(k_snap * ws.h - snapped) < 1e-9 * snapped) ws.k_avg = k_snap;
  }
  return ws;
}

// Backward RK4 sweep of r' = (gamma - c - a' r - a r^2)/a; returns mu.
double riccati_sweep(const RiccatiWorkspace& ws, double gamma, RiccatiTrace* trace) {
  const double r_cap = 10.0 * (std::sqrt(std::max(gamma - ws.c_lo, 0.0) / ws.a_lo) + 1.0);
  const double h = ws.h;
  auto slope = [&ws, gamma](long half_idx, double r) {
    const double a = ws.as[half_idx], ap = ws.aps[half_idx], c = ws.cs[half_idx];
    return (gamma - c - ap * r - a * r * r) / a;
  };
  const double c_end = ws.cs[2 * ws.steps], a_end = ws.as[2 * ws.steps];
  double r = -std::sqrt(std::max(gamma - c_end, 0.0) / a_end);  // stable decaying branch
  double integral = 0;
  const long decimate = std::max<long>(1, ws.steps / 2000);
  for (long k = ws.steps; k-- > 0;) {
    // RK4 step from x_lo + (k+1) h down to x_lo + k h
    const long i2 = 2 * k + 2, i1 = 2 * k + 1, i0 = 2 * k;
    const double k1 = slope(i2, r);
    const double k2 = slope(i1, r - 0.5 * h * k1);
    const double k3 = slope(i1, r - 0.5 * h * k2);
    const double k4 = slope(i0, r - h * k3);
    const double r_next = r - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require(std::isfinite(r_next) && std::abs(r_next) <= r_cap, errc::numerical_failure,
            "riccati_mu: decay-rate trace blow-up (gamma too close to the spectrum?)");
    if (k < ws.k_avg) integral += 0.5 * h * (r + r_next);  // trapezoid
    r = r_next;
    if (trace && k % decimate == 0) {
      trace->xs.push_back(ws.x_lo + k * h);
      trace->r.push_back(r);
    }
  }
  const double mu = -integral / (ws.k_avg * h);
  if (trace) {
    std::reverse(trace->xs.begin(), trace->xs.end());
    std::reverse(trace->r.begin(), trace->r.end());
    trace->gamma = gamma;
    trace->mu = mu;
    trace->avg_lo = ws.x_lo;
    trace->avg_hi = ws.x_lo + ws.k_avg * h;
  }
  return mu;
}

}  // namespace

RiccatiTrace riccati_mu(const Medium& m, double gamma, double x_lo, double x_hi, double dx,
                        std::optional<double> lambda1_hint) {
  const double lambda1 =
      lambda1_hint ? *lambda1_hint : whole_line_lambda1(m, 25.0, 200.0, 1e-3);
  require(gamma > lambda1, errc::invalid_argument,
          "riccati_mu: gamma at or below the Dirichlet-eigenvalue estimate " +
              num::format_g17(lambda1));
  const RiccatiWorkspace ws = make_riccati_workspace(m, x_lo, x_hi, dx);
  RiccatiTrace trace;
  riccati_sweep(ws, gamma, &trace);
  return trace;
}

LyapunovInverse lyapunov_inverse_k(const Medium& m, double p, double x_lo, double x_hi,
                                   double dx, std::optional<double> gamma_bar_hint) {
  require(p > 0, errc::invalid_argument, "lyapunov_inverse_k: momentum must be positive");
  LyapunovInverse out;
  const double gamma_bar =
      gamma_bar_hint ? *gamma_bar_hint : whole_line_lambda1(m, 50.0, 400.0, 1e-5);
  out.gamma_bar = gamma_bar;
  const double scale = std::max(1.0, std::abs(gamma_bar));
  const RiccatiWorkspace ws = make_riccati_workspace(m, x_lo, x_hi, dx);

  auto mu_at = [&](double gamma) -> std::optional<double> {
    try {
      return riccati_sweep(ws, gamma, nullptr);
    } catch (const error&) {
      return std::nullopt;  // unresolvable this close to the spectrum
    }
  };

  // smallest offset above gamma_bar where the decay rate is resolvable
  double delta = 1e-6 * scale;
  std::optional<double> mu_floor;
  for (int i = 0; i < 8 && !mu_floor; ++i, delta *= 10.0) mu_floor = mu_at(gamma_bar + delta);
  require(mu_floor.has_value(), errc::numerical_failure,
          "lyapunov_inverse_k: decay rate unresolvable above the Dirichlet estimate");
  delta /= 10.0;
  out.mu_floor = *mu_floor;

  EigenEstimate est;
  est.method = Method::riccati;
  est.window_lo = x_lo;
  est.window_hi = x_hi;
  if (*mu_floor > std::max(p, 1e-3)) {
    // plateau regime: k(p) sticks at the whole-line Dirichlet value
    out.plateau = true;
    est.value = gamma_bar;
    est.residual = std::abs(*mu_floor - p);
    out.estimate = est;
    return out;
  }

  double g_lo = gamma_bar + delta;
  double mu_lo = *mu_floor;
  require(mu_lo <= p, errc::numerical_failure,
          "lyapunov_inverse_k: resolution floor above the requested momentum");
  double g_hi = g_lo;
  double off = std::max(delta, 1e-3 * scale);
  double mu_hi = mu_lo;
  for (int i = 0; i < 200; ++i) {
    g_hi = gamma_bar + off;
    const auto mu = mu_at(g_hi);
    require(mu.has_value(), errc::numerical_failure,
            "lyapunov_inverse_k: decay rate unresolvable while bracketing");
    mu_hi = *mu;
    if (mu_hi > p) break;
    g_lo = g_hi;
    mu_lo = mu_hi;
    off *= 2.0;
    require(i < 199, errc::numerical_failure,
            "lyapunov_inverse_k: failed to bracket the requested momentum");
  }
  // bisection on the increasing map gamma -> mu(gamma)
  for (int i = 0; i < 200 && (g_hi - g_lo) > 1e-12 * scale; ++i) {
    const double g_mid = 0.5 * (g_lo + g_hi);
    const auto mu = mu_at(g_mid);
    require(mu.has_value(), errc::numerical_failure,
            "lyapunov_inverse_k: decay rate unresolvable inside the bracket");
    if (*mu < p)
      g_lo = g_mid;
    else
      g_hi = g_mid;
  }
  est.value = 0.5 * (g_lo + g_hi);
  est.residual = g_hi - g_lo;
  out.estimate = est;
  return out;
}

WindowSweep window_H(const Medium& m, double p, const std::vector<double>& R_sequence,
                     double width, WindowEngine engine, double corrector_eps) {
  require(!R_sequence.empty(), errc::invalid_argument, "window_H: empty R sequence");
  require(width > 0, errc::invalid_argument, "window_H: width must be positive");
  for (std::size_t i = 1; i < R_sequence.size(); ++i)
    require(R_sequence[i] > R_sequence[i - 1], errc::invalid_argument,
            "window_H: R sequence must increase");

  const OperatorLp op = assemble_Lp(m, p);
  WindowSweep sweep;
  sweep.R = R_sequence;
  double tol = 1e-9;
  for (double R : R_sequence) {
    const double lo = R, hi = R + width;
    double lower = 0, upper = 0;
    switch (engine) {
      case WindowEngine::const_testfn: {
        auto [u, o] = const_testfn_bounds(op, lo, hi);
        lower = u.value;
        upper = o.value;
        tol = std::max(tol, 1e-9 * (1.0 + std::abs(upper)));
        break;
      }
      case WindowEngine::corrector: {
        const int n = std::max(64, static_cast<int>(std::ceil(width / 0.05)));
        auto sol = approximate_corrector(m, p, corrector_eps, lo, hi, n);
        lower = sol.band_lo;
        upper = sol.band_hi;
        tol = std::max(tol, sol.band_hi - sol.band_lo + sol.newton_residual);
        break;
      }
      case WindowEngine::dirichlet_plus_const: {
        const int n = std::clamp(static_cast<int>(width / 0.02), 64, 100000);
        auto a = [&op](double x) { return op.coeff2(x); };
        auto b = [&op](double x) { return op.coeff1(x); };
        auto c = [&op](double x) { return op.coeff0(x); };
        lower = dirichlet_principal_coeffs(a, b, c, lo, hi, n).value;
        upper = const_testfn_bounds(op, lo, hi).second.value;
        tol = std::max(tol, 1e-6 * (1.0 + std::abs(upper)));
        break;
      }
    }
    sweep.lower.push_back(lower);
    sweep.upper.push_back(upper);
  }
  sweep.engine_tol = tol;
  for (std::size_t i = 1; i < sweep.R.size(); ++i) {
    require(sweep.lower[i] >= sweep.lower[i - 1] - 10.0 * tol, errc::numerical_failure,
            "window_H: lower bounds decreased beyond 10x the engine tolerance");
    require(sweep.upper[i] <= sweep.upper[i - 1] + 10.0 * tol, errc::numerical_failure,
            "window_H: upper bounds increased beyond 10x the engine tolerance");
  }
  sweep.H_under = sweep.lower.back();
  sweep.H_over = sweep.upper.back();
  return sweep;
}

}  // namespace kpp::spectral
