#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "kpp/media.hpp"

// Principal-eigenvalue engines for the momentum-conjugated linearisation
//   L_p phi = a phi'' + (2 p a + q) phi' + (a p^2 + q p + c) phi.
// Four routes are implemented: exact periodic eigenvalues (Perron root of the
// periodic discretisation), Dirichlet eigenvalues on windows with their
// whole-line limit, the small-epsilon additive corrector, and the
// Lyapunov-exponent / decay-rate route for divergence-form media. Constant
// test functions give certified inf/sup bounds on any window.
namespace kpp::spectral {

using media::Medium;

struct OperatorLp {
  Medium medium;
  double p = 0;
  // second-, first- and zeroth-order coefficients at x
  double coeff2(double x) const { return medium.a(x); }
  double coeff1(double x) const { return 2.0 * p * medium.a(x) + medium.q(x); }
  double coeff0(double x) const {
    const double a = medium.a(x), q = medium.q(x);
    return a * p * p + q * p + medium.c()(x);
  }
};

OperatorLp assemble_Lp(const Medium& m, double p);

enum class Method {
  periodic,
  dirichlet_window,
  corrector,
  riccati,
  const_testfn_lower,
  const_testfn_upper,
};

const char* to_string(Method m);

struct EigenEstimate {
  double value = 0;
  Method method = Method::periodic;
  double window_lo = 0, window_hi = 0;
  double residual = 0;              // max |L_p phi - value * phi| / phi where defined
  std::vector<double> xs, phi;      // eigenfunction samples (empty for bound-only engines)
};

using Coefficient = std::function<double(double)>;

// Periodic principal eigenvalue of a phi'' + b phi' + c0 phi on one period:
// nodes x_j = j*L/n, central differences with wrap-around, Perron root by
// shifted inverse power iteration started at sigma = max c0 + 4 max a / dx^2.
// The eigenfunction is positive, max-normalised.
EigenEstimate periodic_principal_coeffs(const Coefficient& a, const Coefficient& b,
                                        const Coefficient& c0, double period, int n);
EigenEstimate periodic_principal_eigenvalue(const OperatorLp& op, int n);

// Dirichlet principal eigenvalue on (lo, hi) with the same machinery.
EigenEstimate dirichlet_principal_coeffs(const Coefficient& a, const Coefficient& b,
                                         const Coefficient& c0, double lo, double hi, int n);
EigenEstimate dirichlet_principal_eigenvalue(const Medium& m, double lo, double hi, int n);

// Whole-line limit of the Dirichlet eigenvalue of a u'' + q u' + c u on
// balls B_R, obtained by doubling R until the (increasing) values plateau.
double whole_line_lambda1(const Medium& m, double r0 = 25.0, double r_max = 800.0,
                          double tol = 1e-4);

// Constant-test-function bounds: inf and sup of the zeroth-order coefficient
// over the sampled window bracket every principal-eigenvalue notion there.
std::pair<EigenEstimate, EigenEstimate> const_testfn_bounds(const OperatorLp& op, double lo,
                                                            double hi, int samples = 20001);

// Additive approximate corrector on a window with periodic wrap-around:
//   a w'' + a (w' + p)^2 + q (w' + p) + c = eps * w,
// solved by damped Newton from w == 0. eps*w over the window core brackets
// the eigenvalue estimate; the band width is the method error.
struct CorrectorSolution {
  double epsilon = 0, p = 0;
  std::vector<double> xs, w;
  double band_lo = 0, band_hi = 0;  // range of eps*w over the window core
  double newton_residual = 0;       // final sup-norm of the discrete equation
};

CorrectorSolution approximate_corrector(const Medium& m, double p, double epsilon,
                                        double window_lo, double window_hi, int n);

// Linear-in-epsilon extrapolation of band midpoints to eps -> 0. Requires at
// least three solutions at the same momentum; the reported residual is the
// band width at the smallest epsilon.
EigenEstimate richardson_lambda(const std::vector<CorrectorSolution>& sols);

// Backward integration of the decay-rate equation r' = (gamma - c - a' r
// - a r^2)/a from the frozen-coefficient stable branch; mu is the averaged
// decay rate -<r> after discarding the burn-in fifth of the span. Only valid
// for divergence-form media (q == a') and gamma above the whole-line
// Dirichlet eigenvalue.
struct RiccatiTrace {
  double gamma = 0;
  double mu = 0;
  double avg_lo = 0, avg_hi = 0;  // averaging window after burn-in
  std::vector<double> xs, r;      // decimated trace for diagnostics
};

RiccatiTrace riccati_mu(const Medium& m, double gamma, double x_lo, double x_hi, double dx,
                        std::optional<double> lambda1_hint = std::nullopt);

// Inverts gamma -> mu(gamma) by bisection to evaluate k(p), the common value
// of the generalized principal eigenvalues of L_{-p}, for p above the plateau
// threshold; below the resolvable threshold the whole-line Dirichlet value is
// returned and flagged.
struct LyapunovInverse {
  EigenEstimate estimate;  // method = riccati
  bool plateau = false;
  double gamma_bar = 0;    // whole-line Dirichlet estimate
  double mu_floor = 0;     // smallest resolvable decay rate above gamma_bar
};

// gamma_bar_hint skips the whole-line Dirichlet estimate when the caller has
// already computed it for this medium (it does not depend on p).
LyapunovInverse lyapunov_inverse_k(const Medium& m, double p, double x_lo, double x_hi,
                                   double dx,
                                   std::optional<double> gamma_bar_hint = std::nullopt);

// Window sweep for the Hamiltonian bounds: evaluates the chosen engine on
// windows (R, R + width) along R_sequence and enforces the monotone trend
// (lower nondecreasing, upper nonincreasing) within 10x the engine tolerance.
enum class WindowEngine { const_testfn, corrector, dirichlet_plus_const };

struct WindowSweep {
  std::vector<double> R, lower, upper;
  double H_under = 0, H_over = 0;  // values at the last window
  double engine_tol = 0;
};

WindowSweep window_H(const Medium& m, double p, const std::vector<double>& R_sequence,
                     double width, WindowEngine engine, double corrector_eps = 0.05);

}  // namespace kpp::spectral
