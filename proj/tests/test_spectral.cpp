#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "kpp/media.hpp"
#include "kpp/spectral.hpp"

#ifdef KPP_HAVE_EIGEN3
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#endif

using namespace kpp;
using namespace kpp::spectral;

namespace {

constexpr double kPi = 3.14159265358979323846;

media::Medium cosine_reaction_medium() {
  return media::make_periodic({}, {}, {{0.5, 1, 0.0}}, 1.0, 1.0, 0.0, 1.0);
}

media::Medium full_periodic_medium() {
  // periodic a, q and c together; drift mild enough for every grid used here
  return media::make_periodic({{0.2, 1, 0.3}}, {{0.1, 2, 1.0}}, {{0.4, 1, 0.0}}, 1.0, 1.0,
                              0.0, 1.0);
}

#ifdef KPP_HAVE_EIGEN3
struct DensePerron {
  double value = 0;
  double gap = 0;  // distance from the Perron root to the next real part
  std::vector<double> vec;
};

// Independent full-spectrum oracle: rebuilds the documented discretisation
// (nodes x_j = j L / n, central differences, wrap-around) from scratch and
// takes the eigenvalue of maximal real part from a dense solver.
DensePerron dense_periodic_perron(const Coefficient& a, const Coefficient& b,
                                  const Coefficient& c0, double L, int n) {
  const double dx = L / n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double x = j * dx;
    M(j, (j + n - 1) % n) += a(x) / (dx * dx) - b(x) / (2 * dx);
    M(j, j) += -2 * a(x) / (dx * dx) + c0(x);
    M(j, (j + 1) % n) += a(x) / (dx * dx) + b(x) / (2 * dx);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  int best = 0;
  double lam = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i).real() > lam) {
      lam = es.eigenvalues()(i).real();
      best = i;
    }
  double second = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (i != best) second = std::max(second, es.eigenvalues()(i).real());
  DensePerron out;
  out.value = lam;
  out.gap = lam - second;
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  double vmax = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(v(i)) > std::abs(vmax)) vmax = v(i);
  out.vec.resize(n);
  for (int i = 0; i < n; ++i) out.vec[i] = v(i) / vmax;
  return out;
}

double dense_dirichlet_top(const Coefficient& a, const Coefficient& b, const Coefficient& c0,
                           double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  const int m = n - 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k <= m; ++k) {
    const double x = lo + k * h;
    if (k > 1) M(k - 1, k - 2) = a(x) / (h * h) - b(x) / (2 * h);
    M(k - 1, k - 1) = -2 * a(x) / (h * h) + c0(x);
    if (k < m) M(k - 1, k) = a(x) / (h * h) + b(x) / (2 * h);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  double lam = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) lam = std::max(lam, es.eigenvalues()(i).real());
  return lam;
}
#endif  // KPP_HAVE_EIGEN3

}  // namespace

TEST_CASE("conjugated operator coefficients follow a, 2pa+q, ap^2+qp+c") {
  auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  auto op = assemble_Lp(m, 2.0);
  CHECK(op.coeff2(0.3) == 1.0);
  CHECK(op.coeff1(0.3) == 4.0);
  CHECK(op.coeff0(0.3) == 5.0);

  auto het = full_periodic_medium();
  auto op2 = assemble_Lp(het, -1.3);
  for (double x : {-0.7, 0.0, 0.41}) {
    const double a = het.a(x), q = het.q(x), c = het.c()(x);
    CHECK(op2.coeff2(x) == doctest::Approx(a).epsilon(1e-15));
    CHECK(op2.coeff1(x) == doctest::Approx(2 * (-1.3) * a + q).epsilon(1e-14));
    CHECK(op2.coeff0(x) == doctest::Approx(a * 1.69 - 1.3 * q + c).epsilon(1e-14));
  }
}

TEST_CASE("constant coefficients give the exact quadratic eigenvalue") {
  // the constant eigenfunction makes the discretisation error vanish
  const double a0 = 1.3, q0 = -0.2, c0 = 0.8, p = 1.7;
  auto est = periodic_principal_coeffs([&](double) { return a0; },
                                       [&](double) { return 2 * p * a0 + q0; },
                                       [&](double) { return a0 * p * p + q0 * p + c0; }, 1.0,
                                       64);
  CHECK(est.value == doctest::Approx(a0 * p * p + q0 * p + c0).epsilon(1e-11));
  for (double v : est.phi) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

#ifdef KPP_HAVE_EIGEN3
TEST_CASE("periodic engine matches the dense full-spectrum oracle") {
  struct Case {
    media::Medium m;
    double p;
  };
  const Case cases[] = {{cosine_reaction_medium(), 0.0},
                        {cosine_reaction_medium(), -1.3},
                        {full_periodic_medium(), 0.7}};
  for (const auto& cs : cases) {
    auto op = assemble_Lp(cs.m, cs.p);
    const int n = 64;
    auto est = periodic_principal_eigenvalue(op, n);
    auto dense = dense_periodic_perron([&](double x) { return op.coeff2(x); },
                                       [&](double x) { return op.coeff1(x); },
                                       [&](double x) { return op.coeff0(x); }, 1.0, n);
    CHECK(est.value ==
          doctest::Approx(dense.value).epsilon(1e-10));
    CHECK(dense.gap > 1e-6);  // Perron root is simple and isolated
    for (double v : dense.vec) CHECK(v > 0.0);  // and its eigenvector positive
    REQUIRE(est.phi.size() == static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < est.phi.size(); ++i) {
      CHECK(est.phi[i] > 0.0);
      CHECK(est.phi[i] == doctest::Approx(dense.vec[i]).epsilon(1e-7));
    }
  }
}

TEST_CASE("dirichlet engine matches the dense oracle and the sine eigenvalue") {
  auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  auto est = dirichlet_principal_eigenvalue(m, 0.0, kPi, 64);
  auto dense = dense_dirichlet_top([](double) { return 1.0; }, [](double) { return 0.0; },
                                   [](double) { return 1.0; }, 0.0, kPi, 64);
  CHECK(est.value == doctest::Approx(dense).epsilon(1e-10));
  // continuum value: lambda1(phi'' + phi) on (0, pi) is 0, discretisation O(h^2)
  auto fine = dirichlet_principal_eigenvalue(m, 0.0, kPi, 2000);
  CHECK(std::abs(fine.value - 0.0) < 1e-5);
  auto fine2 = dirichlet_principal_eigenvalue(m, 0.0, 2 * kPi, 2000);
  CHECK(fine2.value == doctest::Approx(0.75).epsilon(1e-5));
}
#endif  // KPP_HAVE_EIGEN3

TEST_CASE("periodic eigenvalue converges at second order in the grid") {
  auto op = assemble_Lp(cosine_reaction_medium(), -1.0);
  const double k64 = periodic_principal_eigenvalue(op, 64).value;
  const double k128 = periodic_principal_eigenvalue(op, 128).value;
  const double k256 = periodic_principal_eigenvalue(op, 256).value;
  CHECK(std::abs(k256 - k128) < std::abs(k128 - k64) / 3.0);
  CHECK(std::abs(k128 - k64) < 1e-3);
}

TEST_CASE("adding a constant to the reaction shifts the eigenvalue exactly") {
  auto m = full_periodic_medium();
  auto shifted = media::with_shifted_reaction(m, 0.37);
  for (double p : {-0.8, 0.0, 1.1}) {
    const double k0 = periodic_principal_eigenvalue(assemble_Lp(m, p), 128).value;
    const double k1 = periodic_principal_eigenvalue(assemble_Lp(shifted, p), 128).value;
    CHECK(k1 - k0 == doctest::Approx(0.37).epsilon(1e-9));
  }
}

TEST_CASE("eigenvalue lies between the constant-test-function bounds") {
  auto m = full_periodic_medium();
  for (double p : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    auto op = assemble_Lp(m, p);
    auto [lo, hi] = const_testfn_bounds(op, 0.0, 1.0);
    const double k = periodic_principal_eigenvalue(op, 128).value;
    CHECK(k >= lo.value - 1e-8);
    CHECK(k <= hi.value + 1e-8);
  }
}

TEST_CASE("eigenvalue is midpoint convex in the momentum") {
  auto m = cosine_reaction_medium();
  for (double p : {-2.0, -1.0, 0.0, 1.0}) {
    const double k0 = periodic_principal_eigenvalue(assemble_Lp(m, p - 1), 256).value;
    const double k1 = periodic_principal_eigenvalue(assemble_Lp(m, p), 256).value;
    const double k2 = periodic_principal_eigenvalue(assemble_Lp(m, p + 1), 256).value;
    CHECK(k1 <= (k0 + k2) / 2.0 + 1e-6);
  }
}

TEST_CASE("dirichlet eigenvalue grows with the domain") {
  auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  const double small = dirichlet_principal_eigenvalue(m, 0.0, kPi, 500).value;
  const double large = dirichlet_principal_eigenvalue(m, -1.0, kPi + 1.0, 500).value;
  CHECK(large > small);
}

TEST_CASE("whole-line limit reaches the essential level") {
  auto hom = media::make_homogeneous(1.0, 0.0, 1.0);
  CHECK(std::abs(whole_line_lambda1(hom) - 1.0) < 1e-3);
  auto dip = media::make_compact_perturbation(0.25, -0.2, 5.0);
  CHECK(std::abs(whole_line_lambda1(dip) - 0.25) < 5e-3);
}

TEST_CASE("constant test functions report the coefficient range") {
  auto hom = assemble_Lp(media::make_homogeneous(1.0, 0.0, 2.0), 0.0);
  auto [hl, hh] = const_testfn_bounds(hom, -10.0, 10.0);
  CHECK(hl.value == 2.0);
  CHECK(hh.value == 2.0);
  CHECK(hl.method == Method::const_testfn_lower);
  CHECK(hh.method == Method::const_testfn_upper);

  auto per = assemble_Lp(cosine_reaction_medium(), 0.0);
  auto [pl, ph] = const_testfn_bounds(per, 0.0, 1.0);
  CHECK(pl.value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(ph.value == doctest::Approx(1.5).epsilon(1e-6));

  // beyond the bump the compact medium is exactly homogeneous: at p = 1 the
  // zeroth-order coefficient is p^2 + b0 = 1.25 on the whole window
  auto cpt = assemble_Lp(media::make_compact_perturbation(0.25, -0.2, 5.0), 1.0);
  auto [cl, ch] = const_testfn_bounds(cpt, 10.0, 60.0);
  CHECK(cl.value == 1.25);
  CHECK(ch.value == 1.25);
}

TEST_CASE("corrector on constant coefficients is exact for every epsilon") {
  auto m = media::make_homogeneous(1.0, 0.0, 2.0);
  const double p = -1.0;  // a p^2 + q p + c = 3
  std::vector<CorrectorSolution> sols;
  for (double eps : {0.2, 0.1, 0.05}) {
    auto sol = approximate_corrector(m, p, eps, -30.0, 30.0, 1200);
    CHECK(sol.band_hi - sol.band_lo < 1e-9);
    CHECK(sol.band_lo == doctest::Approx(3.0).epsilon(1e-9));
    sols.push_back(sol);
  }
  auto est = richardson_lambda(sols);
  CHECK(est.value == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(est.method == Method::corrector);
}

TEST_CASE("corrector extrapolation reproduces the periodic eigenvalue") {
  auto m = cosine_reaction_medium();
  const double p = -1.0;
  std::vector<CorrectorSolution> sols;
  for (double eps : {0.2, 0.1, 0.05})
    sols.push_back(approximate_corrector(m, p, eps, 0.0, 1.0, 64));
  // band width shrinks as epsilon shrinks
  CHECK(sols[2].band_hi - sols[2].band_lo <=
        sols[0].band_hi - sols[0].band_lo + 1e-12);
  const double k = periodic_principal_eigenvalue(assemble_Lp(m, p), 256).value;
  CHECK(richardson_lambda(sols).value == doctest::Approx(k).epsilon(1e-3));
}

TEST_CASE("corrector guards its discretisation limits") {
  auto m = cosine_reaction_medium();
  CHECK_THROWS(approximate_corrector(m, 0.0, 0.001, 0.0, 1.0, 64));  // eps too small
  CHECK_THROWS(approximate_corrector(m, 0.0, 0.1, 0.0, 10.0, 64));   // dx too coarse
  CHECK_THROWS(richardson_lambda({approximate_corrector(m, 0.0, 0.1, 0.0, 1.0, 64)}));
}

TEST_CASE("decay-rate sweep is exact for constant coefficients") {
  auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  auto t2 = riccati_mu(m, 2.0, 0.0, 200.0, 0.02, 1.0);
  CHECK(t2.mu == doctest::Approx(1.0).epsilon(1e-8));
  for (double r : t2.r) CHECK(r == doctest::Approx(-1.0).epsilon(1e-8));
  auto t125 = riccati_mu(m, 1.25, 0.0, 200.0, 0.02, 1.0);
  CHECK(t125.mu == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("decay-rate inversion recovers k(p) for constant coefficients") {
  auto m = media::make_homogeneous(1.0, 0.0, 1.0);
  auto k1 = lyapunov_inverse_k(m, 1.0, 0.0, 200.0, 0.02);
  CHECK_FALSE(k1.plateau);
  CHECK(k1.estimate.value == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(k1.estimate.method == Method::riccati);
  auto ksmall = lyapunov_inverse_k(m, 0.01, 0.0, 200.0, 0.02);
  CHECK(ksmall.estimate.value == doctest::Approx(1.0001).epsilon(1e-7));
}

TEST_CASE("decay-rate inversion matches the periodic engine in divergence form") {
  std::vector<media::HarmonicMode> a_modes{{0.2, 1, 0.0}};
  auto m = media::make_periodic(a_modes, media::derivative_modes(a_modes, 1.0),
                                {{0.3, 1, 0.5}}, 1.0, 1.0, 0.0, 1.0);
  REQUIRE(m.divergence_form);
  const double p = 1.0;
  auto inv = lyapunov_inverse_k(m, p, 0.0, 2000.0, 0.02);
  const double k = periodic_principal_eigenvalue(assemble_Lp(m, -p), 256).value;
  CHECK(inv.estimate.value == doctest::Approx(k).epsilon(1e-4));
}

TEST_CASE("decay-rate machinery rejects media that are not divergence form") {
  auto m = media::make_periodic({}, {{0.1, 1, 0.0}}, {}, 1.0, 1.0, 0.0, 1.0);
  REQUIRE_FALSE(m.divergence_form);
  CHECK_THROWS(riccati_mu(m, 2.0, 0.0, 100.0, 0.02));
  CHECK_THROWS(lyapunov_inverse_k(m, 1.0, 0.0, 100.0, 0.02));
}

TEST_CASE("random media resolve moderate momenta and floor tiny ones") {
  auto m = media::make_random_ergodic(3, 1.0, {0.5, 1.5}, {0.9, 1.1});
  auto k_half = lyapunov_inverse_k(m, 0.5, 0.0, 2000.0, 0.02);
  auto k_one = lyapunov_inverse_k(m, 1.0, 0.0, 2000.0, 0.02, k_half.gamma_bar);
  CHECK(k_one.estimate.value > k_half.estimate.value);
  CHECK(k_half.estimate.value >= k_half.gamma_bar - 1e-6);

  // far below the resolvable decay rate the inversion must return the
  // whole-line level (flagged as a plateau when mu stays bounded away from 0)
  auto k_tiny = lyapunov_inverse_k(m, 1e-3, 0.0, 2000.0, 0.02, k_half.gamma_bar);
  CHECK(std::abs(k_tiny.estimate.value - k_tiny.gamma_bar) <
        5e-3 * std::max(1.0, std::abs(k_tiny.gamma_bar)));
  if (k_tiny.plateau) CHECK(k_tiny.estimate.value == k_tiny.gamma_bar);
}

TEST_CASE("window sweeps collapse once the heterogeneity is out of view") {
  auto m = media::make_compact_perturbation(0.25, -0.2, 5.0);
  auto sweep = window_H(m, 1.0, {10.0, 20.0, 40.0}, 50.0, WindowEngine::const_testfn);
  REQUIRE(sweep.R.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sweep.lower[i] == 1.25);
    CHECK(sweep.upper[i] == 1.25);
  }
  CHECK(sweep.H_under == 1.25);
  CHECK(sweep.H_over == 1.25);
}

TEST_CASE("window sweeps bracket the periodic eigenvalue") {
  auto m = cosine_reaction_medium();
  const double k0 = periodic_principal_eigenvalue(assemble_Lp(m, 0.0), 256).value;
  auto sweep =
      window_H(m, 0.0, {10.0, 20.0, 40.0}, 50.0, WindowEngine::dirichlet_plus_const);
  CHECK(sweep.H_under <= k0 + 1e-6);
  CHECK(sweep.H_over >= k0 - 1e-6);
  CHECK(sweep.H_under <= sweep.H_over + 1e-12);
  auto corr = window_H(m, 0.0, {10.0, 20.0, 40.0}, 50.0, WindowEngine::corrector);
  CHECK(corr.H_under <= k0 + 0.05);
  CHECK(corr.H_over >= k0 - 0.05);
}

TEST_CASE("perron certificates come with positive vectors and small residuals") {
  auto op = assemble_Lp(full_periodic_medium(), -0.9);
  auto est = periodic_principal_eigenvalue(op, 256);
  REQUIRE(est.phi.size() == 256);
  REQUIRE(est.xs.size() == 256);
  double mx = 0;
  for (double v : est.phi) {
    CHECK(v > 0.0);
    mx = std::max(mx, v);
  }
  CHECK(mx == doctest::Approx(1.0).epsilon(1e-12));  // max-normalised
  CHECK(est.residual <= 1e-10 * std::max(1.0, std::abs(est.value)));
}
