#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Small numerical toolbox shared by the solver modules: tridiagonal solves,
// shape-preserving cubic interpolation, golden-section search, deterministic
// hashing / random bits, and least-squares fits.
namespace kpp::num {

// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
// lower[i] multiplies x[i-1] in row i (lower[0] unused), upper[i] multiplies
// x[i+1] (upper[n-1] unused). The coefficient arrays are left untouched;
// rhs is overwritten with the solution. Rows must be diagonally dominant
// enough that elimination without pivoting is stable.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs);

// Same, for a cyclic tridiagonal system with wrap entries
//   corner_ur = A(0, n-1),  corner_ll = A(n-1, 0),
// solved via a rank-one (Sherman-Morrison) correction of a plain
// tridiagonal solve. Requires n >= 3.
void solve_cyclic_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, double corner_ur, double corner_ll,
                              std::span<double> rhs);

// Shape-preserving piecewise-cubic interpolant (Fritsch-Carlson slopes).
// Monotone data produces a monotone interpolant; evaluation outside the
// node range clamps to the end intervals' cubics.
class Pchip {
 public:
  Pchip() = default;
  static Pchip fit(std::vector<double> x, std::vector<double> y);
  double operator()(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, d_;
};

struct GoldenResult {
  double x = 0;
  double value = 0;
  int iterations = 0;
};

// Golden-section minimisation of a unimodal function on [a, b].
GoldenResult golden_min(const std::function<double(double)>& f, double a, double b,
                        double x_tol, int max_iter = 200);

// SplitMix64 step: advances the state and returns a well-mixed 64-bit word.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic value in [0, 1) derived from (seed, stream, index); used for
// reproducible i.i.d. cell values addressable by signed cell index.
double cell_uniform(std::uint64_t seed, std::uint64_t stream, std::int64_t index);

// FNV-1a 64-bit content hash, rendered as fixed-width hex by hash_hex.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

// Shortest round-trip formatting of a double with 17 significant digits.
std::string format_g17(double v);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double rms = 0;  // root-mean-square residual
};

// Least squares y ~ slope * t + intercept.
LinearFit fit_line(std::span<const double> t, std::span<const double> y);

struct LogCorrectedFit {
  double slope = 0;
  double log_coeff = 0;  // y ~ slope * t - log_coeff * ln t + intercept
  double intercept = 0;
  double rms = 0;
};

// Least squares with an additional logarithmic term; t must be positive.
LogCorrectedFit fit_line_log(std::span<const double> t, std::span<const double> y);

}  // namespace kpp::num
