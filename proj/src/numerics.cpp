#include "kpp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kpp/errors.hpp"

namespace kpp::num {

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
  const std::size_t n = diag.size();
  require(n >= 1 && lower.size() == n && upper.size() == n && rhs.size() == n,
          errc::invalid_argument, "tridiagonal solve: inconsistent sizes");
  static thread_local std::vector<double> scratch;
  scratch.resize(n);
  // forward sweep
  double piv = diag[0];
  require(piv != 0.0, errc::numerical_failure, "tridiagonal solve: zero pivot");
  scratch[0] = upper[0] / piv;
  rhs[0] /= piv;
  for (std::size_t i = 1; i < n; ++i) {
    piv = diag[i] - lower[i] * scratch[i - 1];
    require(piv != 0.0, errc::numerical_failure, "tridiagonal solve: zero pivot");
    scratch[i] = upper[i] / piv;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / piv;
  }
  // back substitution
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

void solve_cyclic_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, double corner_ur, double corner_ll,
                              std::span<double> rhs) {
  const std::size_t n = diag.size();
  require(n >= 3, errc::invalid_argument, "cyclic tridiagonal solve: need n >= 3");
  if (corner_ur == 0.0 && corner_ll == 0.0) {
    solve_tridiagonal(lower, diag, upper, rhs);
    return;
  }
  // A = A0 + u v^T with u = (gamma, 0, .., 0, corner_ll), v = (1, 0, .., 0, corner_ur/gamma).
  const double gamma = -diag[0];
  static thread_local std::vector<double> d0, z;
  d0.assign(diag.begin(), diag.end());
  d0[0] -= gamma;
  d0[n - 1] -= corner_ur * corner_ll / gamma;
  z.assign(n, 0.0);
  z[0] = gamma;
  z[n - 1] = corner_ll;
  solve_tridiagonal(lower, d0, upper, rhs);
  solve_tridiagonal(lower, d0, upper, z);
  const double vy = rhs[0] + corner_ur / gamma * rhs[n - 1];
  const double vz = z[0] + corner_ur / gamma * z[n - 1];
  const double factor = vy / (1.0 + vz);
  require(std::isfinite(factor), errc::numerical_failure,
          "cyclic tridiagonal solve: singular correction");
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= factor * z[i];
}

Pchip Pchip::fit(std::vector<double> x, std::vector<double> y) {
  require(x.size() == y.size() && x.size() >= 2, errc::invalid_argument,
          "pchip: need at least two nodes");
  for (std::size_t i = 1; i < x.size(); ++i)
    require(x[i] > x[i - 1], errc::invalid_argument, "pchip: nodes must increase strictly");

  const std::size_t n = x.size();
  std::vector<double> h(n - 1), s(n - 1), d(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    s[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = s[0];
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (s[i - 1] * s[i] <= 0.0) {
        d[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
      }
    }
    auto endpoint = [](double h0, double h1, double s0, double s1) {
      double d0 = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
      if (d0 * s0 <= 0.0) return 0.0;
      if (s0 * s1 < 0.0 && std::abs(d0) > 3.0 * std::abs(s0)) return 3.0 * s0;
      return d0;
    };
    d[0] = endpoint(h[0], h[1], s[0], s[1]);
    d[n - 1] = endpoint(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
  }

  Pchip p;
  p.x_ = std::move(x);
  p.y_ = std::move(y);
  p.d_ = std::move(d);
  return p;
}

double Pchip::operator()(double xq) const {
  const std::size_t n = x_.size();
  std::size_t k = 0;
  if (xq <= x_.front()) {
    k = 0;
  } else if (xq >= x_.back()) {
    k = n - 2;
  } else {
    k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
  }
  const double h = x_[k + 1] - x_[k];
  const double t = (xq - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
}

GoldenResult golden_min(const std::function<double(double)>& f, double a, double b,
                        double x_tol, int max_iter) {
  require(b > a, errc::invalid_argument, "golden_min: empty bracket");
  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  int it = 0;
  while (b - a > x_tol && it < max_iter) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
    ++it;
  }
  GoldenResult r;
  r.x = (f1 <= f2) ? x1 : x2;
  r.value = std::min(f1, f2);
  r.iterations = it;
  return r;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double cell_uniform(std::uint64_t seed, std::uint64_t stream, std::int64_t index) {
  // zig-zag encode the signed index so negative cells get distinct streams
  const std::uint64_t zz =
      (static_cast<std::uint64_t>(index) << 1) ^ static_cast<std::uint64_t>(index >> 63);
  std::uint64_t state = seed;
  (void)splitmix64(state);
  state ^= 0x632be59bd9b4e019ull * (stream + 1);
  (void)splitmix64(state);
  state ^= zz;
  const std::uint64_t bits = splitmix64(state);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;  // top 53 bits -> [0,1)
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

LinearFit fit_line(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  require(n >= 2 && y.size() == n, errc::invalid_argument, "fit_line: need >= 2 points");
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  const double denom = n * stt - st * st;
  require(denom != 0.0, errc::numerical_failure, "fit_line: degenerate abscissae");
  LinearFit f;
  f.slope = (n * sty - st * sy) / denom;
  f.intercept = (sy - f.slope * st) / n;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * t[i] + f.intercept);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

LogCorrectedFit fit_line_log(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  require(n >= 3 && y.size() == n, errc::invalid_argument, "fit_line_log: need >= 3 points");
  // normal equations for basis {t, -ln t, 1}
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double b[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    require(t[i] > 0.0, errc::invalid_argument, "fit_line_log: abscissae must be positive");
    const double phi[3] = {t[i], -std::log(t[i]), 1.0};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += phi[r] * phi[c];
      b[r] += phi[r] * y[i];
    }
  }
  // 3x3 Gaussian elimination with partial pivoting
  int idx[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[idx[r]][col]) > std::abs(m[idx[piv]][col])) piv = r;
    std::swap(idx[col], idx[piv]);
    require(m[idx[col]][col] != 0.0, errc::numerical_failure, "fit_line_log: singular system");
    for (int r = col + 1; r < 3; ++r) {
      const double factor = m[idx[r]][col] / m[idx[col]][col];
      for (int c = col; c < 3; ++c) m[idx[r]][c] -= factor * m[idx[col]][c];
      b[idx[r]] -= factor * b[idx[col]];
    }
  }
  double sol[3];
  for (int r = 2; r >= 0; --r) {
    double acc = b[idx[r]];
    for (int c = r + 1; c < 3; ++c) acc -= m[idx[r]][c] * sol[c];
    sol[r] = acc / m[idx[r]][r];
  }
  LogCorrectedFit f;
  f.slope = sol[0];
  f.log_coeff = sol[1];
  f.intercept = sol[2];
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * t[i] - f.log_coeff * std::log(t[i]) + f.intercept);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

}  // namespace kpp::num
