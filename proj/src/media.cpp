#include "kpp/media.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kpp/errors.hpp"
#include "kpp/numerics.hpp"

namespace kpp::media {

namespace {

constexpr double kPi = 3.14159265358979323846;

double trig_eval(double baseline, const std::vector<Mode>& modes, double x) {
  double v = baseline;
  for (const auto& m : modes) v += m.amplitude * std::cos(m.frequency * x + m.phase);
  return v;
}

std::vector<Mode> to_modes(const std::vector<HarmonicMode>& hm, double period) {
  std::vector<Mode> out;
  out.reserve(hm.size());
  for (const auto& m : hm)
    out.push_back({m.amplitude, 2.0 * kPi * m.harmonic / period, m.phase});
  return out;
}

// Mollifier of width w: k(s) = (1 + cos(pi s))/2 on [-1,1], unit mass.
double kernel(double u, double w) {
  const double s = u / w;
  if (s <= -1.0 || s >= 1.0) return 0.0;
  return (1.0 + std::cos(kPi * s)) / (2.0 * w);
}

double kernel_cdf(double u, double w) {
  const double s = u / w;
  if (s <= -1.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return 0.5 * (s + 1.0) + std::sin(kPi * s) / (2.0 * kPi);
}

// Piecewise-constant i.i.d. cell values convolved with the mollifier.
// Only the cells whose boundary kernels overlap x contribute.
struct MollifiedCells {
  std::uint64_t seed;
  std::uint64_t stream;
  double cell;   // correlation length
  double width;  // kernel width (cell / 4)
  double lo, hi;

  double value(std::uint64_t s, std::int64_t i) const {
    return lo + (hi - lo) * num::cell_uniform(s, stream, i);
  }
  double operator()(double x) const {
    const auto i0 = static_cast<std::int64_t>(std::floor((x - width) / cell));
    const auto i1 = static_cast<std::int64_t>(std::floor((x + width) / cell));
    double acc = 0.0;
    for (std::int64_t i = i0; i <= i1; ++i) {
      const double g = kernel_cdf(x - i * cell, width) - kernel_cdf(x - (i + 1) * cell, width);
      acc += value(seed, i) * g;
    }
    return acc;
  }
  double derivative(double x) const {
    const auto i0 = static_cast<std::int64_t>(std::floor((x - width) / cell));
    const auto i1 = static_cast<std::int64_t>(std::floor((x + width) / cell));
    double acc = 0.0;
    for (std::int64_t i = i0; i <= i1; ++i) {
      const double g = kernel(x - i * cell, width) - kernel(x - (i + 1) * cell, width);
      acc += value(seed, i) * g;
    }
    return acc;
  }
};

}  // namespace

const char* to_string(FieldClass c) {
  switch (c) {
    case FieldClass::constant: return "constant";
    case FieldClass::periodic: return "periodic";
    case FieldClass::compact_perturbation: return "compact-perturbation";
    case FieldClass::trig_almost_periodic: return "trig-almost-periodic";
    case FieldClass::asymptotic_sum: return "asymptotic-sum";
    case FieldClass::random_realization: return "random-realization";
    case FieldClass::slow_oscillation: return "slow-oscillation";
  }
  return "unknown";
}

CoefficientField::CoefficientField() : eval_([](double) { return 0.0; }) {}

CoefficientField::CoefficientField(Evaluator eval, FieldClass cls)
    : eval_(std::move(eval)), class_(cls) {}

void CoefficientField::sample_extremes(double lo, double hi, int n) {
  require(n >= 2, errc::invalid_argument, "sample_extremes: need n >= 2");
  double vmin = eval_(lo), vmax = vmin;
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double v = eval_(x);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  inf_ = vmin;
  sup_ = vmax;
}

void CoefficientField::set_extremes(double inf, double sup) {
  inf_ = inf;
  sup_ = sup;
}

CoefficientField CoefficientField::constant(double value) {
  CoefficientField f([value](double) { return value; }, FieldClass::constant);
  f.set_extremes(value, value);
  return f;
}

CoefficientField CoefficientField::trig_periodic(double baseline,
                                                 const std::vector<HarmonicMode>& modes,
                                                 double period) {
  require(period > 0, errc::invalid_argument, "trig_periodic: period must be positive");
  for (const auto& m : modes)
    require(m.harmonic >= 1, errc::invalid_argument, "trig_periodic: harmonics must be >= 1");
  auto ms = to_modes(modes, period);
  CoefficientField f([baseline, ms](double x) { return trig_eval(baseline, ms, x); },
                     FieldClass::periodic);
  f.set_period(period);
  f.sample_extremes(0.0, period, 4096);
  return f;
}

CoefficientField CoefficientField::trig_sum(double baseline, const std::vector<Mode>& modes) {
  CoefficientField f([baseline, modes](double x) { return trig_eval(baseline, modes, x); },
                     FieldClass::trig_almost_periodic);
  f.sample_extremes(-5000.0, 5000.0, 200000);
  return f;
}

Nonlinearity Nonlinearity::logistic(CoefficientField c) {
  Nonlinearity n;
  n.form = ReactionForm::logistic;
  auto cf = c;
  n.eval = [cf](double x, double u) { return cf(x) * u * (1.0 - u); };
  n.linearization = std::move(c);
  return n;
}

Nonlinearity Nonlinearity::custom(CoefficientField c, std::function<double(double, double)> f) {
  Nonlinearity n;
  n.form = ReactionForm::custom;
  n.linearization = std::move(c);
  n.eval = std::move(f);
  return n;
}

Medium make_homogeneous(double a0, double q0, double c0) {
  require(a0 > 0, errc::hypothesis_violation, "make_homogeneous: diffusion must be positive");
  require(c0 > 0, errc::hypothesis_violation, "make_homogeneous: reaction rate must be positive");
  require(4.0 * a0 * c0 - q0 * q0 > 0, errc::hypothesis_violation,
          "make_homogeneous: drift too strong, 4*a0*c0 - q0^2 <= 0");
  Medium m;
  m.a = CoefficientField::constant(a0);
  m.q = CoefficientField::constant(q0);
  m.f = Nonlinearity::logistic(CoefficientField::constant(c0));
  m.divergence_form = (q0 == 0.0);  // a' == 0
  if (m.divergence_form) m.a_prime = CoefficientField::constant(0.0);
  m.description = "homogeneous(a0=" + num::format_g17(a0) + ",q0=" + num::format_g17(q0) +
                  ",c0=" + num::format_g17(c0) + ")";
  return m;
}

Medium make_periodic(const std::vector<HarmonicMode>& a_modes,
                     const std::vector<HarmonicMode>& q_modes,
                     const std::vector<HarmonicMode>& c_modes, double period, double a0,
                     double q0, double c0) {
  require(period > 0, errc::invalid_argument, "make_periodic: period must be positive");
  Medium m;
  m.a = CoefficientField::trig_periodic(a0, a_modes, period);
  m.q = CoefficientField::trig_periodic(q0, q_modes, period);
  m.f = Nonlinearity::logistic(CoefficientField::trig_periodic(c0, c_modes, period));
  require(m.a.sampled_inf() > 0, errc::hypothesis_violation,
          "make_periodic: diffusion must stay positive over the period");
  require(m.c().sampled_inf() > 0, errc::hypothesis_violation,
          "make_periodic: reaction rate must stay positive over the period");
  // monostability margin over one period
  const int n = 4096;
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x = period * i / n;
    margin = std::min(margin, 4.0 * m.c()(x) * m.a(x) - m.q(x) * m.q(x));
  }
  require(margin > 0, errc::hypothesis_violation,
          "make_periodic: monostability margin 4*c*a - q^2 not positive");
  // detect exact divergence form (q == a' as mode lists)
  {
    auto da = derivative_modes(a_modes, period);
    bool match = (q0 == 0.0);
    if (match) {
      double worst = 0.0;
      for (int i = 0; i <= 64; ++i) {
        const double x = period * i / 64.0;
        double d = 0.0;
        for (const auto& mm : da)
          d += mm.amplitude * std::cos(2.0 * kPi * mm.harmonic / period * x + mm.phase);
        worst = std::max(worst, std::abs(d - m.q(x)));
      }
      match = worst <= 1e-12 * (1.0 + m.q.sampled_sup() - m.q.sampled_inf());
    }
    if (match) {
      m.divergence_form = true;
      auto ap = CoefficientField::trig_periodic(0.0, da, period);
      m.a_prime = std::move(ap);
    }
  }
  m.description = "periodic(L=" + num::format_g17(period) + ")";
  return m;
}

std::vector<HarmonicMode> derivative_modes(const std::vector<HarmonicMode>& modes,
                                           double period) {
  require(period > 0, errc::invalid_argument, "derivative_modes: period must be positive");
  std::vector<HarmonicMode> out;
  out.reserve(modes.size());
  for (const auto& m : modes) {
    // d/dx [A cos(wx + p)] = A w cos(wx + p + pi/2)
    const double w = 2.0 * kPi * m.harmonic / period;
    out.push_back({m.amplitude * w, m.harmonic, m.phase + kPi / 2.0});
  }
  return out;
}

Medium make_compact_perturbation(double b0, double bump_amplitude, double bump_radius) {
  require(b0 > 0, errc::hypothesis_violation, "make_compact_perturbation: b0 must be positive");
  require(bump_radius > 0, errc::invalid_argument,
          "make_compact_perturbation: radius must be positive");
  require(b0 + std::min(bump_amplitude, 0.0) > 0, errc::hypothesis_violation,
          "make_compact_perturbation: bump drives the reaction rate nonpositive");
  const double amp = bump_amplitude, r = bump_radius;
  CoefficientField c(
      [b0, amp, r](double x) {
        if (std::abs(x) >= r) return b0;  // exactly b0 outside the support
        return b0 + amp * 0.5 * (1.0 + std::cos(kPi * x / r));
      },
      FieldClass::compact_perturbation);
  c.set_support_radius(r);
  c.set_extremes(b0 + std::min(amp, 0.0), b0 + std::max(amp, 0.0));
  Medium m;
  m.a = CoefficientField::constant(1.0);
  m.q = CoefficientField::constant(0.0);
  m.f = Nonlinearity::logistic(std::move(c));
  m.divergence_form = true;
  m.a_prime = CoefficientField::constant(0.0);
  m.description = "compact_perturbation(b0=" + num::format_g17(b0) +
                  ",amp=" + num::format_g17(amp) + ",r=" + num::format_g17(r) + ")";
  return m;
}

Medium make_almost_periodic(const std::vector<Mode>& a_modes, const std::vector<Mode>& q_modes,
                            const std::vector<Mode>& c_modes, double a0, double q0, double c0) {
  Medium m;
  m.a = a_modes.empty() ? CoefficientField::constant(a0)
                        : CoefficientField::trig_sum(a0, a_modes);
  m.q = q_modes.empty() ? CoefficientField::constant(q0)
                        : CoefficientField::trig_sum(q0, q_modes);
  auto c = CoefficientField::trig_sum(c0, c_modes);
  require(m.a.sampled_inf() > 0, errc::hypothesis_violation,
          "make_almost_periodic: diffusion must stay positive");
  require(c.sampled_inf() > 0, errc::hypothesis_violation,
          "make_almost_periodic: reaction rate must stay positive");
  // margin check on a long sample window
  const double lo = -5000.0, hi = 5000.0;
  const int n = 100000;
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    margin = std::min(margin, 4.0 * c(x) * m.a(x) - m.q(x) * m.q(x));
  }
  require(margin > 0, errc::hypothesis_violation,
          "make_almost_periodic: monostability margin not positive on sample window");
  m.f = Nonlinearity::logistic(std::move(c));
  if (q_modes.empty() && q0 == 0.0 && a_modes.empty()) {
    m.divergence_form = true;
    m.a_prime = CoefficientField::constant(0.0);
  }
  m.description = "almost_periodic";
  return m;
}

Medium make_asymptotic(Medium limit, double transient_amplitude, double decay_rate) {
  require(decay_rate > 0, errc::invalid_argument, "make_asymptotic: decay rate must be positive");
  auto lim = std::make_shared<const Medium>(std::move(limit));
  const double amp = transient_amplitude, rate = decay_rate;
  const auto base_c = lim->c();
  CoefficientField c([base_c, amp, rate](double x) { return base_c(x) + amp * std::exp(-rate * std::abs(x)); },
                     FieldClass::asymptotic_sum);
  c.sample_extremes(-2000.0, 2000.0, 100000);
  require(c.sampled_inf() > 0, errc::hypothesis_violation,
          "make_asymptotic: transient drives the reaction rate nonpositive");
  Medium m;
  m.a = lim->a;
  m.q = lim->q;
  m.f = Nonlinearity::logistic(std::move(c));
  m.divergence_form = lim->divergence_form;
  m.a_prime = lim->a_prime;
  m.description = "asymptotic(amp=" + num::format_g17(amp) + ",rate=" + num::format_g17(rate) +
                  ") -> " + lim->description;
  m.asymptotic_limit = std::move(lim);
  return m;
}

Medium make_random_ergodic(std::uint64_t seed, double correlation_length,
                           std::pair<double, double> c_range, std::pair<double, double> a_range) {
  require(correlation_length > 0, errc::invalid_argument,
          "make_random_ergodic: correlation length must be positive");
  require(c_range.first <= c_range.second && a_range.first <= a_range.second,
          errc::invalid_argument, "make_random_ergodic: degenerate range (low > high)");
  require(c_range.first > 0, errc::hypothesis_violation,
          "make_random_ergodic: reaction range must be positive");
  require(a_range.first > 0, errc::hypothesis_violation,
          "make_random_ergodic: diffusion range must be positive");

  const double w = correlation_length / 4.0;
  MollifiedCells a_cells{seed, 1, correlation_length, w, a_range.first, a_range.second};
  MollifiedCells c_cells{seed, 2, correlation_length, w, c_range.first, c_range.second};

  CoefficientField a([a_cells](double x) { return a_cells(x); }, FieldClass::random_realization);
  // mollified values are convex combinations of the cell values
  a.set_extremes(a_range.first, a_range.second);
  CoefficientField ap([a_cells](double x) { return a_cells.derivative(x); },
                      FieldClass::random_realization);
  ap.sample_extremes(-50.0 * correlation_length, 50.0 * correlation_length, 20000);
  CoefficientField q = ap;  // divergence form: q == a'
  CoefficientField c([c_cells](double x) { return c_cells(x); }, FieldClass::random_realization);
  c.set_extremes(c_range.first, c_range.second);

  Medium m;
  m.a = std::move(a);
  m.q = std::move(q);
  m.f = Nonlinearity::logistic(std::move(c));
  m.divergence_form = true;
  m.a_prime = std::move(ap);
  m.seed = seed;
  m.description = "random_ergodic(seed=" + std::to_string(seed) + ",corr=" +
                  num::format_g17(correlation_length) + ")";
  return m;
}

Medium make_slowly_oscillating(double mu0_baseline, const std::vector<HarmonicMode>& mu0_modes,
                               double profile_period, double alpha) {
  require(alpha > 0, errc::invalid_argument, "make_slowly_oscillating: alpha must be positive");
  require(profile_period > 0, errc::invalid_argument,
          "make_slowly_oscillating: profile period must be positive");
  auto mu0 = CoefficientField::trig_periodic(mu0_baseline, mu0_modes, profile_period);

  // profile extremes: dense scan over one period, then golden refinement
  const int n = 8192;
  double ymin = 0, ymax = 0, vmin = mu0(0.0), vmax = vmin;
  for (int i = 1; i < n; ++i) {
    const double y = profile_period * i / n;
    const double v = mu0(y);
    if (v < vmin) { vmin = v; ymin = y; }
    if (v > vmax) { vmax = v; ymax = y; }
  }
  const double h = profile_period / n;
  auto neg = [&mu0](double y) { return -mu0(y); };
  vmin = num::golden_min([&mu0](double y) { return mu0(y); }, ymin - h, ymin + h, 1e-13).value;
  vmax = -num::golden_min(neg, ymax - h, ymax + h, 1e-13).value;
  require(vmin > 0, errc::hypothesis_violation,
          "make_slowly_oscillating: profile minimum must be positive");

  const double al = alpha;
  CoefficientField c(
      [mu0, al](double x) { return mu0(std::pow(std::log1p(std::abs(x)), al)); },
      FieldClass::slow_oscillation);
  c.set_extremes(vmin, vmax);

  Medium m;
  m.a = CoefficientField::constant(1.0);
  m.q = CoefficientField::constant(0.0);
  m.f = Nonlinearity::logistic(std::move(c));
  m.divergence_form = true;
  m.a_prime = CoefficientField::constant(0.0);
  m.slow_profile = SlowProfile{vmin, vmax, alpha};
  m.description = "slow_oscillation(alpha=" + num::format_g17(alpha) + ")";
  return m;
}

Medium with_shifted_reaction(const Medium& m, double shift) {
  Medium out = m;
  auto base = m.c();
  CoefficientField c([base, shift](double x) { return base(x) + shift; }, base.field_class());
  if (base.period()) c.set_period(*base.period());
  if (base.support_radius()) c.set_support_radius(*base.support_radius());
  c.set_extremes(base.sampled_inf() + shift, base.sampled_sup() + shift);
  require(c.sampled_inf() > 0, errc::hypothesis_violation,
          "with_shifted_reaction: shifted rate no longer positive");
  out.f = Nonlinearity::logistic(std::move(c));
  out.description = m.description + "+shift(" + num::format_g17(shift) + ")";
  return out;
}

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const HypothesisCheck& c) { return c.pass; });
}

const HypothesisCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate(const Medium& m, double x_lo, double x_hi, int samples,
                          double hyp_radius) {
  ValidationReport rep;
  if (!(samples >= 2) || !(x_hi > x_lo)) {
    rep.checks.push_back({"validation_window", false, 0.0, x_lo, 0.0});
    return rep;
  }
  auto x_at = [&](int i) { return x_lo + (x_hi - x_lo) * i / (samples - 1); };

  // reaction vanishes at u = 0 and u = 1 (margin is -worst deviation)
  {
    HypothesisCheck chk{"reaction_vanishes_at_steady_states", true, 0.0, x_lo, 0.0};
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double x = x_at(i);
      for (double s : {0.0, 1.0}) {
        const double dev = std::abs(m.f.eval(x, s));
        if (dev > worst) {
          worst = dev;
          chk.witness_x = x;
          chk.witness_s = s;
        }
      }
    }
    chk.margin = -worst;
    chk.pass = worst <= 1e-12;
    rep.checks.push_back(chk);
  }

  // reaction positive for u strictly between 0 and 1
  {
    HypothesisCheck chk{"reaction_positive_between", true, 0.0, x_lo, 0.0};
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const double x = x_at(i);
      for (int j = 1; j <= 20; ++j) {
        const double s = j / 21.0;
        const double v = m.f.eval(x, s);
        if (v < worst) {
          worst = v;
          chk.witness_x = x;
          chk.witness_s = s;
        }
      }
    }
    chk.margin = worst;
    chk.pass = worst > 0.0;
    rep.checks.push_back(chk);
  }

  // linear upper bound f(x, u) <= c(x) * u
  {
    HypothesisCheck chk{"reaction_linear_upper_bound", true, 0.0, x_lo, 0.0};
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const double x = x_at(i);
      const double cx = m.c()(x);
      for (int j = 1; j <= 20; ++j) {
        const double s = j / 21.0;
        const double slack = cx * s - m.f.eval(x, s);
        if (slack < worst) {
          worst = slack;
          chk.witness_x = x;
          chk.witness_s = s;
        }
      }
    }
    chk.margin = worst;
    chk.pass = worst >= -1e-12;
    rep.checks.push_back(chk);
  }

  // uniformly positive diffusion
  {
    HypothesisCheck chk{"diffusion_uniformly_positive", true, 0.0, x_lo, 0.0};
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const double x = x_at(i);
      const double v = m.a(x);
      if (v < worst) {
        worst = v;
        chk.witness_x = x;
      }
    }
    chk.margin = worst;
    chk.pass = worst > 0.0;
    rep.checks.push_back(chk);
  }

  // monostability margin 4*c*a - q^2 for |x| > hyp_radius
  {
    HypothesisCheck chk{"monostability_margin", true, 0.0, x_lo, 0.0};
    double worst = std::numeric_limits<double>::infinity();
    bool seen = false;
    for (int i = 0; i < samples; ++i) {
      const double x = x_at(i);
      if (std::abs(x) < hyp_radius) continue;
      seen = true;
      const double v = 4.0 * m.c()(x) * m.a(x) - m.q(x) * m.q(x);
      if (v < worst) {
        worst = v;
        chk.witness_x = x;
      }
    }
    chk.margin = seen ? worst : 0.0;
    chk.pass = seen && worst > 0.0;
    rep.checks.push_back(chk);
  }

  // q == a' when the divergence-form flag is set (5-point stencil derivative)
  if (m.divergence_form) {
    HypothesisCheck chk{"divergence_consistency", true, 0.0, x_lo, 0.0};
    const double h = 3e-4;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double x = x_at(i);
      const double d = (-m.a(x + 2 * h) + 8 * m.a(x + h) - 8 * m.a(x - h) + m.a(x - 2 * h)) /
                       (12.0 * h);
      const double dev = std::abs(m.q(x) - d);
      if (dev > worst) {
        worst = dev;
        chk.witness_x = x;
      }
    }
    chk.margin = -worst;
    chk.pass = worst <= 1e-8;
    rep.checks.push_back(chk);
  }

  return rep;
}

}  // namespace kpp::media
