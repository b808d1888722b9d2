#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Construction and validation of the 1-D media the solvers operate on:
// diffusion a(x), drift q(x) and a monostable reaction f(x, u) whose
// linearisation at u = 0 is c(x). All evaluators are pure functions of x,
// deterministic across runs (random media are reproducible from their seed).
namespace kpp::media {

enum class FieldClass {
  constant,
  periodic,
  compact_perturbation,
  trig_almost_periodic,
  asymptotic_sum,
  random_realization,
  slow_oscillation,
};

const char* to_string(FieldClass c);

// amplitude * cos(frequency * x + phase), frequency in radians per unit x.
struct Mode {
  double amplitude = 0;
  double frequency = 0;
  double phase = 0;
};

// amplitude * cos(2*pi*harmonic*x/period + phase); integer harmonics keep the
// field exactly periodic.
struct HarmonicMode {
  double amplitude = 0;
  int harmonic = 1;
  double phase = 0;
};

class CoefficientField {
 public:
  using Evaluator = std::function<double(double)>;

  CoefficientField();
  CoefficientField(Evaluator eval, FieldClass cls);

  double operator()(double x) const { return eval_(x); }
  FieldClass field_class() const { return class_; }
  std::optional<double> period() const { return period_; }
  std::optional<double> support_radius() const { return support_radius_; }
  // extremes over the construction-time sample grid
  double sampled_inf() const { return inf_; }
  double sampled_sup() const { return sup_; }

  void set_period(double L) { period_ = L; }
  void set_support_radius(double r) { support_radius_ = r; }
  void sample_extremes(double lo, double hi, int n);
  void set_extremes(double inf, double sup);

  static CoefficientField constant(double value);
  static CoefficientField trig_periodic(double baseline, const std::vector<HarmonicMode>& modes,
                                        double period);
  static CoefficientField trig_sum(double baseline, const std::vector<Mode>& modes);

 private:
  Evaluator eval_;
  FieldClass class_ = FieldClass::constant;
  std::optional<double> period_;
  std::optional<double> support_radius_;
  double inf_ = 0, sup_ = 0;
};

enum class ReactionForm { logistic, custom };

// Reaction term f(x, u) with f(x, 0) = f(x, 1) = 0, f > 0 on (0, 1) and the
// linear bound f(x, u) <= c(x) * u; c is the linearisation at u = 0.
struct Nonlinearity {
  CoefficientField linearization;  // c(x)
  ReactionForm form = ReactionForm::logistic;
  std::function<double(double, double)> eval;  // f(x, u)

  static Nonlinearity logistic(CoefficientField c);
  static Nonlinearity custom(CoefficientField c, std::function<double(double, double)> f);
};

// Profile metadata for media of the form c(x) = mu0((ln(1+|x|))^alpha).
struct SlowProfile {
  double mu_min = 0;
  double mu_max = 0;
  double alpha = 0;
};

struct Medium {
  CoefficientField a;
  CoefficientField q;
  Nonlinearity f;
  bool divergence_form = false;  // q == a' up to tolerance; a' then available exactly
  std::optional<CoefficientField> a_prime;
  std::optional<std::uint64_t> seed;
  std::string description;
  std::optional<SlowProfile> slow_profile;
  std::shared_ptr<const Medium> asymptotic_limit;

  const CoefficientField& c() const { return f.linearization; }
};

// Constant coefficients with logistic reaction c0*u*(1-u). Rejects a0 <= 0,
// c0 <= 0 and drifts strong enough to kill invasion (4*a0*c0 - q0^2 <= 0).
Medium make_homogeneous(double a0, double q0, double c0);

// Trigonometric-polynomial coefficients with common period L.
Medium make_periodic(const std::vector<HarmonicMode>& a_modes,
                     const std::vector<HarmonicMode>& q_modes,
                     const std::vector<HarmonicMode>& c_modes, double period, double a0,
                     double q0, double c0);

// Exact derivative of a harmonic sum, as harmonic modes again (phase shifted
// by pi/2). Lets callers build divergence-form periodic media via q = a'.
std::vector<HarmonicMode> derivative_modes(const std::vector<HarmonicMode>& modes, double period);

// a = 1, q = 0, c = b0 plus a cosine-tapered bump of the given amplitude
// supported exactly on [-radius, radius].
Medium make_compact_perturbation(double b0, double bump_amplitude, double bump_radius);

// Finite trigonometric sums with arbitrary (typically incommensurate)
// frequencies.
Medium make_almost_periodic(const std::vector<Mode>& a_modes, const std::vector<Mode>& q_modes,
                            const std::vector<Mode>& c_modes, double a0, double q0, double c0);

// limit medium plus transient_amplitude * exp(-decay_rate * |x|) added to c.
Medium make_asymptotic(Medium limit, double transient_amplitude, double decay_rate);

// Stationary ergodic divergence-form medium: i.i.d. uniform cell values for a
// and c on cells of the given correlation length, mollified with a C^1 kernel
// of width correlation_length/4; q = a' analytically, so the divergence-form
// flag is exact. Bit-reproducible from the seed.
Medium make_random_ergodic(std::uint64_t seed, double correlation_length,
                           std::pair<double, double> c_range, std::pair<double, double> a_range);

// c(x) = mu0(phi(x)) with phi(x) = (ln(1+|x|))^alpha; mu0 a periodic profile
// given as baseline + harmonic modes over profile_period. Stores the exact
// profile extremes as metadata.
Medium make_slowly_oscillating(double mu0_baseline, const std::vector<HarmonicMode>& mu0_modes,
                               double profile_period, double alpha);

// Same medium with c replaced by c + shift (reaction rebuilt around the
// shifted linearisation). Used by the eigenvalue-equivariance checks.
Medium with_shifted_reaction(const Medium& m, double shift);

struct HypothesisCheck {
  std::string name;
  bool pass = false;
  double margin = 0;     // smallest slack observed for the inequality checked
  double witness_x = 0;  // location of the worst case
  double witness_s = 0;  // reaction-variable coordinate when applicable
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  bool all_pass() const;
  const HypothesisCheck* find(const std::string& name) const;
};

// Samples the standing hypotheses on [x_lo, x_hi]: reaction vanishing at
// u = 0, 1 and positive between, the linear upper bound f <= c*u, uniformly
// positive diffusion, the monostability margin 4*c*a - q^2 > 0 for |x| > R0,
// and q == a' when the divergence-form flag is set. Failures are entries in
// the report, never exceptions.
ValidationReport validate(const Medium& m, double x_lo, double x_hi, int samples,
                          double hyp_radius = 0.0);

}  // namespace kpp::media
