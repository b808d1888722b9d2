#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kpp/media.hpp"
#include "kpp/pde.hpp"
#include "kpp/spectral.hpp"

// From eigenvalue engines to spreading speeds: tabulate the effective
// Hamiltonian H(p) (lower and upper rows H_under <= H_over), minimise
// H(-p)/p over p > 0, take Legendre conjugates for the WKB comparison, and
// extract empirical speeds from long-time PDE trajectories.
namespace kpp::speed {

using media::Medium;

// Which eigenvalue machinery evaluates H for a medium class.
enum class Engine {
  exact_constant,    // H(p) = a0 p^2 + q0 p + c0, closed form
  periodic_eigen,    // Perron root of the periodic discretisation of L_p
  window_const,      // constant-test-function bounds on a far window
  corrector,         // approximate corrector + Richardson extrapolation
  riccati,           // Lyapunov-exponent inversion (divergence form)
  profile_extremes,  // slow oscillation: p^2 + (min, max) of the profile
};

const char* to_string(Engine e);

// Engine a medium's class calls for; asymptotic media delegate to their
// limit medium's engine.
Engine default_engine(const Medium& m);

struct EngineConfig {
  int periodic_nodes = 256;
  std::vector<double> corrector_epsilons{0.2, 0.1, 0.05};
  double corrector_window = 60.0;  // aperiodic-media window length, centred at 0
  double corrector_dx = 0.02;
  double riccati_span = 2000.0;    // averaging span [0, riccati_span]
  double riccati_dx = 0.02;
  double window_R = 50.0;          // const-bound window start (past compact support)
  double window_width = 50.0;
  // cache: whole-line Dirichlet estimate for the riccati engine (p-independent)
  std::optional<double> riccati_gamma_bar;
};

struct HamiltonianTable {
  std::vector<double> p, H_under, H_over;
  Engine engine = Engine::exact_constant;
  std::string medium_id;
};

// [-4, 4] in steps of 0.125.
std::vector<double> default_p_grid();

// (H_under, H_over) at one momentum. For the riccati engine the config cache
// avoids recomputing the whole-line estimate at every p.
std::pair<double, double> hamiltonian_at(const Medium& m, double p, Engine e,
                                         const EngineConfig& cfg);

HamiltonianTable hamiltonian_table(const Medium& m, std::vector<double> p_grid, Engine e,
                                   EngineConfig cfg);

struct SpeedEstimate {
  double w = 0;          // min over p > 0 of H(-p)/p
  double p_star = 0;     // minimising momentum
  double H_at_pstar = 0;
  bool interior = false;  // argmin strictly inside the searched bracket
};

struct SpeedResult {
  SpeedEstimate under, over;  // from the H_under and H_over rows
  Engine engine = Engine::exact_constant;
  std::string medium_id;
};

// Coarse scan over the table's p < 0 points, then golden-section refinement
// of H_row(-p)/p on the monotone-cubic interpolant. Errors when the argmin
// sits at the table edge.
SpeedResult spreading_speed(const HamiltonianTable& table);

// Inserts engine-evaluated points on shrinking grids around the current
// argmin so the interpolation error does not limit the speed's accuracy.
HamiltonianTable refine_near_argmin(const Medium& m, HamiltonianTable table,
                                    const EngineConfig& cfg, int rounds = 3);

struct TheoreticalSpeeds {
  HamiltonianTable table;
  SpeedResult speeds;
};

// Default pipeline: default grid and engine, table, refinement, minimisation.
TheoreticalSpeeds theoretical_speeds(const Medium& m, EngineConfig cfg = {});

struct LegendreTable {
  std::vector<double> q, H_star;  // H*(q) = sup_p (p q - H_under(p))
};

// [-5, 5] in steps of 0.0625.
std::vector<double> default_q_grid();

// Discrete conjugate over the table's p-grid with golden refinement around
// the argmax; errors when the sup is attained at the table edge.
LegendreTable legendre_conjugate(const HamiltonianTable& table,
                                 const std::vector<double>& q_grid);

// The scaled-solution lower-bound profile x -> min{-t H*(-x/t), 0}.
std::vector<double> wkb_profile(const LegendreTable& leg, double t,
                                const std::vector<double>& xs);

struct WkbDeviation {
  double epsilon = 0;
  double snapshot_time = 0;   // trajectory time used for 1/epsilon
  double one_sided_sup = 0;   // sup over the x-grid of max(profile - Z_eps, 0)
  double min_u_interior = 0;  // min of u over {x <= 0.9 * w_under}, unscaled grid
};

struct WkbReport {
  double w_under = 0;
  std::vector<WkbDeviation> deviations;  // one per epsilon, as given
};

// Z_eps(1, x) = eps * ln u(1/eps, x/eps) (u floored at 1e-300) compared
// against the profile on nx points spanning [x_lo, x_hi].
WkbReport wkb_compare(const pde::Trajectory& traj, const LegendreTable& leg,
                      const std::vector<double>& epsilons, double x_lo, double x_hi, int nx,
                      double w_under);

struct LevelFit {
  double level = 0;
  int points = 0;                              // fit sample count on [T/2, T]
  double slope = 0, intercept = 0, rms = 0;    // X(t) ~ slope * t + intercept
  double slope_log = 0, log_coeff = 0, rms_log = 0;  // X(t) ~ w t - k ln t + b
};

struct FrontSpeedEstimate {
  double T_final = 0;
  double delta = 0;
  std::optional<double> w_star_emp;   // largest w with sup_{0<=x<=wT} |u-1| <= delta
  std::optional<double> w_upper_emp;  // smallest w with sup_{x>=wT} u <= delta
  bool saturated = false;             // u ~ 1 out to the right edge; s2 unsatisfiable
  std::vector<LevelFit> level_fits;
};

// Sup-criteria scan at the last snapshot time plus per-level front-slope fits
// on [T/2, T]. Unsatisfiable criteria come back empty, not as errors.
FrontSpeedEstimate empirical_speeds(const pde::Trajectory& traj,
                                    const std::vector<double>& w_grid, double delta);

struct SpeedReportConfig {
  double sandwich_tol_rel = 0.10;  // relative slack on both sandwich ends
  bool expect_gap = false;         // demand w_star_emp strictly below w_upper_emp
};

struct SpeedReport {
  std::string medium_id;
  Engine engine = Engine::exact_constant;
  double w_under = 0, w_over = 0;
  double p_star_under = 0, p_star_over = 0;
  FrontSpeedEstimate empirical;
  double tol_rel = 0.10;
  bool sandwich_pass = false;  // w_under (1 - tol) <= w_star_emp, w_upper_emp <= w_over (1 + tol)
  bool gap_expected = false;
  bool gap_observed = false;
  bool pass = false;
};

SpeedReport speed_report(const Medium& m, const TheoreticalSpeeds& th,
                         const FrontSpeedEstimate& emp, const SpeedReportConfig& rc);

}  // namespace kpp::speed
