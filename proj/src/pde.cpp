#include "kpp/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kpp/errors.hpp"
#include "kpp/numerics.hpp"

namespace kpp::pde {

namespace {

// Workhorse shared by step() and simulate(): owns the coefficient samples so
// domain growth only evaluates the medium on the appended nodes.
class Integrator {
 public:
  Integrator(const media::Medium& m, const SolverConfig& cfg, State s)
      : medium_(m), cfg_(cfg), state_(std::move(s)) {
    require(state_.grid.n >= 3, errc::invalid_argument, "integrator: need at least 3 nodes");
    require(state_.u.size() == static_cast<std::size_t>(state_.grid.n), errc::invalid_argument,
            "integrator: state size mismatch");
    require(cfg_.dt > 0, errc::invalid_argument, "integrator: dt must be positive");
    require(cfg_.theta >= 0.0 && cfg_.theta <= 1.0, errc::invalid_argument,
            "integrator: theta outside [0, 1]");
    sample_coefficients(0);
    left_is_one_ = left_saturated();
    startup_until_ = cfg_.startup_implicit_steps;
  }

  const State& state() const { return state_; }

  void advance() {
    const int n = state_.grid.n;
    const double dx = state_.grid.dx;
    const double dt = cfg_.dt;
    auto& u = state_.u;

    if (!left_is_one_ && left_saturated()) {
      left_is_one_ = true;
      // Pinning the left node to 1 is a fresh discontinuity against the
      // standing boundary layer; damp it the same way as the initial datum.
      startup_until_ = advances_ + cfg_.startup_implicit_steps;
    }
    const double th = advances_ < startup_until_ ? 1.0 : cfg_.theta;
    const double bc_left = left_is_one_ ? 1.0 : 0.0;
    u[0] = bc_left;
    u[n - 1] = 0.0;

    rhs_.resize(n - 2);
    lo_.resize(n - 2);
    di_.resize(n - 2);
    up_.resize(n - 2);

    for (int i = 1; i + 1 < n; ++i) {
      // transport row: a u'' (central) + q u' (upwind)
      const double a = a_[i], q = q_[i];
      const double lower = a / (dx * dx) + std::max(-q, 0.0) / dx;
      const double upper = a / (dx * dx) + std::max(q, 0.0) / dx;
      const double diag = -2.0 * a / (dx * dx) - std::abs(q) / dx;
      const double lu = lower * u[i - 1] + diag * u[i] + upper * u[i + 1];
      double r = u[i] + dt * (1.0 - th) * lu + dt * medium_.f.eval(x_[i], u[i]);
      // implicit-side boundary contributions
      if (i == 1) r += th * dt * lower * bc_left;
      rhs_[i - 1] = r;
      lo_[i - 1] = -th * dt * lower;
      di_[i - 1] = 1.0 - th * dt * diag;
      up_[i - 1] = -th * dt * upper;
    }
    num::solve_tridiagonal(lo_, di_, up_, rhs_);

    double overshoot = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
      const double v = rhs_[i - 1];
      overshoot = std::max(overshoot, std::max(-v, v - 1.0));
    }
    require(overshoot <= cfg_.overshoot_tolerance, errc::numerical_failure,
            "integrator: range overshoot " + num::format_g17(overshoot) +
                " exceeds tolerance (unstable configuration)");
    for (int i = 1; i + 1 < n; ++i) u[i] = std::clamp(rhs_[i - 1], 0.0, 1.0);
    state_.t += dt;
    ++advances_;

    maybe_expand();
  }

 private:
  bool left_saturated() const {
    // probe a short stretch inside the left buffer, not the pinned node itself
    const int probe = std::max(
        1, std::min(state_.grid.n - 2,
                    static_cast<int>(cfg_.right_margin / (2.0 * state_.grid.dx))));
    double peak = 0.0;
    for (int i = 1; i <= probe; ++i) peak = std::max(peak, state_.u[i]);
    return peak > cfg_.left_switch_threshold;
  }

  void maybe_expand() {
    const int n = state_.grid.n;
    const int watch = std::min(n - 1, static_cast<int>(cfg_.right_margin / state_.grid.dx) + 1);
    double peak = 0.0;
    for (int i = n - 1 - watch; i < n; ++i) peak = std::max(peak, state_.u[i]);
    if (peak <= cfg_.expansion_threshold) return;
    require(n + cfg_.growth_chunk <= cfg_.max_nodes, errc::numerical_failure,
            "integrator: domain growth exceeds the configured memory cap");
    const int old_n = n;
    state_.grid.n += cfg_.growth_chunk;
    state_.u.resize(state_.grid.n, 0.0);
    sample_coefficients(old_n);
  }

  void sample_coefficients(int from) {
    const int n = state_.grid.n;
    x_.resize(n);
    a_.resize(n);
    q_.resize(n);
    for (int i = from; i < n; ++i) {
      x_[i] = state_.grid.x(i);
      a_[i] = medium_.a(x_[i]);
      q_[i] = medium_.q(x_[i]);
    }
  }

  const media::Medium& medium_;
  SolverConfig cfg_;
  State state_;
  long advances_ = 0;
  long startup_until_ = 0;
  bool left_is_one_ = false;
  std::vector<double> x_, a_, q_;
  std::vector<double> lo_, di_, up_, rhs_;
};

void check_stability(const media::Medium& m, const State& s, const SolverConfig& cfg) {
  double cmax = 0.0;
  for (int i = 0; i < s.grid.n; ++i) cmax = std::max(cmax, m.c()(s.grid.x(i)));
  require(cfg.dt * cmax < 1.0, errc::numerical_failure,
          "stability bound violated: dt * max reaction slope >= 1");
}

}  // namespace

State step(const State& s, const media::Medium& m, const SolverConfig& cfg) {
  check_stability(m, s, cfg);
  // The one-step API honours `theta` as given; startup smoothing is a
  // trajectory-level concern.
  SolverConfig one = cfg;
  one.startup_implicit_steps = 0;
  Integrator integ(m, one, s);
  integ.advance();
  return integ.state();
}

State make_initial_state(const InitialDatum& u0, double dx, const SolverConfig& cfg) {
  require(dx > 0, errc::invalid_argument, "make_initial_state: dx must be positive");
  require(u0.hi >= u0.lo, errc::invalid_argument, "make_initial_state: empty support");
  require(u0.value >= 0.0 && u0.value <= 1.0, errc::invalid_argument,
          "make_initial_state: initial value outside [0, 1]");
  const double x_left = u0.lo - cfg.right_margin;
  const double x_right = std::max(u0.hi + cfg.right_margin, cfg.min_right_extent);
  State s;
  s.t = 0;
  s.grid.x0 = x_left;
  s.grid.dx = dx;
  s.grid.n = std::max(3, static_cast<int>(std::ceil((x_right - x_left) / dx)) + 1);
  s.u.assign(s.grid.n, 0.0);
  for (int i = 1; i + 1 < s.grid.n; ++i) {
    const double x = s.grid.x(i);
    if (x >= u0.lo && x <= u0.hi) s.u[i] = u0.value;
  }
  return s;
}

Trajectory simulate(const media::Medium& m, const InitialDatum& u0, double t_final,
                    double dx, const SolverConfig& cfg) {
  require(t_final > 0, errc::invalid_argument, "simulate: t_final must be positive");
  State s0 = make_initial_state(u0, dx, cfg);
  check_stability(m, s0, cfg);
  Integrator integ(m, cfg, std::move(s0));

  std::vector<double> times = cfg.snapshot_times;
  times.push_back(t_final);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              times.end());

  Trajectory traj;
  traj.levels = cfg.levels;
  auto record = [&](const State& st) {
    Snapshot snap{st.t, st.grid, st.u};
    FrontRecord fr;
    fr.t = st.t;
    for (double lev : traj.levels) fr.x_at_level.push_back(front_position(snap, lev));
    traj.snapshots.push_back(std::move(snap));
    traj.fronts.push_back(std::move(fr));
  };

  const auto total_steps = static_cast<long>(std::llround(t_final / cfg.dt));
  require(total_steps >= 1, errc::invalid_argument, "simulate: t_final shorter than one step");
  std::size_t next_snap = 0;
  while (next_snap < times.size() && times[next_snap] <= 1e-12) {
    record(integ.state());
    ++next_snap;
  }
  for (long k = 1; k <= total_steps; ++k) {
    integ.advance();
    const double t = integ.state().t;
    while (next_snap < times.size() && times[next_snap] <= t + cfg.dt / 2.0) {
      record(integ.state());
      ++next_snap;
    }
  }
  if (traj.snapshots.empty() || traj.snapshots.back().t < integ.state().t - cfg.dt / 2.0)
    record(integ.state());
  return traj;
}

std::optional<double> front_position(const Snapshot& snap, double level) {
  const int n = snap.grid.n;
  for (int i = n - 1; i >= 0; --i) {
    if (snap.u[i] >= level) {
      if (i == n - 1) return snap.grid.x(i);
      const double u0 = snap.u[i], u1 = snap.u[i + 1];
      const double frac = (u0 - level) / (u0 - u1);  // u0 >= level > u1
      return snap.grid.x(i) + frac * snap.grid.dx;
    }
  }
  return std::nullopt;
}

OrderingReport compare_solutions(const Trajectory& lo, const Trajectory& hi, double tol) {
  require(lo.snapshots.size() == hi.snapshots.size(), errc::invalid_argument,
          "compare_solutions: trajectories have different snapshot counts");
  OrderingReport rep;
  for (std::size_t k = 0; k < lo.snapshots.size(); ++k) {
    const auto& A = lo.snapshots[k];
    const auto& B = hi.snapshots[k];
    require(std::abs(A.t - B.t) <= 1e-12 && A.grid.n == B.grid.n &&
                std::abs(A.grid.x0 - B.grid.x0) <= 1e-12 &&
                std::abs(A.grid.dx - B.grid.dx) <= 1e-15,
            errc::invalid_argument, "compare_solutions: mismatched grids or times");
    for (int i = 0; i < A.grid.n; ++i) {
      const double gap = A.u[i] - B.u[i];
      if (gap > rep.worst_violation) {
        rep.worst_violation = gap;
        rep.t_worst = A.t;
        rep.x_worst = A.grid.x(i);
      }
    }
  }
  rep.ordered = rep.worst_violation <= tol;
  return rep;
}

void write_snapshots_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x,u\n";
  for (const auto& snap : traj.snapshots)
    for (int i = 0; i < snap.grid.n; ++i)
      os << num::format_g17(snap.t) << ',' << num::format_g17(snap.grid.x(i)) << ','
         << num::format_g17(snap.u[i]) << '\n';
}

void write_fronts_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,level,x_front\n";
  for (const auto& fr : traj.fronts)
    for (std::size_t j = 0; j < fr.x_at_level.size(); ++j) {
      if (!fr.x_at_level[j]) continue;
      os << num::format_g17(fr.t) << ',' << num::format_g17(traj.levels[j]) << ','
         << num::format_g17(*fr.x_at_level[j]) << '\n';
    }
}

}  // namespace kpp::pde
