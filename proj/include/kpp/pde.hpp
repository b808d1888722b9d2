#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "kpp/media.hpp"

// Long-time initial-value solver for u_t = a(x) u_xx + q(x) u_x + f(x, u) on
// a right-expanding domain: IMEX theta scheme (implicit transport, explicit
// reaction), central second differences, first-order upwind drift, Thomas
// solves. The left edge is fixed; its boundary value switches from 0 to 1
// once the solution saturates there, standing in for the invaded state.
namespace kpp::pde {

struct Grid1D {
  double x0 = 0;   // leftmost node
  double dx = 0.1;
  int n = 3;       // node count, >= 3
  double x(int i) const { return x0 + i * dx; }
  double x_right() const { return x(n - 1); }
};

struct State {
  double t = 0;
  Grid1D grid;
  std::vector<double> u;  // values in [0, 1], one per node
};

struct SolverConfig {
  double dt = 0.02;
  double theta = 0.5;               // implicitness of the transport part
  double right_margin = 30.0;       // watch zone ahead of the right edge
  int growth_chunk = 512;           // nodes appended per expansion
  double expansion_threshold = 1e-10;
  double min_right_extent = 0.0;    // pre-extend the domain to at least this x
  double left_switch_threshold = 0.999;
  double overshoot_tolerance = 1e-9;  // beyond this the step reports failure
  // Backward-Euler steps taken before switching to `theta`: the indicator
  // datum excites grid-frequency modes that a Crank-Nicolson weight only
  // marks time on (amplification -> -1 as dt/dx^2 grows); a handful of
  // L-stable steps removes them without affecting the global order.
  int startup_implicit_steps = 8;
  double max_nodes = 4.0e6;
  std::vector<double> snapshot_times;
  std::vector<double> levels{0.1, 0.3, 0.5, 0.7, 0.9};
};

// Indicator initial datum: `value` on [lo, hi], zero elsewhere.
struct InitialDatum {
  double lo = -1.0;
  double hi = 1.0;
  double value = 1.0;
};

struct Snapshot {
  double t = 0;
  Grid1D grid;
  std::vector<double> u;
};

// Front positions X_level(t): rightmost crossing of each tracked level,
// linearly interpolated; absent when the level is never attained.
struct FrontRecord {
  double t = 0;
  std::vector<std::optional<double>> x_at_level;
};

struct Trajectory {
  std::vector<double> levels;
  std::vector<Snapshot> snapshots;
  std::vector<FrontRecord> fronts;  // one per snapshot
};

// One IMEX step from the given state. Overshoot beyond the configured
// tolerance reports a numerical failure; smaller overshoot is clipped.
State step(const State& s, const media::Medium& m, const SolverConfig& cfg);

// Initial state covering [u0.lo - right_margin, u0.hi + right_margin]
// (possibly wider via min_right_extent); boundary nodes start at zero.
State make_initial_state(const InitialDatum& u0, double dx, const SolverConfig& cfg);

// Runs to t_final, recording snapshots and front positions at the configured
// snapshot times (the final time is always recorded).
Trajectory simulate(const media::Medium& m, const InitialDatum& u0, double t_final,
                    double dx, const SolverConfig& cfg);

// Rightmost crossing of `level` in a snapshot, if attained.
std::optional<double> front_position(const Snapshot& snap, double level);

struct OrderingReport {
  bool ordered = true;
  double worst_violation = 0;  // max over time/space of (lo - hi)
  double t_worst = 0;
  double x_worst = 0;
};

// Verifies lo <= hi pointwise across two trajectories on identical grids and
// snapshot times.
OrderingReport compare_solutions(const Trajectory& lo, const Trajectory& hi, double tol = 1e-10);

// CSV exports: snapshots as (t, x, u); fronts as (t, level, x_front).
void write_snapshots_csv(std::ostream& os, const Trajectory& traj);
void write_fronts_csv(std::ostream& os, const Trajectory& traj);

}  // namespace kpp::pde
