#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "markup/rng.hpp"
#include "markup/types.hpp"

namespace markup::sde {

// Control as a feedback rule m(s, x).
using Policy = std::function<double(double s, double x)>;

inline Policy zero_policy() {
    return [](double, double) { return 0.0; };
}

// Drift of the markup SDE: theta_tilde (u - x) + m^2.
inline double drift(const ModelParams& p, double x, double m) {
    return p.theta_tilde * (p.u - x) + m * m;
}

struct JumpDraw {
    std::vector<double> times;  // sorted ascending
    std::vector<double> sizes;
};

// Compound-Poisson draw on [0, horizon]: Poisson(nu * horizon) count,
// i.i.d. uniform arrival times (sorted), sizes from the size distribution.
JumpDraw sample_jumps(const JumpSpec& j, double horizon, rng::Stream& stream);

// Euler-Maruyama path on the uniform grid, bit-reproducible from
// (cfg.seed, path_index). Jumps are applied at the first grid point at or
// after their arrival time. Throws NonFinitePath if the state blows up.
Trajectory simulate_path(const ModelParams& p, const JumpSpec& j, const Policy& policy,
                         const SimConfig& cfg, std::uint64_t path_index);

// Ensemble with one independent stream per path index. The parallel kernel
// and the serial reference produce byte-identical output for any thread
// count; the serial version exists as the comparison baseline.
std::vector<Trajectory> simulate_ensemble(const ModelParams& p, const JumpSpec& j,
                                          const Policy& policy, const SimConfig& cfg);
std::vector<Trajectory> simulate_ensemble_serial(const ModelParams& p, const JumpSpec& j,
                                                 const Policy& policy, const SimConfig& cfg);

// Streaming per-path reductions for large ensembles (O(n_paths) memory):
// terminal state, total jump contribution, and the trapezoidal running-cost
// integral int e^{-rho s} [xi (x+m+phi x)^2 + c0 m^2/2] ds along the path.
struct PathStats {
    double terminal = 0.0;
    double jump_total = 0.0;
    double discounted_cost = 0.0;
};
std::vector<PathStats> simulate_stats(const ModelParams& p, const JumpSpec& j,
                                      const Policy& policy, const SimConfig& cfg);

// Distances d_k = sup_grid |X^(k+1) - X^(k)| of the Picard fixed-point
// recursion, evaluated on one shared set of Brownian and jump draws. Stops early once d_k < tol; throws NoContraction when the
// distances grow for three consecutive iterations. The last iterate can be
// requested for comparison against simulate_path on the same draws.
std::vector<double> picard_iterates(const ModelParams& p, const JumpSpec& j,
                                    const Policy& policy, const SimConfig& cfg, int k_max,
                                    double tol, std::vector<double>* final_iterate = nullptr);

// Central-difference X' and X'' at grid index i of a simulated path
// (one-sided first derivative at the ends).
PathDerivatives finite_difference_derivatives(const Trajectory& traj, std::size_t i);

// Self-consistency residual of the exponential-integrating-factor
// representation of log X on a strictly positive path: returns
// log X(s_n) minus the discretized right-hand side (trapezoid for ds
// integrals, left-point sums for dW integrals, per-jump log increments).
// Throws NonPositiveState if the path touches zero or below.
std::vector<double> integrating_factor_residual(const Trajectory& traj, const ModelParams& p,
                                                const Policy& policy);

}  // namespace markup::sde
