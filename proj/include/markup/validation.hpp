#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "markup/types.hpp"

namespace markup::validation {

// One reproducible Monte Carlo (or analytic) check. The pass rule is
// |statistic - target| <= tolerance; interval checks encode the interval
// as its midpoint and half-width.
struct CheckResult {
    std::string name;
    double statistic = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
};

CheckResult make_check(std::string name, double statistic, double target, double tolerance,
                       std::int64_t n, std::uint64_t seed);

// Martingale properties of the Wiener process on 0 <= s < t, reported as
// z-scores with |z| < 4 as the pass band:
//   (i)   E[W(t) - W(s)] = 0
//   (ii)  E[W(t)^2 - t] = E[W(s)^2 - s]
//   (iii) E[exp(sigma W(t) - sigma^2 t / 2)] = 1
std::vector<CheckResult> martingale_checks(double t, double s, std::int64_t n, double sigma,
                                           std::uint64_t seed);

// E[sup_{[0,t]} W^2] / E[W(t)^2] estimated on a fine grid; passes inside
// [1, 4 + 3 SE].
CheckResult doob_check(double t, std::int64_t n, int n_steps, std::uint64_t seed);

// eta P[sup_{[0,t]} |W| >= eta] <= E|W(t)| + 3 SE on driftless Brownian motion.
CheckResult maximal_inequality_check(double eta, double t, std::int64_t n, int n_steps,
                                     std::uint64_t seed);

// Sample mean and variance of the compound-Poisson total against
// nu t gamma and nu t (gamma^2 + sigma_j^2), within 3 SE.
std::vector<CheckResult> jump_moment_check(const JumpSpec& j, double t, std::int64_t n,
                                           std::uint64_t seed);

// Long-run ensemble moments of the diffusion (jumps off): terminal mean vs
// u and terminal variance vs both candidate stationary values sigma^2/(2 theta)
// and u sigma^2/(2 theta), plus corr(X(t), sum J) vs 0 in a jumps-on rerun.
std::vector<CheckResult> stationary_moment_check(const ModelParams& p, const SimConfig& cfg,
                                                 const JumpSpec& jumps_on,
                                                 double mean_tol = 0.01,
                                                 double var_tol = 0.002,
                                                 double corr_tol = 0.03);

// Ensemble mean of V(X) = (X - u)^2 from a far start must decrease across
// the first five mean-reversion times (within Monte Carlo error). The
// statistic is the largest observed increase between checkpoints.
CheckResult lyapunov_check(const ModelParams& p, const SimConfig& cfg, double x0_far);

// Named suites: "martingale", "doob", "jumps", "stationary", "lyapunov", "all".
std::vector<CheckResult> run_suite(const std::string& which, std::uint64_t seed);

}  // namespace markup::validation
