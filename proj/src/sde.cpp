#include "markup/sde.hpp"

#include <algorithm>
#include <cmath>

namespace markup::sde {

JumpDraw sample_jumps(const JumpSpec& j, double horizon, rng::Stream& stream) {
    if (!(horizon > 0.0)) throw InvalidParams("sample_jumps: horizon must be > 0");
    j.validate();
    JumpDraw draw;
    if (j.nu == 0.0) return draw;
    const std::int64_t count = stream.poisson(j.nu * horizon);
    draw.times.resize(count);
    draw.sizes.resize(count);
    for (auto& t : draw.times) t = horizon * stream.uniform();
    std::sort(draw.times.begin(), draw.times.end());
    for (auto& size : draw.sizes) {
        size = j.size_dist == JumpSizeDist::Constant ? j.gamma
                                                     : j.gamma + j.sigma_j * stream.normal();
    }
    return draw;
}

namespace {

// Shared Euler step state: jumps are drawn before any Brownian increment so
// the stream layout is identical for simulate_path and picard_iterates.
struct PathDraws {
    JumpDraw jumps;
    std::vector<double> dW;            // scaled by sqrt(h)
    std::vector<double> jump_on_step;  // summed sizes landing in (s_i, s_{i+1}]
};

void make_draws(PathDraws& draws, const ModelParams& p, const JumpSpec& j, const SimConfig& cfg,
                std::uint64_t path_index) {
    p.validate();
    cfg.validate();
    rng::Stream stream(cfg.seed, rng::kPathStreamBase + path_index);

    draws.jumps.times.clear();
    draws.jumps.sizes.clear();
    if (j.nu > 0.0) draws.jumps = sample_jumps(j, cfg.horizon, stream);

    const std::int64_t n = cfg.n();
    const double h = cfg.horizon / static_cast<double>(n);
    draws.dW.resize(n);
    const double sqrt_h = std::sqrt(h);
    for (auto& dw : draws.dW) dw = sqrt_h * stream.normal();

    draws.jump_on_step.assign(n, 0.0);
    for (std::size_t k = 0; k < draws.jumps.times.size(); ++k) {
        // First grid point at or after T_k; T_k in (s_i, s_{i+1}] lands on step i.
        auto step = static_cast<std::int64_t>(std::ceil(draws.jumps.times[k] / h)) - 1;
        step = std::clamp<std::int64_t>(step, 0, n - 1);
        draws.jump_on_step[static_cast<std::size_t>(step)] += draws.jumps.sizes[k];
    }
}

// Per-thread scratch so ensemble loops do not churn the allocator.
PathDraws& draws_scratch() {
    static thread_local PathDraws scratch;
    return scratch;
}

double euler_step(const ModelParams& p, const SimConfig& cfg, double x, double m, double h,
                  double dw, double jump) {
    const double diffusion_arg = x > 0.0 ? x : 0.0;  // drift keeps the raw state
    double next = x + drift(p, x, m) * h + p.sigma * std::sqrt(diffusion_arg) * dw + jump;
    if (cfg.negativity_scheme == NegativityScheme::Reflection) next = std::fabs(next);
    return next;
}

}  // namespace

Trajectory simulate_path(const ModelParams& p, const JumpSpec& j, const Policy& policy,
                         const SimConfig& cfg, std::uint64_t path_index) {
    PathDraws& draws = draws_scratch();
    make_draws(draws, p, j, cfg, path_index);
    const std::int64_t n = cfg.n();
    const double h = cfg.horizon / static_cast<double>(n);

    Trajectory traj;
    traj.times.resize(n + 1);
    traj.values.resize(n + 1);
    traj.jump_times = draws.jumps.times;
    traj.jump_sizes = draws.jumps.sizes;

    double x = cfg.x0;
    traj.times[0] = 0.0;
    traj.values[0] = x;
    for (std::int64_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) * h;
        x = euler_step(p, cfg, x, policy(s, x), h, draws.dW[i], draws.jump_on_step[i]);
        if (!std::isfinite(x)) throw NonFinitePath(path_index, i + 1);
        traj.times[i + 1] = static_cast<double>(i + 1) * h;
        traj.values[i + 1] = x;
    }
    return traj;
}

std::vector<Trajectory> simulate_ensemble(const ModelParams& p, const JumpSpec& j,
                                          const Policy& policy, const SimConfig& cfg) {
    cfg.validate();
    std::vector<Trajectory> paths(cfg.n_paths);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < cfg.n_paths; ++i) {
        try {
            paths[i] = simulate_path(p, j, policy, cfg, static_cast<std::uint64_t>(i));
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return paths;
}

std::vector<Trajectory> simulate_ensemble_serial(const ModelParams& p, const JumpSpec& j,
                                                 const Policy& policy, const SimConfig& cfg) {
    cfg.validate();
    std::vector<Trajectory> paths(cfg.n_paths);
    for (std::int64_t i = 0; i < cfg.n_paths; ++i)
        paths[i] = simulate_path(p, j, policy, cfg, static_cast<std::uint64_t>(i));
    return paths;
}

std::vector<PathStats> simulate_stats(const ModelParams& p, const JumpSpec& j,
                                      const Policy& policy, const SimConfig& cfg) {
    cfg.validate();
    std::vector<PathStats> stats(cfg.n_paths);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::int64_t path = 0; path < cfg.n_paths; ++path) {
        try {
            PathDraws& draws = draws_scratch();
            make_draws(draws, p, j, cfg, static_cast<std::uint64_t>(path));
            const std::int64_t n = cfg.n();
            const double h = cfg.horizon / static_cast<double>(n);
            auto cost = [&](double s, double x, double m) {
                const double dev = (1.0 + p.phi) * x + m;
                return std::exp(-p.rho * s) * (p.xi * dev * dev + 0.5 * p.c0 * m * m);
            };
            double x = cfg.x0;
            double integral = 0.0;
            double f_prev = cost(0.0, x, policy(0.0, x));
            for (std::int64_t i = 0; i < n; ++i) {
                const double s = static_cast<double>(i) * h;
                x = euler_step(p, cfg, x, policy(s, x), h, draws.dW[i], draws.jump_on_step[i]);
                if (!std::isfinite(x))
                    throw NonFinitePath(static_cast<std::uint64_t>(path), i + 1);
                const double s_next = static_cast<double>(i + 1) * h;
                const double f_next = cost(s_next, x, policy(s_next, x));
                integral += 0.5 * h * (f_prev + f_next);
                f_prev = f_next;
            }
            double jump_total = 0.0;
            for (double size : draws.jumps.sizes) jump_total += size;
            stats[path] = {x, jump_total, integral};
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return stats;
}

std::vector<double> picard_iterates(const ModelParams& p, const JumpSpec& j,
                                    const Policy& policy, const SimConfig& cfg, int k_max,
                                    double tol, std::vector<double>* final_iterate) {
    if (k_max < 2) throw InvalidParams("picard_iterates: k_max must be >= 2");
    PathDraws draws;
    make_draws(draws, p, j, cfg, 0);
    const std::int64_t n = cfg.n();
    const double h = cfg.horizon / static_cast<double>(n);

    // X^(0) is the constant initial path; each sweep applies the integral map
    // to the previous iterate on the shared draws. Left-point sums match the
    // Euler scheme, so the fixed point is the simulate_path trajectory.
    std::vector<double> prev(n + 1, cfg.x0), next(n + 1, cfg.x0);
    std::vector<double> distances;
    int rises = 0;
    for (int k = 0; k < k_max; ++k) {
        double cumulative = 0.0;
        double sup = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double s = static_cast<double>(i) * h;
            const double xi = prev[i];
            const double diffusion_arg = xi > 0.0 ? xi : 0.0;
            cumulative += drift(p, xi, policy(s, xi)) * h +
                          p.sigma * std::sqrt(diffusion_arg) * draws.dW[i] +
                          draws.jump_on_step[i];
            next[i + 1] = cfg.x0 + cumulative;
            sup = std::max(sup, std::fabs(next[i + 1] - prev[i + 1]));
        }
        distances.push_back(sup);
        if (distances.size() >= 2 && sup > distances[distances.size() - 2]) {
            if (++rises >= 3)
                throw NoContraction("picard distances increased for 3 consecutive iterations");
        } else {
            rises = 0;
        }
        std::swap(prev, next);
        if (sup < tol) break;
    }
    if (final_iterate) *final_iterate = prev;
    return distances;
}

PathDerivatives finite_difference_derivatives(const Trajectory& traj, std::size_t i) {
    const std::size_t n = traj.times.size();
    if (n < 3 || traj.values.size() != n)
        throw InvalidParams("finite_difference_derivatives needs a path with >= 3 points");
    if (i >= n) throw InvalidParams("finite_difference_derivatives: index out of range");

    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    const double h_lo = traj.times[c] - traj.times[c - 1];
    const double h_hi = traj.times[c + 1] - traj.times[c];

    PathDerivatives d;
    d.source = DerivativeSource::FiniteDifference;
    if (i == 0) {
        d.x_prime = (traj.values[1] - traj.values[0]) / (traj.times[1] - traj.times[0]);
    } else if (i == n - 1) {
        d.x_prime = (traj.values[n - 1] - traj.values[n - 2]) /
                    (traj.times[n - 1] - traj.times[n - 2]);
    } else {
        d.x_prime = (traj.values[c + 1] - traj.values[c - 1]) / (h_lo + h_hi);
    }
    d.x_double_prime = 2.0 *
                       (h_lo * traj.values[c + 1] - (h_lo + h_hi) * traj.values[c] +
                        h_hi * traj.values[c - 1]) /
                       (h_lo * h_hi * (h_lo + h_hi));
    return d;
}

std::vector<double> integrating_factor_residual(const Trajectory& traj, const ModelParams& p,
                                                const Policy& policy) {
    const std::size_t n = traj.times.size();
    if (n < 2 || traj.values.size() != n)
        throw InvalidParams("integrating_factor_residual: need a path with >= 2 points");
    for (double v : traj.values)
        if (!(v > 0.0)) throw NonPositiveState("path must be strictly positive");

    const double theta = p.theta_tilde;
    const double s0 = traj.times.front();

    // Jump sum per step, recovered from the stored jump record.
    std::vector<double> jump_on_step(n - 1, 0.0);
    for (std::size_t k = 0; k < traj.jump_times.size(); ++k) {
        std::size_t step = 0;
        while (step + 2 < n && traj.times[step + 1] < traj.jump_times[k]) ++step;
        jump_on_step[step] += traj.jump_sizes[k];
    }

    // ds integrand of d(e^{theta s} ln X):
    //   e^{theta s} [ theta (ln X - 1) + (theta u + m^2)/X - sigma^2/(2X) ].
    auto integrand = [&](std::size_t i) {
        const double s = traj.times[i];
        const double x = traj.values[i];
        const double m = policy(s, x);
        return std::exp(theta * (s - s0)) *
               (theta * (std::log(x) - 1.0) +
                (theta * p.u + m * m) / x - 0.5 * p.sigma * p.sigma / x);
    };

    std::vector<double> residual(n, 0.0);
    double integral = 0.0;  // trapezoid ds part + left-point dW part + jump part
    double f_prev = integrand(0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double s = traj.times[i];
        const double h = traj.times[i + 1] - s;
        const double x = traj.values[i];
        const double m = policy(s, x);

        const double f_next = integrand(i + 1);
        integral += 0.5 * h * (f_prev + f_next);
        f_prev = f_next;

        if (p.sigma > 0.0) {
            // Invert the Euler step to recover the Brownian increment.
            const double dw = (traj.values[i + 1] - x - drift(p, x, m) * h - jump_on_step[i]) /
                              (p.sigma * std::sqrt(x));
            integral += std::exp(theta * (s - s0)) * (p.sigma / std::sqrt(x)) * dw;
        }
        if (jump_on_step[i] != 0.0) {
            const double after = traj.values[i + 1];
            const double before = after - jump_on_step[i];
            if (!(before > 0.0))
                throw NonPositiveState("pre-jump state must be strictly positive");
            integral += std::exp(theta * (traj.times[i + 1] - s0)) *
                        (std::log(after) - std::log(before));
        }

        const double rhs = std::exp(-theta * (traj.times[i + 1] - s0)) *
                           (std::log(traj.values.front()) + integral);
        residual[i + 1] = std::log(traj.values[i + 1]) - rhs;
    }
    return residual;
}

}  // namespace markup::sde
