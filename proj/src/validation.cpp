#include "markup/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "markup/rng.hpp"
#include "markup/sde.hpp"
#include "markup/stats.hpp"

namespace markup::validation {

namespace {

struct Moments {
    double mean = 0.0;
    double se = 0.0;
    double var = 0.0;
};

Moments moments(std::span<const double> xs) {
    Moments m;
    m.mean = stats::mean(xs);
    m.var = stats::sample_variance(xs);
    m.se = std::sqrt(m.var / static_cast<double>(xs.size()));
    return m;
}

CheckResult interval_check(std::string name, double statistic, double lo, double hi,
                           std::int64_t n, std::uint64_t seed) {
    return make_check(std::move(name), statistic, 0.5 * (lo + hi), 0.5 * (hi - lo), n, seed);
}

}  // namespace

CheckResult make_check(std::string name, double statistic, double target, double tolerance,
                       std::int64_t n, std::uint64_t seed) {
    CheckResult r;
    r.name = std::move(name);
    r.statistic = statistic;
    r.target = target;
    r.tolerance = tolerance;
    r.passed = std::fabs(statistic - target) <= tolerance;
    r.n_samples = n;
    r.seed = seed;
    return r;
}

std::vector<CheckResult> martingale_checks(double t, double s, std::int64_t n, double sigma,
                                           std::uint64_t seed) {
    if (!(s >= 0.0 && s < t)) throw InvalidParams("martingale_checks needs 0 <= s < t");
    if (n < 10000) throw InvalidParams("martingale_checks needs n >= 1e4");

    rng::Stream stream(seed, rng::kCheckStreamBase + 1);
    std::vector<double> inc(n), quad(n), expm(n);
    for (std::int64_t i = 0; i < n; ++i) {
        const double ws = std::sqrt(s) * stream.normal();
        const double wt = ws + std::sqrt(t - s) * stream.normal();
        inc[i] = wt - ws;
        quad[i] = (wt * wt - t) - (ws * ws - s);
        expm[i] = std::exp(sigma * wt - 0.5 * sigma * sigma * t);
    }

    std::vector<CheckResult> out;
    const auto z_of = [&](std::span<const double> xs) {
        const Moments m = moments(xs);
        return m.se > 0.0 ? m.mean / m.se : 0.0;
    };
    out.push_back(make_check("martingale.increment_z", z_of(inc), 0.0, 4.0, n, seed));
    out.push_back(make_check("martingale.quadratic_z", z_of(quad), 0.0, 4.0, n, seed));
    const Moments me = moments(expm);
    const double z3 = me.se > 0.0 ? (me.mean - 1.0) / me.se : 0.0;
    out.push_back(make_check("martingale.exponential_z", z3, 0.0, 4.0, n, seed));
    return out;
}

CheckResult doob_check(double t, std::int64_t n, int n_steps, std::uint64_t seed) {
    if (n < 10000) throw InvalidParams("doob_check needs n >= 1e4");
    rng::Stream stream(seed, rng::kCheckStreamBase + 2);
    const double h = t / n_steps;
    const double sqrt_h = std::sqrt(h);

    std::vector<double> sup_sq(n), terminal_sq(n);
    for (std::int64_t i = 0; i < n; ++i) {
        double w = 0.0, peak = 0.0;
        for (int k = 0; k < n_steps; ++k) {
            w += sqrt_h * stream.normal();
            peak = std::max(peak, w * w);
        }
        sup_sq[i] = peak;
        terminal_sq[i] = w * w;
    }
    const Moments num = moments(sup_sq);
    const Moments den = moments(terminal_sq);
    const double ratio = num.mean / den.mean;
    // Delta-method standard error of the ratio of means.
    double cov = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        cov += (sup_sq[i] - num.mean) * (terminal_sq[i] - den.mean);
    cov /= static_cast<double>(n - 1) * static_cast<double>(n);
    const double se = std::fabs(ratio) *
                      std::sqrt(std::max(0.0, num.se * num.se / (num.mean * num.mean) +
                                                  den.se * den.se / (den.mean * den.mean) -
                                                  2.0 * cov / (num.mean * den.mean)));
    return interval_check("doob.sup_ratio", ratio, 1.0, 4.0 + 3.0 * se, n, seed);
}

CheckResult maximal_inequality_check(double eta, double t, std::int64_t n, int n_steps,
                                     std::uint64_t seed) {
    if (!(eta > 0.0)) throw InvalidParams("maximal_inequality_check needs eta > 0");
    rng::Stream stream(seed, rng::kCheckStreamBase + 3);
    const double h = t / n_steps;
    const double sqrt_h = std::sqrt(h);

    std::int64_t exceed = 0;
    std::vector<double> abs_wt(n);
    for (std::int64_t i = 0; i < n; ++i) {
        double w = 0.0;
        bool hit = false;
        for (int k = 0; k < n_steps; ++k) {
            w += sqrt_h * stream.normal();
            hit = hit || std::fabs(w) >= eta;
        }
        exceed += hit ? 1 : 0;
        abs_wt[i] = std::fabs(w);
    }
    const double p_hat = static_cast<double>(exceed) / static_cast<double>(n);
    const double lhs = eta * p_hat;
    const Moments m = moments(abs_wt);
    const double bound = m.mean + 3.0 * m.se;
    return interval_check("maximal.eta_tail", lhs, 0.0, bound, n, seed);
}

std::vector<CheckResult> jump_moment_check(const JumpSpec& j, double t, std::int64_t n,
                                           std::uint64_t seed) {
    if (n < 10000) throw InvalidParams("jump_moment_check needs n >= 1e4");
    j.validate();

    std::vector<double> totals(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        rng::Stream stream(seed, rng::kCheckStreamBase + 0x4000 + static_cast<std::uint64_t>(i));
        const auto draw = sde::sample_jumps(j, t, stream);
        double sum = 0.0;
        for (double size : draw.sizes) sum += size;
        totals[i] = sum;
    }

    const double target_mean = j.nu * t * j.gamma;
    const double target_var = j.nu * t * (j.gamma * j.gamma + j.sigma_j * j.sigma_j);
    const Moments m = moments(totals);

    // SE of the sample variance via the fourth central moment.
    double m4 = 0.0;
    for (double v : totals) m4 += std::pow(v - m.mean, 4);
    m4 /= static_cast<double>(n);
    const double se_var =
        std::sqrt(std::max(0.0, m4 - m.var * m.var) / static_cast<double>(n));

    std::vector<CheckResult> out;
    out.push_back(make_check("jumps.total_mean", m.mean, target_mean,
                             std::max(3.0 * m.se, 1e-12), n, seed));
    out.push_back(make_check("jumps.total_variance", m.var, target_var,
                             std::max(3.0 * se_var, 1e-12), n, seed));
    return out;
}

std::vector<CheckResult> stationary_moment_check(const ModelParams& p, const SimConfig& cfg,
                                                 const JumpSpec& jumps_on, double mean_tol,
                                                 double var_tol, double corr_tol) {
    p.validate();
    if (!(cfg.horizon * p.theta_tilde >= 20.0))
        throw InvalidParams("stationary_moment_check needs horizon >= 20 / theta_tilde");

    const JumpSpec no_jumps{};
    const auto stats_off = sde::simulate_stats(p, no_jumps, sde::zero_policy(), cfg);
    std::vector<double> terminal(stats_off.size());
    for (std::size_t i = 0; i < stats_off.size(); ++i) terminal[i] = stats_off[i].terminal;
    const Moments m = moments(terminal);

    const double var_candidate_a = p.sigma * p.sigma / (2.0 * p.theta_tilde);
    const double var_candidate_b = p.u * p.sigma * p.sigma / (2.0 * p.theta_tilde);

    std::vector<CheckResult> out;
    out.push_back(make_check("stationary.terminal_mean", m.mean, p.u, mean_tol,
                             cfg.n_paths, cfg.seed));
    out.push_back(make_check("stationary.terminal_variance_vs_sigma2_2theta", m.var,
                             var_candidate_a, var_tol, cfg.n_paths, cfg.seed));
    out.push_back(make_check("stationary.terminal_variance_vs_u_sigma2_2theta", m.var,
                             var_candidate_b, var_tol, cfg.n_paths, cfg.seed));

    // Jumps-on rerun: terminal state vs cumulative jump total.
    const auto stats_on = sde::simulate_stats(p, jumps_on, sde::zero_policy(), cfg);
    std::vector<double> xt(stats_on.size()), js(stats_on.size());
    for (std::size_t i = 0; i < stats_on.size(); ++i) {
        xt[i] = stats_on[i].terminal;
        js[i] = stats_on[i].jump_total;
    }
    const double mx = stats::mean(xt), mj = stats::mean(js);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xt.size(); ++i) {
        sxy += (xt[i] - mx) * (js[i] - mj);
        sxx += (xt[i] - mx) * (xt[i] - mx);
        syy += (js[i] - mj) * (js[i] - mj);
    }
    const double corr = sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    out.push_back(make_check("stationary.jump_correlation", corr, 0.0, corr_tol,
                             cfg.n_paths, cfg.seed));
    return out;
}

CheckResult lyapunov_check(const ModelParams& p, const SimConfig& cfg, double x0_far) {
    p.validate();
    const double stationary_sd =
        std::sqrt(p.u * p.sigma * p.sigma / (2.0 * p.theta_tilde));
    if (!(std::fabs(x0_far - p.u) >= 5.0 * stationary_sd))
        throw InvalidParams("lyapunov_check needs |x0 - u| >= 5 stationary sd");

    SimConfig run = cfg;
    run.x0 = x0_far;
    run.horizon = 5.0 / p.theta_tilde;
    const auto paths = sde::simulate_ensemble(p, JumpSpec{}, sde::zero_policy(), run);

    // E[V] at each mean-reversion time; statistic = worst change between
    // consecutive checkpoints after subtracting a 2 SE noise allowance.
    const std::int64_t n_steps = run.n();
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<double> v(paths.size());
    double prev_mean = 0.0, prev_se = 0.0;
    for (int k = 0; k <= 5; ++k) {
        const auto idx = static_cast<std::size_t>(std::llround(
            static_cast<double>(k) / 5.0 * static_cast<double>(n_steps)));
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const double dev = paths[i].values[idx] - p.u;
            v[i] = dev * dev;
        }
        const Moments m = moments(v);
        if (k > 0) worst = std::max(worst, (m.mean - prev_mean) -
                                               2.0 * std::hypot(m.se, prev_se));
        prev_mean = m.mean;
        prev_se = m.se;
    }
    CheckResult r = make_check("lyapunov.descent", worst, 0.0, 0.0, cfg.n_paths, cfg.seed);
    r.passed = worst < 0.0;
    return r;
}

std::vector<CheckResult> run_suite(const std::string& which, std::uint64_t seed) {
    std::vector<CheckResult> out;
    const bool all = which == "all";

    if (all || which == "martingale") {
        auto checks = martingale_checks(1.0, 0.25, 100000, 0.5, seed);
        out.insert(out.end(), checks.begin(), checks.end());
    }
    if (all || which == "doob") {
        out.push_back(doob_check(1.0, 100000, 1000, seed));
        out.push_back(maximal_inequality_check(1.0, 1.0, 100000, 1000, seed));
    }
    if (all || which == "jumps") {
        JumpSpec j;
        j.nu = 2.0;
        j.gamma = 0.3;
        j.sigma_j = 0.1;
        auto checks = jump_moment_check(j, 5.0, 100000, seed);
        out.insert(out.end(), checks.begin(), checks.end());
    }
    if (all || which == "stationary") {
        ModelParams p;
        p.theta_tilde = 1.0;
        p.u = 1.0;
        p.sigma = 0.2;
        SimConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 20.0;
        cfg.n_paths = 10000;
        cfg.seed = seed;
        cfg.x0 = 1.0;
        JumpSpec jumps_on;
        jumps_on.nu = 0.1;
        jumps_on.gamma = 0.02;
        jumps_on.sigma_j = 0.01;
        auto checks = stationary_moment_check(p, cfg, jumps_on);
        out.insert(out.end(), checks.begin(), checks.end());
    }
    if (all || which == "lyapunov") {
        ModelParams p;
        p.theta_tilde = 1.0;
        p.u = 1.0;
        p.sigma = 0.1;
        SimConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 5.0;
        cfg.n_paths = 4000;
        cfg.seed = seed;
        out.push_back(lyapunov_check(p, cfg, 3.0));
    }
    if (out.empty()) throw InvalidParams("unknown validation suite: " + which);
    return out;
}

}  // namespace markup::validation
