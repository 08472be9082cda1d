#include "markup/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "markup/stats.hpp"

namespace markup::estimation {

namespace {

void check_series(std::span<const SeriesObservation> series, std::size_t min_size,
                  const char* who) {
    if (series.size() < min_size)
        throw InsufficientData(std::string(who) + " needs at least " + std::to_string(min_size) +
                               " observations");
    for (std::size_t i = 1; i < series.size(); ++i)
        if (!(series[i].s > series[i - 1].s))
            throw ZeroGap(std::string(who) + ": timestamps must be strictly increasing");
}

}  // namespace

EstimateValue estimate_u_hat(std::span<const SeriesObservation> series, double theta_tilde) {
    check_series(series, 2, "estimate_u_hat");
    if (!(theta_tilde > 0.0)) throw InvalidParams("estimate_u_hat needs theta_tilde > 0");

    std::vector<double> terms(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        const double gap = series[i + 1].s - series[i].s;
        terms[i] = series[i].x + (series[i + 1].x - series[i].x) / (theta_tilde * gap);
    }
    EstimateValue out;
    out.value = stats::mean(terms);
    out.std_error = terms.size() > 1
                        ? stats::sample_sd(terms) / std::sqrt(static_cast<double>(terms.size()))
                        : 0.0;
    return out;
}

ThetaSigmaFit estimate_theta_sigma(std::span<const SeriesObservation> series, double dt) {
    check_series(series, 30, "estimate_theta_sigma");
    if (!(dt > 0.0)) throw InvalidParams("estimate_theta_sigma needs dt > 0");
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double gap = series[i].s - series[i - 1].s;
        if (std::fabs(gap - dt) > 1e-9 * std::max(1.0, dt))
            throw InvalidParams("estimate_theta_sigma requires a uniform grid with spacing dt");
    }

    // OLS of dX_i = alpha + beta X_i + eps, with theta = -beta/dt and
    // u* = -alpha/beta.
    const std::size_t n = series.size() - 1;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = series[i].x;
        const double y = series[i + 1].x - series[i].x;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nd = static_cast<double>(n);
    const double den = sxx - sx * sx / nd;
    if (!(std::fabs(den) > 0.0))
        throw InsufficientData("estimate_theta_sigma: regressor has zero variance");
    const double beta = (sxy - sx * sy / nd) / den;
    const double alpha = (sy - beta * sx) / nd;

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = (series[i + 1].x - series[i].x) - (alpha + beta * series[i].x);
        rss += resid * resid;
    }
    const double resid_var = rss / (nd - 2.0);
    const double se_beta = std::sqrt(resid_var / den);
    const double se_alpha = std::sqrt(resid_var * (1.0 / nd + sx * sx / (nd * nd * den)));

    ThetaSigmaFit fit;
    fit.theta.value = -beta / dt;
    fit.theta.std_error = se_beta / dt;
    if (beta != 0.0) {
        fit.u_star.value = -alpha / beta;
        // Delta method on u* = -alpha/beta with Cov(alpha,beta) = -xbar Var(beta).
        const double xbar = sx / nd;
        const double var_u = (se_alpha * se_alpha +
                              fit.u_star.value * fit.u_star.value * se_beta * se_beta -
                              2.0 * fit.u_star.value * xbar * se_beta * se_beta) /
                             (beta * beta);
        fit.u_star.std_error = std::sqrt(std::max(0.0, var_u));
    }

    // sigma^2 from the conditional-variance scaling Var(dX | X) = sigma^2 X dt.
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(series[i].x > 0.0))
            throw NonPositiveState("estimate_theta_sigma: sigma step needs positive states");
        const double resid = (series[i + 1].x - series[i].x) - (alpha + beta * series[i].x);
        scaled[i] = resid * resid / (series[i].x * dt);
    }
    const double sigma_sq = stats::mean(scaled);
    fit.sigma.value = std::sqrt(std::max(0.0, sigma_sq));
    const double se_sigma_sq = stats::sample_sd(scaled) / std::sqrt(nd);
    fit.sigma.std_error = fit.sigma.value > 0.0 ? se_sigma_sq / (2.0 * fit.sigma.value) : 0.0;
    return fit;
}

JumpMomentEstimates estimate_jump_moments(std::span<const double> jump_times,
                                          std::span<const double> jump_sizes, double horizon) {
    if (!(horizon > 0.0)) throw InvalidParams("estimate_jump_moments needs horizon > 0");
    if (jump_times.size() != jump_sizes.size())
        throw InvalidParams("jump times and sizes must have matching length");

    JumpMomentEstimates out;
    const auto n = static_cast<double>(jump_sizes.size());
    out.nu.value = n / horizon;
    out.nu.std_error = std::sqrt(n) / horizon;
    if (jump_sizes.empty()) return out;

    EstimateValue gamma;
    gamma.value = stats::mean(jump_sizes);
    double sd = 0.0;
    if (jump_sizes.size() > 1) {
        sd = stats::sample_sd(jump_sizes);
        gamma.std_error = sd / std::sqrt(n);
        EstimateValue sigma_j;
        sigma_j.value = sd;
        sigma_j.std_error = sd / std::sqrt(2.0 * (n - 1.0));
        out.sigma_j = sigma_j;
    }
    out.gamma = gamma;
    out.implied_total_mean = out.nu.value * horizon * gamma.value;
    out.implied_total_variance = out.nu.value * horizon * (gamma.value * gamma.value + sd * sd);
    return out;
}

std::vector<std::size_t> detect_jumps(std::span<const SeriesObservation> series, double k) {
    check_series(series, 30, "detect_jumps");
    if (!(k > 0.0)) throw InvalidParams("detect_jumps needs k > 0");

    const std::size_t n = series.size() - 1;
    std::vector<double> inc(n), abs_inc(n);
    for (std::size_t i = 0; i < n; ++i) {
        inc[i] = series[i + 1].x - series[i].x;
        abs_inc[i] = std::fabs(inc[i]);
    }

    constexpr std::size_t kWindow = 21;
    std::vector<std::size_t> flagged;
    std::vector<double> window;
    window.reserve(kWindow);
    for (std::size_t i = 0; i < n; ++i) {
        // Centered window, clamped at the edges.
        const std::size_t half = kWindow / 2;
        const std::size_t lo = i > half ? i - half : 0;
        const std::size_t hi = std::min(n, lo + kWindow);
        const std::size_t lo2 = hi > kWindow ? hi - kWindow : 0;

        window.assign(inc.begin() + static_cast<std::ptrdiff_t>(lo2),
                      inc.begin() + static_cast<std::ptrdiff_t>(hi));
        std::sort(window.begin(), window.end());
        const std::size_t len = window.size();
        const double med = len % 2 == 1 ? window[len / 2]
                                        : 0.5 * (window[len / 2 - 1] + window[len / 2]);
        for (auto& w : window) w = std::fabs(w - med);
        std::sort(window.begin(), window.end());
        const double mad = len % 2 == 1 ? window[len / 2]
                                        : 0.5 * (window[len / 2 - 1] + window[len / 2]);
        const double threshold = k * 1.4826 * mad;
        if (abs_inc[i] > threshold && abs_inc[i] > 0.0) flagged.push_back(i);
    }
    return flagged;
}

EstimateReport estimate_all(std::span<const SeriesObservation> series,
                            std::optional<double> known_theta, double jump_threshold_k) {
    EstimateReport report;
    report.n_obs = static_cast<std::int64_t>(series.size());

    double theta;
    if (known_theta) {
        theta = *known_theta;
        if (!(theta > 0.0)) throw InvalidParams("known theta_tilde must be > 0");
    } else {
        const double dt = series.size() >= 2 ? series[1].s - series[0].s : 0.0;
        const ThetaSigmaFit fit = estimate_theta_sigma(series, dt);
        report.theta_hat = fit.theta;
        report.sigma_hat = fit.sigma;
        theta = fit.theta.value;
        if (!(theta > 0.0))
            throw InvalidParams("fitted theta_tilde is not positive; supply one explicitly");
    }
    report.u_hat = estimate_u_hat(series, theta);

    if (series.size() >= 31) {
        const auto flagged = detect_jumps(series, jump_threshold_k);
        std::vector<double> jt, js;
        for (std::size_t i : flagged) {
            jt.push_back(series[i + 1].s);
            js.push_back(series[i + 1].x - series[i].x);
        }
        const double horizon = series.back().s - series.front().s;
        const auto jm = estimate_jump_moments(jt, js, horizon);
        report.nu_hat = jm.nu;
        report.gamma_hat = jm.gamma;
        report.sigma_j_hat = jm.sigma_j;
    }
    return report;
}

}  // namespace markup::estimation
