#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "markup/errors.hpp"

namespace markup {

// Parameters of the markup SDE and of the flow-cost objective:
//   dX = { theta_tilde (u - X) + m^2 } ds + sigma sqrt(X) dW + jumps,
//   running cost e^{-rho s} [ xi (X + m + phi X)^2 + c0 m^2 / 2 ].
struct ModelParams {
    double theta_tilde = 1.0;  // mean-reversion rate, 1/time
    double u = 1.0;            // long-term mean
    double sigma = 0.0;        // diffusion coefficient
    double rho = 0.0;          // discount rate
    double xi = 1.0;           // flow-cost weight
    double phi = 0.0;          // aggregate-coupling coefficient
    double c0 = 0.0;           // control-cost coefficient

    void validate() const {
        if (!(theta_tilde > 0.0) || !std::isfinite(theta_tilde))
            throw InvalidParams("theta_tilde must be finite and > 0");
        if (u < 0.0 || !std::isfinite(u))
            throw InvalidParams("u must be finite and >= 0");
        if (sigma < 0.0 || !std::isfinite(sigma))
            throw InvalidParams("sigma must be finite and >= 0");
        if (rho < 0.0 || !std::isfinite(rho))
            throw InvalidParams("rho must be finite and >= 0");
        if (c0 < 0.0 || !std::isfinite(c0))
            throw InvalidParams("c0 must be finite and >= 0");
        if (!std::isfinite(xi) || !std::isfinite(phi))
            throw InvalidParams("xi and phi must be finite");
    }
};

enum class JumpSizeDist { Normal, Constant };

// Compound-Poisson jump component: arrival intensity nu, size mean gamma,
// size standard deviation sigma_j.
struct JumpSpec {
    double nu = 0.0;
    double gamma = 0.0;
    double sigma_j = 0.0;
    JumpSizeDist size_dist = JumpSizeDist::Normal;

    void validate() const {
        if (nu < 0.0 || !std::isfinite(nu))
            throw InvalidParams("nu must be finite and >= 0");
        if (sigma_j < 0.0 || !std::isfinite(sigma_j))
            throw InvalidParams("sigma_j must be finite and >= 0");
        if (!std::isfinite(gamma)) throw InvalidParams("gamma must be finite");
        if (size_dist == JumpSizeDist::Constant && sigma_j != 0.0)
            throw InvalidParams("Constant jump sizes require sigma_j = 0");
    }
};

enum class NegativityScheme { FullTruncation, Reflection };

struct SimConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    std::int64_t n_paths = 1;
    std::uint64_t seed = 0;
    double x0 = 1.0;
    NegativityScheme negativity_scheme = NegativityScheme::FullTruncation;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParams("dt must be > 0");
        if (!(horizon >= dt) || !std::isfinite(horizon))
            throw InvalidParams("horizon must be >= dt");
        if (n_paths < 1) throw InvalidParams("n_paths must be >= 1");
        if (!std::isfinite(x0)) throw InvalidParams("x0 must be finite");
    }

    // Number of Euler steps; the grid uses n() equal steps of horizon/n().
    std::int64_t n() const {
        auto steps = static_cast<std::int64_t>(std::llround(horizon / dt));
        return steps < 1 ? 1 : steps;
    }
};

// One simulated path with its jump record.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> jump_times;
    std::vector<double> jump_sizes;
};

// The Lagrange-multiplier path enters the control law only through the
// increment dlambda(s) and the rate dlambda/ds. Zero is the regime in which
// the closed form is derived; Constant and Tabulated exist for calibration.
struct LambdaSpec {
    enum class Mode { Zero, Constant, Tabulated };

    Mode mode = Mode::Zero;
    double dlambda = 0.0;
    double dlambda_ds = 0.0;
    std::vector<double> grid_s;
    std::vector<double> grid_dlambda;
    std::vector<double> grid_dlambda_ds;

    static LambdaSpec zero() { return {}; }

    static LambdaSpec constant(double dl, double dlds) {
        LambdaSpec spec;
        spec.mode = Mode::Constant;
        spec.dlambda = dl;
        spec.dlambda_ds = dlds;
        return spec;
    }

    static LambdaSpec tabulated(std::vector<double> s, std::vector<double> dl,
                                std::vector<double> dlds) {
        if (s.size() < 2 || s.size() != dl.size() || s.size() != dlds.size())
            throw InvalidParams("tabulated lambda needs matching grids of size >= 2");
        for (std::size_t i = 1; i < s.size(); ++i)
            if (!(s[i] > s[i - 1]))
                throw InvalidParams("tabulated lambda grid must be strictly increasing");
        LambdaSpec spec;
        spec.mode = Mode::Tabulated;
        spec.grid_s = std::move(s);
        spec.grid_dlambda = std::move(dl);
        spec.grid_dlambda_ds = std::move(dlds);
        return spec;
    }

    bool is_zero() const { return mode == Mode::Zero; }

    // (dlambda, dlambda/ds) at time s; linear interpolation with flat
    // extrapolation in Tabulated mode.
    std::pair<double, double> at(double s) const {
        switch (mode) {
            case Mode::Zero: return {0.0, 0.0};
            case Mode::Constant: return {dlambda, dlambda_ds};
            case Mode::Tabulated: break;
        }
        if (s <= grid_s.front()) return {grid_dlambda.front(), grid_dlambda_ds.front()};
        if (s >= grid_s.back()) return {grid_dlambda.back(), grid_dlambda_ds.back()};
        std::size_t hi = 1;
        while (grid_s[hi] < s) ++hi;
        const double w = (s - grid_s[hi - 1]) / (grid_s[hi] - grid_s[hi - 1]);
        return {grid_dlambda[hi - 1] + w * (grid_dlambda[hi] - grid_dlambda[hi - 1]),
                grid_dlambda_ds[hi - 1] + w * (grid_dlambda_ds[hi] - grid_dlambda_ds[hi - 1])};
    }
};

enum class DerivativeSource { DriftAnalytic, FiniteDifference };

// Off-path values of X' and X'' used by the D1/D2 terms.
struct PathDerivatives {
    double x_prime = 0.0;
    double x_double_prime = 0.0;
    DerivativeSource source = DerivativeSource::DriftAnalytic;
};

// X' = drift (the conditional mean velocity), X'' = -theta_tilde X'.
inline PathDerivatives drift_derivatives(const ModelParams& p, double x, double m = 0.0) {
    PathDerivatives d;
    d.x_prime = p.theta_tilde * (p.u - x) + m * m;
    d.x_double_prime = -p.theta_tilde * d.x_prime;
    d.source = DerivativeSource::DriftAnalytic;
    return d;
}

// Everything the control law produces at one (s, x) point, with the
// partial derivatives evaluated at m = m_star.
struct ControlEval {
    double l_value = 0.0;
    double l_m = 0.0;
    double l_x = 0.0;
    double l_xx = 0.0;
    double l_xm = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double m_star = 0.0;
    double m_tilde = 0.5;
};

// Generic time-series observation (time in the model's own units).
struct SeriesObservation {
    double s = 0.0;
    double x = 0.0;
};

}  // namespace markup
