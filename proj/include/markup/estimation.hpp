#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "markup/types.hpp"

namespace markup::estimation {

struct EstimateValue {
    double value = 0.0;
    double std_error = 0.0;
};

// Long-term-mean estimator: the average of
//   X(s_i) + (X(s_{i+1}) - X(s_i)) / (theta_tilde (s_{i+1} - s_i))
// over consecutive observations. Supports irregular spacing.
EstimateValue estimate_u_hat(std::span<const SeriesObservation> series, double theta_tilde);

// Least-squares fit of the discretized drift on a uniform grid:
// regress dX_i on X_i, map slope/intercept to (theta, u*), then estimate
// sigma^2 from the squared residuals scaled by X_i dt.
struct ThetaSigmaFit {
    EstimateValue theta;
    EstimateValue sigma;
    EstimateValue u_star;  // profiled-out level implied by the regression
};
ThetaSigmaFit estimate_theta_sigma(std::span<const SeriesObservation> series, double dt);

// Moment inversion of a jump record over one horizon: nu = count/horizon,
// gamma = mean size, sigma_j = sample sd. Size moments are absent when the
// record is empty (or a single jump, for sigma_j).
struct JumpMomentEstimates {
    EstimateValue nu;
    std::optional<EstimateValue> gamma;
    std::optional<EstimateValue> sigma_j;
    double implied_total_mean = 0.0;      // nu * horizon * gamma
    double implied_total_variance = 0.0;  // nu * horizon * (gamma^2 + sigma_j^2)
};
JumpMomentEstimates estimate_jump_moments(std::span<const double> jump_times,
                                          std::span<const double> jump_sizes, double horizon);

// Indices i whose increment X(s_{i+1}) - X(s_i) exceeds k times the rolling
// median-absolute-deviation scale (window 21, scale factor 1.4826).
std::vector<std::size_t> detect_jumps(std::span<const SeriesObservation> series, double k = 4.0);

struct EstimateReport {
    std::optional<EstimateValue> u_hat;
    std::optional<EstimateValue> theta_hat;
    std::optional<EstimateValue> sigma_hat;
    std::optional<EstimateValue> nu_hat;
    std::optional<EstimateValue> gamma_hat;
    std::optional<EstimateValue> sigma_j_hat;
    std::int64_t n_obs = 0;
};

// Full pipeline over a series: theta/sigma regression (or a fixed theta),
// u-hat, then jump detection and moment inversion on the flagged increments.
EstimateReport estimate_all(std::span<const SeriesObservation> series,
                            std::optional<double> known_theta, double jump_threshold_k = 4.0);

}  // namespace markup::estimation
