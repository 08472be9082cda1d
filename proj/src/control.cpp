#include "markup/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace markup::control {

namespace {

// Subexpressions shared by l, its partials and D1/D2 at one (s, x, m).
struct Pieces {
    double disc;     // e^{-rho s}
    double A;        // (1+phi) x + m
    double dl;       // dlambda(s)
    double dlds;     // dlambda/ds
    double E1;       // exp(theta s / x)
    double E2;       // exp(theta s)
    double drift_v;  // theta (u - x) + m^2
    double g;        // (theta s / x^2) drift_v
    double E3;       // exp(g)
    double gx;       // dg/dx
    double B;        // theta^2 x - x'' - 2 theta x' + 2 x'^2 / x
    double Bp;       // dB/dx = theta^2 - 2 x'^2 / x^2
};

Pieces make_pieces(const ModelParams& p, const LambdaSpec& lam, double s, double x, double m,
                   const PathDerivatives& d) {
    Pieces z{};
    z.disc = std::exp(-p.rho * s);
    z.A = (1.0 + p.phi) * x + m;
    if (lam.is_zero()) return z;
    if (x == 0.0) throw ZeroState("x = 0 requires a Zero lambda mode");

    const auto [dl, dlds] = lam.at(s);
    z.dl = dl;
    z.dlds = dlds;
    const double theta = p.theta_tilde;
    z.E1 = std::exp(theta * s / x);
    z.E2 = std::exp(theta * s);
    z.drift_v = theta * (p.u - x) + m * m;
    z.g = theta * s / (x * x) * z.drift_v;
    z.E3 = std::exp(z.g);
    z.gx = -2.0 * theta * s / (x * x * x) * z.drift_v - theta * theta * s / (x * x);
    z.B = theta * theta * x - d.x_double_prime - 2.0 * theta * d.x_prime +
          2.0 * d.x_prime * d.x_prime / x;
    z.Bp = theta * theta - 2.0 * d.x_prime * d.x_prime / (x * x);
    return z;
}

}  // namespace

double eval_l(const ModelParams& p, const LambdaSpec& lam, double s, double x, double m,
              const PathDerivatives& d) {
    const Pieces z = make_pieces(p, lam, s, x, m, d);
    double l = z.disc * (p.xi * z.A * z.A + 0.5 * p.c0 * m * m);
    if (lam.is_zero()) return l;
    l += z.E1 * z.dl;
    l += z.E2 * (p.theta_tilde * x - d.x_prime) / (x * x) * z.dl;
    l += z.dlds * z.E1;
    l -= z.E3 * z.dl;
    l += p.sigma / (2.0 * x) * z.E2 * z.B * z.dl;
    return l;
}

Partials eval_partials(const ModelParams& p, const LambdaSpec& lam, double s, double x, double m,
                       const PathDerivatives& d) {
    const Pieces z = make_pieces(p, lam, s, x, m, d);
    const double theta = p.theta_tilde;
    const double opf = 1.0 + p.phi;

    Partials out;
    out.l = z.disc * (p.xi * z.A * z.A + 0.5 * p.c0 * m * m);
    out.l_m = z.disc * (2.0 * p.xi * z.A + p.c0 * m);
    out.l_x = z.disc * 2.0 * p.xi * opf * z.A;
    out.l_xx = 2.0 * p.xi * opf * opf * z.disc;
    out.l_xm = 2.0 * z.disc * p.xi * opf;
    if (lam.is_zero()) return out;

    const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
    const double ts = theta * s;
    const double sig = p.sigma;
    const double gxx = 6.0 * ts / x4 * z.drift_v + 4.0 * theta * theta * s / x3;

    out.l += z.E1 * z.dl + z.E2 * (theta * x - d.x_prime) / x2 * z.dl + z.dlds * z.E1 -
             z.E3 * z.dl + sig / (2.0 * x) * z.E2 * z.B * z.dl;

    out.l_m += -z.E3 * (ts / x2) * (2.0 * m) * z.dl;

    out.l_x += z.E1 * (-ts / x2) * z.dl;
    out.l_x += -z.E2 * (theta * x2 - 2.0 * x * d.x_prime) / x4 * z.dl;
    out.l_x += z.dlds * z.E1 * (-ts / x2);
    out.l_x += -z.E3 * z.gx * z.dl;
    out.l_x += z.E2 * (-sig / (2.0 * x2) * z.B + sig / (2.0 * x) * z.Bp) * z.dl;

    out.l_xx += z.E1 * (ts * ts / x4 + 2.0 * ts / x3) * z.dl;
    out.l_xx += z.E2 * (2.0 * theta * x - 6.0 * d.x_prime) / x4 * z.dl;
    out.l_xx += z.dlds * z.E1 * (ts * ts / x4 + 2.0 * ts / x3);
    out.l_xx += -z.E3 * (z.gx * z.gx + gxx) * z.dl;
    out.l_xx += z.E2 * (sig * z.B / x3 - sig * z.Bp / x2 +
                        2.0 * sig * d.x_prime * d.x_prime / x4) * z.dl;

    out.l_xm += -2.0 * m * ts * z.dl * z.E3 * (z.gx / x2 - 2.0 / x3);
    return out;
}

std::pair<double, double> eval_d1_d2(const ModelParams& p, const LambdaSpec& lam, double s,
                                     double x, const PathDerivatives& d) {
    const Pieces z = make_pieces(p, lam, s, x, 0.0, d);
    const double base = 2.0 * p.xi * (1.0 + p.phi) * (1.0 + p.phi) * z.disc;
    if (lam.is_zero()) return {0.0, base};

    const double theta = p.theta_tilde;
    const double sig = p.sigma;
    const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
    const double ts = theta * s;

    double d1 = z.E1 * (-ts / x2) * z.dl;
    d1 += -z.E2 * (theta * x2 - 2.0 * x * d.x_prime) / x4 * z.dl;
    d1 += z.dlds * z.E1 * (-ts / x2);
    d1 += z.E2 * (-sig / (2.0 * x2) * z.B + sig / (2.0 * x) * z.Bp) * z.dl;

    double d2 = base;
    d2 += z.E1 * (ts / x3) * z.dl;
    d2 += z.E2 * (2.0 * theta * x - 6.0 * d.x_prime) / x4 * z.dl;
    d2 += z.dlds * z.E1 * (ts / x3);
    d2 += z.E2 * (sig * z.B / x3 - sig / 2.0 * z.Bp / x2) * z.dl;
    return {d1, d2};
}

double m_star(const ModelParams& p, double s, double x, double d1, double d2,
              MStarFormula formula) {
    const double disc = std::exp(-p.rho * s);
    const double xi = p.xi;
    const double opf = 1.0 + p.phi;

    double num, den, den_scale;
    if (formula == MStarFormula::ClosedForm) {
        num = xi * opf * (2.0 * xi * disc * opf * opf * x + d1 - d2 * d2 * x);
        den = d2 * d2 * (2.0 * xi + p.c0) - 2.0 * xi * xi * opf * opf;
        den_scale = std::fabs(d2 * d2 * (2.0 * xi + p.c0)) + std::fabs(2.0 * xi * xi * opf * opf);
    } else {
        num = 2.0 * xi * opf * (4.0 * xi * disc * opf * opf * x + 2.0 * d1 - d2 * d2 * x);
        den = (2.0 * xi + p.c0) * d2 * d2 - 8.0 * xi * xi * disc * opf * opf;
        den_scale = std::fabs((2.0 * xi + p.c0) * d2 * d2) +
                    std::fabs(8.0 * xi * xi * disc * opf * opf);
    }
    if (!(std::fabs(den) > 1e-12 * den_scale) || !std::isfinite(den)) {
        std::ostringstream msg;
        msg << "singular denominator (xi=" << xi << ", phi=" << p.phi << ", c0=" << p.c0
            << ", rho=" << p.rho << ", s=" << s << ", D2=" << d2 << ")";
        throw SingularDenominator(msg.str());
    }
    return num / den;
}

ControlEval evaluate_control(const ModelParams& p, const LambdaSpec& lam, double s, double x,
                             const PathDerivatives& d, MStarFormula formula) {
    ControlEval ce;
    std::tie(ce.d1, ce.d2) = eval_d1_d2(p, lam, s, x, d);
    ce.m_star = m_star(p, s, x, ce.d1, ce.d2, formula);
    ce.m_tilde = m_tilde(ce.m_star);
    const Partials partials = eval_partials(p, lam, s, x, ce.m_star, d);
    ce.l_value = partials.l;
    ce.l_m = partials.l_m;
    ce.l_x = partials.l_x;
    ce.l_xx = partials.l_xx;
    ce.l_xm = partials.l_xm;
    return ce;
}

std::vector<CurvePoint> control_curve(const ModelParams& p, const LambdaSpec& lam, double s,
                                      const std::vector<double>& x_grid, MStarFormula formula,
                                      double m_ref) {
    std::vector<CurvePoint> curve(x_grid.size());
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        try {
            const double x = x_grid[i];
            const auto d = drift_derivatives(p, x, m_ref);
            const auto [d1, d2] = eval_d1_d2(p, lam, s, x, d);
            const double m = m_star(p, s, x, d1, d2, formula);
            curve[i] = {x, m, m_tilde(m)};
        } catch (const ZeroState& e) {
            throw ZeroState("grid index " + std::to_string(i) + ": " + e.what());
        } catch (const SingularDenominator& e) {
            throw SingularDenominator("grid index " + std::to_string(i) + ": " + e.what());
        }
    }
    return curve;
}

McEstimate objective_mc(const ModelParams& p, const JumpSpec& j, const sde::Policy& policy,
                        const SimConfig& cfg) {
    const auto stats = sde::simulate_stats(p, j, policy, cfg);
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& ps : stats) {
        sum += ps.discounted_cost;
        sum_sq += ps.discounted_cost * ps.discounted_cost;
    }
    const auto n = static_cast<double>(stats.size());
    McEstimate out;
    out.estimate = sum / n;
    if (stats.size() > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
        out.std_error = std::sqrt(var / n);
    }
    return out;
}

std::array<ModelParams, 3> table1_models(double u) {
    std::array<ModelParams, 3> models;
    models[0] = {0.001, u, 0.001, 0.0001, 0.0001, 0.0001, 0.0001};
    models[1] = {0.4, u, 0.08, 0.01, 0.01, 0.01, 0.01};
    models[2] = {0.7, u, 0.9, 0.8, 0.8, 0.5, 0.8};
    return models;
}

std::array<ModelParams, 3> table2_models(double u) {
    std::array<ModelParams, 3> models;
    models[0] = {0.001, u, 0.001, 0.001, 0.001, 0.001, 0.001};
    models[1] = {0.4, u, 0.08, 0.01, 0.01, 0.01, 0.01};
    models[2] = {0.7, u, 0.9, 0.8, 0.8, 0.5, 0.8};
    return models;
}

const std::vector<Table2Reference>& table2_reference() {
    static const std::vector<Table2Reference> ref = {
        {"nestle", {0.883, 0.236, 0.199}},
        {"westrock", {0.999, 0.940, 0.323}},
        {"dover", {0.988, 0.298, 0.278}},
        {"palmolive", {0.999, 0.342, 0.052}},
    };
    return ref;
}

ModelParams curve_params(double u) {
    return {0.02, u, 0.05, 0.5, 0.0001, 0.0001, 0.00001};
}

namespace {

struct Score {
    bool ordered = false;
    double err = std::numeric_limits<double>::infinity();
    bool better_than(const Score& other) const {
        if (ordered != other.ordered) return ordered;
        return err < other.err;
    }
};

Score score_config(const std::array<ModelParams, 3>& models, const std::array<double, 3>& targets,
                   double x_probe, const LambdaSpec& lam, double s, MStarFormula formula,
                   std::array<double, 3>& m_tilde_out) {
    Score sc;
    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto d = drift_derivatives(models[i], x_probe, 0.0);
        const auto [d1, d2] = eval_d1_d2(models[i], lam, s, x_probe, d);
        const double m = m_star(models[i], s, x_probe, d1, d2, formula);
        if (!std::isfinite(m)) return sc;
        m_tilde_out[i] = m_tilde(m);
        err = std::max(err, std::fabs(m_tilde_out[i] - targets[i]));
    }
    sc.ordered = m_tilde_out[0] > m_tilde_out[1] && m_tilde_out[1] > m_tilde_out[2];
    sc.err = err;
    return sc;
}

}  // namespace

CalibrationResult calibrate_lambda(const std::array<ModelParams, 3>& models,
                                   const std::array<double, 3>& targets, double x_probe) {
    std::vector<double> grid{0.0};
    for (int e = -4; e <= 6; ++e) {
        grid.push_back(std::pow(10.0, e));
        grid.push_back(-std::pow(10.0, e));
    }

    CalibrationResult best;
    Score best_score;
    auto consider = [&](MStarFormula formula, double s, double dl, double dlds) {
        const LambdaSpec lam = (dl == 0.0 && dlds == 0.0)
                                   ? LambdaSpec::zero()
                                   : LambdaSpec::constant(dl, dlds);
        std::array<double, 3> mt{};
        Score sc;
        try {
            sc = score_config(models, targets, x_probe, lam, s, formula, mt);
        } catch (const Error&) {
            return;
        }
        if (sc.better_than(best_score)) {
            best_score = sc;
            best = {formula, s, dl, dlds, mt, sc.err, sc.ordered};
        }
    };

    for (MStarFormula formula : {MStarFormula::ClosedForm, MStarFormula::Stationary})
        for (double s : {0.5, 1.0, 2.0})
            for (double dl : grid)
                for (double dlds : grid) consider(formula, s, dl, dlds);

    // Multiplicative refinement around the best grid cell.
    for (int round = 0; round < 3; ++round) {
        const CalibrationResult pivot = best;
        for (double f1 : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0})
            for (double f2 : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0})
                consider(pivot.formula, pivot.s, pivot.dlambda * f1, pivot.dlambda_ds * f2);
    }
    return best;
}

std::string to_string(MStarFormula formula) {
    return formula == MStarFormula::ClosedForm ? "closed-form" : "stationary";
}

MStarFormula formula_from_string(const std::string& name) {
    if (name == "closed-form" || name == "closed_form" || name == "closed")
        return MStarFormula::ClosedForm;
    if (name == "stationary") return MStarFormula::Stationary;
    throw InvalidParams("unknown m* formula: " + name);
}

}  // namespace markup::control
