// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "markup/control.hpp"
#include "markup/estimation.hpp"
#include "markup/market.hpp"
#include "markup/sde.hpp"
#include "markup/stats.hpp"
#include "markup/validation.hpp"
#include "sw_reference.hpp"

namespace fs = std::filesystem;
using namespace markup;
using Clock = std::chrono::steady_clock;

namespace {

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

struct Harness {
    int failures = 0;

    void run(int id, const std::string& name, const std::function<bool(std::string&)>& body,
             double budget_s = 0.0) {
        std::string detail;
        bool passed = false;
        const auto t0 = Clock::now();
        try {
            passed = body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
        if (budget_s > 0.0 && elapsed > budget_s) {
            passed = false;
            detail += fmt(" [over %.0fs budget]", budget_s);
        }
        std::printf("[%s] %02d %-22s %s (%.1fs)\n", passed ? " ok " : "FAIL", id, name.c_str(),
                    detail.c_str(), elapsed);
        std::fflush(stdout);
        if (!passed) ++failures;
    }
};

const std::string kCli{MARKUP_CLI_PATH};
const fs::path kData{MARKUP_DATA_DIR};

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criterion bodies -------------------------------------------------------

bool deterministic_limit(std::string& detail) {
    ModelParams p;
    p.theta_tilde = 1.0;
    p.u = 1.0;
    p.sigma = 0.0;
    const double x0 = 3.0;

    auto max_error = [&](double dt) {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.horizon = 5.0;
        cfg.seed = 1;
        cfg.x0 = x0;
        const auto traj = sde::simulate_path(p, JumpSpec{}, sde::zero_policy(), cfg, 0);
        double err = 0.0;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            const double exact = p.u + (x0 - p.u) * std::exp(-p.theta_tilde * traj.times[i]);
            err = std::max(err, std::fabs(traj.values[i] - exact));
        }
        return err;
    };

    const double err_at_1e3 = max_error(1e-3);
    const std::vector<double> dts{8e-3, 4e-3, 2e-3, 1e-3, 5e-4};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double dt : dts) {
        const double lx = std::log(dt), ly = std::log(max_error(dt));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(dts.size());
    const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);

    detail = fmt("max_err=%.2e (cap %.0e), loglog slope=%.3f", err_at_1e3, 5e-3, slope);
    return err_at_1e3 <= 5.0 * 1e-3 && std::fabs(slope - 1.0) <= 0.15;
}

bool jump_moments(std::string& detail) {
    JumpSpec j;
    j.nu = 2.0;
    j.gamma = 0.3;
    j.sigma_j = 0.1;
    const std::int64_t reps = 100000;
    std::vector<double> totals(reps);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < reps; ++r) {
        rng::Stream stream(2025, 7000000 + static_cast<std::uint64_t>(r));
        const auto draw = sde::sample_jumps(j, 5.0, stream);
        double sum = 0.0;
        for (double s : draw.sizes) sum += s;
        totals[r] = sum;
    }
    const double mean = stats::mean(totals);
    const double var = stats::sample_variance(totals);
    detail = fmt("mean=%.4f (3.00+-0.03), var=%.4f (1.00+-0.05)", mean, var);
    return std::fabs(mean - 3.0) <= 0.03 && std::fabs(var - 1.0) <= 0.05;
}

bool stationary_moments(std::string& detail) {
    ModelParams p;
    p.theta_tilde = 1.0;
    p.u = 1.0;
    p.sigma = 0.2;
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 20.0;
    cfg.n_paths = 10000;
    cfg.seed = 3;
    cfg.x0 = 1.0;
    JumpSpec jumps_on;
    jumps_on.nu = 0.1;
    jumps_on.gamma = 0.02;
    jumps_on.sigma_j = 0.01;
    const auto checks = validation::stationary_moment_check(p, cfg, jumps_on, 0.01, 0.002, 0.03);
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.passed;
    detail = fmt("mean=%.4f (1.00+-0.01), var=%.4f (0.020+-0.002), corr=%.4f (<0.03)",
                 checks[0].statistic, checks[1].statistic, checks[3].statistic);
    return ok;
}

bool doob(std::string& detail) {
    const auto check = validation::doob_check(1.0, 100000, 1000, 11);
    detail = fmt("ratio=%.3f in [1, %.3f]", check.statistic,
                 check.target + check.tolerance);
    return check.passed;
}

bool martingales(std::string& detail) {
    double worst = 0.0;
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (const auto& c : validation::martingale_checks(1.0, 0.25, 100000, 0.5, seed)) {
            ok = ok && c.passed;
            worst = std::max(worst, std::fabs(c.statistic));
        }
    }
    detail = fmt("worst |z|=%.2f over 5 seeds x 3 checks (cap 4)", worst);
    return ok;
}

bool optimality(std::string& detail) {
    double worst = 0.0;
    int evaluated = 0;
    for (int i = 0; i < 10; ++i) {
        const double x = 0.1 + 1.9 * static_cast<double>(i) / 9.0;
        for (int k = 0; k < 10; ++k) {
            ModelParams p;
            p.theta_tilde = 0.2 + 0.08 * k;
            p.u = 1.0;
            p.sigma = 0.1 * k;
            p.rho = 0.08 * k;
            p.xi = 0.1 + 0.09 * k;
            p.phi = -0.3 + 0.12 * k;
            p.c0 = 0.05 + 0.1 * k;
            const double s = 0.25 + 0.15 * k;
            const auto d = drift_derivatives(p, x, 0.0);
            const auto ce = control::evaluate_control(p, LambdaSpec::zero(), s, x, d,
                                                      control::MStarFormula::Stationary);
            const double lhs = ce.l_m * ce.l_xx * ce.l_xx;
            const double rel = std::fabs(control::optimality_residual(ce)) /
                               std::max(1.0, std::fabs(lhs));
            worst = std::max(worst, rel);
            ++evaluated;
        }
    }
    detail = fmt("worst relative residual=%.2e over %d grid points (cap 1e-8)", worst, evaluated);
    return worst < 1e-8;
}

bool derivatives(std::string& detail) {
    rng::Stream stream(777, 0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * stream.uniform(); };
    const auto tabulated =
        LambdaSpec::tabulated({0.0, 1.0, 3.0}, {2e-3, -1e-3, 4e-3}, {0.0, 1e-3, -2e-3});
    const std::vector<LambdaSpec> modes = {LambdaSpec::zero(), LambdaSpec::constant(3e-3, -1e-3),
                                           tabulated};
    double worst = 0.0;
    for (const auto& lam : modes) {
        for (int rep = 0; rep < 20; ++rep) {
            ModelParams p;
            p.theta_tilde = uniform(0.1, 0.8);
            p.u = uniform(0.5, 1.5);
            p.sigma = uniform(0.0, 1.0);
            p.rho = uniform(0.0, 0.8);
            p.xi = uniform(0.05, 1.0);
            p.phi = uniform(-0.5, 1.0);
            p.c0 = uniform(0.0, 1.0);
            const double s = uniform(0.1, 1.2);
            const double x = uniform(0.6, 1.6);
            const double m = uniform(-1.0, 1.0);
            PathDerivatives d;
            d.x_prime = uniform(-0.5, 0.5);
            d.x_double_prime = uniform(-0.5, 0.5);

            const auto an = control::eval_partials(p, lam, s, x, m, d);
            const auto at = [&](double xx, double mm) {
                return control::eval_l(p, lam, s, xx, mm, d);
            };
            // Richardson-extrapolated central differences.
            auto d1 = [&](double h, auto f) { return (f(h) - f(-h)) / (2.0 * h); };
            const auto fd_m = [&](double h) { return d1(h, [&](double e) { return at(x, m + e); }); };
            const auto fd_x = [&](double h) { return d1(h, [&](double e) { return at(x + e, m); }); };
            const auto fd2 = [&](double h) {
                return (at(x + h, m) - 2.0 * at(x, m) + at(x - h, m)) / (h * h);
            };
            const auto fdc = [&](double h) {
                return (at(x + h, m + h) - at(x + h, m - h) - at(x - h, m + h) +
                        at(x - h, m - h)) /
                       (4.0 * h * h);
            };
            auto rich = [](double coarse, double fine) { return (4.0 * fine - coarse) / 3.0; };

            const double got_m = rich(fd_m(2e-5), fd_m(1e-5));
            const double got_x = rich(fd_x(2e-5), fd_x(1e-5));
            const double got_xx = rich(fd2(4e-3), fd2(2e-3));
            const double got_xm = rich(fdc(4e-3), fdc(2e-3));

            auto rel = [](double got, double want) {
                return std::fabs(got - want) / std::max(1e-6, std::fabs(want));
            };
            worst = std::max({worst, rel(got_m, an.l_m), rel(got_x, an.l_x),
                              rel(got_xx, an.l_xx), rel(got_xm, an.l_xm)});
        }
    }
    detail = fmt("worst relative error=%.2e over 3 modes x 20 points (cap 1e-6)", worst);
    return worst < 1e-6;
}

bool logistic_anchor(std::string& detail) {
    double worst = 0.0;
    for (const auto& p : control::table1_models(1.0)) {
        for (auto formula :
             {control::MStarFormula::ClosedForm, control::MStarFormula::Stationary}) {
            const auto d = drift_derivatives(p, 0.0, 0.0);
            const auto ce = control::evaluate_control(p, LambdaSpec::zero(), 1.0, 0.0, d, formula);
            worst = std::max(worst, std::fabs(ce.m_tilde - 0.5));
        }
    }
    detail = fmt("worst |m_tilde(0) - 0.5| = %.2e (cap 1e-12)", worst);
    return worst <= 1e-12;
}

control::CalibrationResult g_calibration;

bool table1_ordering(std::string& detail) {
    g_calibration = control::calibrate_lambda(control::table1_models(1.0),
                                              control::kTable1Targets, 0.87);
    detail = fmt("m=(%.3f,%.3f,%.3f) targets (0.617,0.396,0.047) fit_err=%.3f%s [%s s=%g dl=%g dlds=%g]",
                 g_calibration.m_tilde[0], g_calibration.m_tilde[1], g_calibration.m_tilde[2],
                 g_calibration.max_abs_error,
                 g_calibration.max_abs_error <= 0.05 ? "" : " (>0.05: best fit reported)",
                 control::to_string(g_calibration.formula).c_str(), g_calibration.s,
                 g_calibration.dlambda, g_calibration.dlambda_ds);
    return g_calibration.ordered;
}

bool table2_ordering(std::string& detail) {
    const auto lam = LambdaSpec::constant(g_calibration.dlambda, g_calibration.dlambda_ds);
    const auto cpi = market::load_csv(kData / "cpi_2022_2023.csv");
    const auto params = control::table2_models(1.0);
    std::vector<market::ModelConfig> models;
    for (int i = 0; i < 3; ++i)
        models.push_back({"model" + std::to_string(i + 1), params[i], lam, g_calibration.s,
                          g_calibration.formula});

    bool ok = true;
    std::string cells;
    for (const auto& ref : control::table2_reference()) {
        const auto prices = market::load_csv(kData / "prices" / (ref.firm + ".csv"));
        const auto aligned = market::align(cpi, prices, market::AlignPolicy::ForwardFillCpi);
        const auto dev = market::deviation_series(aligned, aligned.dates.front());
        const auto rows = market::firm_report(ref.firm, dev, models);
        const bool ordered =
            rows[0].m_tilde > rows[1].m_tilde && rows[1].m_tilde > rows[2].m_tilde;
        ok = ok && ordered;
        cells += fmt(" %s(%.3f>%.3f>%.3f d=%+.2f,%+.2f,%+.2f)", ref.firm.substr(0, 4).c_str(),
                     rows[0].m_tilde, rows[1].m_tilde, rows[2].m_tilde,
                     rows[0].m_tilde - ref.m_tilde[0], rows[1].m_tilde - ref.m_tilde[1],
                     rows[2].m_tilde - ref.m_tilde[2]);
    }
    detail = "per-firm ordering;" + cells;
    return ok;
}

bool picard(std::string& detail) {
    ModelParams p;
    p.theta_tilde = 1.0;
    p.u = 1.0;
    p.sigma = 0.2;
    JumpSpec j;
    j.nu = 1.0;
    j.gamma = 0.05;
    j.sigma_j = 0.02;
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 1.0;
    cfg.seed = 11;
    cfg.x0 = 1.0;
    const auto d = sde::picard_iterates(p, j, sde::zero_policy(), cfg, 15, 1e-6);
    bool monotone = true;
    for (std::size_t k = 2; k + 1 < d.size(); ++k) monotone = monotone && d[k + 1] < d[k];
    detail = fmt("%zu sweeps, final distance=%.2e (cap 1e-6), monotone after k=2: %s", d.size(),
                 d.back(), monotone ? "yes" : "no");
    return monotone && d.back() < 1e-6 && d.size() <= 15;
}

bool estimator_recovery(std::string& detail) {
    const int reps = 200;
    int cover_u = 0, cover_theta = 0, cover_sigma = 0;
    int cover_nu = 0, cover_gamma = 0, cover_sj = 0;

    ModelParams p;
    p.theta_tilde = 1.0;
    p.u = 1.0;
    p.sigma = 0.2;
    JumpSpec j;
    j.nu = 2.0;
    j.gamma = 0.3;
    j.sigma_j = 0.1;

    for (int r = 0; r < reps; ++r) {
        SimConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 50.0;
        cfg.seed = 100000 + static_cast<std::uint64_t>(r);
        cfg.x0 = 1.0;
        const auto traj = sde::simulate_path(p, JumpSpec{}, sde::zero_policy(), cfg, 0);
        std::vector<SeriesObservation> obs(traj.times.size());
        for (std::size_t i = 0; i < traj.times.size(); ++i)
            obs[i] = {traj.times[i], traj.values[i]};

        const auto u_hat = estimation::estimate_u_hat(obs, p.theta_tilde);
        cover_u += std::fabs(u_hat.value - p.u) <= 2.0 * u_hat.std_error ? 1 : 0;

        const auto fit = estimation::estimate_theta_sigma(obs, cfg.dt);
        cover_theta +=
            std::fabs(fit.theta.value - p.theta_tilde) <= 2.0 * fit.theta.std_error ? 1 : 0;
        cover_sigma += std::fabs(fit.sigma.value - p.sigma) <= 2.0 * fit.sigma.std_error ? 1 : 0;

        rng::Stream stream(555, 900000 + static_cast<std::uint64_t>(r));
        const auto draw = sde::sample_jumps(j, 50.0, stream);
        const auto jm = estimation::estimate_jump_moments(draw.times, draw.sizes, 50.0);
        cover_nu += std::fabs(jm.nu.value - j.nu) <= 2.0 * jm.nu.std_error ? 1 : 0;
        cover_gamma +=
            jm.gamma && std::fabs(jm.gamma->value - j.gamma) <= 2.0 * jm.gamma->std_error ? 1 : 0;
        cover_sj += jm.sigma_j &&
                            std::fabs(jm.sigma_j->value - j.sigma_j) <= 2.0 * jm.sigma_j->std_error
                        ? 1
                        : 0;
    }
    detail = fmt("coverage/200: u=%d th=%d sig=%d nu=%d gamma=%d sj=%d (floor 180)", cover_u,
                 cover_theta, cover_sigma, cover_nu, cover_gamma, cover_sj);
    const int floor = 180;
    return cover_u >= floor && cover_theta >= floor && cover_sigma >= floor &&
           cover_nu >= floor && cover_gamma >= floor && cover_sj >= floor;
}

bool shapiro(std::string& detail) {
    double worst_w = 0.0, worst_p = 0.0;
    int index = 0;
    for (const auto& ref : sw_reference::kTable) {
        const auto sample = sw_reference::sample(index++, ref.n, ref.kind);
        const auto got = stats::shapiro_wilk(sample);
        worst_w = std::max(worst_w, std::fabs(got.w - ref.w));
        worst_p = std::max(worst_p, std::fabs(got.p_value - ref.p));
    }
    detail = fmt("worst |dW|=%.2e (cap 1e-4), worst |dp|=%.2e (cap 1e-3)", worst_w, worst_p);
    return worst_w < 1e-4 && worst_p < 1e-3;
}

bool reproducibility(std::string& detail) {
    const auto dir = fs::temp_directory_path() / "markup_acceptance_repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "config.json");
        out << R"({"model": {"theta_tilde": 1.0, "u": 1.0, "sigma": 0.2, "rho": 0.0,
                   "xi": 1.0, "phi": 0.0, "c0": 0.0},
                   "jumps": {"nu": 1.0, "gamma": 0.05, "sigma_j": 0.02},
                   "sim": {"dt": 0.01, "horizon": 1.0, "n_paths": 64, "seed": 9, "x0": 1.0}})";
    }
    if (run_cli("simulate --config " + (dir / "config.json").string() + " --threads 1 --out " +
                (dir / "a").string()) != 0) {
        detail = "simulate failed";
        return false;
    }
    if (run_cli("replay --manifest " + (dir / "a" / "manifest.json").string() +
                " --threads 2 --out " + (dir / "b").string()) != 0) {
        detail = "replay failed";
        return false;
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename();
        if (name == "manifest.json") continue;
        ++files;
        if (slurp(entry.path()) != slurp(dir / "b" / name)) {
            detail = "mismatch in " + name.string();
            return false;
        }
    }

    // A second subcommand family: validate must replay identically too.
    if (run_cli("validate --suite jumps --seed 7 --out " + (dir / "v1").string()) != 0 ||
        run_cli("replay --manifest " + (dir / "v1" / "manifest.json").string() + " --out " +
                (dir / "v2").string()) != 0) {
        detail = "validate replay failed";
        return false;
    }
    if (slurp(dir / "v1" / "report.json") != slurp(dir / "v2" / "report.json")) {
        detail = "validate report mismatch";
        return false;
    }
    detail = fmt("%d simulate outputs + validate report byte-identical across thread counts",
                 files);
    return true;
}

}  // namespace

int main() {
    Harness harness;
    harness.run(1, "deterministic-limit", deterministic_limit, 5.0);
    harness.run(2, "jump-moments", jump_moments, 10.0);
    harness.run(3, "stationary-moments", stationary_moments, 60.0);
    harness.run(4, "doob-ratio", doob, 30.0);
    harness.run(5, "martingale-suite", martingales);
    harness.run(6, "optimality-condition", optimality);
    harness.run(7, "derivative-correctness", derivatives);
    harness.run(8, "logistic-anchor", logistic_anchor);
    harness.run(9, "table1-ordering", table1_ordering);
    harness.run(10, "table2-ordering", table2_ordering);
    harness.run(11, "picard-contraction", picard);
    harness.run(12, "estimator-recovery", estimator_recovery, 300.0);
    harness.run(13, "shapiro-wilk", shapiro);
    harness.run(14, "reproducibility", reproducibility);

    if (harness.failures > 0) {
        std::printf("%d criterion(s) failed\n", harness.failures);
        return 1;
    }
    std::printf("all 14 criteria passed\n");
    return 0;
}
