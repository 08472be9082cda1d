// Command-line front end: simulation, control tables, control curve,
// validation suites, market-data pipeline, and parameter estimation.
// Every subcommand writes a manifest.json capturing the fully resolved
// configuration; `markup replay` re-runs a manifest byte-for-byte.

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "markup/control.hpp"
#include "markup/estimation.hpp"
#include "markup/json_io.hpp"
#include "markup/market.hpp"
#include "markup/sde.hpp"
#include "markup/stats.hpp"
#include "markup/validation.hpp"

namespace fs = std::filesystem;
using markup::io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        outputs_.push_back(name);
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw markup::Error("cannot write " + (dir_ / name).string());
        return out;
    }

    void write_manifest(const std::string& subcommand, json config) {
        json manifest;
        manifest["subcommand"] = subcommand;
        manifest["version"] = kVersion;
        if (config.contains("seed"))
            manifest["seed"] = config["seed"];
        else if (config.contains("input") && config["input"].contains("sim"))
            manifest["seed"] = config["input"]["sim"]["seed"];
        else
            manifest["seed"] = nullptr;
        manifest["config"] = std::move(config);
        manifest["outputs"] = outputs_;
        markup::io::write_json_file(dir_ / "manifest.json", manifest);
    }

    const fs::path& path() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> outputs_;
};

std::string fmt(double v) { return markup::io::format_double(v); }

markup::LambdaSpec lambda_from_config(const json& cfg) {
    return markup::io::lambda_spec_from_json(cfg.at("lambda"));
}

json lambda_config(const std::string& mode, double dlambda, double dlambda_ds,
                   const std::optional<fs::path>& calibration_file,
                   markup::control::MStarFormula& formula, double& s) {
    if (mode == "zero") return markup::io::to_json(markup::LambdaSpec::zero());
    if (mode == "constant")
        return markup::io::to_json(markup::LambdaSpec::constant(dlambda, dlambda_ds));
    if (mode == "calibrated") {
        if (!calibration_file)
            throw markup::InvalidParams("--lambda-mode calibrated needs --calibration FILE");
        const auto doc = markup::io::load_json_file(*calibration_file);
        const auto result = markup::io::calibration_from_json(doc);
        formula = result.formula;
        s = result.s;
        return markup::io::to_json(
            markup::LambdaSpec::constant(result.dlambda, result.dlambda_ds));
    }
    throw markup::InvalidParams("lambda mode must be zero, constant or calibrated");
}

// --- simulate ---------------------------------------------------------------

void run_simulate(const json& cfg, OutputDir& out) {
    const auto doc = markup::io::sim_document_from_json(cfg.at("input"));
    const bool summary = cfg.at("summary").get<bool>();
    const double m0 = doc.constant_policy;
    const auto policy = [m0](double, double) { return m0; };

    const auto paths = markup::sde::simulate_ensemble(doc.model, doc.jumps, policy, doc.sim);

    if (summary) {
        auto csv = out.open("ensemble.csv");
        csv << "s,mean,q05,q95\n";
        const std::size_t n_times = paths.front().times.size();
        std::vector<double> column(paths.size());
        for (std::size_t t = 0; t < n_times; ++t) {
            for (std::size_t i = 0; i < paths.size(); ++i) column[i] = paths[i].values[t];
            std::sort(column.begin(), column.end());
            const auto quantile = [&](double q) {
                const double pos = q * static_cast<double>(column.size() - 1);
                const auto lo = static_cast<std::size_t>(pos);
                const std::size_t hi = std::min(lo + 1, column.size() - 1);
                const double w = pos - static_cast<double>(lo);
                return column[lo] + w * (column[hi] - column[lo]);
            };
            double sum = 0.0;
            for (double v : column) sum += v;
            csv << fmt(paths.front().times[t]) << ',' << fmt(sum / column.size()) << ','
                << fmt(quantile(0.05)) << ',' << fmt(quantile(0.95)) << '\n';
        }
    } else {
        for (std::size_t i = 0; i < paths.size(); ++i) {
            char name[40];
            std::snprintf(name, sizeof name, "path_%06zu.csv", i);
            auto csv = out.open(name);
            csv << "s,x\n";
            for (std::size_t t = 0; t < paths[i].times.size(); ++t)
                csv << fmt(paths[i].times[t]) << ',' << fmt(paths[i].values[t]) << '\n';
            if (!paths[i].jump_times.empty()) {
                std::snprintf(name, sizeof name, "jumps_%06zu.csv", i);
                auto jcsv = out.open(name);
                jcsv << "t_k,j_k\n";
                for (std::size_t k = 0; k < paths[i].jump_times.size(); ++k)
                    jcsv << fmt(paths[i].jump_times[k]) << ',' << fmt(paths[i].jump_sizes[k])
                         << '\n';
            }
        }
    }
    out.write_manifest("simulate", cfg);
}

// --- table1 / calibrate ------------------------------------------------------

void run_table1(const json& cfg, OutputDir& out) {
    const double s = cfg.at("s").get<double>();
    const double x = cfg.at("x").get<double>();
    const double u = cfg.at("u").get<double>();
    const auto lam = lambda_from_config(cfg);
    const auto formula = markup::control::formula_from_string(cfg.at("formula").get<std::string>());

    const auto models = markup::control::table1_models(u);
    auto csv = out.open("table1.csv");
    csv << "model,m_star,m_tilde,target,delta\n";
    for (int i = 0; i < 3; ++i) {
        const auto d = markup::drift_derivatives(models[i], x, 0.0);
        const auto [d1, d2] = markup::control::eval_d1_d2(models[i], lam, s, x, d);
        const double m = markup::control::m_star(models[i], s, x, d1, d2, formula);
        const double mt = markup::control::m_tilde(m);
        const double target = markup::control::kTable1Targets[i];
        csv << "model" << (i + 1) << ',' << fmt(m) << ',' << fmt(mt) << ',' << fmt(target)
            << ',' << fmt(mt - target) << '\n';
    }
    out.write_manifest("table1", cfg);
}

void run_calibrate(const json& cfg, OutputDir& out) {
    const double x = cfg.at("x").get<double>();
    const double u = cfg.at("u").get<double>();
    const auto result = markup::control::calibrate_lambda(
        markup::control::table1_models(u), markup::control::kTable1Targets, x);
    markup::io::write_json_file(out.path() / "calibration.json",
                                markup::io::to_json(result));
    auto txt = out.open("calibration.txt");
    txt << "formula=" << markup::control::to_string(result.formula) << " s=" << fmt(result.s)
        << " dlambda=" << fmt(result.dlambda) << " dlambda_ds=" << fmt(result.dlambda_ds)
        << "\nm_tilde=" << fmt(result.m_tilde[0]) << ',' << fmt(result.m_tilde[1]) << ','
        << fmt(result.m_tilde[2]) << " max_abs_error=" << fmt(result.max_abs_error)
        << " ordered=" << (result.ordered ? "yes" : "no") << '\n';
    out.write_manifest("calibrate", cfg);
}

// --- curve -------------------------------------------------------------------

void run_curve(const json& cfg, OutputDir& out) {
    const double s = cfg.at("s").get<double>();
    const int grid_n = cfg.at("grid").get<int>();
    const double x_min = cfg.at("x_min").get<double>();
    const double x_max = cfg.at("x_max").get<double>();
    const auto lam = lambda_from_config(cfg);
    const auto formula = markup::control::formula_from_string(cfg.at("formula").get<std::string>());
    const auto params = markup::io::model_params_from_json(cfg.at("model"));
    if (grid_n < 2) throw markup::InvalidParams("curve needs a grid of at least 2 points");

    std::vector<double> grid(grid_n);
    for (int i = 0; i < grid_n; ++i)
        grid[i] = x_min + (x_max - x_min) * static_cast<double>(i) / (grid_n - 1);

    const auto curve = markup::control::control_curve(params, lam, s, grid, formula);
    auto csv = out.open("curve.csv");
    csv << "x,m_star,m_tilde\n";
    for (const auto& pt : curve)
        csv << fmt(pt.x) << ',' << fmt(pt.m_star) << ',' << fmt(pt.m_tilde) << '\n';

    json sidecar;
    sidecar["model"] = cfg.at("model");
    sidecar["lambda"] = cfg.at("lambda");
    sidecar["s"] = s;
    sidecar["formula"] = cfg.at("formula");
    sidecar["derivative_source"] = "drift_analytic";
    markup::io::write_json_file(out.path() / "curve_params.json", sidecar);
    out.write_manifest("curve", cfg);
}

// --- validate ------------------------------------------------------------------

int run_validate(const json& cfg, OutputDir& out) {
    const auto suite = cfg.at("suite").get<std::string>();
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    auto results = markup::validation::run_suite(suite, seed);
    if (cfg.contains("inject_failure") && cfg["inject_failure"].get<bool>()) {
        // Harness self-test: deliberately wrong target.
        auto broken = results.front();
        broken.name += ".injected_failure";
        broken.target += 1000.0;
        broken.passed = false;
        results.push_back(broken);
    }

    json report = json::array();
    bool all_passed = true;
    std::cout << "check                                            statistic      target"
                 "     tol   status\n";
    for (const auto& r : results) {
        report.push_back(markup::io::to_json(r));
        all_passed = all_passed && r.passed;
        std::printf("%-46s %12.6g %11.6g %7.3g   %s\n", r.name.c_str(), r.statistic, r.target,
                    r.tolerance, r.passed ? "ok" : "FAIL");
    }
    markup::io::write_json_file(out.path() / "report.json", report);
    out.write_manifest("validate", cfg);
    return all_passed ? 0 : 1;
}

// --- table2 --------------------------------------------------------------------

void run_table2(const json& cfg, OutputDir& out) {
    const double s_default = cfg.at("s").get<double>();
    const double u = cfg.at("u").get<double>();
    const auto lam = lambda_from_config(cfg);
    const auto formula = markup::control::formula_from_string(cfg.at("formula").get<std::string>());
    const auto policy = cfg.at("align").get<std::string>() == "inner"
                            ? markup::market::AlignPolicy::InnerJoin
                            : markup::market::AlignPolicy::ForwardFillCpi;
    std::optional<double> x_override;
    if (cfg.contains("x") && !cfg["x"].is_null()) x_override = cfg["x"].get<double>();

    const auto cpi = markup::market::load_csv(cfg.at("cpi").get<std::string>());

    std::vector<fs::path> firm_files;
    for (const auto& entry : fs::directory_iterator(cfg.at("prices").get<std::string>()))
        if (entry.path().extension() == ".csv") firm_files.push_back(entry.path());
    std::sort(firm_files.begin(), firm_files.end());
    if (firm_files.empty()) throw markup::EmptyFile("no .csv firm files in prices directory");

    std::vector<markup::market::ModelConfig> models;
    const auto params = markup::control::table2_models(u);
    for (int i = 0; i < 3; ++i)
        models.push_back({"model" + std::to_string(i + 1), params[i], lam, s_default, formula});

    auto csv = out.open("table2.csv");
    csv << "firm,model,m_tilde,x_input,s,lambda_mode\n";
    json sidecar;
    sidecar["models"] = json::array();
    for (int i = 0; i < 3; ++i) sidecar["models"].push_back(markup::io::to_json(params[i]));
    sidecar["lambda"] = cfg.at("lambda");
    sidecar["s"] = s_default;
    sidecar["formula"] = cfg.at("formula");
    sidecar["base_date"] = cfg.at("base_date").is_null() ? json{} : cfg.at("base_date");
    sidecar["firms"] = json::array();

    for (const auto& file : firm_files) {
        const std::string firm = file.stem().string();
        const auto prices = markup::market::load_csv(file);
        const auto aligned = markup::market::align(cpi, prices, policy);
        const markup::market::Date base =
            cfg.at("base_date").is_null()
                ? aligned.dates.front()
                : markup::market::parse_date(cfg.at("base_date").get<std::string>(), "%Y-%m-%d");
        const auto dev = markup::market::deviation_series(aligned, base);
        const auto rows = markup::market::firm_report(firm, dev, models, x_override);
        for (const auto& row : rows)
            csv << row.firm << ',' << row.model << ',' << fmt(row.m_tilde) << ','
                << fmt(row.x_input) << ',' << fmt(row.s) << ',' << row.lambda_mode << '\n';
        json entry;
        entry["firm"] = firm;
        entry["base_date"] = base.iso();
        entry["x_input"] = rows.front().x_input;
        sidecar["firms"].push_back(entry);
    }
    markup::io::write_json_file(out.path() / "table2_params.json", sidecar);
    out.write_manifest("table2", cfg);
}

// --- estimate --------------------------------------------------------------------

std::vector<markup::SeriesObservation> load_observations(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw markup::InvalidParams("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw markup::EmptyFile("empty file: " + path.string());
    in.close();

    if (header.rfind("date", 0) == 0) {
        const auto dated = markup::market::load_csv(path);
        std::vector<markup::SeriesObservation> obs(dated.size());
        const double t0 = static_cast<double>(dated.front().date.serial());
        for (std::size_t i = 0; i < dated.size(); ++i) {
            obs[i].s = (static_cast<double>(dated[i].date.serial()) - t0) / 365.25;
            obs[i].x = dated[i].value;
        }
        return obs;
    }
    // Numeric `s,x` schema.
    std::ifstream in2(path);
    std::string line;
    std::getline(in2, line);
    std::vector<markup::SeriesObservation> obs;
    std::int64_t row_no = 1;
    while (std::getline(in2, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw markup::ParseError(row_no, "expected 's,x' row");
        try {
            obs.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
        } catch (const std::exception&) {
            throw markup::ParseError(row_no, "malformed number");
        }
    }
    if (obs.empty()) throw markup::EmptyFile("no data rows in " + path.string());
    return obs;
}

void run_estimate(const json& cfg, OutputDir& out) {
    const auto obs = load_observations(cfg.at("input").get<std::string>());
    std::optional<double> theta;
    if (!cfg.at("theta").is_null()) theta = cfg.at("theta").get<double>();
    const double k = cfg.at("k").get<double>();
    const auto report = markup::estimation::estimate_all(obs, theta, k);
    markup::io::write_json_file(out.path() / "estimate.json", markup::io::to_json(report));
    out.write_manifest("estimate", cfg);
}

// --- replay ------------------------------------------------------------------------

int dispatch(const std::string& subcommand, const json& cfg, OutputDir& out) {
    if (subcommand == "simulate") {
        run_simulate(cfg, out);
    } else if (subcommand == "table1") {
        run_table1(cfg, out);
    } else if (subcommand == "calibrate") {
        run_calibrate(cfg, out);
    } else if (subcommand == "curve") {
        run_curve(cfg, out);
    } else if (subcommand == "validate") {
        return run_validate(cfg, out);
    } else if (subcommand == "table2") {
        run_table2(cfg, out);
    } else if (subcommand == "estimate") {
        run_estimate(cfg, out);
    } else {
        throw markup::InvalidParams("unknown subcommand in manifest: " + subcommand);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jump-diffusion markup model: simulation, control evaluation, estimation"};
    app.require_subcommand(1);
    app.fallthrough();

    int threads = 0;
    app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");

    std::string out_dir = "out";
    std::string config_path, cpi_path, prices_dir, input_path, manifest_path;
    std::string lambda_mode = "zero", formula = "closed-form", suite = "all";
    std::string base_date, align_mode = "ffill";
    std::string calibration_path;
    double s = 1.0, x_probe = 0.87, u = 1.0, dlambda = 0.0, dlambda_ds = 0.0;
    double x_min = 0.0, x_max = 1.0, jump_k = 4.0;
    int grid_n = 100;
    std::uint64_t seed = 0;
    bool summary = false, inject_failure = false, table2_use_probe = false;
    double theta_known = 0.0;
    bool fit_theta = false;

    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    };
    auto add_lambda = [&](CLI::App* cmd) {
        cmd->add_option("--lambda-mode", lambda_mode, "zero | constant | calibrated")
            ->capture_default_str();
        cmd->add_option("--dlambda", dlambda, "dlambda(s) for constant mode")
            ->capture_default_str();
        cmd->add_option("--dlambda-ds", dlambda_ds, "dlambda/ds for constant mode")
            ->capture_default_str();
        cmd->add_option("--calibration", calibration_path,
                        "calibration.json for calibrated mode");
        cmd->add_option("--formula", formula, "closed-form | stationary")
            ->capture_default_str();
        cmd->add_option("--s", s, "Evaluation time s")->capture_default_str();
        cmd->add_option("--u", u, "Long-term mean used by the model rows")
            ->capture_default_str();
    };

    auto* sim = app.add_subcommand("simulate", "Simulate trajectory ensembles");
    sim->add_option("--config", config_path, "Simulation config JSON")->required();
    sim->add_flag("--summary", summary, "Write mean/q05/q95 bands instead of per-path CSVs");
    add_out(sim);

    auto* t1 = app.add_subcommand("table1", "Evaluate the three simulation-study models");
    t1->add_option("--x", x_probe, "State probe")->capture_default_str();
    add_lambda(t1);
    add_out(t1);

    auto* cal = app.add_subcommand("calibrate", "Search constant-lambda configurations");
    cal->add_option("--x", x_probe, "State probe")->capture_default_str();
    cal->add_option("--u", u, "Long-term mean used by the model rows")->capture_default_str();
    add_out(cal);

    auto* curve = app.add_subcommand("curve", "Control curve over an x grid");
    curve->add_option("--config", config_path, "Model params JSON (defaults to the bundled set)");
    curve->add_option("--grid", grid_n, "Number of grid points")->capture_default_str();
    curve->add_option("--x-min", x_min, "Grid start")->capture_default_str();
    curve->add_option("--x-max", x_max, "Grid end")->capture_default_str();
    add_lambda(curve);
    add_out(curve);

    auto* val = app.add_subcommand("validate", "Run Monte Carlo validation suites");
    val->add_option("--suite", suite, "all | martingale | doob | jumps | stationary | lyapunov")
        ->capture_default_str();
    val->add_option("--seed", seed, "Master seed")->capture_default_str();
    val->add_flag("--inject-failure", inject_failure,
                  "Append a deliberately failing check (harness self-test)");
    add_out(val);

    auto* t2 = app.add_subcommand("table2", "Per-firm control table from CPI and price CSVs");
    t2->add_option("--cpi", cpi_path, "CPI CSV (date,value)")->required();
    t2->add_option("--prices", prices_dir, "Directory of firm CSVs")->required();
    t2->add_option("--base-date", base_date, "Rebasing date (default: first aligned date)");
    t2->add_option("--align", align_mode, "inner | ffill")->capture_default_str();
    t2->add_flag("--probe", table2_use_probe, "Use --x instead of the per-firm mean deviation");
    t2->add_option("--x", x_probe, "State probe (with --probe)")->capture_default_str();
    add_lambda(t2);
    add_out(t2);

    auto* est = app.add_subcommand("estimate", "Estimate model parameters from a series");
    est->add_option("--input", input_path, "Series CSV (date,value or s,x)")->required();
    est->add_option("--theta", theta_known, "Known mean-reversion rate");
    est->add_flag("--fit-theta", fit_theta, "Fit theta and sigma by regression");
    est->add_option("--k", jump_k, "Jump detection threshold multiplier")
        ->capture_default_str();
    add_out(est);

    auto* rep = app.add_subcommand("replay", "Re-run a manifest");
    rep->add_option("--manifest", manifest_path, "manifest.json from a previous run")->required();
    add_out(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (threads > 0) omp_set_num_threads(threads);

    try {
        json cfg;
        std::string name;
        if (sim->parsed()) {
            name = "simulate";
            cfg["input"] = markup::io::to_json(
                markup::io::sim_document_from_json(markup::io::load_json_file(config_path)));
            cfg["summary"] = summary;
        } else if (t1->parsed()) {
            name = "table1";
            auto form = markup::control::formula_from_string(formula);
            std::optional<fs::path> calib;
            if (!calibration_path.empty()) calib = calibration_path;
            cfg["lambda"] = lambda_config(lambda_mode, dlambda, dlambda_ds, calib, form, s);
            cfg["formula"] = markup::control::to_string(form);
            cfg["s"] = s;
            cfg["x"] = x_probe;
            cfg["u"] = u;
        } else if (cal->parsed()) {
            name = "calibrate";
            cfg["x"] = x_probe;
            cfg["u"] = u;
        } else if (curve->parsed()) {
            name = "curve";
            auto form = markup::control::formula_from_string(formula);
            std::optional<fs::path> calib;
            if (!calibration_path.empty()) calib = calibration_path;
            cfg["lambda"] = lambda_config(lambda_mode, dlambda, dlambda_ds, calib, form, s);
            cfg["formula"] = markup::control::to_string(form);
            cfg["s"] = s;
            cfg["grid"] = grid_n;
            cfg["x_min"] = x_min;
            cfg["x_max"] = x_max;
            cfg["model"] = config_path.empty()
                               ? markup::io::to_json(markup::control::curve_params(u))
                               : markup::io::load_json_file(config_path);
        } else if (val->parsed()) {
            name = "validate";
            cfg["suite"] = suite;
            cfg["seed"] = seed;
            cfg["inject_failure"] = inject_failure;
        } else if (t2->parsed()) {
            name = "table2";
            auto form = markup::control::formula_from_string(formula);
            std::optional<fs::path> calib;
            if (!calibration_path.empty()) calib = calibration_path;
            cfg["lambda"] = lambda_config(lambda_mode, dlambda, dlambda_ds, calib, form, s);
            cfg["formula"] = markup::control::to_string(form);
            cfg["s"] = s;
            cfg["u"] = u;
            cfg["cpi"] = cpi_path;
            cfg["prices"] = prices_dir;
            cfg["align"] = align_mode;
            cfg["base_date"] = base_date.empty() ? json{} : json(base_date);
            if (table2_use_probe) cfg["x"] = x_probe;
        } else if (est->parsed()) {
            name = "estimate";
            if (fit_theta == (est->count("--theta") > 0))
                throw markup::InvalidParams("estimate needs exactly one of --theta or --fit-theta");
            cfg["input"] = input_path;
            cfg["theta"] = fit_theta ? json{} : json(theta_known);
            cfg["k"] = jump_k;
        } else if (rep->parsed()) {
            const auto manifest = markup::io::load_json_file(manifest_path);
            OutputDir out{fs::path(out_dir)};
            return dispatch(manifest.at("subcommand").get<std::string>(), manifest.at("config"),
                            out);
        }

        OutputDir out{fs::path(out_dir)};
        return dispatch(name, cfg, out);
    } catch (const markup::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const markup::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
}
