#include "markup/json_io.hpp"

#include <charconv>
#include <fstream>

namespace markup::io {

namespace {

double require_number(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_number())
        throw InvalidParams(std::string("config needs numeric field '") + key + "'");
    return doc[key].get<double>();
}

double number_or(const json& doc, const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number())
        throw InvalidParams(std::string("field '") + key + "' must be numeric");
    return doc[key].get<double>();
}

}  // namespace

json to_json(const ModelParams& p) {
    return {{"theta_tilde", p.theta_tilde}, {"u", p.u},     {"sigma", p.sigma},
            {"rho", p.rho},                 {"xi", p.xi},   {"phi", p.phi},
            {"c0", p.c0}};
}

json to_json(const JumpSpec& j) {
    return {{"nu", j.nu},
            {"gamma", j.gamma},
            {"sigma_j", j.sigma_j},
            {"size_dist", j.size_dist == JumpSizeDist::Normal ? "normal" : "constant"}};
}

json to_json(const SimConfig& cfg) {
    return {{"dt", cfg.dt},
            {"horizon", cfg.horizon},
            {"n_paths", cfg.n_paths},
            {"seed", cfg.seed},
            {"x0", cfg.x0},
            {"negativity_scheme",
             cfg.negativity_scheme == NegativityScheme::FullTruncation ? "full_truncation"
                                                                       : "reflection"}};
}

json to_json(const LambdaSpec& lam) {
    switch (lam.mode) {
        case LambdaSpec::Mode::Zero: return {{"mode", "zero"}};
        case LambdaSpec::Mode::Constant:
            return {{"mode", "constant"},
                    {"dlambda", lam.dlambda},
                    {"dlambda_ds", lam.dlambda_ds}};
        case LambdaSpec::Mode::Tabulated: break;
    }
    return {{"mode", "tabulated"},
            {"s", lam.grid_s},
            {"dlambda", lam.grid_dlambda},
            {"dlambda_ds", lam.grid_dlambda_ds}};
}

json to_json(const validation::CheckResult& r) {
    return {{"name", r.name},           {"statistic", r.statistic},
            {"target", r.target},       {"tolerance", r.tolerance},
            {"passed", r.passed},       {"n_samples", r.n_samples},
            {"seed", r.seed}};
}

namespace {

json estimate_to_json(const std::optional<estimation::EstimateValue>& v) {
    if (!v) return nullptr;
    return {{"value", v->value}, {"std_error", v->std_error}};
}

}  // namespace

json to_json(const estimation::EstimateReport& report) {
    return {{"u_hat", estimate_to_json(report.u_hat)},
            {"theta_hat", estimate_to_json(report.theta_hat)},
            {"sigma_hat", estimate_to_json(report.sigma_hat)},
            {"nu_hat", estimate_to_json(report.nu_hat)},
            {"gamma_hat", estimate_to_json(report.gamma_hat)},
            {"sigma_j_hat", estimate_to_json(report.sigma_j_hat)},
            {"n_obs", report.n_obs}};
}

json to_json(const control::CalibrationResult& r) {
    return {{"formula", control::to_string(r.formula)},
            {"s", r.s},
            {"dlambda", r.dlambda},
            {"dlambda_ds", r.dlambda_ds},
            {"m_tilde", r.m_tilde},
            {"max_abs_error", r.max_abs_error},
            {"ordered", r.ordered}};
}

control::CalibrationResult calibration_from_json(const json& doc) {
    control::CalibrationResult r;
    r.formula = control::formula_from_string(doc.at("formula").get<std::string>());
    r.s = doc.at("s").get<double>();
    r.dlambda = doc.at("dlambda").get<double>();
    r.dlambda_ds = doc.at("dlambda_ds").get<double>();
    const auto mt = doc.at("m_tilde");
    for (int i = 0; i < 3; ++i) r.m_tilde[i] = mt.at(i).get<double>();
    r.max_abs_error = doc.at("max_abs_error").get<double>();
    r.ordered = doc.at("ordered").get<bool>();
    return r;
}

ModelParams model_params_from_json(const json& doc) {
    ModelParams p;
    p.theta_tilde = require_number(doc, "theta_tilde");
    p.u = require_number(doc, "u");
    p.sigma = require_number(doc, "sigma");
    p.rho = require_number(doc, "rho");
    p.xi = require_number(doc, "xi");
    p.phi = require_number(doc, "phi");
    p.c0 = require_number(doc, "c0");
    p.validate();
    return p;
}

JumpSpec jump_spec_from_json(const json& doc) {
    JumpSpec j;
    j.nu = number_or(doc, "nu", 0.0);
    j.gamma = number_or(doc, "gamma", 0.0);
    j.sigma_j = number_or(doc, "sigma_j", 0.0);
    if (doc.contains("size_dist")) {
        const auto name = doc["size_dist"].get<std::string>();
        if (name == "normal")
            j.size_dist = JumpSizeDist::Normal;
        else if (name == "constant")
            j.size_dist = JumpSizeDist::Constant;
        else
            throw InvalidParams("size_dist must be 'normal' or 'constant'");
    }
    j.validate();
    return j;
}

SimConfig sim_config_from_json(const json& doc) {
    SimConfig cfg;
    cfg.dt = require_number(doc, "dt");
    cfg.horizon = require_number(doc, "horizon");
    cfg.n_paths = static_cast<std::int64_t>(number_or(doc, "n_paths", 1));
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    cfg.x0 = require_number(doc, "x0");
    if (doc.contains("negativity_scheme")) {
        const auto name = doc["negativity_scheme"].get<std::string>();
        if (name == "full_truncation")
            cfg.negativity_scheme = NegativityScheme::FullTruncation;
        else if (name == "reflection")
            cfg.negativity_scheme = NegativityScheme::Reflection;
        else
            throw InvalidParams("negativity_scheme must be 'full_truncation' or 'reflection'");
    }
    cfg.validate();
    return cfg;
}

LambdaSpec lambda_spec_from_json(const json& doc) {
    const auto mode = doc.at("mode").get<std::string>();
    if (mode == "zero") return LambdaSpec::zero();
    if (mode == "constant")
        return LambdaSpec::constant(number_or(doc, "dlambda", 0.0),
                                    number_or(doc, "dlambda_ds", 0.0));
    if (mode == "tabulated")
        return LambdaSpec::tabulated(doc.at("s").get<std::vector<double>>(),
                                     doc.at("dlambda").get<std::vector<double>>(),
                                     doc.at("dlambda_ds").get<std::vector<double>>());
    throw InvalidParams("lambda mode must be zero, constant or tabulated");
}

SimDocument sim_document_from_json(const json& doc) {
    SimDocument out;
    out.model = model_params_from_json(doc.at("model"));
    out.jumps = doc.contains("jumps") ? jump_spec_from_json(doc["jumps"]) : JumpSpec{};
    out.sim = sim_config_from_json(doc.at("sim"));
    if (doc.contains("policy")) {
        const auto& pol = doc["policy"];
        const auto type = pol.at("type").get<std::string>();
        if (type == "constant")
            out.constant_policy = pol.at("value").get<double>();
        else if (type != "zero")
            throw InvalidParams("policy type must be 'zero' or 'constant'");
    }
    return out;
}

json to_json(const SimDocument& doc) {
    json out;
    out["model"] = to_json(doc.model);
    out["jumps"] = to_json(doc.jumps);
    out["sim"] = to_json(doc.sim);
    out["policy"] = doc.constant_policy == 0.0
                        ? json{{"type", "zero"}}
                        : json{{"type", "constant"}, {"value", doc.constant_policy}};
    return out;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParams("cannot open " + path.string());
    json doc;
    in >> doc;
    return doc;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

}  // namespace markup::io
