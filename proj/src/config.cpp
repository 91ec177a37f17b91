#include "nsmi/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "nsmi/errors.hpp"

namespace nsmi {

ReconMethod recon_method_from_string(const std::string& s) {
    if (s == "fbp") return ReconMethod::Fbp;
    if (s == "pinv") return ReconMethod::Pinv;
    if (s == "ddmm") return ReconMethod::Ddmm;
    throw ConfigError("unknown method '" + s + "' (expected fbp|pinv|ddmm)");
}

DenoiserKind denoiser_kind_from_string(const std::string& s) {
    if (s == "gaussian") return DenoiserKind::Gaussian;
    if (s == "external") return DenoiserKind::External;
    throw ConfigError("unknown denoiser '" + s + "' (expected gaussian|external)");
}

namespace {

std::string method_name(ReconMethod m) {
    switch (m) {
        case ReconMethod::Fbp: return "fbp";
        case ReconMethod::Pinv: return "pinv";
        case ReconMethod::Ddmm: return "ddmm";
    }
    return "";
}

using Setter = std::function<void(ExperimentConfig&, const nlohmann::json&)>;

template <typename T, typename Field>
Setter field(Field ExperimentConfig::*member) {
    return [member](ExperimentConfig& c, const nlohmann::json& v) {
        c.*member = static_cast<Field>(v.get<T>());
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"method", [](ExperimentConfig& c, const nlohmann::json& v) {
             c.method = recon_method_from_string(v.get<std::string>());
         }},
        {"mode", [](ExperimentConfig& c, const nlohmann::json& v) {
             c.mode = nsmi_mode_from_string(v.get<std::string>());
         }},
        {"stepper", [](ExperimentConfig& c, const nlohmann::json& v) {
             c.stepper = stepper_from_string(v.get<std::string>());
         }},
        {"steps", field<int>(&ExperimentConfig::steps)},
        {"T", field<int>(&ExperimentConfig::T)},
        {"beta_start", field<double>(&ExperimentConfig::beta_start)},
        {"beta_end", field<double>(&ExperimentConfig::beta_end)},
        {"eta", field<double>(&ExperimentConfig::eta)},
        {"sigma_n", field<double>(&ExperimentConfig::sigma_n)},
        {"seed", field<std::uint64_t>(&ExperimentConfig::seed)},
        {"tol", field<double>(&ExperimentConfig::tol)},
        {"max_iter", field<int>(&ExperimentConfig::max_iter)},
        {"size", field<std::size_t>(&ExperimentConfig::size)},
        {"angles", field<std::size_t>(&ExperimentConfig::angles)},
        {"detectors", field<std::size_t>(&ExperimentConfig::detectors)},
        {"noise_std", field<double>(&ExperimentConfig::noise_std)},
        {"filter", [](ExperimentConfig& c, const nlohmann::json& v) {
             try {
                 c.filter = fbp_filter_from_string(v.get<std::string>());
             } catch (const ParameterError& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"denoiser", [](ExperimentConfig& c, const nlohmann::json& v) {
             c.denoiser = denoiser_kind_from_string(v.get<std::string>());
         }},
        {"endpoint", field<std::string>(&ExperimentConfig::endpoint)},
        {"timeout_ms", field<int>(&ExperimentConfig::timeout_ms)},
        {"prior_count", field<int>(&ExperimentConfig::prior_count)},
        {"prior_seed", field<std::uint64_t>(&ExperimentConfig::prior_seed)},
        {"prior_min_variance", field<double>(&ExperimentConfig::prior_min_variance)},
        {"input", [](ExperimentConfig& c, const nlohmann::json& v) { c.input = v.get<std::string>(); }},
        {"output", [](ExperimentConfig& c, const nlohmann::json& v) { c.output = v.get<std::string>(); }},
        {"condition", [](ExperimentConfig& c, const nlohmann::json& v) {
             c.condition = v.get<std::string>();
         }},
    };
    return table;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (T < 2) throw ConfigError("T must be >= 2");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw ConfigError("need 0 < beta_start <= beta_end < 1");
    }
    if (size < 8) throw ConfigError("size must be >= 8");
    if (angles < 1) throw ConfigError("angles must be >= 1");
    if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
    if (prior_count < 1) throw ConfigError("prior_count must be >= 1");
    if (!(prior_min_variance > 0.0)) throw ConfigError("prior_min_variance must be > 0");
    if (timeout_ms <= 0) throw ConfigError("timeout_ms must be > 0");
    if (method == ReconMethod::Ddmm && denoiser == DenoiserKind::External && endpoint.empty()) {
        throw ConfigError("external denoiser needs --endpoint or NSMI_DENOISER_ENDPOINT");
    }
    if (!(tol > 0.0) || max_iter < 1) throw ConfigError("tol must be > 0 and max_iter >= 1");
    if (method == ReconMethod::Ddmm) {
        if (stepper == Stepper::Ddim && (steps < 1 || steps > T)) {
            throw ConfigError("steps must lie in [1, T]");
        }
        if (mode == NsmiMode::Noisy && !(sigma_n > 0.0)) {
            throw ConfigError("noisy mode requires sigma_n > 0");
        }
        if (mode == NsmiMode::Noisy && stepper == Stepper::Ddim) {
            throw ConfigError("noisy mode is only defined for the ddpm stepper");
        }
        if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must lie in [0, 1]");
    }
}

SamplerConfig ExperimentConfig::sampler_config() const {
    SamplerConfig sc;
    sc.mode = mode;
    sc.stepper = stepper;
    sc.ddim_steps = steps;
    sc.eta = eta;
    sc.sigma_n = sigma_n;
    sc.seed = seed;
    sc.solver = SolverOptions{tol, max_iter};
    return sc;
}

void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const auto& table = setters();
    for (const auto& [key, value] : j.items()) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    ExperimentConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    return {
        {"method", method_name(c.method)},
        {"mode", to_string(c.mode)},
        {"stepper", to_string(c.stepper)},
        {"steps", c.steps},
        {"T", c.T},
        {"beta_start", c.beta_start},
        {"beta_end", c.beta_end},
        {"eta", c.eta},
        {"sigma_n", c.sigma_n},
        {"seed", c.seed},
        {"tol", c.tol},
        {"max_iter", c.max_iter},
        {"size", c.size},
        {"angles", c.angles},
        {"detectors", c.detectors},
        {"noise_std", c.noise_std},
        {"filter", c.filter == FbpFilter::RamLak ? "ram-lak" : "none"},
        {"denoiser", c.denoiser == DenoiserKind::Gaussian ? "gaussian" : "external"},
        {"endpoint", c.endpoint},
        {"prior_count", c.prior_count},
        {"prior_seed", c.prior_seed},
        {"prior_min_variance", c.prior_min_variance},
    };
}

}  // namespace nsmi
