#include "nsmi/cli.hpp"

#include <cstdlib>
#include <map>
#include <memory>
#include <ostream>

#include "CLI11.hpp"

#include "nsmi/config.hpp"
#include "nsmi/denoiser.hpp"
#include "nsmi/errors.hpp"
#include "nsmi/external_denoiser.hpp"
#include "nsmi/io.hpp"
#include "nsmi/metrics.hpp"
#include "nsmi/nsmi_block.hpp"
#include "nsmi/phantom.hpp"
#include "nsmi/radon.hpp"
#include "nsmi/sampler.hpp"

namespace nsmi::cli {

namespace {

struct Flags {
    std::string config_path;
    std::string method, mode, stepper, denoiser, endpoint, filter;
    int steps = 0, T = 0, max_iter = 0, timeout_ms = 0, prior_count = 0;
    double sigma_n = 0, eta = 0, tol = 0, beta_start = 0, beta_end = 0, noise_std = 0;
    std::uint64_t seed = 0, prior_seed = 0;
    std::size_t size = 0, angles = 0, detectors = 0;
    std::string input, output, condition;
};

// Registers the experiment flags shared by the subcommands; file values are
// overridden only by flags actually present on the command line.
class FlagBinder {
public:
    FlagBinder(CLI::App* app, Flags& f) : app_(app), f_(f) {}

    template <typename T>
    CLI::Option* add(const std::string& name, T& var, const std::string& help) {
        CLI::Option* opt = app_->add_option(name, var, help);
        opts_.push_back(opt);
        return opt;
    }

    bool given(const std::string& name) const {
        const CLI::Option* o = app_->get_option_no_throw(name);
        return o && o->count() > 0;
    }

private:
    CLI::App* app_;
    Flags& f_;
    std::vector<CLI::Option*> opts_;
};

ExperimentConfig resolve_config(const FlagBinder& b, const Flags& f) {
    ExperimentConfig cfg = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
    if (const char* env = std::getenv("NSMI_DENOISER_ENDPOINT"); env && cfg.endpoint.empty()) {
        cfg.endpoint = env;
    }
    if (b.given("--method")) cfg.method = recon_method_from_string(f.method);
    if (b.given("--mode")) cfg.mode = nsmi_mode_from_string(f.mode);
    if (b.given("--stepper")) cfg.stepper = stepper_from_string(f.stepper);
    if (b.given("--steps")) cfg.steps = f.steps;
    if (b.given("--T")) cfg.T = f.T;
    if (b.given("--beta-start")) cfg.beta_start = f.beta_start;
    if (b.given("--beta-end")) cfg.beta_end = f.beta_end;
    if (b.given("--eta")) cfg.eta = f.eta;
    if (b.given("--sigma-n")) cfg.sigma_n = f.sigma_n;
    if (b.given("--seed")) cfg.seed = f.seed;
    if (b.given("--tol")) cfg.tol = f.tol;
    if (b.given("--max-iter")) cfg.max_iter = f.max_iter;
    if (b.given("--size")) cfg.size = f.size;
    if (b.given("--angles")) cfg.angles = f.angles;
    if (b.given("--detectors")) cfg.detectors = f.detectors;
    if (b.given("--noise-std")) cfg.noise_std = f.noise_std;
    if (b.given("--filter")) {
        try {
            cfg.filter = fbp_filter_from_string(f.filter);
        } catch (const ParameterError& e) {
            throw ConfigError(e.what());
        }
    }
    if (b.given("--denoiser")) cfg.denoiser = denoiser_kind_from_string(f.denoiser);
    if (b.given("--endpoint")) cfg.endpoint = f.endpoint;
    if (b.given("--timeout-ms")) cfg.timeout_ms = f.timeout_ms;
    if (b.given("--prior-count")) cfg.prior_count = f.prior_count;
    if (b.given("--prior-seed")) cfg.prior_seed = f.prior_seed;
    if (b.given("-i")) cfg.input = f.input;
    if (b.given("-o")) cfg.output = f.output;
    if (b.given("--condition")) cfg.condition = f.condition;
    if (!b.given("--steps") && cfg.steps > cfg.T) cfg.steps = cfg.T;
    cfg.validate();
    return cfg;
}

void require_path(const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("missing ") + what);
}

GaussianPrior default_prior(const ExperimentConfig& cfg, std::size_t size) {
    return fit_gaussian_prior(phantom_family(size, cfg.prior_count, cfg.prior_seed),
                              cfg.prior_min_variance);
}

int cmd_phantom(const ExperimentConfig& cfg, const std::string& kind,
                const std::string& condition_out, std::ostream& out) {
    require_path(cfg.output, "output path (-o)");
    Image img;
    if (kind == "shepp-logan") {
        img = shepp_logan(cfg.size);
    } else if (kind == "random") {
        PhantomSpec spec;
        spec.size = cfg.size;
        spec.seed = cfg.seed;
        img = random_phantom(spec);
    } else {
        throw ConfigError("unknown phantom kind '" + kind + "' (expected shepp-logan|random)");
    }
    io::write_image(cfg.output, img, {{"phantom", kind}, {"seed", cfg.seed}});
    if (!condition_out.empty()) {
        io::write_image(condition_out, make_condition_pair(img, cfg.seed),
                        {{"condition_of", cfg.output.string()}, {"seed", cfg.seed}});
    }
    out << "wrote " << cfg.output.string() << " (" << img.height() << "x" << img.width() << ")\n";
    return kOk;
}

int cmd_project(const ExperimentConfig& cfg, std::ostream& out) {
    require_path(cfg.input, "input image (-i)");
    require_path(cfg.output, "output path (-o)");
    const Image img = io::read_image(cfg.input);
    if (img.height() != img.width()) throw ConfigError("project expects a square image");
    const RadonOperator op = RadonOperator::uniform(img.height(), cfg.angles, cfg.detectors);
    const Sinogram y = simulate_measurement(op, img, cfg.noise_std, cfg.seed);
    io::write_sinogram(cfg.output, y, img.height(),
                       {{"noise_std", cfg.noise_std}, {"seed", cfg.seed}});
    out << "wrote " << cfg.output.string() << " (" << y.n_angles() << " angles x "
        << y.n_detectors() << " detectors)\n";
    return kOk;
}

int cmd_reconstruct(const ExperimentConfig& cfg, const std::string& trace_path, std::ostream& out) {
    require_path(cfg.input, "input sinogram (-i)");
    require_path(cfg.output, "output path (-o)");
    const io::SinogramFile file = io::read_sinogram(cfg.input);
    const Sinogram& y = file.sinogram;
    if (y.angles().empty()) throw IoError("sinogram sidecar lacks angles");
    const RadonOperator op(file.image_size, y.angles(), y.n_detectors());

    Image result;
    nlohmann::json meta = to_json(cfg);
    for (const char* key : {"endpoint", "size", "angles", "detectors", "noise_std", "input",
                            "output", "condition"}) {
        meta.erase(key);
    }
    if (cfg.method == ReconMethod::Fbp) {
        result = fbp_reconstruct(op, y, cfg.filter);
    } else if (cfg.method == ReconMethod::Pinv) {
        result = op.pinv_apply(y, {cfg.tol, cfg.max_iter}).clamped();
    } else {
        const auto schedule = std::make_shared<const NoiseSchedule>(
            build_linear_schedule(cfg.T, cfg.beta_start, cfg.beta_end));
        std::unique_ptr<Denoiser> denoiser;
        if (cfg.denoiser == DenoiserKind::Gaussian) {
            denoiser = std::make_unique<GaussianDenoiser>(default_prior(cfg, file.image_size), schedule);
        } else {
            auto stream = FdStream::connect(cfg.endpoint);
            stream->set_timeout(std::chrono::milliseconds(cfg.timeout_ms));
            denoiser = std::make_unique<ExternalDenoiser>(std::move(stream));
        }
        std::optional<ConditionImage> cond;
        if (!cfg.condition.empty()) cond = ConditionImage{io::read_image(cfg.condition)};
        const SampleResult res = reverse_sample(*schedule, op, y, *denoiser,
                                                cond ? &*cond : nullptr, cfg.sampler_config());
        result = res.image;
        if (!trace_path.empty()) {
            nlohmann::json tj = nlohmann::json::array();
            for (const auto& e : res.trace.entries) {
                tj.push_back({{"t", e.t},
                              {"residual", e.residual},
                              {"relative_residual", e.relative_residual},
                              {"seconds", e.seconds}});
            }
            std::ofstream tf(trace_path);
            if (!tf) throw IoError("cannot write trace " + trace_path);
            tf << tj.dump(1) << '\n';
        }
    }
    io::write_image(cfg.output, result, meta);
    out << "wrote " << cfg.output.string() << '\n';
    return kOk;
}

int cmd_evaluate(const std::string& truth_path, const std::vector<std::string>& recon_paths,
                 double data_range, std::ostream& out) {
    if (truth_path.empty() || recon_paths.empty()) {
        throw ConfigError("evaluate needs --truth and at least one --recon");
    }
    const Image truth = io::read_image(truth_path);
    SsimOptions so;
    so.data_range = data_range;
    const int min_dim = static_cast<int>(std::min(truth.height(), truth.width()));
    if (min_dim < so.window) so.window = min_dim % 2 == 1 ? min_dim : min_dim - 1;

    MetricsRow row;
    row.label = std::filesystem::path(truth_path).filename().string();
    for (const auto& p : recon_paths) {
        const Image rec = io::read_image(p);
        row.psnr.push_back(psnr(rec, truth, data_range));
        row.ssim.push_back(ssim(rec, truth, so));
    }
    std::tie(row.psnr_mean, row.psnr_std) = mean_std(row.psnr);
    std::tie(row.ssim_mean, row.ssim_std) = mean_std(row.ssim);
    MetricsTable table;
    table.data_range = data_range;
    table.ssim_window = so.window;
    table.ssim_sigma = so.sigma;
    table.rows.push_back(row);
    out << table.format();
    for (std::size_t i = 0; i < recon_paths.size(); ++i) {
        out << "  " << recon_paths[i] << "  psnr=" << row.psnr[i] << "  ssim=" << row.ssim[i] << '\n';
    }
    return kOk;
}

int cmd_schedule_dump(const ExperimentConfig& cfg, int every, std::ostream& out) {
    const NoiseSchedule s = build_linear_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
    const NoisyNsmiParams p = compute_gamma_phi(s, cfg.sigma_n);
    char buf[256];
    out << "# T=" << cfg.T << " beta_start=" << cfg.beta_start << " beta_end=" << cfg.beta_end
        << " sigma_n=" << cfg.sigma_n << '\n';
    std::snprintf(buf, sizeof(buf), "%6s %14s %14s %14s %14s %14s\n", "t", "beta", "alpha_bar",
                  "sigma", "gamma", "phi");
    out << buf;
    for (int t = 1; t <= s.T(); ++t) {
        if (every > 1 && t % every != 0 && t != 1 && t != s.T()) continue;
        std::snprintf(buf, sizeof(buf), "%6d %14.8e %14.8e %14.8e %14.8e %14.8e\n", t, s.beta(t),
                      s.alpha_bar(t), s.sigma(t), p.gamma[t], p.phi[t]);
        out << buf;
    }
    return kOk;
}

int cmd_serve(const ExperimentConfig& cfg, const std::string& listen, bool stdio,
              const std::string& model) {
    const auto schedule = std::make_shared<const NoiseSchedule>(
        build_linear_schedule(cfg.T, cfg.beta_start, cfg.beta_end));
    if (model != "gaussian" && model != "zero") {
        throw ConfigError("unknown model '" + model + "' (expected gaussian|zero)");
    }
    std::map<std::pair<std::uint32_t, std::uint32_t>, GaussianPrior> priors;
    const RequestHandler handler = [&](const protocol::Request& req) {
        std::vector<float> eps(req.x_t.size(), 0.0f);
        if (model == "zero") return eps;
        if (req.t < 1 || req.t > static_cast<std::uint32_t>(schedule->T())) {
            throw ParameterError("timestep " + std::to_string(req.t) + " outside schedule");
        }
        const auto key = std::make_pair(req.height, req.width);
        auto it = priors.find(key);
        if (it == priors.end()) {
            if (req.height != req.width) throw ShapeError("gaussian model serves square images only");
            it = priors.emplace(key, default_prior(cfg, req.height)).first;
        }
        Image x(req.height, req.width, std::vector<double>(req.x_t.begin(), req.x_t.end()));
        const Image e = gaussian_predict_eps(it->second, *schedule, x, static_cast<int>(req.t));
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = static_cast<float>(e[i]);
        return eps;
    };
    if (stdio) {
        FdStream stream(::dup(0), ::dup(1));
        serve_stream(stream, handler);
        return kOk;
    }
    if (listen.empty()) throw ConfigError("serve needs --listen ADDR or --stdio");
    serve_listen(listen, handler);
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Measurement-embedded diffusion sampling for sparse-view CT", "nsmi"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&](CLI::App* sub, FlagBinder& b) {
        sub->add_option("--config", f.config_path, "JSON config; flags override its values");
        b.add("--seed", f.seed, "RNG seed");
    };

    auto* phantom = app.add_subcommand("phantom", "render a phantom image");
    FlagBinder bp(phantom, f);
    add_common(phantom, bp);
    std::string kind = "shepp-logan", condition_out;
    bp.add("--size", f.size, "image size N");
    bp.add("-o,--output", f.output, "output .f32 path");
    phantom->add_option("--kind", kind, "shepp-logan | random");
    phantom->add_option("--condition-out", condition_out, "also write a synthetic condition image");

    auto* project = app.add_subcommand("project", "simulate a parallel-beam sinogram");
    FlagBinder bj(project, f);
    add_common(project, bj);
    bj.add("--angles", f.angles, "number of projections over 180 degrees");
    bj.add("--detectors", f.detectors, "detector bins (0 = image size)");
    bj.add("--noise-std", f.noise_std, "additive Gaussian noise std per sinogram value");
    bj.add("-i,--input", f.input, "input image");
    bj.add("-o,--output", f.output, "output sinogram");

    auto* recon = app.add_subcommand("reconstruct", "reconstruct an image from a sinogram");
    FlagBinder br(recon, f);
    add_common(recon, br);
    std::string trace_path;
    br.add("--method", f.method, "fbp | pinv | ddmm");
    br.add("--mode", f.mode, "noiseless | noisy");
    br.add("--stepper", f.stepper, "ddpm | ddim");
    br.add("--steps", f.steps, "DDIM steps");
    br.add("--T", f.T, "diffusion steps of the schedule");
    br.add("--beta-start", f.beta_start, "first beta of the linear schedule");
    br.add("--beta-end", f.beta_end, "last beta of the linear schedule");
    br.add("--eta", f.eta, "DDIM stochasticity in [0, 1]");
    br.add("--sigma-n", f.sigma_n, "image-domain measurement noise std (noisy mode)");
    br.add("--tol", f.tol, "pseudo-inverse relative tolerance");
    br.add("--max-iter", f.max_iter, "pseudo-inverse iteration cap");
    br.add("--filter", f.filter, "FBP filter: ram-lak | none");
    br.add("--denoiser", f.denoiser, "gaussian | external");
    br.add("--endpoint", f.endpoint, "external denoiser: unix:PATH | tcp:HOST:PORT | exec:CMD");
    br.add("--timeout-ms", f.timeout_ms, "external denoiser timeout");
    br.add("--prior-count", f.prior_count, "phantoms used to fit the Gaussian prior");
    br.add("--prior-seed", f.prior_seed, "first seed of the prior phantom family");
    br.add("-i,--input", f.input, "input sinogram");
    br.add("-o,--output", f.output, "output image");
    br.add("--condition", f.condition, "condition image passed to the denoiser");
    recon->add_option("--trace", trace_path, "write per-step residual trace as JSON");

    auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM of reconstructions");
    std::string truth_path;
    std::vector<std::string> recon_paths;
    double data_range = 1.0;
    evaluate->add_option("--truth", truth_path, "ground-truth image")->required();
    evaluate->add_option("--recon", recon_paths, "reconstruction(s), one per seed")->required();
    evaluate->add_option("--data-range", data_range, "PSNR/SSIM data range");

    auto* sdump = app.add_subcommand("schedule-dump", "print beta/alpha_bar/sigma/gamma/phi");
    FlagBinder bs(sdump, f);
    int every = 1;
    bs.add("--T", f.T, "diffusion steps");
    bs.add("--beta-start", f.beta_start, "first beta");
    bs.add("--beta-end", f.beta_end, "last beta");
    bs.add("--sigma-n", f.sigma_n, "image-domain measurement noise std");
    sdump->add_option("--every", every, "print every k-th step");

    auto* serve = app.add_subcommand("serve", "answer denoiser protocol requests with the Gaussian prior");
    FlagBinder bv(serve, f);
    add_common(serve, bv);
    std::string listen, model = "gaussian";
    bool stdio = false;
    bv.add("--T", f.T, "diffusion steps");
    bv.add("--beta-start", f.beta_start, "first beta");
    bv.add("--beta-end", f.beta_end, "last beta");
    bv.add("--prior-count", f.prior_count, "phantoms used to fit the Gaussian prior");
    bv.add("--prior-seed", f.prior_seed, "first seed of the prior phantom family");
    serve->add_option("--listen", listen, "unix:PATH | tcp:PORT");
    serve->add_flag("--stdio", stdio, "speak the protocol on stdin/stdout");
    serve->add_option("--model", model, "gaussian | zero");

    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    }

    try {
        if (*phantom) return cmd_phantom(resolve_config(bp, f), kind, condition_out, out);
        if (*project) return cmd_project(resolve_config(bj, f), out);
        if (*recon) return cmd_reconstruct(resolve_config(br, f), trace_path, out);
        if (*evaluate) return cmd_evaluate(truth_path, recon_paths, data_range, out);
        if (*sdump) return cmd_schedule_dump(resolve_config(bs, f), every, out);
        if (*serve) return cmd_serve(resolve_config(bv, f), listen, stdio, model);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const ParameterError& e) {
        err << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const ConvergenceError& e) {
        err << "solver error: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const DenoiserError& e) {
        err << "denoiser error: " << e.what() << '\n';
        return kDenoiserFailure;
    } catch (const ShapeError& e) {
        err << "shape error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kGenericFailure;
    }
    return kGenericFailure;
}

}  // namespace nsmi::cli
