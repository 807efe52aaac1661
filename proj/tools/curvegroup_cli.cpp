// Command-line driver for the curvegroup pipeline. Links the public C API
// only; everything here is argument plumbing, config files, and filesystem
// layout.
#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "curvegroup.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void ok_or_throw(cg_status status, const std::string& what) {
    if (status != CG_OK) throw CliError(what + ": " + cg_last_error());
}

template <typename T, void (*Free)(T*)>
struct HandleDeleter {
    void operator()(T* p) const { Free(p); }
};
using ImagePtr = std::unique_ptr<cg_image, HandleDeleter<cg_image, cg_image_free>>;
using MaskPtr = std::unique_ptr<cg_mask, HandleDeleter<cg_mask, cg_mask_free>>;
using LiftedPtr = std::unique_ptr<cg_lifted, HandleDeleter<cg_lifted, cg_lifted_free>>;
using BankPtr = std::unique_ptr<cg_bank, HandleDeleter<cg_bank, cg_bank_free>>;
using ResultPtr = std::unique_ptr<cg_result, HandleDeleter<cg_result, cg_result_free>>;
using PhantomPtr = std::unique_ptr<cg_phantom, HandleDeleter<cg_phantom, cg_phantom_free>>;
using LabelsPtr = std::unique_ptr<cg_labels, HandleDeleter<cg_labels, cg_labels_free>>;

std::string take_string(char* s) {
    std::string out = s ? s : "";
    cg_string_free(s);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Tracks parameters from defaults, an optional JSON config file, and
// explicit command-line flags (flags win); serializes the resolved
// configuration next to the outputs so a run is reproducible from it.
class RunConfig {
public:
    explicit RunConfig(std::string subcommand) { resolved_["subcommand"] = std::move(subcommand); }

    void load_file(const std::string& path) {
        if (path.empty()) return;
        try {
            file_ = json::parse(read_text(path));
        } catch (const json::exception& e) {
            throw CliError("config file " + path + ": " + e.what());
        }
    }

    template <typename T>
    T resolve(const CLI::Option* opt, const std::string& key, T defaulted, T cli_value) {
        T value = defaulted;
        if (file_.contains(key)) {
            try {
                value = file_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw CliError("config key '" + key + "': " + e.what());
            }
        }
        if (opt && opt->count() > 0) value = cli_value;
        resolved_[key] = value;
        return value;
    }

    void note(const std::string& key, const json& value) { resolved_[key] = value; }

    void write(const fs::path& path) const { write_text(path, resolved_.dump(2) + "\n"); }

private:
    json file_;
    json resolved_;
};

cg_lift_params lift_defaults() {
    cg_lift_params p;
    cg_lift_params_init(&p);
    return p;
}

struct LiftFlags {
    int n_theta;
    int filter_size;
    std::vector<double> scales;
    double beta;
    double kappa_cap;
    double angular_sigma;

    LiftFlags() {
        const cg_lift_params d = lift_defaults();
        n_theta = d.n_theta;
        filter_size = d.filter_size;
        scales.assign(d.scales, d.scales + d.n_scales);
        beta = d.beta;
        kappa_cap = d.kappa_cap;
        angular_sigma = d.angular_sigma_bins;
    }

    cg_lift_params params() const {
        cg_lift_params p = lift_defaults();
        p.n_theta = n_theta;
        p.filter_size = filter_size;
        if (scales.empty() || scales.size() > 8) throw CliError("--scales expects 1..8 values");
        p.n_scales = static_cast<int>(scales.size());
        for (std::size_t i = 0; i < scales.size(); ++i) p.scales[i] = scales[i];
        p.beta = beta;
        p.kappa_cap = kappa_cap;
        p.angular_sigma_bins = angular_sigma;
        return p;
    }

    struct Opts {
        CLI::Option* n_theta = nullptr;
        CLI::Option* filter_size = nullptr;
        CLI::Option* scales = nullptr;
        CLI::Option* beta = nullptr;
        CLI::Option* kappa_cap = nullptr;
        CLI::Option* angular_sigma = nullptr;
    };

    Opts add_to(CLI::App* app) {
        Opts opts;
        opts.n_theta = app->add_option("--n-theta", n_theta, "discrete orientations");
        opts.filter_size = app->add_option("--filter-size", filter_size, "odd cake wavelet size");
        opts.scales = app->add_option("--scales", scales, "curvature scales (px)")->delimiter(',');
        opts.beta = app->add_option("--beta", beta, "angular/spatial Hessian balance");
        opts.kappa_cap = app->add_option("--kappa-cap", kappa_cap, "curvature clamp (1/px)");
        opts.angular_sigma =
            app->add_option("--angular-sigma", angular_sigma, "orientation smoothing (bins)");
        return opts;
    }

    void resolve(RunConfig& cfg, const Opts& o) {
        const cg_lift_params d = lift_defaults();
        n_theta = cfg.resolve(o.n_theta, "n_theta", d.n_theta, n_theta);
        filter_size = cfg.resolve(o.filter_size, "filter_size", d.filter_size, filter_size);
        const std::vector<double> default_scales(d.scales, d.scales + d.n_scales);
        scales = cfg.resolve(o.scales, "scales", default_scales, scales);
        beta = cfg.resolve(o.beta, "beta", d.beta, beta);
        kappa_cap = cfg.resolve(o.kappa_cap, "kappa_cap", d.kappa_cap, kappa_cap);
        angular_sigma =
            cfg.resolve(o.angular_sigma, "angular_sigma", d.angular_sigma_bins, angular_sigma);
    }
};

json result_to_parsed_json(const cg_result* result) {
    char* text = nullptr;
    ok_or_throw(cg_result_json(result, &text), "result json");
    return json::parse(take_string(text));
}

void render_clusters_to(const fs::path& path, const cg_lifted* lifted, const cg_result* result) {
    cg_image* img = nullptr;
    ok_or_throw(cg_render_clusters(lifted, result, &img), "render clusters");
    ImagePtr guard(img);
    ok_or_throw(cg_image_write_ppm(img, path.string().c_str()), "write overlay");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curvilinear-structure perceptual grouping pipeline"};
    app.require_subcommand(1);

    auto* phantom = app.add_subcommand("phantom", "generate a synthetic stimulus with ground truth");
    std::string ph_config, ph_category = "A", ph_out;
    unsigned long long ph_seed = 1;
    phantom->add_option("--config", ph_config, "JSON config file");
    auto* ph_cat_opt =
        phantom->add_option("--category", ph_category, "A..E, A1..E1, or three_circles");
    auto* ph_seed_opt = phantom->add_option("--seed", ph_seed, "generator seed");
    phantom->add_option("--out-dir", ph_out, "output directory")->required();

    auto* lift = app.add_subcommand("lift", "lift an image to the 5D feature space");
    std::string lf_config, lf_image, lf_red, lf_green, lf_mask, lf_out, lf_junctions;
    bool lf_preprocess = false, lf_json_mirror = false;
    std::vector<int> lf_center;
    int lf_so = 25;
    LiftFlags lf_flags;
    lift->add_option("--config", lf_config, "JSON config file");
    lift->add_option("--image", lf_image, "grayscale or color input (P5/P6)");
    lift->add_option("--red", lf_red, "red channel image");
    lift->add_option("--green", lf_green, "green channel image");
    lift->add_option("--mask", lf_mask, "binary vessel mask (P5)")->required();
    lift->add_flag("--preprocess", lf_preprocess,
                   "apply luminosity/contrast normalization and channel combination");
    auto lf_opts = lf_flags.add_to(lift);
    auto* lf_center_opt =
        lift->add_option("--center", lf_center, "patch center x,y")->delimiter(',')->expected(2);
    auto* lf_so_opt = lift->add_option("--s-o", lf_so, "patch half-size (px)");
    lift->add_flag("--json-mirror", lf_json_mirror, "also write a JSON mirror");
    lift->add_option("--junctions-out", lf_junctions, "write fallback junction list JSON");
    lift->add_option("--out", lf_out, "output .l5d path")->required();

    auto* kernel = app.add_subcommand("kernel", "estimate the connectivity kernel bank");
    std::string kn_config, kn_out;
    cg_bank_params kn_defaults;
    cg_bank_params_init(&kn_defaults);
    double kn_kmin = kn_defaults.kappa_min, kn_kmax = kn_defaults.kappa_max;
    double kn_kstep = kn_defaults.kappa_step, kn_sigma = kn_defaults.sigma_kappa_diff;
    double kn_step_len = kn_defaults.step_len;
    int kn_steps = kn_defaults.steps, kn_ntheta = kn_defaults.n_theta;
    unsigned long long kn_paths = kn_defaults.paths, kn_seed = kn_defaults.seed;
    kernel->add_option("--config", kn_config, "JSON config file");
    auto* kn_kmin_o = kernel->add_option("--kappa-min", kn_kmin, "lattice start (1/px)");
    auto* kn_kmax_o = kernel->add_option("--kappa-max", kn_kmax, "lattice end (1/px)");
    auto* kn_kstep_o = kernel->add_option("--kappa-step", kn_kstep, "lattice step (1/px)");
    auto* kn_paths_o = kernel->add_option("--paths", kn_paths, "Monte Carlo path count");
    auto* kn_sigma_o =
        kernel->add_option("--sigma-kappa-diff", kn_sigma, "curvature diffusion constant");
    auto* kn_seed_o = kernel->add_option("--seed", kn_seed, "RNG seed");
    auto* kn_steps_o = kernel->add_option("--steps", kn_steps, "states per path");
    auto* kn_ntheta_o = kernel->add_option("--n-theta", kn_ntheta, "orientation bins");
    auto* kn_steplen_o = kernel->add_option("--step-len", kn_step_len, "step length (px)");
    kernel->add_option("--out", kn_out, "output .k5d path")->required();

    auto add_pipeline_flags = [](CLI::App* cmd, std::string& config, std::string& patch,
                                 std::string& bank, cg_pipeline_params& pp,
                                 std::vector<CLI::Option*>& opts) {
        cg_pipeline_params_init(&pp);
        cmd->add_option("--config", config, "JSON config file");
        cmd->add_option("--patch", patch, "lifted patch (.l5d)")->required();
        cmd->add_option("--bank", bank, "cached kernel bank (.k5d)");
        opts.push_back(cmd->add_option("--sigma-int", pp.sigma_int, "intensity scale of w5"));
        opts.push_back(
            cmd->add_option("--sigma-kappa-exp", pp.sigma_kappa_exp, "curvature scale of w5"));
        opts.push_back(cmd->add_option("--max-k", pp.max_k, "largest candidate group count"));
        opts.push_back(cmd->add_option("--min-cluster-size", pp.min_cluster_size,
                                       "noise threshold (0 = auto)"));
        opts.push_back(cmd->add_option("--selection-tol", pp.selection_tol,
                                       "alignment acceptance tolerance"));
        opts.push_back(cmd->add_option("--ncut-max", pp.ncut_max, "group cut acceptance bound"));
        opts.push_back(cmd->add_flag("--argmin", pp.use_argmin, "plain argmin cost selection"));
        opts.push_back(cmd->add_option("--paths", pp.paths, "paths for in-run bank builds"));
        opts.push_back(cmd->add_option("--sigma-kappa-diff", pp.sigma_kappa_diff,
                                       "curvature diffusion for in-run banks"));
        opts.push_back(cmd->add_option("--seed", pp.seed, "RNG seed for in-run banks"));
        opts.push_back(cmd->add_option("--kappa-step", pp.kappa_step, "lattice step (1/px)"));
    };
    auto* cluster = app.add_subcommand("cluster", "affinity + self-tuning spectral clustering");
    std::string cl_config, cl_patch, cl_bank, cl_out, cl_dump_bin, cl_dump_json;
    cg_pipeline_params cl_params;
    std::vector<CLI::Option*> cl_opts;
    add_pipeline_flags(cluster, cl_config, cl_patch, cl_bank, cl_params, cl_opts);
    cluster->add_option("--out", cl_out, "result JSON path")->required();
    cluster->add_option("--dump-affinity", cl_dump_bin, "raw f64 affinity dump path");
    cluster->add_option("--dump-affinity-json", cl_dump_json, "affinity sidecar path");

    auto* pipeline =
        app.add_subcommand("pipeline", "lift -> kernel -> affinity -> cluster -> render");
    std::string pl_config, pl_patch, pl_bank, pl_out_dir = "pipeline_out", pl_save_bank;
    cg_pipeline_params pl_params;
    std::vector<CLI::Option*> pl_opts;
    add_pipeline_flags(pipeline, pl_config, pl_patch, pl_bank, pl_params, pl_opts);
    pipeline->add_option("--out-dir", pl_out_dir, "output directory");
    pipeline->add_option("--save-bank", pl_save_bank, "write the in-run bank to this .k5d");

    auto* eval = app.add_subcommand("eval", "score results against ground truth");
    std::string ev_config, ev_result, ev_patch, ev_labels, ev_out_dir = "eval_out", ev_bank;
    bool ev_suite = false;
    unsigned long long ev_seed = 1;
    int ev_jobs = 1;
    double ev_jaccard = 0.8;
    eval->add_option("--config", ev_config, "JSON config file");
    eval->add_option("--result", ev_result, "result JSON to score");
    eval->add_option("--patch", ev_patch, "lifted patch the result refers to");
    eval->add_option("--labels", ev_labels, "ground-truth labels JSON");
    eval->add_option("--jaccard", ev_jaccard, "match threshold");
    eval->add_flag("--phantom-suite", ev_suite, "run the ten phantom categories end to end");
    eval->add_option("--bank", ev_bank, "cached kernel bank for the suite");
    eval->add_option("--seed", ev_seed, "phantom seed for the suite");
    eval->add_option("--jobs", ev_jobs, "concurrent cases in suite mode");
    eval->add_option("--out-dir", ev_out_dir, "suite output directory");

    auto* render = app.add_subcommand("render", "color-coded maps and overlays");
    std::string rd_what, rd_image, rd_mask, rd_patch, rd_result, rd_bank, rd_out;
    int rd_slice = 0;
    LiftFlags rd_flags;
    render->add_option("--what", rd_what, "orientation|curvature|clusters|kernel")->required();
    render->add_option("--image", rd_image, "input image");
    render->add_option("--mask", rd_mask, "binary mask");
    render->add_option("--patch", rd_patch, "lifted patch (.l5d)");
    render->add_option("--result", rd_result, "result JSON with labels");
    render->add_option("--bank", rd_bank, "kernel bank (.k5d)");
    render->add_option("--slice", rd_slice, "bank slice index");
    rd_flags.add_to(render);
    render->add_option("--out", rd_out, "output image path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (phantom->parsed()) {
            RunConfig cfg("phantom");
            cfg.load_file(ph_config);
            const std::string cat = cfg.resolve(ph_cat_opt, "category", std::string("A"), ph_category);
            const unsigned long long seed = cfg.resolve(ph_seed_opt, "seed", 1ULL, ph_seed);
            cfg.note("out_dir", ph_out);

            cg_phantom* ph = nullptr;
            ok_or_throw(cg_phantom_generate(cat.c_str(), seed, &ph), "phantom");
            PhantomPtr guard(ph);
            fs::create_directories(ph_out);
            const fs::path dir(ph_out);
            cg_image* img = nullptr;
            ok_or_throw(cg_phantom_image(ph, &img), "phantom image");
            ImagePtr img_guard(img);
            ok_or_throw(cg_image_write_pgm(img, (dir / "stimulus.pgm").string().c_str(), 8),
                        "write stimulus");
            cg_mask* mask = nullptr;
            ok_or_throw(cg_phantom_mask(ph, &mask), "phantom mask");
            MaskPtr mask_guard(mask);
            ok_or_throw(cg_mask_write(mask, (dir / "mask.pgm").string().c_str()), "write mask");
            cg_lifted* lifted = nullptr;
            ok_or_throw(cg_phantom_lifted(ph, &lifted), "phantom lift");
            LiftedPtr lifted_guard(lifted);
            ok_or_throw(cg_lifted_write(lifted, (dir / "gt.l5d").string().c_str()), "write gt");
            char* labels = nullptr;
            ok_or_throw(cg_phantom_labels_json(ph, &labels), "labels json");
            write_text(dir / "gt_labels.json", take_string(labels));
            char* spec_text = nullptr;
            ok_or_throw(cg_phantom_spec_json(ph, &spec_text), "spec json");
            write_text(dir / "phantom_spec.json", take_string(spec_text));
            cfg.note("units", cg_phantom_units(ph));
            cfg.write(dir / "run_config.json");
            std::printf("phantom %s seed %llu: %ld lifted points, %d units -> %s\n", cat.c_str(),
                        seed, cg_lifted_count(lifted), cg_phantom_units(ph), ph_out.c_str());
            return 0;
        }

        if (lift->parsed()) {
            RunConfig cfg("lift");
            cfg.load_file(lf_config);
            lf_flags.resolve(cfg, lf_opts);
            cfg.note("image", lf_image);
            cfg.note("mask", lf_mask);
            cfg.note("out", lf_out);

            ImagePtr gray;
            if (lf_preprocess || (!lf_red.empty() && !lf_green.empty())) {
                ImagePtr red, green;
                if (!lf_red.empty() && !lf_green.empty()) {
                    cg_image* r = nullptr;
                    ok_or_throw(cg_image_read(lf_red.c_str(), &r), "--red");
                    red.reset(r);
                    cg_image* g = nullptr;
                    ok_or_throw(cg_image_read(lf_green.c_str(), &g), "--green");
                    green.reset(g);
                } else if (!lf_image.empty()) {
                    cg_image* src = nullptr;
                    ok_or_throw(cg_image_read(lf_image.c_str(), &src), "--image");
                    ImagePtr src_guard(src);
                    const int red_ch = cg_image_channels(src) == 3 ? 0 : 0;
                    const int green_ch = cg_image_channels(src) == 3 ? 1 : 0;
                    cg_image* r = nullptr;
                    ok_or_throw(cg_image_channel(src, red_ch, &r), "red channel");
                    red.reset(r);
                    cg_image* g = nullptr;
                    ok_or_throw(cg_image_channel(src, green_ch, &g), "green channel");
                    green.reset(g);
                } else {
                    throw CliError("--preprocess needs --image or --red/--green");
                }
                cg_image* combined = nullptr;
                ok_or_throw(cg_image_preprocess(red.get(), green.get(), &combined), "preprocess");
                gray.reset(combined);
                cfg.note("preprocess", true);
            } else {
                if (lf_image.empty()) throw CliError("missing --image");
                cg_image* src = nullptr;
                ok_or_throw(cg_image_read(lf_image.c_str(), &src), "--image");
                ImagePtr src_guard(src);
                if (cg_image_channels(src) != 1)
                    throw CliError("color input requires --preprocess");
                cg_image* ch = nullptr;
                ok_or_throw(cg_image_channel(src, 0, &ch), "channel");
                gray.reset(ch);
                cfg.note("preprocess", false);
            }

            cg_mask* mask = nullptr;
            ok_or_throw(cg_mask_read(lf_mask.c_str(), &mask), "--mask");
            MaskPtr mask_guard(mask);
            const cg_lift_params params = lf_flags.params();
            cg_lifted* lifted = nullptr;
            ok_or_throw(cg_lift_image(gray.get(), mask, &params, &lifted), "lift");
            LiftedPtr lifted_guard(lifted);

            if (lf_center_opt->count() > 0) {
                const int s_o = lf_so_opt->count() ? lf_so : 25;
                cg_lifted* patch = nullptr;
                ok_or_throw(cg_lifted_crop(lifted_guard.get(), lf_center[0], lf_center[1], s_o,
                                           &patch),
                            "--center");
                lifted_guard.reset(patch);
                cfg.note("center", lf_center);
                cfg.note("s_o", s_o);
            }
            ok_or_throw(cg_lifted_write(lifted_guard.get(), lf_out.c_str()), "write l5d");
            if (lf_json_mirror)
                ok_or_throw(cg_lifted_write_json(lifted_guard.get(), (lf_out + ".json").c_str()),
                            "write json mirror");
            if (!lf_junctions.empty()) {
                int* xy = nullptr;
                long count = 0;
                ok_or_throw(cg_detect_junctions(mask, &xy, &count), "junctions");
                json list = json::array();
                for (long i = 0; i < count; ++i) list.push_back({xy[2 * i], xy[2 * i + 1]});
                cg_buffer_free(xy);
                write_text(lf_junctions, json{{"junctions", list}}.dump(2) + "\n");
            }
            cfg.write(lf_out + ".config.json");
            std::printf("lift: %ld points -> %s\n", cg_lifted_count(lifted_guard.get()),
                        lf_out.c_str());
            return 0;
        }

        if (kernel->parsed()) {
            RunConfig cfg("kernel");
            cfg.load_file(kn_config);
            cg_bank_params p;
            cg_bank_params_init(&p);
            p.kappa_min = cfg.resolve(kn_kmin_o, "kappa_min", p.kappa_min, kn_kmin);
            p.kappa_max = cfg.resolve(kn_kmax_o, "kappa_max", p.kappa_max, kn_kmax);
            p.kappa_step = cfg.resolve(kn_kstep_o, "kappa_step", p.kappa_step, kn_kstep);
            p.paths = cfg.resolve(kn_paths_o, "paths", p.paths, kn_paths);
            p.sigma_kappa_diff =
                cfg.resolve(kn_sigma_o, "sigma_kappa_diff", p.sigma_kappa_diff, kn_sigma);
            p.seed = cfg.resolve(kn_seed_o, "seed", p.seed, kn_seed);
            p.steps = cfg.resolve(kn_steps_o, "steps", p.steps, kn_steps);
            p.n_theta = cfg.resolve(kn_ntheta_o, "n_theta", p.n_theta, kn_ntheta);
            p.step_len = cfg.resolve(kn_steplen_o, "step_len", p.step_len, kn_step_len);
            cfg.note("out", kn_out);

            cg_bank* bank = nullptr;
            ok_or_throw(cg_bank_build(&p, &bank), "bank build");
            BankPtr guard(bank);
            ok_or_throw(cg_bank_save(bank, kn_out.c_str()), "bank save");
            cfg.write(kn_out + ".config.json");
            std::printf("kernel bank: %d slices -> %s\n", cg_bank_slices(bank), kn_out.c_str());
            return 0;
        }

        auto run_patch_pipeline =
            [&](const std::string& config_path, const std::string& patch_path,
                const std::string& bank_path, cg_pipeline_params& pp,
                const std::vector<CLI::Option*>& opts, RunConfig& cfg)
            -> std::tuple<LiftedPtr, ResultPtr> {
            cfg.load_file(config_path);
            cg_pipeline_params d;
            cg_pipeline_params_init(&d);
            std::size_t i = 0;
            pp.sigma_int = cfg.resolve(opts[i], "sigma_int", d.sigma_int, pp.sigma_int); ++i;
            pp.sigma_kappa_exp =
                cfg.resolve(opts[i], "sigma_kappa_exp", d.sigma_kappa_exp, pp.sigma_kappa_exp); ++i;
            pp.max_k = cfg.resolve(opts[i], "max_k", d.max_k, pp.max_k); ++i;
            pp.min_cluster_size =
                cfg.resolve(opts[i], "min_cluster_size", d.min_cluster_size, pp.min_cluster_size); ++i;
            pp.selection_tol =
                cfg.resolve(opts[i], "selection_tol", d.selection_tol, pp.selection_tol); ++i;
            pp.ncut_max = cfg.resolve(opts[i], "ncut_max", d.ncut_max, pp.ncut_max); ++i;
            pp.use_argmin = cfg.resolve(opts[i], "use_argmin", d.use_argmin, pp.use_argmin); ++i;
            pp.paths = cfg.resolve(opts[i], "paths", d.paths, pp.paths); ++i;
            pp.sigma_kappa_diff =
                cfg.resolve(opts[i], "sigma_kappa_diff", d.sigma_kappa_diff, pp.sigma_kappa_diff); ++i;
            pp.seed = cfg.resolve(opts[i], "seed", d.seed, pp.seed); ++i;
            pp.kappa_step = cfg.resolve(opts[i], "kappa_step", d.kappa_step, pp.kappa_step);
            cfg.note("patch", patch_path);
            cfg.note("bank", bank_path);

            cg_lifted* patch = nullptr;
            ok_or_throw(cg_lifted_read(patch_path.c_str(), &patch), "--patch");
            LiftedPtr patch_guard(patch);
            BankPtr bank;
            if (!bank_path.empty()) {
                cg_bank* b = nullptr;
                ok_or_throw(cg_bank_load(bank_path.c_str(), &b), "--bank");
                bank.reset(b);
            }
            cg_result* result = nullptr;
            ok_or_throw(cg_pipeline_run(patch, bank.get(), &pp, &result), "pipeline");
            return {std::move(patch_guard), ResultPtr(result)};
        };

        if (cluster->parsed()) {
            RunConfig cfg("cluster");
            auto [patch, result] =
                run_patch_pipeline(cl_config, cl_patch, cl_bank, cl_params, cl_opts, cfg);
            cfg.note("out", cl_out);
            write_text(cl_out, result_to_parsed_json(result.get()).dump(2) + "\n");
            if (!cl_dump_bin.empty()) {
                const std::string sidecar =
                    cl_dump_json.empty() ? cl_dump_bin + ".json" : cl_dump_json;
                cg_bank* used = nullptr;
                ok_or_throw(cg_result_bank(result.get(), &used), "result bank");
                BankPtr used_guard(used);
                ok_or_throw(cg_affinity_dump(patch.get(), used, &cl_params, cl_dump_bin.c_str(),
                                             sidecar.c_str()),
                            "affinity dump");
            }
            cfg.write(cl_out + ".config.json");
            std::printf("cluster: K=%d Q=%.4f -> %s\n", cg_result_k(result.get()),
                        cg_result_quality(result.get()), cl_out.c_str());
            return 0;
        }

        if (pipeline->parsed()) {
            RunConfig cfg("pipeline");
            auto [patch, result] =
                run_patch_pipeline(pl_config, pl_patch, pl_bank, pl_params, pl_opts, cfg);
            fs::create_directories(pl_out_dir);
            const fs::path dir(pl_out_dir);
            cfg.note("out_dir", pl_out_dir);
            write_text(dir / "result.json", result_to_parsed_json(result.get()).dump(2) + "\n");
            render_clusters_to(dir / "clusters.ppm", patch.get(), result.get());
            if (!pl_save_bank.empty()) {
                cg_bank* used = nullptr;
                ok_or_throw(cg_result_bank(result.get(), &used), "result bank");
                BankPtr used_guard(used);
                ok_or_throw(cg_bank_save(used, pl_save_bank.c_str()), "--save-bank");
            }
            cfg.write(dir / "run_config.json");
            std::printf("pipeline: K=%d Q=%.4f -> %s\n", cg_result_k(result.get()),
                        cg_result_quality(result.get()), pl_out_dir.c_str());
            return 0;
        }

        if (eval->parsed()) {
            if (ev_suite) {
                RunConfig cfg("eval");
                cfg.load_file(ev_config);
                cfg.note("phantom_suite", true);
                cfg.note("seed", ev_seed);
                cfg.note("bank", ev_bank);
                cfg.note("jaccard", ev_jaccard);
                fs::create_directories(ev_out_dir);
                const fs::path dir(ev_out_dir);

                BankPtr bank;
                if (!ev_bank.empty()) {
                    cg_bank* b = nullptr;
                    ok_or_throw(cg_bank_load(ev_bank.c_str(), &b), "--bank");
                    bank.reset(b);
                }
                const std::vector<std::string> categories = {"A", "B", "C", "D", "E",
                                                             "A1", "B1", "C1", "D1", "E1"};
                struct Case {
                    std::string category;
                    int correct = 0;
                    double q = 0.0;
                    double t[4] = {0, 0, 0, 0};
                    double w[4] = {1, 1, 1, 1};
                    std::string error;
                };
                std::vector<Case> cases(categories.size());

                auto run_case = [&](std::size_t idx) {
                    Case& c = cases[idx];
                    c.category = categories[idx];
                    try {
                        const fs::path case_dir = dir / c.category;
                        fs::create_directories(case_dir);
                        cg_phantom* ph = nullptr;
                        ok_or_throw(cg_phantom_generate(c.category.c_str(), ev_seed, &ph),
                                    "phantom");
                        PhantomPtr ph_guard(ph);
                        cg_lifted* lifted = nullptr;
                        ok_or_throw(cg_phantom_lifted(ph, &lifted), "phantom lift");
                        LiftedPtr lifted_guard(lifted);
                        ok_or_throw(cg_lifted_write(lifted, (case_dir / "gt.l5d").string().c_str()),
                                    "write gt");
                        char* labels_text = nullptr;
                        ok_or_throw(cg_phantom_labels_json(ph, &labels_text), "labels");
                        const std::string labels_json = take_string(labels_text);
                        write_text(case_dir / "gt_labels.json", labels_json);
                        cg_image* stimulus = nullptr;
                        ok_or_throw(cg_phantom_image(ph, &stimulus), "image");
                        ImagePtr stim_guard(stimulus);
                        ok_or_throw(cg_image_write_pgm(
                                        stimulus, (case_dir / "stimulus.pgm").string().c_str(), 8),
                                    "write stimulus");

                        cg_pipeline_params pp;
                        cg_pipeline_params_init(&pp);
                        cg_result* result = nullptr;
                        ok_or_throw(cg_pipeline_run(lifted, bank.get(), &pp, &result), "pipeline");
                        ResultPtr result_guard(result);
                        write_text(case_dir / "result.json",
                                   result_to_parsed_json(result).dump(2) + "\n");
                        render_clusters_to(case_dir / "clusters.ppm", lifted, result);

                        cg_labels* gt = nullptr;
                        ok_or_throw(cg_labels_parse(labels_json.c_str(), &gt), "labels parse");
                        LabelsPtr gt_guard(gt);
                        int correct = 0;
                        ok_or_throw(cg_match_partition(result, lifted, gt, ev_jaccard, &correct),
                                    "match");
                        c.correct = correct;
                        c.q = cg_result_quality(result);
                        cg_result_timings(result, c.t);
                        cg_result_weights(result, c.w);
                    } catch (const std::exception& e) {
                        c.error = e.what();
                    }
                };

                const int jobs = std::max(1, ev_jobs);
                std::vector<std::thread> pool;
                std::atomic<std::size_t> next{0};
                for (int t = 0; t < jobs; ++t)
                    pool.emplace_back([&] {
                        for (std::size_t i = next.fetch_add(1); i < cases.size();
                             i = next.fetch_add(1))
                            run_case(i);
                    });
                for (auto& th : pool) th.join();

                std::vector<cg_case_outcome> outcomes;
                bool failed = false;
                for (const Case& c : cases) {
                    if (!c.error.empty()) {
                        std::fprintf(stderr, "case %s failed: %s\n", c.category.c_str(),
                                     c.error.c_str());
                        failed = true;
                        continue;
                    }
                    cg_case_outcome o{};
                    o.id = c.category.c_str();
                    o.category = c.category.c_str();
                    o.correct = c.correct;
                    o.q_clust = c.q;
                    for (int s = 0; s < 4; ++s) {
                        o.t[s] = c.t[s];
                        o.w[s] = c.w[s];
                    }
                    o.sigma_kappa_diff = 0.001;
                    o.sigma_int = 0.275;
                    outcomes.push_back(o);
                }
                if (outcomes.empty()) throw CliError("phantom suite produced no outcomes");
                char* report_json = nullptr;
                ok_or_throw(
                    cg_report_json(outcomes.data(), (long)outcomes.size(), &report_json),
                    "report");
                write_text(dir / "report.json", take_string(report_json));
                char* report_text = nullptr;
                ok_or_throw(
                    cg_report_text(outcomes.data(), (long)outcomes.size(), &report_text),
                    "report");
                const std::string text = take_string(report_text);
                write_text(dir / "report.txt", text);
                cfg.write(dir / "run_config.json");
                std::fputs(text.c_str(), stdout);
                return failed ? 1 : 0;
            }

            if (ev_result.empty() || ev_patch.empty() || ev_labels.empty())
                throw CliError("eval needs --result, --patch and --labels (or --phantom-suite)");
            const json result_json = json::parse(read_text(ev_result));
            const std::vector<int> labels = result_json.at("labels").get<std::vector<int>>();
            cg_lifted* patch = nullptr;
            ok_or_throw(cg_lifted_read(ev_patch.c_str(), &patch), "--patch");
            LiftedPtr patch_guard(patch);
            cg_labels* gt = nullptr;
            ok_or_throw(cg_labels_parse(read_text(ev_labels).c_str(), &gt), "--labels");
            LabelsPtr gt_guard(gt);
            int correct = 0;
            ok_or_throw(cg_match_partition_labels(labels.data(), (long)labels.size(), patch, gt,
                                                  ev_jaccard, &correct),
                        "match");
            std::printf("%s\n", correct ? "correct" : "incorrect");
            return correct ? 0 : 2;
        }

        if (render->parsed()) {
            const cg_lift_params params = rd_flags.params();
            cg_image* out_img = nullptr;
            if (rd_what == "orientation" || rd_what == "curvature") {
                if (rd_image.empty() || rd_mask.empty())
                    throw CliError("--what " + rd_what + " needs --image and --mask");
                cg_image* img = nullptr;
                ok_or_throw(cg_image_read(rd_image.c_str(), &img), "--image");
                ImagePtr img_guard(img);
                cg_mask* mask = nullptr;
                ok_or_throw(cg_mask_read(rd_mask.c_str(), &mask), "--mask");
                MaskPtr mask_guard(mask);
                if (rd_what == "orientation")
                    ok_or_throw(cg_render_orientation(img, mask, &params, &out_img), "render");
                else
                    ok_or_throw(cg_render_curvature(img, mask, &params, &out_img), "render");
            } else if (rd_what == "clusters") {
                if (rd_patch.empty() || rd_result.empty())
                    throw CliError("--what clusters needs --patch and --result");
                cg_lifted* patch = nullptr;
                ok_or_throw(cg_lifted_read(rd_patch.c_str(), &patch), "--patch");
                LiftedPtr patch_guard(patch);
                const json result_json = json::parse(read_text(rd_result));
                const std::vector<int> labels = result_json.at("labels").get<std::vector<int>>();
                ok_or_throw(
                    cg_render_label_map(patch, labels.data(), (long)labels.size(), &out_img),
                    "render");
            } else if (rd_what == "kernel") {
                if (rd_bank.empty()) throw CliError("--what kernel needs --bank");
                cg_bank* bank = nullptr;
                ok_or_throw(cg_bank_load(rd_bank.c_str(), &bank), "--bank");
                BankPtr bank_guard(bank);
                ok_or_throw(cg_render_kernel(bank, rd_slice, &out_img), "render");
            } else {
                throw CliError("unknown --what '" + rd_what + "'");
            }
            ImagePtr out_guard(out_img);
            if (cg_image_channels(out_img) == 3)
                ok_or_throw(cg_image_write_ppm(out_img, rd_out.c_str()), "write");
            else
                ok_or_throw(cg_image_write_pgm(out_img, rd_out.c_str(), 8), "write");
            std::printf("render %s -> %s\n", rd_what.c_str(), rd_out.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
