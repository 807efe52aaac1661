#include "curvegroup.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "affinity.hpp"
#include "cluster.hpp"
#include "common.hpp"
#include "eval.hpp"
#include "image.hpp"
#include "kernel.hpp"
#include "l5d.hpp"
#include "liftspace.hpp"
#include "phantom.hpp"
#include "pipeline.hpp"
#include "render.hpp"

struct cg_image {
    cg::Image2D v;
};
struct cg_mask {
    cg::Mask v;
};
struct cg_lifted {
    cg::LiftedFeatureMap v;
};
struct cg_bank {
    std::shared_ptr<const cg::KernelBank> v;
};
struct cg_phantom {
    cg::PhantomCase v;
};
struct cg_labels {
    cg::GroundTruthLabels v;
};
struct cg_result {
    cg::PipelineResult v;
};

namespace {

thread_local std::string t_last_error;

template <typename Fn>
cg_status wrap(Fn&& fn) noexcept {
    try {
        fn();
        return CG_OK;
    } catch (const cg::Error& e) {
        t_last_error = e.what();
        switch (e.kind()) {
            case cg::ErrorKind::InvalidArgument: return CG_ERROR_INVALID_ARGUMENT;
            case cg::ErrorKind::Io: return CG_ERROR_IO;
            case cg::ErrorKind::Format: return CG_ERROR_FORMAT;
            case cg::ErrorKind::Numeric: return CG_ERROR_NUMERIC;
            case cg::ErrorKind::Internal: return CG_ERROR_INTERNAL;
        }
        return CG_ERROR_INTERNAL;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return CG_ERROR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return CG_ERROR_INTERNAL;
    }
}

void check(bool cond, const char* msg) {
    if (!cond) cg::fail_invalid(msg);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) cg::fail_numeric("out of memory");
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

cg::CurvatureParams curvature_params(const cg_lift_params& p) {
    cg::CurvatureParams cp;
    cp.beta = p.beta;
    cp.kappa_cap = p.kappa_cap;
    cp.angular_sigma_bins = p.angular_sigma_bins;
    return cp;
}

std::vector<double> scales_of(const cg_lift_params& p) {
    check(p.n_scales >= 1 && p.n_scales <= 8, "lift params: 1..8 scales");
    return {p.scales, p.scales + p.n_scales};
}

struct LiftMaps {
    cg::OrientationMap orientation;
    cg::VolumeMap kappa;
};

LiftMaps lift_maps(const cg::Image2D& img, const cg_lift_params& p) {
    const cg::FilterBank bank = cg::cake_wavelet_bank(p.n_theta, p.filter_size);
    const cg::OrientationScore score = cg::orientation_score(img, bank);
    LiftMaps maps;
    maps.orientation = cg::dominant_orientation(score);
    maps.kappa = cg::multiscale_curvature(score, scales_of(p), curvature_params(p));
    return maps;
}

cg::PipelineParams pipeline_params(const cg_pipeline_params& p) {
    cg::PipelineParams out;
    out.weights.sigma_kappa_exp = p.sigma_kappa_exp;
    out.weights.sigma_int = p.sigma_int;
    out.spectral.max_k = p.max_k;
    out.spectral.min_cluster_size = p.min_cluster_size;
    out.spectral.selection_tol = p.selection_tol;
    out.spectral.ncut_max = p.ncut_max;
    out.spectral.use_argmin = p.use_argmin != 0;
    out.paths.paths = p.paths;
    out.paths.sigma_kappa_diff = p.sigma_kappa_diff;
    out.paths.seed = p.seed;
    out.paths.step_len = p.step_len;
    out.kappa_step = p.kappa_step;
    return out;
}

}  // namespace

extern "C" {

const char* cg_version(void) { return "1.0.0"; }

const char* cg_last_error(void) { return t_last_error.c_str(); }

void cg_string_free(char* s) { std::free(s); }

void cg_buffer_free(void* buffer) { std::free(buffer); }

/* ---- images ---- */

cg_status cg_image_read(const char* path, cg_image** out) {
    return wrap([&] {
        check(path && out, "null argument");
        *out = new cg_image{cg::read_pnm(path)};
    });
}

cg_status cg_image_write_pgm(const cg_image* img, const char* path, int bits) {
    return wrap([&] {
        check(img && path, "null argument");
        cg::write_pgm(img->v, path, bits);
    });
}

cg_status cg_image_write_ppm(const cg_image* img, const char* path) {
    return wrap([&] {
        check(img && path, "null argument");
        cg::write_ppm(img->v, path);
    });
}

int cg_image_width(const cg_image* img) { return img ? img->v.width : 0; }
int cg_image_height(const cg_image* img) { return img ? img->v.height : 0; }
int cg_image_channels(const cg_image* img) { return img ? img->v.channels : 0; }

double cg_image_get(const cg_image* img, int x, int y, int channel) {
    if (!img || !img->v.inside(x, y) || channel < 0 || channel >= img->v.channels) return 0.0;
    return img->v.at(x, y, channel);
}

cg_status cg_image_channel(const cg_image* img, int channel, cg_image** out) {
    return wrap([&] {
        check(img && out, "null argument");
        check(channel >= 0 && channel < img->v.channels, "channel out of range");
        cg::Image2D gray(img->v.width, img->v.height, 1);
        for (int y = 0; y < gray.height; ++y)
            for (int x = 0; x < gray.width; ++x) gray.at(x, y) = img->v.at(x, y, channel);
        *out = new cg_image{std::move(gray)};
    });
}

cg_status cg_image_preprocess(const cg_image* red, const cg_image* green, cg_image** out) {
    return wrap([&] {
        check(red && green && out, "null argument");
        *out = new cg_image{cg::preprocess(red->v, green->v)};
    });
}

void cg_image_free(cg_image* img) { delete img; }

cg_status cg_mask_read(const char* path, cg_mask** out) {
    return wrap([&] {
        check(path && out, "null argument");
        *out = new cg_mask{cg::read_mask_pgm(path)};
    });
}

cg_status cg_mask_write(const cg_mask* mask, const char* path) {
    return wrap([&] {
        check(mask && path, "null argument");
        cg::write_mask_pgm(mask->v, path);
    });
}

int cg_mask_width(const cg_mask* mask) { return mask ? mask->v.width : 0; }
int cg_mask_height(const cg_mask* mask) { return mask ? mask->v.height : 0; }
void cg_mask_free(cg_mask* mask) { delete mask; }

/* ---- lifting ---- */

void cg_lift_params_init(cg_lift_params* params) {
    if (!params) return;
    params->n_theta = 18;
    params->filter_size = 51;
    params->n_scales = 3;
    params->scales[0] = 1.5;
    params->scales[1] = 2.5;
    params->scales[2] = 3.5;
    for (int i = 3; i < 8; ++i) params->scales[i] = 0.0;
    params->beta = 0.1;
    params->kappa_cap = 0.5;
    params->angular_sigma_bins = 1.3;
}

cg_status cg_lift_image(const cg_image* image, const cg_mask* mask,
                        const cg_lift_params* params, cg_lifted** out) {
    return wrap([&] {
        check(image && mask && params && out, "null argument");
        const LiftMaps maps = lift_maps(image->v, *params);
        *out = new cg_lifted{cg::lift5d(image->v, maps.orientation, maps.kappa, mask->v)};
    });
}

cg_status cg_lifted_crop(const cg_lifted* lifted, int cx, int cy, int s_o, cg_lifted** out) {
    return wrap([&] {
        check(lifted && out, "null argument");
        *out = new cg_lifted{cg::crop_patch(lifted->v, cx, cy, s_o)};
    });
}

cg_status cg_lifted_write(const cg_lifted* lifted, const char* path) {
    return wrap([&] {
        check(lifted && path, "null argument");
        cg::write_l5d(lifted->v, path);
    });
}

cg_status cg_lifted_write_json(const cg_lifted* lifted, const char* path) {
    return wrap([&] {
        check(lifted && path, "null argument");
        cg::write_l5d_json(lifted->v, path);
    });
}

cg_status cg_lifted_read(const char* path, cg_lifted** out) {
    return wrap([&] {
        check(path && out, "null argument");
        *out = new cg_lifted{cg::read_l5d(path)};
    });
}

long cg_lifted_count(const cg_lifted* lifted) {
    return lifted ? static_cast<long>(lifted->v.points.size()) : 0;
}

int cg_lifted_n_theta(const cg_lifted* lifted) { return lifted ? lifted->v.n_theta : 0; }

cg_status cg_lifted_point(const cg_lifted* lifted, long index, double out5[5]) {
    return wrap([&] {
        check(lifted && out5, "null argument");
        check(index >= 0 && index < static_cast<long>(lifted->v.points.size()),
              "point index out of range");
        const cg::LiftedPoint& p = lifted->v.points[index];
        out5[0] = p.x;
        out5[1] = p.y;
        out5[2] = lifted->v.theta_of(p);
        out5[3] = p.f;
        out5[4] = p.kappa;
    });
}

void cg_lifted_free(cg_lifted* lifted) { delete lifted; }

cg_status cg_detect_junctions(const cg_mask* mask, int** xy_out, long* count) {
    return wrap([&] {
        check(mask && xy_out && count, "null argument");
        const auto junctions = cg::fallback_junctions(mask->v);
        int* buf = static_cast<int*>(std::malloc(sizeof(int) * 2 * std::max<std::size_t>(1, junctions.size())));
        if (!buf) cg::fail_numeric("out of memory");
        for (std::size_t i = 0; i < junctions.size(); ++i) {
            buf[2 * i] = junctions[i].x;
            buf[2 * i + 1] = junctions[i].y;
        }
        *xy_out = buf;
        *count = static_cast<long>(junctions.size());
    });
}

/* ---- kernel bank ---- */

void cg_bank_params_init(cg_bank_params* params) {
    if (!params) return;
    params->kappa_min = -0.2;
    params->kappa_max = 0.2;
    params->kappa_step = 0.05;
    params->n_theta = 18;
    params->steps = 17;
    params->paths = 100000;
    params->step_len = 1.0;
    params->sigma_kappa_diff = 0.001;
    params->seed = 1;
    params->grid_nx = 0;
    params->grid_ny = 0;
}

cg_status cg_bank_build(const cg_bank_params* params, cg_bank** out) {
    return wrap([&] {
        check(params && out, "null argument");
        cg::PathParams pp;
        pp.step_len = params->step_len;
        pp.steps = params->steps;
        pp.paths = params->paths;
        pp.sigma_kappa_diff = params->sigma_kappa_diff;
        pp.seed = params->seed;
        cg::GridDims dims = cg::grid_dims_for(pp, params->n_theta);
        if (params->grid_nx > 0) dims.nx = params->grid_nx;
        if (params->grid_ny > 0) dims.ny = params->grid_ny;
        *out = new cg_bank{std::make_shared<cg::KernelBank>(
            cg::build_bank(params->kappa_min, params->kappa_max, params->kappa_step, dims, pp))};
    });
}

cg_status cg_bank_save(const cg_bank* bank, const char* path) {
    return wrap([&] {
        check(bank && path, "null argument");
        cg::save_bank(*bank->v, path);
    });
}

cg_status cg_bank_load(const char* path, cg_bank** out) {
    return wrap([&] {
        check(path && out, "null argument");
        *out = new cg_bank{std::make_shared<cg::KernelBank>(cg::load_bank(path))};
    });
}

int cg_bank_slices(const cg_bank* bank) { return bank ? bank->v->slices() : 0; }

double cg_bank_kappa(const cg_bank* bank, int slice) {
    return bank && slice >= 0 && slice < bank->v->slices() ? bank->v->kappa_of(slice) : 0.0;
}

double cg_bank_mass(const cg_bank* bank, int slice) {
    return bank && slice >= 0 && slice < bank->v->slices() ? bank->v->grids[slice].mass() : 0.0;
}

double cg_bank_eval(const cg_bank* bank, const double from3[3], const double to3[3],
                    double kappa) {
    if (!bank || !from3 || !to3) return 0.0;
    const cg::Pose from{from3[0], from3[1], from3[2]};
    const cg::Pose to{to3[0], to3[1], to3[2]};
    return cg::eval_gamma(*bank->v, from, to, kappa);
}

cg_status cg_bank_project(const cg_bank* bank, int slice, int normalize, cg_image** out) {
    return wrap([&] {
        check(bank && out, "null argument");
        check(slice >= 0 && slice < bank->v->slices(), "slice out of range");
        *out = new cg_image{cg::project2d(bank->v->grids[slice], normalize != 0)};
    });
}

void cg_bank_free(cg_bank* bank) { delete bank; }

/* ---- pipeline ---- */

void cg_pipeline_params_init(cg_pipeline_params* params) {
    if (!params) return;
    params->sigma_kappa_exp = 1.0;
    params->sigma_int = 0.275;
    params->max_k = 20;
    params->min_cluster_size = 0;
    params->selection_tol = 0.03;
    params->ncut_max = 0.02;
    params->use_argmin = 0;
    params->paths = 100000;
    params->sigma_kappa_diff = 0.001;
    params->seed = 1;
    params->kappa_step = 0.05;
    params->step_len = 1.0;
}

cg_status cg_pipeline_run(const cg_lifted* patch, const cg_bank* cached_bank_or_null,
                          const cg_pipeline_params* params, cg_result** out) {
    return wrap([&] {
        check(patch && params && out, "null argument");
        std::shared_ptr<const cg::KernelBank> cached;
        if (cached_bank_or_null) cached = cached_bank_or_null->v;
        *out = new cg_result{cg::run_pipeline(patch->v, cached, pipeline_params(*params))};
    });
}

int cg_result_k(const cg_result* result) { return result ? result->v.clusters.k : 0; }

double cg_result_quality(const cg_result* result) {
    return result ? result->v.clusters.q_clust : 0.0;
}

long cg_result_count(const cg_result* result) {
    return result ? static_cast<long>(result->v.clusters.labels.size()) : 0;
}

int cg_result_label(const cg_result* result, long index) {
    if (!result || index < 0 || index >= static_cast<long>(result->v.clusters.labels.size()))
        return cg::kNoiseLabel;
    return result->v.clusters.labels[index];
}

cg_status cg_result_json(const cg_result* result, char** out) {
    return wrap([&] {
        check(result && out, "null argument");
        *out = dup_string(cg::result_to_json(result->v));
    });
}

void cg_result_timings(const cg_result* result, double out4[4]) {
    if (!result || !out4) return;
    out4[0] = result->v.t_disc;
    out4[1] = result->v.t_kernel;
    out4[2] = result->v.t_affinity;
    out4[3] = result->v.t_clust;
}

void cg_result_weights(const cg_result* result, double out4[4]) {
    if (!result || !out4) return;
    out4[0] = result->v.w_disc;
    out4[1] = result->v.w_kernel;
    out4[2] = result->v.w_affinity;
    out4[3] = result->v.w_clust;
}

cg_status cg_result_bank(const cg_result* result, cg_bank** out) {
    return wrap([&] {
        check(result && out, "null argument");
        check(result->v.bank != nullptr, "result carries no bank");
        *out = new cg_bank{result->v.bank};
    });
}

cg_status cg_affinity_dump(const cg_lifted* patch, const cg_bank* bank,
                           const cg_pipeline_params* params, const char* bin_path,
                           const char* json_path) {
    return wrap([&] {
        check(patch && bank && params && bin_path && json_path, "null argument");
        cg::KernelWeights weights;
        weights.sigma_kappa_exp = params->sigma_kappa_exp;
        weights.sigma_int = params->sigma_int;
        const cg::AffinityMatrix m = cg::build_affinity(patch->v, *bank->v, weights);
        cg::dump_affinity(m, bin_path, json_path);
    });
}

void cg_result_free(cg_result* result) { delete result; }

/* ---- phantoms ---- */

cg_status cg_phantom_generate(const char* category, unsigned long long seed, cg_phantom** out) {
    return wrap([&] {
        check(category && out, "null argument");
        cg::PhantomSpec spec;
        spec.category = category;
        spec.seed = seed;
        *out = new cg_phantom{cg::generate(spec)};
    });
}

cg_status cg_phantom_image(const cg_phantom* phantom, cg_image** out) {
    return wrap([&] {
        check(phantom && out, "null argument");
        *out = new cg_image{phantom->v.image};
    });
}

cg_status cg_phantom_mask(const cg_phantom* phantom, cg_mask** out) {
    return wrap([&] {
        check(phantom && out, "null argument");
        *out = new cg_mask{phantom->v.mask};
    });
}

cg_status cg_phantom_lifted(const cg_phantom* phantom, cg_lifted** out) {
    return wrap([&] {
        check(phantom && out, "null argument");
        *out = new cg_lifted{phantom->v.gt};
    });
}

int cg_phantom_units(const cg_phantom* phantom) { return phantom ? phantom->v.n_units : 0; }

cg_status cg_phantom_labels_json(const cg_phantom* phantom, char** out) {
    return wrap([&] {
        check(phantom && out, "null argument");
        *out = dup_string(cg::labels_to_json(phantom->v));
    });
}

cg_status cg_phantom_spec_json(const cg_phantom* phantom, char** out) {
    return wrap([&] {
        check(phantom && out, "null argument");
        *out = dup_string(cg::spec_to_json(phantom->v.spec));
    });
}

void cg_phantom_free(cg_phantom* phantom) { delete phantom; }

/* ---- evaluation ---- */

cg_status cg_labels_parse(const char* json_text, cg_labels** out) {
    return wrap([&] {
        check(json_text && out, "null argument");
        *out = new cg_labels{cg::labels_from_json(json_text)};
    });
}

cg_status cg_labels_from_class_map(const cg_image* label_map, const char* class_map_json,
                                   cg_labels** out) {
    return wrap([&] {
        check(label_map && class_map_json && out, "null argument");
        *out = new cg_labels{cg::labels_from_class_map(label_map->v, class_map_json)};
    });
}

cg_status cg_match_partition(const cg_result* result, const cg_lifted* points,
                             const cg_labels* labels, double jaccard_min, int* correct_out) {
    return wrap([&] {
        check(result && points && labels && correct_out, "null argument");
        *correct_out = cg::match_partition(result->v.clusters, points->v.points, labels->v,
                                           jaccard_min)
                           ? 1
                           : 0;
    });
}

cg_status cg_match_partition_labels(const int* labels, long count, const cg_lifted* points,
                                    const cg_labels* gt, double jaccard_min, int* correct_out) {
    return wrap([&] {
        check(labels && points && gt && correct_out, "null argument");
        check(count == static_cast<long>(points->v.points.size()),
              "label count does not match the lifted point count");
        cg::ClusterResult pred;
        pred.labels.assign(labels, labels + count);
        for (int l : pred.labels) pred.k = std::max(pred.k, l);
        *correct_out =
            cg::match_partition(pred, points->v.points, gt->v, jaccard_min) ? 1 : 0;
    });
}

void cg_labels_free(cg_labels* labels) { delete labels; }

static std::vector<cg::CaseOutcome> convert_outcomes(const cg_case_outcome* outcomes, long count) {
    std::vector<cg::CaseOutcome> list;
    list.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        const cg_case_outcome& c = outcomes[i];
        cg::CaseOutcome o;
        o.id = c.id ? c.id : "";
        o.category = c.category ? c.category : "";
        o.correct = c.correct != 0;
        o.q_clust = c.q_clust;
        o.t_disc = c.t[0];
        o.t_kernel = c.t[1];
        o.t_affinity = c.t[2];
        o.t_clust = c.t[3];
        o.w_disc = c.w[0];
        o.w_kernel = c.w[1];
        o.w_affinity = c.w[2];
        o.w_clust = c.w[3];
        o.sigma_kappa_diff = c.sigma_kappa_diff;
        o.sigma_int = c.sigma_int;
        list.push_back(std::move(o));
    }
    return list;
}

cg_status cg_report_json(const cg_case_outcome* outcomes, long count, char** out) {
    return wrap([&] {
        check(outcomes && count > 0 && out, "null argument");
        *out = dup_string(cg::report_to_json(cg::build_report(convert_outcomes(outcomes, count))));
    });
}

cg_status cg_report_text(const cg_case_outcome* outcomes, long count, char** out) {
    return wrap([&] {
        check(outcomes && count > 0 && out, "null argument");
        *out = dup_string(cg::report_to_text(cg::build_report(convert_outcomes(outcomes, count))));
    });
}

/* ---- rendering ---- */

cg_status cg_render_orientation(const cg_image* image, const cg_mask* mask,
                                const cg_lift_params* params, cg_image** out) {
    return wrap([&] {
        check(image && mask && params && out, "null argument");
        const LiftMaps maps = lift_maps(image->v, *params);
        *out = new cg_image{cg::render_orientation(maps.orientation, mask->v)};
    });
}

cg_status cg_render_curvature(const cg_image* image, const cg_mask* mask,
                              const cg_lift_params* params, cg_image** out) {
    return wrap([&] {
        check(image && mask && params && out, "null argument");
        const LiftMaps maps = lift_maps(image->v, *params);
        *out = new cg_image{cg::render_curvature(maps.kappa, maps.orientation, mask->v)};
    });
}

cg_status cg_render_clusters(const cg_lifted* lifted, const cg_result* result, cg_image** out) {
    return wrap([&] {
        check(lifted && result && out, "null argument");
        *out = new cg_image{cg::render_clusters(lifted->v, result->v.clusters)};
    });
}

cg_status cg_render_label_map(const cg_lifted* lifted, const int* labels, long count,
                              cg_image** out) {
    return wrap([&] {
        check(lifted && labels && out, "null argument");
        check(count == static_cast<long>(lifted->v.points.size()),
              "label count does not match the lifted point count");
        cg::ClusterResult result;
        result.labels.assign(labels, labels + count);
        for (int l : result.labels) result.k = std::max(result.k, l);
        *out = new cg_image{cg::render_clusters(lifted->v, result)};
    });
}

cg_status cg_render_kernel(const cg_bank* bank, int slice, cg_image** out) {
    return wrap([&] {
        check(bank && out, "null argument");
        check(slice >= 0 && slice < bank->v->slices(), "slice out of range");
        *out = new cg_image{cg::render_kernel(bank->v->grids[slice])};
    });
}

} /* extern "C" */
