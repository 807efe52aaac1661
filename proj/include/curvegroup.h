/* curvegroup: perceptual grouping of curvilinear structures.
 *
 * C interface over the C++ core. All objects are opaque handles created and
 * released by the library; every function returns a status code and reports
 * details through cg_last_error(). Strings returned through char** are
 * heap-allocated and must be released with cg_string_free().
 */
#ifndef CURVEGROUP_H
#define CURVEGROUP_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cg_status {
    CG_OK = 0,
    CG_ERROR_INVALID_ARGUMENT = 1,
    CG_ERROR_IO = 2,
    CG_ERROR_FORMAT = 3,
    CG_ERROR_NUMERIC = 4,
    CG_ERROR_INTERNAL = 5
} cg_status;

const char* cg_version(void);
/* message for the most recent failure on this thread */
const char* cg_last_error(void);
void cg_string_free(char* s);

typedef struct cg_image cg_image;
typedef struct cg_mask cg_mask;
typedef struct cg_lifted cg_lifted;
typedef struct cg_bank cg_bank;
typedef struct cg_phantom cg_phantom;
typedef struct cg_labels cg_labels;
typedef struct cg_result cg_result;

/* ---- images and masks (netpbm P5/P6) ---- */

cg_status cg_image_read(const char* path, cg_image** out);
cg_status cg_image_write_pgm(const cg_image* img, const char* path, int bits);
cg_status cg_image_write_ppm(const cg_image* img, const char* path);
int cg_image_width(const cg_image* img);
int cg_image_height(const cg_image* img);
int cg_image_channels(const cg_image* img);
double cg_image_get(const cg_image* img, int x, int y, int channel);
/* one channel of a color image as a grayscale image */
cg_status cg_image_channel(const cg_image* img, int channel, cg_image** out);
/* luminosity/contrast normalization of both channels and sqrt(g^2+r^2) */
cg_status cg_image_preprocess(const cg_image* red, const cg_image* green, cg_image** out);
void cg_image_free(cg_image* img);

cg_status cg_mask_read(const char* path, cg_mask** out);
cg_status cg_mask_write(const cg_mask* mask, const char* path);
int cg_mask_width(const cg_mask* mask);
int cg_mask_height(const cg_mask* mask);
void cg_mask_free(cg_mask* mask);

/* ---- lifting to the 5D feature space ---- */

typedef struct cg_lift_params {
    int n_theta;       /* discrete orientations, default 18 */
    int filter_size;   /* odd cake-wavelet size, default 51 */
    int n_scales;      /* curvature scales in use */
    double scales[8];  /* default {1.5, 2.5, 3.5} */
    double beta;       /* angular/spatial balance, default 0.1 */
    double kappa_cap;  /* curvature clamp, default 0.5 */
    double angular_sigma_bins; /* orientation smoothing, default 1.3 */
} cg_lift_params;
void cg_lift_params_init(cg_lift_params* params);

cg_status cg_lift_image(const cg_image* image, const cg_mask* mask,
                        const cg_lift_params* params, cg_lifted** out);
cg_status cg_lifted_crop(const cg_lifted* lifted, int cx, int cy, int s_o, cg_lifted** out);
cg_status cg_lifted_write(const cg_lifted* lifted, const char* path);
cg_status cg_lifted_write_json(const cg_lifted* lifted, const char* path);
cg_status cg_lifted_read(const char* path, cg_lifted** out);
long cg_lifted_count(const cg_lifted* lifted);
int cg_lifted_n_theta(const cg_lifted* lifted);
/* out5 = {x, y, theta (radians), f, kappa} */
cg_status cg_lifted_point(const cg_lifted* lifted, long index, double out5[5]);
void cg_lifted_free(cg_lifted* lifted);

/* skeleton branch points; xy_out receives 2*count ints (x, y pairs) owned by
 * the caller via cg_buffer_free */
cg_status cg_detect_junctions(const cg_mask* mask, int** xy_out, long* count);
void cg_buffer_free(void* buffer);

/* ---- connectivity kernel bank ---- */

typedef struct cg_bank_params {
    double kappa_min, kappa_max, kappa_step;
    int n_theta;
    int steps;                 /* states per path (start included) */
    unsigned long long paths;  /* Monte Carlo repetitions */
    double step_len;
    double sigma_kappa_diff;
    unsigned long long seed;
    int grid_nx, grid_ny; /* 0 = sized from steps */
} cg_bank_params;
void cg_bank_params_init(cg_bank_params* params);

cg_status cg_bank_build(const cg_bank_params* params, cg_bank** out);
cg_status cg_bank_save(const cg_bank* bank, const char* path);
cg_status cg_bank_load(const char* path, cg_bank** out);
int cg_bank_slices(const cg_bank* bank);
double cg_bank_kappa(const cg_bank* bank, int slice);
double cg_bank_mass(const cg_bank* bank, int slice);
/* kernel density from (x,y,theta) to (x',y',theta') on the nearest-kappa slice */
double cg_bank_eval(const cg_bank* bank, const double from3[3], const double to3[3], double kappa);
/* 2D projection over orientations as an image (normalize != 0: max -> 1) */
cg_status cg_bank_project(const cg_bank* bank, int slice, int normalize, cg_image** out);
void cg_bank_free(cg_bank* bank);

/* ---- pipeline: affinity + self-tuning spectral clustering ---- */

typedef struct cg_pipeline_params {
    double sigma_kappa_exp; /* curvature-difference scale of the 5D weight */
    double sigma_int;       /* intensity-difference scale */
    int max_k;              /* candidate cluster counts 2..max_k */
    int min_cluster_size;   /* 0 = max(5, 1% of N) */
    double selection_tol;   /* accept K when J_K/N <= 1 + selection_tol */
    double ncut_max;        /* and every group's normalized cut is below this */
    int use_argmin;
    /* in-run bank construction when no cached bank is passed: */
    unsigned long long paths;
    double sigma_kappa_diff;
    unsigned long long seed;
    double kappa_step;
    double step_len;
} cg_pipeline_params;
void cg_pipeline_params_init(cg_pipeline_params* params);

cg_status cg_pipeline_run(const cg_lifted* patch, const cg_bank* cached_bank_or_null,
                          const cg_pipeline_params* params, cg_result** out);
int cg_result_k(const cg_result* result);
double cg_result_quality(const cg_result* result);
long cg_result_count(const cg_result* result);
/* 0 = noise, 1..K otherwise */
int cg_result_label(const cg_result* result, long index);
/* {"K","Q_clust","labels","noise","costs","timings"} */
cg_status cg_result_json(const cg_result* result, char** out);
/* seconds: {t_disc, t_kernel, t_affinity, t_clust}; t_clust already / n_c */
void cg_result_timings(const cg_result* result, double out4[4]);
void cg_result_weights(const cg_result* result, double out4[4]);
/* bank built during the run (NULL if a cached bank was used) */
cg_status cg_result_bank(const cg_result* result, cg_bank** out);
cg_status cg_affinity_dump(const cg_lifted* patch, const cg_bank* bank,
                           const cg_pipeline_params* params, const char* bin_path,
                           const char* json_path);
void cg_result_free(cg_result* result);

/* ---- phantom stimuli with analytic ground truth ---- */

cg_status cg_phantom_generate(const char* category, unsigned long long seed, cg_phantom** out);
cg_status cg_phantom_image(const cg_phantom* phantom, cg_image** out);
cg_status cg_phantom_mask(const cg_phantom* phantom, cg_mask** out);
cg_status cg_phantom_lifted(const cg_phantom* phantom, cg_lifted** out);
int cg_phantom_units(const cg_phantom* phantom);
cg_status cg_phantom_labels_json(const cg_phantom* phantom, char** out);
cg_status cg_phantom_spec_json(const cg_phantom* phantom, char** out);
void cg_phantom_free(cg_phantom* phantom);

/* ---- evaluation ---- */

cg_status cg_labels_parse(const char* json_text, cg_labels** out);
/* P5 class-id map + {"classes":{name:value},"maxval":n}; connected
 * components of each class become distinct units */
cg_status cg_labels_from_class_map(const cg_image* label_map, const char* class_map_json,
                                   cg_labels** out);
cg_status cg_match_partition(const cg_result* result, const cg_lifted* points,
                             const cg_labels* labels, double jaccard_min, int* correct_out);
/* same check for a label array (e.g. parsed back from a result file) */
cg_status cg_match_partition_labels(const int* labels, long count, const cg_lifted* points,
                                    const cg_labels* gt, double jaccard_min, int* correct_out);
void cg_labels_free(cg_labels* labels);

typedef struct cg_case_outcome {
    const char* id;
    const char* category;
    int correct;
    double q_clust;
    double t[4]; /* disc, kernel, affinity, clust */
    double w[4];
    double sigma_kappa_diff;
    double sigma_int;
} cg_case_outcome;
cg_status cg_report_json(const cg_case_outcome* outcomes, long count, char** out);
cg_status cg_report_text(const cg_case_outcome* outcomes, long count, char** out);

/* ---- rendering ---- */

cg_status cg_render_orientation(const cg_image* image, const cg_mask* mask,
                                const cg_lift_params* params, cg_image** out);
cg_status cg_render_curvature(const cg_image* image, const cg_mask* mask,
                              const cg_lift_params* params, cg_image** out);
cg_status cg_render_clusters(const cg_lifted* lifted, const cg_result* result, cg_image** out);
cg_status cg_render_label_map(const cg_lifted* lifted, const int* labels, long count,
                              cg_image** out);
cg_status cg_render_kernel(const cg_bank* bank, int slice, cg_image** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CURVEGROUP_H */
