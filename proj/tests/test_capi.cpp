// Exercises the shared-library surface through the public C header only.
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <string>

#include "curvegroup.h"

namespace {

struct Cleanup {
    cg_image* image = nullptr;
    cg_mask* mask = nullptr;
    cg_lifted* lifted = nullptr;
    cg_bank* bank = nullptr;
    cg_result* result = nullptr;
    cg_phantom* phantom = nullptr;
    cg_labels* labels = nullptr;
    ~Cleanup() {
        cg_image_free(image);
        cg_mask_free(mask);
        cg_lifted_free(lifted);
        cg_bank_free(bank);
        cg_result_free(result);
        cg_phantom_free(phantom);
        cg_labels_free(labels);
    }
};

}  // namespace

TEST_CASE("capi: version and error text") {
    CHECK(cg_version() != nullptr);
    CHECK(cg_image_read(nullptr, nullptr) == CG_ERROR_INVALID_ARGUMENT);
    CHECK(std::strlen(cg_last_error()) > 0);
    cg_image* img = nullptr;
    CHECK(cg_image_read("/nonexistent/image.pgm", &img) == CG_ERROR_IO);
}

TEST_CASE("capi: phantom -> bank -> pipeline -> match round trip") {
    Cleanup c;
    REQUIRE(cg_phantom_generate("three_circles", 1, &c.phantom) == CG_OK);
    CHECK(cg_phantom_units(c.phantom) == 3);
    REQUIRE(cg_phantom_lifted(c.phantom, &c.lifted) == CG_OK);
    const long n = cg_lifted_count(c.lifted);
    CHECK(n > 1000);
    CHECK(cg_lifted_n_theta(c.lifted) == 18);
    double p5[5];
    REQUIRE(cg_lifted_point(c.lifted, 0, p5) == CG_OK);
    CHECK(p5[0] >= 0);
    CHECK(cg_lifted_point(c.lifted, n, p5) == CG_ERROR_INVALID_ARGUMENT);

    cg_bank_params bp;
    cg_bank_params_init(&bp);
    bp.paths = 20000;  // light bank for the smoke path
    REQUIRE(cg_bank_build(&bp, &c.bank) == CG_OK);
    CHECK(cg_bank_slices(c.bank) == 9);
    CHECK(cg_bank_kappa(c.bank, 0) == doctest::Approx(-0.2));
    CHECK(cg_bank_mass(c.bank, 4) > 0.0);
    const double from[3] = {0, 0, 0}, to[3] = {4, 0, 0};
    CHECK(cg_bank_eval(c.bank, from, to, 0.0) > 0.0);

    REQUIRE(cg_bank_save(c.bank, "/tmp/cg_capi_bank.k5d") == CG_OK);
    cg_bank* loaded = nullptr;
    REQUIRE(cg_bank_load("/tmp/cg_capi_bank.k5d", &loaded) == CG_OK);
    CHECK(cg_bank_slices(loaded) == 9);
    cg_bank_free(loaded);
    std::remove("/tmp/cg_capi_bank.k5d");

    cg_pipeline_params pp;
    cg_pipeline_params_init(&pp);
    REQUIRE(cg_pipeline_run(c.lifted, c.bank, &pp, &c.result) == CG_OK);
    CHECK(cg_result_k(c.result) == 3);
    CHECK(cg_result_quality(c.result) > 0.9);
    CHECK(cg_result_count(c.result) == n);

    char* labels_json = nullptr;
    REQUIRE(cg_phantom_labels_json(c.phantom, &labels_json) == CG_OK);
    REQUIRE(cg_labels_parse(labels_json, &c.labels) == CG_OK);
    cg_string_free(labels_json);
    int correct = -1;
    REQUIRE(cg_match_partition(c.result, c.lifted, c.labels, 0.8, &correct) == CG_OK);
    CHECK(correct == 1);

    char* result_json = nullptr;
    REQUIRE(cg_result_json(c.result, &result_json) == CG_OK);
    const std::string text = result_json;
    cg_string_free(result_json);
    CHECK(text.find("\"K\": 3") != std::string::npos);
    CHECK(text.find("\"timings\"") != std::string::npos);

    double t[4], w[4];
    cg_result_timings(c.result, t);
    cg_result_weights(c.result, w);
    CHECK(w[1] == doctest::Approx(w[0] * cg_bank_slices(c.bank)));
    CHECK(w[2] == doctest::Approx(double(n) * double(n)));

    cg_image* overlay = nullptr;
    REQUIRE(cg_render_clusters(c.lifted, c.result, &overlay) == CG_OK);
    CHECK(cg_image_channels(overlay) == 3);
    cg_image_free(overlay);
}

TEST_CASE("capi: lift matches the ground-truth point set") {
    Cleanup c;
    REQUIRE(cg_phantom_generate("B", 7, &c.phantom) == CG_OK);
    REQUIRE(cg_phantom_image(c.phantom, &c.image) == CG_OK);
    REQUIRE(cg_phantom_mask(c.phantom, &c.mask) == CG_OK);
    cg_lift_params lp;
    cg_lift_params_init(&lp);
    REQUIRE(cg_lift_image(c.image, c.mask, &lp, &c.lifted) == CG_OK);
    cg_lifted* gt = nullptr;
    REQUIRE(cg_phantom_lifted(c.phantom, &gt) == CG_OK);
    CHECK(cg_lifted_count(c.lifted) == cg_lifted_count(gt));
    cg_lifted_free(gt);

    cg_lifted* patch = nullptr;
    REQUIRE(cg_lifted_crop(c.lifted, 100, 100, 25, &patch) == CG_OK);
    CHECK(cg_lifted_count(patch) < cg_lifted_count(c.lifted));
    REQUIRE(cg_lifted_write(patch, "/tmp/cg_capi_patch.l5d") == CG_OK);
    cg_lifted* back = nullptr;
    REQUIRE(cg_lifted_read("/tmp/cg_capi_patch.l5d", &back) == CG_OK);
    CHECK(cg_lifted_count(back) == cg_lifted_count(patch));
    cg_lifted_free(back);
    cg_lifted_free(patch);
    std::remove("/tmp/cg_capi_patch.l5d");
}

TEST_CASE("capi: junction detection and report building") {
    Cleanup c;
    REQUIRE(cg_phantom_generate("B", 3, &c.phantom) == CG_OK);
    REQUIRE(cg_phantom_mask(c.phantom, &c.mask) == CG_OK);
    int* xy = nullptr;
    long count = -1;
    REQUIRE(cg_detect_junctions(c.mask, &xy, &count) == CG_OK);
    CHECK(count >= 1);  // B has one bifurcation
    cg_buffer_free(xy);

    cg_case_outcome o{};
    o.id = "B";
    o.category = "B";
    o.correct = 1;
    o.q_clust = 0.99;
    for (int s = 0; s < 4; ++s) {
        o.t[s] = 0.5;
        o.w[s] = 2.0;
    }
    o.sigma_kappa_diff = 0.001;
    o.sigma_int = 0.275;
    char* text = nullptr;
    REQUIRE(cg_report_text(&o, 1, &text) == CG_OK);
    const std::string report = text;
    cg_string_free(text);
    CHECK(report.find("t_kernel") != std::string::npos);
}
