#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cluster.hpp"
#include "image.hpp"
#include "liftspace.hpp"

namespace cg {

// Multi-label ground truth: unit ids per pixel. Crossing pixels carry every
// unit that passes through them.
struct GroundTruthLabels {
    int width = 0;
    int height = 0;
    int units = 0;
    std::map<std::pair<int, int>, std::vector<int>> by_pixel;
};

GroundTruthLabels labels_from_json(const std::string& text);

// Artery/vein style ingestion: a P5 map whose pixel values are class ids
// (per the JSON class map) is split into connected components per class,
// each component becoming one unit.
GroundTruthLabels labels_from_class_map(const Image2D& label_map, const std::string& class_map_json);

// Greedy one-to-one matching of predicted groups to ground-truth units by
// descending overlap; true iff every unit is matched to a distinct group
// with Jaccard >= jaccard_min. Noise points are excluded; a crossing pixel
// counts as correct for any of its labels.
bool match_partition(const ClusterResult& pred, const std::vector<LiftedPoint>& points,
                     const GroundTruthLabels& gt, double jaccard_min = 0.8);

struct CaseOutcome {
    std::string id;
    std::string category;
    bool correct = false;
    double q_clust = 0.0;
    // seconds: discretization, kernel, affinity, clustering (already / n_c)
    double t_disc = 0.0, t_kernel = 0.0, t_affinity = 0.0, t_clust = 0.0;
    double w_disc = 1.0, w_kernel = 1.0, w_affinity = 1.0, w_clust = 1.0;
    double sigma_kappa_diff = 0.0;
    double sigma_int = 0.0;
};

struct CategoryRow {
    std::string category;
    int size = 0;
    double sigma_kappa_mean = 0.0;
    double sigma_int_mean = 0.0;
    double cdr = 0.0;
    double q_mean = 0.0;
};

struct Report {
    std::vector<CategoryRow> rows;  // per category plus a final "All" row
    // timing table: plain and weighted means per stage
    double mean_t[4] = {0, 0, 0, 0};      // disc, kernel, affinity, clust
    double weighted_t[4] = {0, 0, 0, 0};
};

double cdr(const std::vector<CaseOutcome>& outcomes);
std::map<std::string, double> cdr_by_category(const std::vector<CaseOutcome>& outcomes);

Report build_report(const std::vector<CaseOutcome>& outcomes);
std::string report_to_json(const Report& report);
std::string report_to_text(const Report& report);

}  // namespace cg
