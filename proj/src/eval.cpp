#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "common.hpp"

namespace cg {

GroundTruthLabels labels_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        fail_format(std::string("labels json: ") + e.what());
    }
    GroundTruthLabels gt;
    gt.width = j.at("width").get<int>();
    gt.height = j.at("height").get<int>();
    gt.units = j.at("units").get<int>();
    for (const auto& entry : j.at("points")) {
        const int x = entry.at(0).get<int>();
        const int y = entry.at(1).get<int>();
        std::vector<int> units = entry.at(2).get<std::vector<int>>();
        if (units.empty()) fail_format("labels json: point without units");
        gt.by_pixel[{x, y}] = std::move(units);
    }
    return gt;
}

GroundTruthLabels labels_from_class_map(const Image2D& label_map,
                                        const std::string& class_map_json) {
    require(label_map.channels == 1, "class map must be single channel");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(class_map_json);
    } catch (const std::exception& e) {
        fail_format(std::string("class map json: ") + e.what());
    }
    // {"classes": {"artery": 1, "vein": 2}, "maxval": 255}
    const int maxval = j.value("maxval", 255);
    std::set<int> class_values;
    for (const auto& [name, value] : j.at("classes").items()) {
        (void)name;
        class_values.insert(value.get<int>());
    }

    const int w = label_map.width, h = label_map.height;
    std::vector<int> klass(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int v = static_cast<int>(std::lround(label_map.at(x, y) * maxval));
            if (v == 0) continue;
            if (!class_values.count(v)) fail_format("class map pixel value not in class map json");
            klass[static_cast<std::size_t>(y) * w + x] = v;
        }

    // 8-connected components within each class; every component is one unit
    GroundTruthLabels gt;
    gt.width = w;
    gt.height = h;
    std::vector<int> unit(klass.size(), 0);
    int next_unit = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!klass[idx] || unit[idx]) continue;
            const int k = klass[idx];
            ++next_unit;
            stack.push_back({x, y});
            unit[idx] = next_unit;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (klass[ni] == k && !unit[ni]) {
                            unit[ni] = next_unit;
                            stack.push_back({nx, ny});
                        }
                    }
            }
        }
    gt.units = next_unit;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (unit[idx]) gt.by_pixel[{x, y}] = {unit[idx]};
        }
    return gt;
}

bool match_partition(const ClusterResult& pred, const std::vector<LiftedPoint>& points,
                     const GroundTruthLabels& gt, double jaccard_min) {
    require(pred.labels.size() == points.size(), "match_partition: label/point count mismatch");
    // every evaluated point must carry ground truth
    std::vector<const std::vector<int>*> point_units(points.size(), nullptr);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto it = gt.by_pixel.find({points[i].x, points[i].y});
        if (it == gt.by_pixel.end())
            fail_invalid("match_partition: prediction covers a pixel without ground truth");
        point_units[i] = &it->second;
    }

    // sizes over non-noise points only
    std::map<int, std::size_t> group_size;   // predicted label -> count
    std::map<int, std::size_t> unit_size;    // unit id -> count
    std::map<std::pair<int, int>, std::size_t> overlap;  // (unit, group)
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int g = pred.labels[i];
        if (g == kNoiseLabel) continue;
        ++group_size[g];
        for (int u : *point_units[i]) {
            ++unit_size[u];
            ++overlap[{u, g}];
        }
    }
    if (unit_size.empty()) return false;

    // greedy one-to-one matching by descending overlap (ties: unit, group)
    std::vector<std::tuple<std::size_t, int, int>> order;  // (overlap, unit, group)
    for (const auto& [key, count] : overlap) order.emplace_back(count, key.first, key.second);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
        return std::get<2>(a) < std::get<2>(b);
    });
    std::map<int, int> unit_to_group;
    std::set<int> used_groups;
    for (const auto& [count, u, g] : order) {
        if (unit_to_group.count(u) || used_groups.count(g)) continue;
        unit_to_group[u] = g;
        used_groups.insert(g);
    }

    for (const auto& [u, size_u] : unit_size) {
        const auto it = unit_to_group.find(u);
        if (it == unit_to_group.end()) return false;  // unmatched unit
        const std::size_t inter = overlap[{u, it->second}];
        const std::size_t uni = size_u + group_size[it->second] - inter;
        if (uni == 0 || static_cast<double>(inter) / static_cast<double>(uni) < jaccard_min)
            return false;
    }
    return true;
}

double cdr(const std::vector<CaseOutcome>& outcomes) {
    require(!outcomes.empty(), "cdr: empty outcome list");
    std::size_t correct = 0;
    for (const CaseOutcome& o : outcomes) correct += o.correct ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

std::map<std::string, double> cdr_by_category(const std::vector<CaseOutcome>& outcomes) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
    for (const CaseOutcome& o : outcomes) {
        auto& [correct, total] = tally[o.category];
        correct += o.correct ? 1 : 0;
        ++total;
    }
    std::map<std::string, double> out;
    for (const auto& [cat, counts] : tally)
        out[cat] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return out;
}

Report build_report(const std::vector<CaseOutcome>& outcomes) {
    require(!outcomes.empty(), "build_report: empty outcome list");
    Report report;

    std::vector<std::string> cats;
    for (const CaseOutcome& o : outcomes)
        if (std::find(cats.begin(), cats.end(), o.category) == cats.end())
            cats.push_back(o.category);
    std::sort(cats.begin(), cats.end());

    auto make_row = [&](const std::string& cat) {
        CategoryRow row;
        row.category = cat;
        double q = 0.0, sk = 0.0, si = 0.0;
        std::size_t correct = 0;
        for (const CaseOutcome& o : outcomes) {
            if (!cat.empty() && o.category != cat) continue;
            ++row.size;
            correct += o.correct ? 1 : 0;
            q += o.q_clust;
            sk += o.sigma_kappa_diff;
            si += o.sigma_int;
        }
        if (row.size) {
            row.cdr = static_cast<double>(correct) / row.size;
            row.q_mean = q / row.size;
            row.sigma_kappa_mean = sk / row.size;
            row.sigma_int_mean = si / row.size;
        }
        return row;
    };
    for (const std::string& cat : cats) report.rows.push_back(make_row(cat));
    CategoryRow all = make_row("");
    all.category = "All";
    report.rows.push_back(all);

    double wsum[4] = {0, 0, 0, 0};
    for (const CaseOutcome& o : outcomes) {
        const double t[4] = {o.t_disc, o.t_kernel, o.t_affinity, o.t_clust};
        const double w[4] = {o.w_disc, o.w_kernel, o.w_affinity, o.w_clust};
        for (int s = 0; s < 4; ++s) {
            require(t[s] >= 0.0 && w[s] > 0.0, "timings must be >= 0 with positive weights");
            report.mean_t[s] += t[s];
            report.weighted_t[s] += w[s] * t[s];
            wsum[s] += w[s];
        }
    }
    for (int s = 0; s < 4; ++s) {
        report.mean_t[s] /= static_cast<double>(outcomes.size());
        report.weighted_t[s] /= wsum[s];
    }
    return report;
}

std::string report_to_json(const Report& report) {
    nlohmann::json j;
    nlohmann::json rows = nlohmann::json::array();
    for (const CategoryRow& r : report.rows)
        rows.push_back({{"group", r.category},
                        {"size", r.size},
                        {"sigma_kappa", r.sigma_kappa_mean},
                        {"sigma_int", r.sigma_int_mean},
                        {"cdr", r.cdr},
                        {"q_clust", r.q_mean}});
    j["rows"] = std::move(rows);
    const char* names[4] = {"t_disc", "t_kernel", "t_affinity", "t_clust"};
    for (int s = 0; s < 4; ++s) {
        j["timing"]["mean"][names[s]] = report.mean_t[s];
        j["timing"]["weighted_mean"][names[s]] = report.weighted_t[s];
    }
    return j.dump(2) + "\n";
}

std::string report_to_text(const Report& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %6s %14s %12s %8s %9s\n", "Group", "Size",
                  "sigma_kappa", "sigma_int", "CDR", "Q_clust");
    out += line;
    for (const CategoryRow& r : report.rows) {
        std::snprintf(line, sizeof line, "%-6s %6d %14.4f %12.4f %8.4f %9.4f\n",
                      r.category.c_str(), r.size, r.sigma_kappa_mean, r.sigma_int_mean, r.cdr,
                      r.q_mean);
        out += line;
    }
    out += "\n";
    std::snprintf(line, sizeof line, "%-18s %10s %10s %12s %10s\n", "", "t_disc", "t_kernel",
                  "t_affinity", "t_clust");
    out += line;
    std::snprintf(line, sizeof line, "%-18s %10.4f %10.4f %12.4f %10.4f\n", "mean(s)",
                  report.mean_t[0], report.mean_t[1], report.mean_t[2], report.mean_t[3]);
    out += line;
    std::snprintf(line, sizeof line, "%-18s %10.4f %10.4f %12.4f %10.4f\n", "weighted mean(s)",
                  report.weighted_t[0], report.weighted_t[1], report.weighted_t[2],
                  report.weighted_t[3]);
    out += line;
    return out;
}

}  // namespace cg
