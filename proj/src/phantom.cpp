#include "phantom.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "common.hpp"
#include "rng.hpp"

namespace cg {
namespace {

constexpr double kRasterStep = 0.2;  // arclength step while stamping

struct LocalPoint {
    double x, y, alpha, kappa, speed;
};

LocalPoint eval_local(const Element& e, double t) {
    switch (e.kind) {
        case ElementKind::Segment:
            return {t, 0.0, 0.0, 0.0, 1.0};
        case ElementKind::Circle: {
            const double a = e.p1 + t;
            return {e.p0 * std::cos(a), e.p0 * std::sin(a), a + kPi / 2.0, 1.0 / e.p0, e.p0};
        }
        case ElementKind::Sine: {
            const double x = t - e.p2 / 2.0;
            const double m = e.p0 * e.p1 * std::cos(e.p1 * x);
            const double denom = std::pow(1.0 + m * m, 1.5);
            return {x, e.p0 * std::sin(e.p1 * x), std::atan(m),
                    -e.p0 * e.p1 * e.p1 * std::sin(e.p1 * x) / denom, std::sqrt(1.0 + m * m)};
        }
        case ElementKind::EulerSpiral: {
            // arclength parameter; position integrated at a fixed substep
            const double sub = 0.05;
            double x = 0.0, y = 0.0, s = 0.0;
            while (s < t) {
                const double h = std::min(sub, t - s);
                const double th_mid = e.p0 * (s + h / 2.0) + e.p1 * (s + h / 2.0) * (s + h / 2.0) / 2.0;
                x += h * std::cos(th_mid);
                y += h * std::sin(th_mid);
                s += h;
            }
            return {x, y, e.p0 * t + e.p1 * t * t / 2.0, e.p0 + e.p1 * t, 1.0};
        }
    }
    fail_invalid("unknown element kind");
}

void validate_element(const Element& e) {
    switch (e.kind) {
        case ElementKind::Segment:
            require(e.p0 > 0.0, "segment length must be positive");
            break;
        case ElementKind::Circle:
            require(e.p0 > 0.0, "circle radius must be positive");
            require(e.p2 > 0.0, "circle arc span must be positive");
            break;
        case ElementKind::Sine:
            require(e.p2 > 0.0, "sine length must be positive");
            break;
        case ElementKind::EulerSpiral:
            require(e.p2 > 0.0, "spiral length must be positive");
            break;
    }
    require(e.stroke_width >= 1.0, "stroke width must be at least one pixel");
}

}  // namespace

double element_t_end(const Element& e) {
    validate_element(e);
    return e.kind == ElementKind::Circle ? e.p2 : (e.kind == ElementKind::Sine ? e.p2 : e.p2);
}

CurvePoint eval_element(const Element& e, double t) {
    validate_element(e);
    const LocalPoint lp = eval_local(e, t);
    const double c = std::cos(e.rotate), s = std::sin(e.rotate);
    CurvePoint out;
    out.x = c * lp.x - s * lp.y + e.tx;
    out.y = s * lp.x + c * lp.y + e.ty;
    out.alpha = lp.alpha + e.rotate;
    out.kappa = lp.kappa;
    return out;
}

double canonical_kappa(double alpha, double kappa_parametric) {
    const double a = wrap_angle(alpha);
    const bool flip = a < -kPi / 2.0 || a >= kPi / 2.0;
    return flip ? -kappa_parametric : kappa_parametric;
}

std::vector<StrokeSample> render_element(const Element& e, int width, int height) {
    validate_element(e);
    const double t_end = e.kind == ElementKind::Segment ? e.p0 : element_t_end(e);
    const double radius = e.stroke_width / 2.0;
    const double dash_period = e.dash.on > 0.0 ? e.dash.on + e.dash.off : 0.0;

    // nearest-sample bookkeeping per pixel
    std::vector<double> best_d2(static_cast<std::size_t>(width) * height, -1.0);
    std::vector<StrokeSample> per_pixel(static_cast<std::size_t>(width) * height);

    double t = 0.0, arclen = 0.0;
    const double c = std::cos(e.rotate), s = std::sin(e.rotate);
    // incremental integration state for spirals
    double sx = 0.0, sy = 0.0, s_at = 0.0;
    while (t <= t_end) {
        LocalPoint lp = eval_local(e, e.kind == ElementKind::EulerSpiral ? 0.0 : t);
        if (e.kind == ElementKind::EulerSpiral) {
            const double sub = 0.05;
            while (s_at < t) {
                const double h = std::min(sub, t - s_at);
                const double mid = s_at + h / 2.0;
                const double th_mid = e.p0 * mid + e.p1 * mid * mid / 2.0;
                sx += h * std::cos(th_mid);
                sy += h * std::sin(th_mid);
                s_at += h;
            }
            lp = {sx, sy, e.p0 * t + e.p1 * t * t / 2.0, e.p0 + e.p1 * t, 1.0};
        }
        const bool drawn = dash_period <= 0.0 || std::fmod(arclen, dash_period) < e.dash.on;
        if (drawn) {
            const double gx = c * lp.x - s * lp.y + e.tx;
            const double gy = s * lp.x + c * lp.y + e.ty;
            const double alpha = lp.alpha + e.rotate;
            const int x0 = std::max(0, static_cast<int>(std::ceil(gx - radius)));
            const int x1 = std::min(width - 1, static_cast<int>(std::floor(gx + radius)));
            const int y0 = std::max(0, static_cast<int>(std::ceil(gy - radius)));
            const int y1 = std::min(height - 1, static_cast<int>(std::floor(gy + radius)));
            for (int py = y0; py <= y1; ++py)
                for (int px = x0; px <= x1; ++px) {
                    const double dx = px - gx, dy = py - gy;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 > radius * radius) continue;
                    const std::size_t idx = static_cast<std::size_t>(py) * width + px;
                    if (best_d2[idx] >= 0.0 && best_d2[idx] <= d2) continue;
                    best_d2[idx] = d2;
                    per_pixel[idx] = {px,
                                      py,
                                      wrap_orientation(alpha),
                                      canonical_kappa(alpha, lp.kappa),
                                      d2,
                                      e.unit};
                }
        }
        const double dt = kRasterStep / std::max(lp.speed, 1e-9);
        arclen += kRasterStep;
        t += dt;
    }

    std::vector<StrokeSample> out;
    for (std::size_t i = 0; i < best_d2.size(); ++i)
        if (best_d2[i] >= 0.0) out.push_back(per_pixel[i]);
    return out;
}

std::vector<std::string> phantom_categories() {
    return {"A", "B", "C", "D", "E", "A1", "B1", "C1", "D1", "E1"};
}

namespace {

struct Jitter {
    Rng rng;
    explicit Jitter(std::uint64_t seed) : rng(seed) {}
    double u(double lo, double hi) { return lo + (hi - lo) * rng.next_unit(); }
    double deg(double lo, double hi) { return u(lo, hi) * kPi / 180.0; }
};

Element sine(double amp, double wavelength, double rot, double tx, double ty, int unit,
             double width, double length = 185.0) {
    Element e;
    e.kind = ElementKind::Sine;
    e.p0 = amp;
    e.p1 = 2.0 * kPi / wavelength;
    e.p2 = length;
    e.rotate = rot;
    e.tx = tx;
    e.ty = ty;
    e.unit = unit;
    e.stroke_width = width;
    return e;
}

// Child branch starting on the parent curve, tangent- and
// curvature-continuous there, then curving away at `rate`.
Element branch(const Element& parent, double frac, double rate, double length, int unit) {
    const double t_end = parent.kind == ElementKind::Sine ? parent.p2 : element_t_end(parent);
    const CurvePoint at = eval_element(parent, frac * t_end);
    Element e;
    e.kind = ElementKind::EulerSpiral;
    e.p0 = at.kappa;
    e.p1 = rate;
    e.p2 = length;
    e.rotate = at.alpha;
    e.tx = at.x;
    e.ty = at.y;
    e.unit = unit;
    e.stroke_width = parent.stroke_width;
    return e;
}

void dash_all(std::vector<Element>& elems, double on, double off) {
    for (Element& e : elems) e.dash = {on, off};
}

std::vector<Element> category_elements(const PhantomSpec& spec, Jitter& j) {
    const double c = (spec.size - 1) / 2.0;
    const double w = spec.stroke_width;
    std::vector<Element> elems;
    const std::string& cat = spec.category;

    if (cat == "A" || cat == "A1") {
        const bool hard = cat == "A1";
        const double a1 = hard ? j.u(20.0, 25.0) : j.u(14.0, 18.0);
        const double a2 = hard ? j.u(20.0, 25.0) : j.u(14.0, 18.0);
        const double wl = hard ? j.u(95.0, 115.0) : j.u(135.0, 160.0);
        const double r1 = hard ? j.deg(12.0, 16.0) : j.deg(22.0, 30.0);
        const double r2 = hard ? -j.deg(20.0, 24.0) : -j.deg(30.0, 40.0);
        elems.push_back(sine(a1, wl, r1, c, c + j.u(-3.0, 3.0), 1, w));
        elems.push_back(sine(a2, wl * j.u(0.9, 1.1), r2, c, c + j.u(-3.0, 3.0), 2, w));
        if (hard) dash_all(elems, 8.0, 5.0);
    } else if (cat == "B" || cat == "B1") {
        const bool hard = cat == "B1";
        const double amp = hard ? j.u(22.0, 27.0) : j.u(10.0, 14.0);
        const double wl = hard ? j.u(110.0, 130.0) : j.u(150.0, 180.0);
        Element parent = sine(amp, wl, j.deg(-8.0, 8.0), c, c + j.u(-4.0, 4.0), 1, w, 195.0);
        Element child = branch(parent, j.u(0.52, 0.60),
                               hard ? j.u(0.00060, 0.00075) : j.u(0.00042, 0.00058),
                               j.u(60.0, 80.0), 1);
        elems.push_back(parent);
        elems.push_back(child);
        if (hard) {
            elems[0].dash = {12.0, 4.0};
            elems[1].dash = {8.0, 5.0};
        }
    } else if (cat == "C" || cat == "C1") {
        const bool hard = cat == "C1";
        const double amp = j.u(12.0, 16.0);
        const double wl = j.u(140.0, 170.0);
        const double rot = j.deg(-30.0, 30.0);
        const double gap = hard ? j.u(6.0, 7.5) : j.u(9.0, 11.0);
        const double ox = -std::sin(rot) * gap / 2.0, oy = std::cos(rot) * gap / 2.0;
        elems.push_back(sine(amp, wl, rot, c - ox, c - oy, 1, w));
        elems.push_back(sine(amp, wl, rot, c + ox, c + oy, 2, w));
        if (hard) dash_all(elems, 8.0, 5.0);
    } else if (cat == "D" || cat == "D1") {
        const bool hard = cat == "D1";
        Element parent = sine(j.u(10.0, 14.0), j.u(150.0, 180.0), j.deg(14.0, 20.0), c,
                              c + j.u(-4.0, 4.0), 1, w, 195.0);
        Element child =
            branch(parent, j.u(0.54, 0.62), hard ? j.u(0.00058, 0.00072) : j.u(0.00042, 0.00055),
                   j.u(55.0, 75.0), 1);
        Element crosser = sine(j.u(12.0, 16.0), j.u(130.0, 160.0),
                               hard ? -j.deg(18.0, 24.0) : -j.deg(38.0, 48.0), c,
                               c + j.u(-3.0, 3.0), 2, w);
        elems.push_back(parent);
        elems.push_back(child);
        elems.push_back(crosser);
        if (hard) {
            elems[0].dash = {12.0, 4.0};
            elems[2].dash = {8.0, 5.0};
        }
    } else if (cat == "E" || cat == "E1") {
        const bool hard = cat == "E1";
        const double gap = hard ? j.u(17.0, 20.0) : j.u(25.0, 30.0);
        const double rot = j.deg(-5.0, 5.0);
        Element p1 = sine(j.u(9.0, 12.0), j.u(150.0, 175.0), rot, c, c - gap / 2.0, 1, w, 195.0);
        Element p2 = sine(j.u(9.0, 12.0), j.u(150.0, 175.0), rot + j.deg(-4.0, 4.0), c,
                          c + gap / 2.0, 2, w, 195.0);
        // children curve away from the other parent
        Element c1a = branch(p1, j.u(0.34, 0.40), -j.u(0.00048, 0.00060), j.u(55.0, 70.0), 1);
        Element c1b = branch(p1, j.u(0.58, 0.66), -j.u(0.00048, 0.00060), j.u(50.0, 65.0), 1);
        Element c2a = branch(p2, j.u(0.46, 0.54), j.u(0.00048, 0.00060), j.u(55.0, 70.0), 2);
        elems = {p1, p2, c1a, c1b, c2a};
        if (hard) {
            elems[2].dash = {8.0, 5.0};
            elems[4].dash = {8.0, 5.0};
            elems[1].dash = {14.0, 4.0};
        }
    } else if (cat == "three_circles") {
        const double radii[3] = {j.u(24.0, 28.0), j.u(36.0, 40.0), j.u(46.0, 50.0)};
        const double spread = j.u(24.0, 28.0);
        const double phase = j.deg(80.0, 100.0);
        for (int i = 0; i < 3; ++i) {
            Element e;
            e.kind = ElementKind::Circle;
            e.p0 = radii[i];
            e.p1 = 0.0;
            e.p2 = 2.0 * kPi;
            e.stroke_width = w;
            e.tx = c + spread * std::cos(phase + i * 2.0 * kPi / 3.0);
            e.ty = c + spread * std::sin(phase + i * 2.0 * kPi / 3.0);
            e.unit = i + 1;
            elems.push_back(e);
        }
    } else {
        fail_invalid("unknown phantom category: " + cat);
    }
    return elems;
}

}  // namespace

PhantomCase generate(const PhantomSpec& spec) {
    require(spec.size >= 32, "phantom canvas too small");
    require(spec.n_theta >= 2, "phantom n_theta out of range");
    require(spec.stroke_width >= 1.0, "stroke width must be at least one pixel");

    Jitter j(substream_seed(spec.seed, std::hash<std::string>{}(spec.category)));
    PhantomCase out;
    out.spec = spec;
    out.elements = category_elements(spec, j);

    const int n = spec.size;
    out.image = Image2D(n, n, 1, 1.0);
    out.mask = Mask(n, n, 0);

    // per pixel: nearest sample per unit (for the label sets) and nearest
    // sample overall (for the lifted ground truth)
    struct Hit {
        double d2 = -1.0;
        double theta = 0.0;
        double kappa = 0.0;
    };
    std::vector<std::map<int, Hit>> hits(static_cast<std::size_t>(n) * n);
    int max_unit = 0;
    for (const Element& e : out.elements) {
        max_unit = std::max(max_unit, e.unit);
        for (const StrokeSample& s : render_element(e, n, n)) {
            Hit& h = hits[static_cast<std::size_t>(s.y) * n + s.x][s.unit];
            if (h.d2 < 0.0 || s.dist2 < h.d2) h = {s.dist2, s.theta, s.kappa};
        }
    }
    out.n_units = max_unit;

    out.gt.width = n;
    out.gt.height = n;
    out.gt.n_theta = spec.n_theta;
    const double dtheta = kPi / spec.n_theta;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const auto& by_unit = hits[static_cast<std::size_t>(y) * n + x];
            if (by_unit.empty()) continue;
            out.image.at(x, y) = 0.0;
            out.mask.at(x, y) = 1;
            const Hit* best = nullptr;
            std::vector<int> units;
            for (const auto& [unit, hit] : by_unit) {
                units.push_back(unit);
                if (!best || hit.d2 < best->d2) best = &hit;
            }
            LiftedPoint p;
            p.x = static_cast<std::uint16_t>(x);
            p.y = static_cast<std::uint16_t>(y);
            long bin = round_away((best->theta + kPi / 2.0) / dtheta) % spec.n_theta;
            if (bin < 0) bin += spec.n_theta;
            p.theta_bin = static_cast<std::uint16_t>(bin);
            p.f = 0.0;
            p.kappa = best->kappa;
            out.gt.points.push_back(p);
            out.gt_units.push_back(std::move(units));
        }
    return out;
}

std::string labels_to_json(const PhantomCase& c) {
    nlohmann::json j;
    j["width"] = c.gt.width;
    j["height"] = c.gt.height;
    j["units"] = c.n_units;
    j["category"] = c.spec.category;
    j["seed"] = c.spec.seed;
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < c.gt.points.size(); ++i) {
        const LiftedPoint& p = c.gt.points[i];
        pts.push_back({p.x, p.y, c.gt_units[i]});
    }
    j["points"] = std::move(pts);
    return j.dump(2) + "\n";
}

std::string spec_to_json(const PhantomSpec& spec) {
    nlohmann::json j;
    j["category"] = spec.category;
    j["seed"] = spec.seed;
    j["size"] = spec.size;
    j["n_theta"] = spec.n_theta;
    j["stroke_width"] = spec.stroke_width;
    return j.dump(2) + "\n";
}

}  // namespace cg
