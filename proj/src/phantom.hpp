#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "image.hpp"
#include "liftspace.hpp"

namespace cg {

enum class ElementKind { Segment, Circle, Sine, EulerSpiral };

struct DashPattern {
    double on = 0.0;  // <= 0 means solid
    double off = 0.0;
};

// One parametric stroke. The local curve is rotated by `rotate` and moved to
// (tx, ty); `unit` is the perceptual-unit id the stroke belongs to.
struct Element {
    ElementKind kind = ElementKind::Segment;
    double rotate = 0.0;
    double tx = 0.0, ty = 0.0;
    double stroke_width = 3.0;
    DashPattern dash;
    int unit = 1;
    // Segment: p0 = length.
    // Circle: p0 = radius, p1 = start angle, p2 = swept angle (CCW).
    // Sine: p0 = amplitude, p1 = angular frequency, p2 = length in x.
    // EulerSpiral: p0 = initial curvature, p1 = curvature rate, p2 = length.
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;
};

struct StrokeSample {
    int x = 0;
    int y = 0;
    double theta = 0.0;   // line orientation in [-pi/2, pi/2)
    double kappa = 0.0;   // canonical-direction curvature, 1/px
    double dist2 = 0.0;   // squared distance to the nearest curve sample
    int unit = 1;
};

// Rasterizes one element: every stroke pixel with the orientation/curvature
// of the nearest curve point. Pixels outside the canvas are dropped.
std::vector<StrokeSample> render_element(const Element& element, int width, int height);

// Analytic evaluation of the element curve at parameter t (exposed for the
// symbolic-curvature oracles): position, tangent direction, and the signed
// curvature along the traversal direction.
struct CurvePoint {
    double x = 0.0, y = 0.0;
    double alpha = 0.0;  // tangent direction, full angle
    double kappa = 0.0;  // parametric curvature
};
CurvePoint eval_element(const Element& element, double t);
double element_t_end(const Element& element);

// Curvature re-signed to the canonical direction of the line orientation
// (the representative with angle in [-pi/2, pi/2)).
double canonical_kappa(double alpha, double kappa_parametric);

struct PhantomSpec {
    std::string category = "A";  // A..E, A1..E1, three_circles
    std::uint64_t seed = 1;
    int size = 201;
    int n_theta = 18;
    double stroke_width = 3.0;
};

struct PhantomCase {
    PhantomSpec spec;
    Image2D image;  // white background, dark strokes
    Mask mask;
    LiftedFeatureMap gt;                     // one point per stroke pixel
    std::vector<std::vector<int>> gt_units;  // unit ids per gt point (crossings carry several)
    int n_units = 0;
    std::vector<Element> elements;
};

PhantomCase generate(const PhantomSpec& spec);

std::vector<std::string> phantom_categories();  // A..E, A1..E1

// Ground-truth sidecar: {"width","height","units","points":[[x,y,[unit..]]..]}
// with points in gt order.
std::string labels_to_json(const PhantomCase& c);
std::string spec_to_json(const PhantomSpec& spec);

}  // namespace cg
