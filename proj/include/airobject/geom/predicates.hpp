#pragma once

#include <Eigen/Core>

namespace airobject::geom {

using Point = Eigen::Vector2d;

/// Sign of the signed area of (a, b, c): > 0 counter-clockwise, < 0
/// clockwise, 0 collinear. Exact for all finite double inputs: a floating
/// point filter is tried first and expansion arithmetic takes over when the
/// filter cannot certify the sign.
int orient2d(const Point& a, const Point& b, const Point& c);

/// > 0 if d lies strictly inside the circle through the counter-clockwise
/// triangle (a, b, c), < 0 if strictly outside, 0 if cocircular. Exact in the
/// same sense as orient2d.
int incircle(const Point& a, const Point& b, const Point& c, const Point& d);

/// Plain double evaluations, for callers that want magnitudes.
double orient2d_value(const Point& a, const Point& b, const Point& c);
double incircle_value(const Point& a, const Point& b, const Point& c, const Point& d);

}  // namespace airobject::geom
