#include "airobject/geom/predicates.hpp"

#include <cmath>
#include <vector>

namespace airobject::geom {

namespace {

// Shewchuk-style floating-point expansions: a value is the exact sum of
// non-overlapping doubles stored in increasing order of magnitude, with zero
// components removed. Only the sign of the final result is needed, so the
// simple O(mn) sum and product forms are enough.
using Expansion = std::vector<double>;

constexpr double kEps = 0x1.0p-53;
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kInCircleBound = (10.0 + 96.0 * kEps) * kEps;

inline void two_sum(double a, double b, double& x, double& y) {
  x = a + b;
  const double bv = x - a;
  const double av = x - bv;
  y = (a - av) + (b - bv);
}

inline void fast_two_sum(double a, double b, double& x, double& y) {
  x = a + b;
  y = b - (x - a);
}

inline void two_product(double a, double b, double& x, double& y) {
  x = a * b;
  y = std::fma(a, b, -x);
}

Expansion from_diff(double a, double b) {
  double x = a - b;
  const double bv = a - x;
  const double av = x + bv;
  const double y = (a - av) + (bv - b);
  Expansion e;
  if (y != 0.0) e.push_back(y);
  if (x != 0.0 || e.empty()) e.push_back(x);
  return e;
}

Expansion grow(const Expansion& e, double b) {
  Expansion h;
  h.reserve(e.size() + 1);
  double q = b;
  for (double component : e) {
    double sum;
    double err;
    two_sum(q, component, sum, err);
    q = sum;
    if (err != 0.0) h.push_back(err);
  }
  if (q != 0.0 || h.empty()) h.push_back(q);
  return h;
}

Expansion add(const Expansion& e, const Expansion& f) {
  Expansion h = e;
  for (double component : f) h = grow(h, component);
  return h;
}

Expansion negate(Expansion e) {
  for (double& c : e) c = -c;
  return e;
}

Expansion scale(const Expansion& e, double b) {
  Expansion h;
  h.reserve(2 * e.size());
  double q;
  double hh;
  two_product(e[0], b, q, hh);
  if (hh != 0.0) h.push_back(hh);
  for (std::size_t i = 1; i < e.size(); ++i) {
    double p1;
    double p0;
    two_product(e[i], b, p1, p0);
    double sum;
    two_sum(q, p0, sum, hh);
    if (hh != 0.0) h.push_back(hh);
    fast_two_sum(p1, sum, q, hh);
    if (hh != 0.0) h.push_back(hh);
  }
  if (q != 0.0 || h.empty()) h.push_back(q);
  return h;
}

Expansion mul(const Expansion& e, const Expansion& f) {
  Expansion h{0.0};
  for (double component : f) h = add(h, scale(e, component));
  return h;
}

int sign(const Expansion& e) {
  const double top = e.back();
  return (top > 0.0) - (top < 0.0);
}

int orient2d_exact(const Point& a, const Point& b, const Point& c) {
  const Expansion acx = from_diff(a.x(), c.x());
  const Expansion acy = from_diff(a.y(), c.y());
  const Expansion bcx = from_diff(b.x(), c.x());
  const Expansion bcy = from_diff(b.y(), c.y());
  return sign(add(mul(acx, bcy), negate(mul(acy, bcx))));
}

int incircle_exact(const Point& a, const Point& b, const Point& c, const Point& d) {
  const Expansion adx = from_diff(a.x(), d.x());
  const Expansion ady = from_diff(a.y(), d.y());
  const Expansion bdx = from_diff(b.x(), d.x());
  const Expansion bdy = from_diff(b.y(), d.y());
  const Expansion cdx = from_diff(c.x(), d.x());
  const Expansion cdy = from_diff(c.y(), d.y());

  const Expansion alift = add(mul(adx, adx), mul(ady, ady));
  const Expansion blift = add(mul(bdx, bdx), mul(bdy, bdy));
  const Expansion clift = add(mul(cdx, cdx), mul(cdy, cdy));

  const Expansion bc = add(mul(bdx, cdy), negate(mul(cdx, bdy)));
  const Expansion ca = add(mul(cdx, ady), negate(mul(adx, cdy)));
  const Expansion ab = add(mul(adx, bdy), negate(mul(bdx, ady)));

  return sign(add(add(mul(alift, bc), mul(blift, ca)), mul(clift, ab)));
}

}  // namespace

double orient2d_value(const Point& a, const Point& b, const Point& c) {
  return (a.x() - c.x()) * (b.y() - c.y()) - (a.y() - c.y()) * (b.x() - c.x());
}

int orient2d(const Point& a, const Point& b, const Point& c) {
  const double left = (a.x() - c.x()) * (b.y() - c.y());
  const double right = (a.y() - c.y()) * (b.x() - c.x());
  const double det = left - right;
  const double bound = kOrientBound * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orient2d_exact(a, b, c);
}

double incircle_value(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double adx = a.x() - d.x();
  const double ady = a.y() - d.y();
  const double bdx = b.x() - d.x();
  const double bdy = b.y() - d.y();
  const double cdx = c.x() - d.x();
  const double cdy = c.y() - d.y();
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
         (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

int incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double adx = a.x() - d.x();
  const double ady = a.y() - d.y();
  const double bdx = b.x() - d.x();
  const double bdy = b.y() - d.y();
  const double cdx = c.x() - d.x();
  const double cdy = c.y() - d.y();

  const double bdxcdy = bdx * cdy;
  const double cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady;
  const double adxcdy = adx * cdy;
  const double adxbdy = adx * bdy;
  const double bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;

  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kInCircleBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return incircle_exact(a, b, c, d);
}

}  // namespace airobject::geom
