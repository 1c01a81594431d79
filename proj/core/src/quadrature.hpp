#ifndef RISKREGION_SRC_QUADRATURE_HPP
#define RISKREGION_SRC_QUADRATURE_HPP

// Globally adaptive Gauss-Kronrod integration: the segment with the largest
// error estimate is bisected until the summed error meets the tolerance.
//
// Boost's own adaptive driver compares the error on the reference interval
// [-1, 1] with a tolerance in user units, so on short intervals it bisects to
// full depth; only its fixed 31-point rule is used here.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace riskregion::detail {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

template <class F>
QuadResult adaptive_gk(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0, int max_segments = 4000) {
  struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
  };
  const auto rule = [&f](double lo, double hi) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 0, 0.0, &err);
    return Segment{lo, hi, v, err * 0.5 * (hi - lo)};
  };
  if (a == b) return {};
  std::priority_queue<Segment> heap;
  Segment first = rule(a, b);
  double value = first.value;
  double error = first.error;
  heap.push(first);
  int segments = 1;
  while (error > std::max(abs_tol, rel_tol * std::abs(value)) && segments < max_segments) {
    const Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b)) {
      heap.push(s);
      break;
    }
    const Segment l = rule(s.a, mid);
    const Segment r = rule(mid, s.b);
    value += l.value + r.value - s.value;
    error += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    ++segments;
  }
  // Re-sum to shed the drift of the running updates.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {value, error};
}

}  // namespace riskregion::detail

#endif  // RISKREGION_SRC_QUADRATURE_HPP
