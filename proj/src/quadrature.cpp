#include "rsr/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace rsr {

namespace {

// 15-point Kronrod extension of 7-point Gauss on [-1, 1].
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Segment {
  double a, b;
  Vector value;
  double error;
};

struct WorseError {
  bool operator()(const Segment& x, const Segment& y) const { return x.error < y.error; }
};

Segment evaluate_segment(const std::function<Vector(double)>& f, double a, double b,
                         long& evals) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Vector fc = f(c);
  ++evals;
  Vector vk = kWeightsK[7] * fc;
  Vector vg = kWeightsG[3] * fc;
  for (int i = 0; i < 7; ++i) {
    Vector lo = f(c - h * kNodes[i]);
    Vector hi = f(c + h * kNodes[i]);
    evals += 2;
    Vector pair_sum = lo + hi;
    vk += kWeightsK[i] * pair_sum;
    if (i % 2 == 1) vg += kWeightsG[i / 2] * pair_sum;
  }
  Segment seg;
  seg.a = a;
  seg.b = b;
  seg.value = h * vk;
  seg.error = max_abs(h * (vk - vg));
  return seg;
}

}  // namespace

QuadratureResult adaptive_gauss_kronrod(const std::function<Vector(double)>& f, double a,
                                        double b, double rel_tol, double abs_tol,
                                        int max_segments) {
  QuadratureResult result;
  if (!(b > a)) {
    result.value = Vector::Zero(f(a).size());
    return result;
  }
  std::priority_queue<Segment, std::vector<Segment>, WorseError> queue;
  const int initial = 8;
  Vector total;
  double total_err = 0.0;
  for (int k = 0; k < initial; ++k) {
    const double x0 = a + (b - a) * k / initial;
    const double x1 = a + (b - a) * (k + 1) / initial;
    Segment seg = evaluate_segment(f, x0, x1, result.evaluations);
    if (k == 0) {
      total = seg.value;
    } else {
      total += seg.value;
    }
    total_err += seg.error;
    queue.push(std::move(seg));
  }
  int segments = initial;
  while (total_err > std::max(abs_tol, rel_tol * max_abs(total)) && segments < max_segments) {
    Segment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Segment left = evaluate_segment(f, worst.a, mid, result.evaluations);
    Segment right = evaluate_segment(f, mid, worst.b, result.evaluations);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    queue.push(std::move(left));
    queue.push(std::move(right));
    ++segments;
  }
  if (total_err > std::max(abs_tol, rel_tol * max_abs(total))) {
    throw Error(Errc::numerical_failure, "adaptive quadrature did not converge");
  }
  result.value = std::move(total);
  result.error = total_err;
  return result;
}

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_tol, int max_segments) {
  auto wrapped = [&](double x) {
    Vector v(1);
    v[0] = f(x);
    return v;
  };
  return adaptive_gauss_kronrod(wrapped, a, b, rel_tol, abs_tol, max_segments).value[0];
}

}  // namespace rsr
