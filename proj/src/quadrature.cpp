#include "wqed/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace wqed {

namespace {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 constants).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Value>
struct Rules;

template <>
struct Rules<Complex> {
  static Complex zero(int) { return Complex(0.0); }
  static double norm(const Complex& v) { return std::abs(v); }
};

template <>
struct Rules<VectorXcd> {
  static VectorXcd zero(int dim) { return VectorXcd::Zero(dim); }
  static double norm(const VectorXcd& v) {
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  }
};

template <typename Value, typename Fn>
void gk15(const Fn& f, int dim, double a, double b, Value& kronrod,
          double& error) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Value gauss = Rules<Value>::zero(dim);
  kronrod = Rules<Value>::zero(dim);
  const Value fc = f(center);
  kronrod += kWgk[7] * fc;
  gauss += kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const Value fsum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * fsum;
    if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  error = Rules<Value>::norm(kronrod - gauss);
  // QUADPACK-style sharpening of the raw difference.
  error = std::min(error, std::pow(200.0 * error, 1.5));
}

template <typename Value>
struct Interval {
  double a, b, error;
  Value value;
  bool operator<(const Interval& o) const { return error < o.error; }
};

template <typename Value, typename Fn>
Value adaptive(const Fn& f, int dim, double a, double b,
               const QuadratureOptions& opts, QuadratureStatus* status) {
  std::priority_queue<Interval<Value>> queue;
  Value total = Rules<Value>::zero(dim);
  double total_err = 0.0;

  const int panels = std::max(1, opts.initial_panels);
  for (int i = 0; i < panels; ++i) {
    const double lo = a + (b - a) * i / panels;
    const double hi = a + (b - a) * (i + 1) / panels;
    Value v = Rules<Value>::zero(dim);
    double err = 0.0;
    gk15<Value>(f, dim, lo, hi, v, err);
    total += v;
    total_err += err;
    queue.push({lo, hi, err, v});
  }

  int used = panels;
  auto good_enough = [&]() {
    return total_err <= std::max(opts.abs_tol,
                                 opts.rel_tol * Rules<Value>::norm(total));
  };
  while (!good_enough() && used < opts.max_intervals && !queue.empty()) {
    const Interval<Value> worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) continue;  // cannot split further
    Value left = Rules<Value>::zero(dim), right = Rules<Value>::zero(dim);
    double el = 0.0, er = 0.0;
    gk15<Value>(f, dim, worst.a, mid, left, el);
    gk15<Value>(f, dim, mid, worst.b, right, er);
    total += left + right - worst.value;
    total_err += el + er - worst.error;
    queue.push({worst.a, mid, el, left});
    queue.push({mid, worst.b, er, right});
    ++used;
  }

  const bool converged = good_enough();
  // Resum from the leaves; the incremental updates above accumulate roundoff.
  total = Rules<Value>::zero(dim);
  total_err = 0.0;
  while (!queue.empty()) {
    total += queue.top().value;
    total_err += queue.top().error;
    queue.pop();
  }
  if (status) {
    status->converged = converged;
    status->error_estimate = total_err;
    status->intervals = used;
  }
  if (!converged && opts.throw_on_failure)
    throw Error(ErrorCode::QuadratureNotConverged,
                "error estimate " + std::to_string(total_err) + " after " +
                    std::to_string(used) + " intervals");
  return total;
}

}  // namespace

Complex integrate(const std::function<Complex(double)>& f, double a, double b,
                  const QuadratureOptions& opts, QuadratureStatus* status) {
  return adaptive<Complex>(f, 0, a, b, opts, status);
}

VectorXcd integrate_vector(const std::function<VectorXcd(double)>& f, int dim,
                           double a, double b, const QuadratureOptions& opts,
                           QuadratureStatus* status) {
  return adaptive<VectorXcd>(f, dim, a, b, opts, status);
}

double simpson_uniform(const VectorXd& values, double dx) {
  const Eigen::Index n = values.size();
  if (n < 2) return 0.0;
  double acc = 0.0;
  Eigen::Index i = 0;
  // Simpson over pairs of cells, trapezoid for a trailing odd cell.
  for (; i + 2 < n; i += 2)
    acc += dx / 3.0 * (values(i) + 4.0 * values(i + 1) + values(i + 2));
  if (i + 1 < n) acc += 0.5 * dx * (values(i) + values(i + 1));
  return acc;
}

}  // namespace wqed
