#ifndef WQED_QUADRATURE_HPP
#define WQED_QUADRATURE_HPP

#include <functional>

#include "wqed/model.hpp"

namespace wqed {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int max_intervals = 20000;
  // Initial uniform subdivision; useful for oscillatory integrands where a
  // single panel under-resolves the phase.
  int initial_panels = 1;
  bool throw_on_failure = true;
};

struct QuadratureStatus {
  bool converged = true;
  double error_estimate = 0.0;
  int intervals = 0;
};

// Adaptive Gauss-Kronrod (G7, K15) on [a, b] for complex integrands.
Complex integrate(const std::function<Complex(double)>& f, double a, double b,
                  const QuadratureOptions& opts = {},
                  QuadratureStatus* status = nullptr);

// Vector version; all components share the subdivision, the error is the
// max over components. Suited to evaluating many observables that depend on
// one expensive chain solve per node.
VectorXcd integrate_vector(const std::function<VectorXcd(double)>& f, int dim,
                           double a, double b,
                           const QuadratureOptions& opts = {},
                           QuadratureStatus* status = nullptr);

// Composite Simpson on a uniform grid of values (odd or even count).
double simpson_uniform(const VectorXd& values, double dx);

}  // namespace wqed

#endif  // WQED_QUADRATURE_HPP
