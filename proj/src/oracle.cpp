#include "wqed/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "wqed/spectrum.hpp"

namespace wqed {

namespace {

// Classic RK4 with cubic-Hermite history interpolation for the delayed
// lookups. Delays are >= L and dt <= L/100, so every delayed argument falls
// in completed history.
class DdeIntegrator {
 public:
  DdeIntegrator(const ChainSpec& spec, const VectorXcd& alpha0, double dt,
                int total_steps)
      : n_(spec.n), dt_(dt) {
    weights_.resize(n_, n_);
    delays_.resize(n_, n_);
    const double L = spec.spacing();
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < n_; ++k) {
        weights_(j, k) =
            std::sqrt(spec.couplings(j) * spec.couplings(k)) *
            std::exp(kI * spec.theta * double(std::abs(j - k)));
        delays_(j, k) = L * std::abs(j - k);
      }
    }
    detune_ = spec.detunings;
    values_.reserve(size_t(total_steps + 1) * n_);
    derivs_.reserve(size_t(total_steps + 1) * n_);
    push(alpha0, derivative(0.0, alpha0));
  }

  // alpha_k(s) with s <= completed time; zero before t = 0.
  Complex history(double s, int k) const {
    if (s < 0.0) return 0.0;
    const double pos = s / dt_;
    int i = static_cast<int>(pos);
    const int last = static_cast<int>(values_.size() / n_) - 1;
    if (i >= last) return values_[size_t(last) * n_ + k];
    const double u = pos - i;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    const size_t a = size_t(i) * n_ + k;
    const size_t b = size_t(i + 1) * n_ + k;
    return h00 * values_[a] + (h10 * dt_) * derivs_[a] + h01 * values_[b] +
           (h11 * dt_) * derivs_[b];
  }

  VectorXcd derivative(double t, const VectorXcd& y) const {
    VectorXcd dy(n_);
    for (int j = 0; j < n_; ++j) {
      Complex acc = kI * detune_(j) * y(j) - weights_(j, j) * y(j);
      for (int k = 0; k < n_; ++k) {
        if (k == j) continue;
        const double s = t - delays_(j, k);
        if (s < 0.0) continue;
        acc -= weights_(j, k) * history(s, k);
      }
      dy(j) = acc;
    }
    return dy;
  }

  void step() {
    const int idx = static_cast<int>(values_.size() / n_) - 1;
    const double t = idx * dt_;
    VectorXcd y(n_), k1(n_);
    for (int k = 0; k < n_; ++k) {
      y(k) = values_[size_t(idx) * n_ + k];
      k1(k) = derivs_[size_t(idx) * n_ + k];
    }
    const VectorXcd k2 = derivative(t + 0.5 * dt_, y + 0.5 * dt_ * k1);
    const VectorXcd k3 = derivative(t + 0.5 * dt_, y + 0.5 * dt_ * k2);
    const VectorXcd k4 = derivative(t + dt_, y + dt_ * k3);
    const VectorXcd next = y + dt_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    push(next, derivative(t + dt_, next));
  }

  VectorXcd value_at(int step) const {
    VectorXcd y(n_);
    for (int k = 0; k < n_; ++k) y(k) = values_[size_t(step) * n_ + k];
    return y;
  }

  double norm2_back() const {
    double acc = 0.0;
    const size_t base = values_.size() - n_;
    for (int k = 0; k < n_; ++k) acc += std::norm(values_[base + k]);
    return acc;
  }

 private:
  void push(const VectorXcd& y, const VectorXcd& dy) {
    for (int k = 0; k < n_; ++k) {
      values_.push_back(y(k));
      derivs_.push_back(dy(k));
    }
  }

  int n_;
  double dt_;
  MatrixXcd weights_;
  MatrixXd delays_;
  VectorXd detune_;
  std::vector<Complex> values_;
  std::vector<Complex> derivs_;
};

}  // namespace

DdeResult dde_evolve(const ChainSpec& spec0, const InitialState& init,
                     const DdeConfig& cfg) {
  const ChainSpec spec = validate(spec0);
  const VectorXcd alpha0 = init.normalized().amplitudes;
  const double L = spec.spacing();
  double dt = cfg.dt;
  // Delays must be resolved; a single qubit has none.
  if (spec.n > 1 && L > 0.0) dt = std::min({dt, 1e-3, L / 100.0});
  const int steps = std::max(1, int(std::ceil(cfg.horizon / dt)));
  dt = cfg.horizon / steps;

  DdeIntegrator integ(spec, alpha0, dt, steps);
  const double norm0 = alpha0.squaredNorm();
  double prev_norm = norm0;
  double max_gain = 0.0;
  for (int i = 0; i < steps; ++i) {
    integ.step();
    const double norm = integ.norm2_back();
    max_gain = std::max(max_gain, norm - prev_norm);
    // Re-absorption of trapped light can raise the qubit norm transiently,
    // but never above the initial total excitation.
    if (cfg.enforce_monotonic_norm && norm > norm0 + 1e-5)
      throw Error(ErrorCode::StepTooLarge,
                  "qubit norm exceeds the initial excitation by " +
                      std::to_string(norm - norm0) + "; reduce dt");
    prev_norm = norm;
  }

  const int stride =
      cfg.output_dt > 0.0 ? std::max(1, int(std::round(cfg.output_dt / dt)))
                          : 1;
  const int count = steps / stride + 1;
  DdeResult result;
  result.step = dt;
  result.max_norm_gain = max_gain;
  result.times.resize(count);
  result.amplitudes.resize(count, spec.n);
  for (int i = 0; i < count; ++i) {
    const int idx = std::min(i * stride, steps);
    result.times(i) = idx * dt;
    result.amplitudes.row(i) = integ.value_at(idx).transpose();
  }
  return result;
}

MarkovianReductionReport markovian_reduction_check(const ChainSpec& spec0,
                                                   const InitialState& init,
                                                   const DdeConfig& cfg) {
  const ChainSpec spec = validate(spec0);
  const VectorXcd alpha0 = init.normalized().amplitudes;
  const MatrixXcd M = effective_coupling_matrix(spec);
  Eigen::ComplexEigenSolver<MatrixXcd> es(M, true);
  const VectorXcd beta = es.eigenvectors().fullPivLu().solve(alpha0);

  double dt = std::min(cfg.dt, 1e-3);
  const int steps = std::max(1, int(std::ceil(cfg.horizon / dt)));
  dt = cfg.horizon / steps;

  // Zero-delay RK4 on d/dt y = -M y.
  auto rhs = [&](const VectorXcd& y) { return (-(M * y)).eval(); };
  VectorXcd y = alpha0;
  double max_err = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * dt;
    VectorXcd mode = beta;
    for (int l = 0; l < spec.n; ++l) mode(l) *= std::exp(-es.eigenvalues()(l) * t);
    const VectorXcd ref = es.eigenvectors() * mode;
    max_err = std::max(max_err, (y - ref).cwiseAbs().maxCoeff());
    if (i == steps) break;
    const VectorXcd k1 = rhs(y);
    const VectorXcd k2 = rhs(y + 0.5 * dt * k1);
    const VectorXcd k3 = rhs(y + 0.5 * dt * k2);
    const VectorXcd k4 = rhs(y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return {max_err, dt};
}

}  // namespace wqed
