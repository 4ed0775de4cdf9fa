#include "wqed/model.hpp"

#include <algorithm>
#include <cmath>

namespace wqed {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveCoupling: return "NonPositiveCoupling";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonPositiveOmega: return "NonPositiveOmega";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ImproperRational: return "ImproperRational";
    case ErrorCode::OnQubitResonancePole: return "OnQubitResonancePole";
    case ErrorCode::SingularTransferProduct: return "SingularTransferProduct";
    case ErrorCode::NotAtBicPoint: return "NotAtBicPoint";
    case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
    case ErrorCode::ValidityViolated: return "ValidityViolated";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NoInteriorMaximum: return "NoInteriorMaximum";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

bool ChainSpec::identical() const {
  for (int j = 0; j < n; ++j) {
    if (std::abs(couplings(j) - couplings(0)) > 1e-12) return false;
    if (std::abs(detunings(j)) > 1e-12) return false;
  }
  return true;
}

bool ChainSpec::markovian_valid() const {
  if (!std::isfinite(theta)) return false;
  return detunings.size() == 0 || detunings.cwiseAbs().maxCoeff() <= 10.0;
}

ChainSpec ChainSpec::reversed() const {
  ChainSpec out = *this;
  out.couplings = couplings.reverse();
  // delta_1 = 0 is re-established relative to the new first qubit.
  VectorXd rev = detunings.reverse();
  out.detunings = rev.array() - rev(0);
  // Omega of the new qubit 1 equals Omega_1 - delta_N of the old chain.
  out.omega = omega - rev(0);
  return out;
}

ChainSpec ChainSpec::identical_chain(int n, double theta, double omega) {
  ChainSpec spec;
  spec.n = n;
  spec.couplings = VectorXd::Ones(n);
  spec.detunings = VectorXd::Zero(n);
  spec.theta = theta;
  spec.omega = omega;
  return spec;
}

ChainSpec validate(const ChainSpec& spec) {
  ChainSpec out = spec;
  if (out.n < 1) throw Error(ErrorCode::LengthMismatch, "need at least one qubit");
  if (out.couplings.size() == 0) out.couplings = VectorXd::Ones(out.n);
  if (out.detunings.size() == 0) out.detunings = VectorXd::Zero(out.n);
  if (out.couplings.size() != out.n)
    throw Error(ErrorCode::LengthMismatch,
                "couplings has " + std::to_string(out.couplings.size()) +
                    " entries for n = " + std::to_string(out.n));
  if (out.detunings.size() != out.n)
    throw Error(ErrorCode::LengthMismatch,
                "detunings has " + std::to_string(out.detunings.size()) +
                    " entries for n = " + std::to_string(out.n));
  for (int j = 0; j < out.n; ++j) {
    if (!(out.couplings(j) > 0.0))
      throw Error(ErrorCode::NonPositiveCoupling,
                  "J_" + std::to_string(j + 1) + " = " +
                      std::to_string(out.couplings(j)));
  }
  if (!(out.omega > 0.0))
    throw Error(ErrorCode::NonPositiveOmega, std::to_string(out.omega));
  if (!std::isfinite(out.theta) || out.theta < 0.0)
    throw Error(ErrorCode::ConfigError, "theta must be finite and >= 0");

  // delta_j is defined relative to qubit 1.
  out.detunings = (out.detunings.array() - out.detunings(0)).matrix();
  // Rescale so that J0 = min J_j = 1.
  const double j0 = out.couplings.minCoeff();
  out.couplings /= j0;
  out.detunings /= j0;
  out.omega /= j0;
  return out;
}

InitialState InitialState::single_qubit(int n, int excited) {
  InitialState s;
  s.amplitudes = VectorXcd::Zero(n);
  s.amplitudes(excited) = 1.0;
  return s;
}

InitialState InitialState::uniform_symmetric(int n) {
  InitialState s;
  s.amplitudes = VectorXcd::Constant(n, 1.0 / std::sqrt(double(n)));
  return s;
}

InitialState InitialState::normalized() const {
  const double norm = amplitudes.norm();
  if (norm == 0.0)
    throw Error(ErrorCode::DegenerateInput, "zero initial state");
  InitialState s;
  s.amplitudes = amplitudes / norm;
  return s;
}

double EvolutionResult::max_conservation_defect() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < times.size(); ++i)
    worst = std::max(worst, std::abs(total_probability(i) - 1.0));
  return worst;
}

VectorXd linspace(double a, double b, int count) {
  if (count <= 1) return VectorXd::Constant(std::max(count, 1), a);
  return VectorXd::LinSpaced(count, a, b);
}

}  // namespace wqed
