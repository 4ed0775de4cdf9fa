#ifndef WQED_ORACLE_HPP
#define WQED_ORACLE_HPP

#include "wqed/model.hpp"

// Independent brute-force validator: integrates the delay differential
// equations for the qubit amplitudes,
//   d/dt alpha_j(t) = i delta_j alpha_j(t)
//                     - sum_k sqrt(J_j J_k) e^{i theta |j-k|}
//                       alpha_k(t - L |j-k|),
// with alpha_k(s) = 0 for s < 0. Identical qubits reduce to the literature
// form; the detuned/non-identical weights are an extension used for smoke
// tests only. This module deliberately shares no code with the scattering,
// spectrum or dynamics paths.

namespace wqed {

struct DdeConfig {
  double dt = 1e-3;        // capped internally at min(1e-3, L/100)
  double horizon = 10.0;   // integration end, units 1/J0
  double output_dt = 0.0;  // sample spacing; 0 = every accepted step
  bool enforce_monotonic_norm = true;
};

struct DdeResult {
  VectorXd times;
  MatrixXcd amplitudes;  // times.size() x N
  double step = 0.0;     // dt actually used
  double max_norm_gain = 0.0;

  VectorXd survival(int qubit) const {
    return amplitudes.col(qubit).cwiseAbs2();
  }
};

DdeResult dde_evolve(const ChainSpec& spec, const InitialState& init,
                     const DdeConfig& cfg);

// Zero-delay variant d/dt x = -M x against the coupling-matrix
// reconstruction sum_l beta_l e^{-Gamma_l t/2} xi_l.
struct MarkovianReductionReport {
  double max_error = 0.0;  // max |alpha_ode - alpha_eigen| over the run
  double dt = 0.0;
};

MarkovianReductionReport markovian_reduction_check(const ChainSpec& spec,
                                                   const InitialState& init,
                                                   const DdeConfig& cfg);

}  // namespace wqed

#endif  // WQED_ORACLE_HPP
