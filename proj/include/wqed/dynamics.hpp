#ifndef WQED_DYNAMICS_HPP
#define WQED_DYNAMICS_HPP

#include <memory>
#include <vector>

#include "wqed/model.hpp"
#include "wqed/quadrature.hpp"
#include "wqed/ratfun.hpp"
#include "wqed/scattering.hpp"
#include "wqed/spectrum.hpp"

// Time evolution of single-excitation initial states.
//
// Markovian limit: qubit amplitudes evolve through the coupling-matrix
// eigenmodes x(t) = sum_l beta_l e^{-Gamma_l t / 2} xi_l; field observables
// always go through the residue route (lower-half-plane poles of the
// rational scattering parameters). At theta = n pi the BIC-aware evolution
// keeps the dark components stationary.
//
// Non-Markovian regime: a single numerical integral per observable over the
// exact-phase scattering solution. Energy integrals run over the full real
// line in Delta_k (the negative-energy extension that makes the expansion
// exactly unitary and causal); truncation tails are summed in closed form
// through the echo expansion of the integrands.

namespace wqed {

// Residue-route machinery for a Markovian chain and a regular initial state.
class ResidueEvolution {
 public:
  ResidueEvolution(const ChainSpec& spec, const InitialState& init);

  // Qubit amplitudes by residues (cross-check path; the coupling-matrix
  // route is the primary evolution path).
  VectorXcd amplitudes(double t) const;
  // Outgoing field amplitude at retarded time u = t - |x|.
  Complex emitted_right(double u) const;
  Complex emitted_left(double u) const;
  // Exact integral of |h_R|^2 + |h_L|^2 over [0, t].
  double radiated_probability(double t) const;
  FieldSample field_snapshot(const VectorXd& x_grid, double t) const;

 private:
  int n_;
  std::vector<std::vector<ResidueTerm>> amp_terms_;
  std::vector<ResidueTerm> hr_terms_, hl_terms_;
};

EvolutionResult evolve_markovian(const ChainSpec& spec,
                                 const InitialState& init,
                                 const VectorXd& t_grid,
                                 const VectorXd* x_grid = nullptr);

// theta = n pi evolution with the N-1 stationary BIC components included.
EvolutionResult evolve_bic(const ChainSpec& spec, const InitialState& init,
                           int n, const VectorXd& t_grid,
                           const VectorXd* x_grid = nullptr);

struct NonMarkovianRunOptions {
  bool field_observables = true;  // compute P_b and P_w
  const VectorXd* x_grid = nullptr;  // field snapshot at t_grid.back()
  double window = 60.0;           // quadrature window [-W, W] in Delta_k
  int echo_orders = 0;            // 0 = adaptive
  QuadratureOptions quad{1e-9, 1e-13, 40000, 1, true};
};

class NonMarkovianEvolver {
 public:
  NonMarkovianEvolver(const ChainSpec& spec, const InitialState& init,
                      const NonMarkovianRunOptions& opts = {});
  ~NonMarkovianEvolver();

  VectorXcd amplitudes(double t) const;
  // All qubits at all grid times through one adaptive pass.
  MatrixXcd amplitudes_batch(const VectorXd& t_grid) const;
  // Complex mover amplitudes at a point (carrier e^{ikx} included).
  std::pair<Complex, Complex> field_at(double x, double t) const;
  double bounded_probability(double t) const;   // integral over [-X, X]
  double radiated_probability(double t) const;  // exterior integral
  FieldSample field_snapshot(const VectorXd& x_grid, double t) const;
  // Outgoing envelope |H|^2 at retarded time u (right/left edge).
  double outgoing_density_right(double u) const;
  double outgoing_density_left(double u) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

EvolutionResult evolve_nonmarkovian(const ChainSpec& spec,
                                    const InitialState& init,
                                    const VectorXd& t_grid,
                                    const NonMarkovianRunOptions& opts = {});

// Closed-form Markovian decay of the symmetric two-qubit excitation:
// qubit part (1/sqrt 2) e^{-Gamma_1 t / 2} (|e1> + |e2>) plus two outgoing
// exponential field integrals with the listed prefactor and phase.
struct TwoQubitSymmetricState {
  Complex gamma1;        // gamma0 (1 + e^{i theta})
  double theta = 0.0;
  double spacing = 0.0;

  Complex qubit_amplitude(double t) const;
  // Prefactor of the outgoing field integrand at retarded time u >= 0,
  // rotating frame: -i Gamma_1/(2 sqrt(2 J0)) e^{-Gamma_1 u / 2}.
  Complex field_envelope(double u) const;
};

TwoQubitSymmetricState two_qubit_symmetric_state(const ChainSpec& spec);

}  // namespace wqed

#endif  // WQED_DYNAMICS_HPP
