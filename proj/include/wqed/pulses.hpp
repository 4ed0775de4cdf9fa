#ifndef WQED_PULSES_HPP
#define WQED_PULSES_HPP

#include <functional>
#include <vector>

#include "wqed/dynamics.hpp"
#include "wqed/model.hpp"
#include "wqed/ratfun.hpp"
#include "wqed/scattering.hpp"

// Single-photon pulse library and pulse-scattering observables. Pulses are
// asymptotically free wave packets launched a distance x0 left of the chain
// with carrier k0 = Omega + chi; all observables depend on tau = t - x0
// only, so evaluation is parametrized by the retarded time directly.

namespace wqed {

enum class PulseKind { Gaussian, DecayingExp, RisingExp };

struct Pulse {
  PulseKind kind = PulseKind::Gaussian;
  double width = 1.0;     // sigma (Gaussian) or xi (exponentials), units J0
  double detuning = 0.0;  // chi = k0 - Omega in units J0
  double x0 = 10.0;       // launch offset, units 1/J0
  Direction side = Direction::LeftIncident;
};

// sqrt(2 pi) f~(Delta_k - chi): the plane-wave overlap <E_k|S(0)> with the
// e^{i (k - k0) x0} launch phase stripped. Normalized so that
// integral |f~|^2 dk = 1.
Complex spectral_amplitude(const Pulse& pulse, Complex delta_k);

// P_m(tau): excitation probability of qubit m at retarded time tau = t - x0.
// Markovian exponential pulses go through exact residues, Gaussians through
// the Faddeeva overlap of the partial-fraction expansion of e_m; the
// exact-phase regime integrates numerically.
VectorXd excitation_probability(const ChainSpec& spec, const Pulse& pulse,
                                int m, const VectorXd& tau_grid,
                                Regime regime = Regime::Markovian);

// All qubits at one retarded time.
VectorXd excitation_probabilities_at(const ChainSpec& spec, const Pulse& pulse,
                                     double tau,
                                     Regime regime = Regime::Markovian);

double total_excitation(const ChainSpec& spec, const Pulse& pulse, double tau,
                        Regime regime = Regime::Markovian);

// Rising-exponential shortcut: the single upper-half-plane pole pins the
// optimum at tau = 0, P_tot = 2 xi sum_m |e_m(chi + i xi)|^2.
double rising_exponential_total(const ChainSpec& spec, double xi,
                                double chi = 0.0);

struct ScatteredSpectra {
  VectorXd delta_k;
  VectorXd transmitted;  // |t_{N+1}(k) f~(k-k0)|^2
  VectorXd reflected;    // |r_1(k) f~(k-k0)|^2
};

ScatteredSpectra scattered_spectra(const ChainSpec& spec, const Pulse& pulse,
                                   const VectorXd& delta_grid,
                                   Regime regime = Regime::Markovian);

// Complex mover amplitudes of the scattered pulse at time t (carrier
// stripped; per-mover phases are defined up to a global factor).
void field_amplitudes(const ChainSpec& spec, const Pulse& pulse, double t,
                      const VectorXd& x_grid, VectorXcd& psi_r,
                      VectorXcd& psi_l, Regime regime = Regime::ExactPhase);

// Mover densities of the scattered pulse at time t on the given grid.
FieldSample field_densities(const ChainSpec& spec, const Pulse& pulse,
                            double t, const VectorXd& x_grid,
                            Regime regime = Regime::ExactPhase);

// ---------------------------------------------------------------------------
// Pulse-parameter optimization: coarse grid scan then golden-section
// refinement; deterministic.

struct OptimizeBox {
  double width_lo = 0.1, width_hi = 4.0;
  double tau_lo = 0.0, tau_hi = 4.0;
};

struct OptimizeResult {
  double width = 0.0;
  double tau = 0.0;
  double value = 0.0;
};

// objective: excitation of qubit `m`, or total excitation when m < 0.
OptimizeResult optimize_pulse(const ChainSpec& spec, PulseKind kind, int m,
                              const OptimizeBox& box, double chi = 0.0,
                              Regime regime = Regime::Markovian);

// Emitted pulse density for a coherent initial qubit excitation; the shape
// is dictated by the poles of the chain.
FieldSample emitted_pulse_shape(const ChainSpec& spec,
                                const InitialState& init, double t,
                                const VectorXd& x_grid);

}  // namespace wqed

#endif  // WQED_PULSES_HPP
