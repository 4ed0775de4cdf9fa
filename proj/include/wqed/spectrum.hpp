#ifndef WQED_SPECTRUM_HPP
#define WQED_SPECTRUM_HPP

#include <vector>

#include "wqed/model.hpp"
#include "wqed/scattering.hpp"

// Collective decay rates of the chain. A pole p of the scattering parameters
// maps to the decay rate Gamma = 2 i p; Re(Gamma) is the decay, Im(Gamma)/2
// the collective energy shift. Markovian poles are the <= N roots of the
// characteristic polynomial; the non-Markovian regime adds a tower of
// delay-induced modes found from the transcendental characteristic function.

namespace wqed {

enum class PoleClass { Symmetric, AntiSymmetric, Unclassified, NonMarkovian };

struct PoleEntry {
  Complex p;
  int multiplicity = 1;
  PoleClass cls = PoleClass::Unclassified;
  bool certified = false;  // winding-number check passed (non-Markovian)

  Complex gamma() const { return 2.0 * kI * p; }
};

struct PoleSet {
  std::vector<PoleEntry> poles;
  double theta = 0.0;
  double omega = 0.0;

  int count_with_multiplicity() const;
  // Largest Im(p) over all poles; > 0 signals an upper-half-plane violation.
  double max_im() const;
  // Sorted copy, most subradiant (smallest Re Gamma) first.
  PoleSet sorted_by_decay() const;
};

PoleSet markovian_poles(const ChainSpec& spec);

// Exact transcendental characteristic function (transfer-matrix assembled,
// equal to the closed forms up to a nonzero entire factor).
class CharacteristicFunction {
 public:
  explicit CharacteristicFunction(const ChainSpec& spec);
  Complex operator()(Complex delta_k) const;
  Complex derivative(Complex delta_k) const;

 private:
  BiPoly m11_;
  double spacing_;
};

Complex characteristic_value(const ChainSpec& spec, Complex delta_k);

struct SearchDisk {
  Complex center{0.0, 0.0};
  double radius = 8.0;
};

struct NonMarkovianOptions {
  int count = 3;        // K lowest-Re(Gamma) roots returned
  int truncation = 0;   // Taylor order M; 0 = adaptive
  bool certify = true;  // winding-number certification
};

PoleSet nonmarkovian_poles(const ChainSpec& spec, const SearchDisk& disk,
                           const NonMarkovianOptions& opts = {});

struct DarkBasis {
  std::vector<VectorXcd> dark;  // N-1 vectors satisfying the BIC condition
  VectorXcd bright;
  std::vector<int> dark_parity;  // +1 symmetric, -1 anti-symmetric
  int bright_parity = +1;
};

// BIC (dark) subspace at theta = n pi for identical qubits.
DarkBasis dark_basis(const ChainSpec& spec, int n);

// (J)_{jk} = J0 e^{i theta |j-k|}; complex symmetric Toeplitz. Identical
// qubits only.
MatrixXcd coupling_matrix(const ChainSpec& spec);

// Markovian-limit effective matrix for general chains,
// M_{jk} = sqrt(J_j J_k) e^{i theta |j-k|} - i delta_j delta_{jk};
// reduces to the coupling matrix for identical qubits.
MatrixXcd effective_coupling_matrix(const ChainSpec& spec);

struct CouplingMatrixRates {
  PoleSet poles;                 // p_l = -i lambda_l, Gamma_l = 2 lambda_l
  MatrixXcd eigenvectors;        // unit-normalized columns xi_l
  std::vector<int> parity;       // +1 / -1 / 0 when neither within 1e-8
  bool all_parity_definite = true;  // Conjecture 1 instrumentation
};

CouplingMatrixRates coupling_matrix_rates(const ChainSpec& spec);

struct FanoPoint {
  double delta_k = 0.0;
  double reflectance = 0.0;  // |r_1|^2 at the minimum
  bool transparent = false;  // true when r_1 has a real zero here
};

// Real frequencies where |r_1| is minimal; exact transparency points when
// the reflection numerator has real roots (N-1 of them for identical
// chains), otherwise numerically located Fano line-shape minima.
std::vector<FanoPoint> fano_minima(const ChainSpec& spec);

}  // namespace wqed

#endif  // WQED_SPECTRUM_HPP
