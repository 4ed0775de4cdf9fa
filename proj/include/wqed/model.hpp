#ifndef WQED_MODEL_HPP
#define WQED_MODEL_HPP

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Core conventions, used everywhere:
//   hbar = v_g = 1, J0 = min_j J_j = 1 after validation.
//   Energies in units of J0, times and distances in units of 1/J0.
//   gamma0 = 2 J0 is the single-emitter decay rate.
//   theta = Omega * L is a config input; L is always derived as theta/Omega.

namespace wqed {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kGamma0 = 2.0;  // in units of J0 = 1
inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kE = 2.71828182845904523536;

enum class ErrorCode {
  NonPositiveCoupling,
  LengthMismatch,
  NonPositiveOmega,
  DegenerateInput,
  ImproperRational,
  OnQubitResonancePole,
  SingularTransferProduct,
  NotAtBicPoint,
  TruncationInsufficient,
  ValidityViolated,
  QuadratureNotConverged,
  StepTooLarge,
  NoInteriorMaximum,
  ConfigError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

enum class Direction { LeftIncident, RightIncident };
enum class Regime { Markovian, ExactPhase };

// A point of evaluation in the detuning variable Delta_k = E_k - Omega.
// Real values are physical scattering energies; complex values are used for
// analytic continuation (pole evaluation).
struct ModePoint {
  Complex delta_k{0.0, 0.0};
  Direction direction = Direction::LeftIncident;
};

// The physical system: a linear chain of qubits coupled to one waveguide.
struct ChainSpec {
  int n = 1;
  VectorXd couplings;  // J_j > 0, units of J0; min equals 1 after validate()
  VectorXd detunings;  // delta_j = Omega_1 - Omega_j, units of J0; delta_1 = 0
  double omega = 100.0;  // Omega in units of J0 (resonance of qubit 1)
  double theta = kPi / 2.0;  // Omega * L

  double spacing() const { return theta / omega; }  // L in units of 1/J0
  bool identical() const;
  // Markovian formulas assume |delta_j| = O(J0) and finite theta.
  bool markovian_valid() const;
  // Center-of-chain position of qubit j (0-based), chain centered at x = 0.
  double qubit_position(int j) const {
    return (j - 0.5 * (n - 1)) * spacing();
  }
  // Chain half-extent: the qubits occupy [-half_extent, half_extent].
  double half_extent() const { return 0.5 * (n - 1) * spacing(); }

  ChainSpec reversed() const;

  static ChainSpec identical_chain(int n, double theta, double omega = 100.0);
};

// Normalizes to J0 = 1 (divides couplings, detunings and omega by min J),
// shifts detunings so delta_1 = 0, and checks all invariants.
ChainSpec validate(const ChainSpec& spec);

// Purely qubit-sector initial state (a "regular" state): unit norm, zero
// field component at t = 0.
struct InitialState {
  VectorXcd amplitudes;

  static InitialState single_qubit(int n, int excited);
  static InitialState uniform_symmetric(int n);
  InitialState normalized() const;
};

struct QubitState {
  VectorXcd amplitudes;
  double time = 0.0;
  double norm2() const { return amplitudes.squaredNorm(); }
};

struct FieldSample {
  VectorXd x;
  double t = 0.0;
  VectorXd density_r;  // |psi_R(x,t)|^2
  VectorXd density_l;  // |psi_L(x,t)|^2
  VectorXd density() const { return density_r + density_l; }
};

struct EvolutionResult {
  VectorXd times;
  MatrixXd qubit_prob;  // times.size() x n, P_m(t)
  VectorXd pw;          // probability radiated outside the chain
  VectorXd pb;          // probability of field bounded within the chain
  std::optional<FieldSample> field;

  double total_probability(Eigen::Index i) const {
    return qubit_prob.row(i).sum() + pw(i) + pb(i);
  }
  double max_conservation_defect() const;
};

VectorXd linspace(double a, double b, int count);

}  // namespace wqed

#endif  // WQED_MODEL_HPP
