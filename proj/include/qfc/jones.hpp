#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "qfc/errors.hpp"

namespace qfc::jones {

using Vec2c = Eigen::Vector2cd;
using Mat2c = Eigen::Matrix2cd;
using Vec4c = Eigen::Vector4cd;
using Mat4c = Eigen::Matrix4cd;

enum class WaveplateKind { Half, Quarter };

// Waveplate convention used everywhere in this project. With the rotation
// R(t) = [[cos t, -sin t], [sin t, cos t]], a plate of retardance delta and
// fast axis at `angle` is
//
//   J(angle) = R(-angle) * diag(1, e^{i delta}) * R(angle),
//
// delta = pi for a half-wave plate and pi/2 for a quarter-wave plate.
// Consequences that pin the sign choices: QWP(45deg)|H> ~ (|H>+i|V>)/sqrt2,
// HWP(0) = diag(1,-1), and the QWP(45)-HWP(phi)-QWP(45) sandwich applied to
// [1; e^{i theta}] leaves relative phase 4 phi + theta - pi.
Mat2c waveplate(WaveplateKind kind, double angle_rad);

// Relative phase between the output components of [1; e^{i theta}] after
// QWP(45)-HWP(phi)-QWP(45), by numerical propagation, wrapped to (-pi, pi].
double compensator_phase(double theta_rad, double hwp_angle_rad);

// HWP angle cancelling a relative phase theta: (pi - theta)/4, reduced to
// the canonical interval [0, pi/2).
double compensation_angle(double theta_rad);

enum class PolState { H, V, D, A, R, L };
enum class Basis { HV, DA, RL };

Vec2c ket(PolState s);
Mat2c projector(PolState s);
PolState basis_plus(Basis b);
PolState basis_minus(Basis b);
const char* label(PolState s);
const char* label(Basis b);

struct MeasurementSetting {
  Basis signal = Basis::HV;
  Basis idler = Basis::HV;
};

// Two-qubit polarization density matrix over {HH, HV, VH, VV}.
struct TwoQubitState {
  Mat4c rho = Mat4c::Zero();

  static TwoQubitState from_ket(const Vec4c& psi);
  // Hermitian within 1e-10, unit trace within 1e-10, eigenvalues >= -1e-10.
  void validate() const;
  double purity() const;
};

// Coherent combination of the two Sagnac paths. The clockwise path carries
// the V component of the pump and emerges as |HH>, the counterclockwise path
// carries the H component and emerges as |VV> with relative phase theta.
TwoQubitState sagnac_state(const Vec2c& pump_polarization, double loop_phase_rad);

double born_probability(const TwoQubitState& state, PolState signal, PolState idler);

Mat4c kron(const Mat2c& a, const Mat2c& b);
Vec4c kron(const Vec2c& a, const Vec2c& b);

}  // namespace qfc::jones
