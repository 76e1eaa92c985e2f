#include "qfc/jones.hpp"

#include <cmath>

namespace qfc::jones {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

Mat2c rotation(double angle) {
  Mat2c r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

double wrap_phase(double phase) {
  // (-pi, pi]
  double w = std::remainder(phase, 2.0 * M_PI);
  if (w <= -M_PI) {
    w += 2.0 * M_PI;
  }
  return w;
}

}  // namespace

Mat2c waveplate(WaveplateKind kind, double angle_rad) {
  const double delta = kind == WaveplateKind::Half ? M_PI : 0.5 * M_PI;
  Mat2c core = Mat2c::Zero();
  core(0, 0) = 1.0;
  core(1, 1) = std::exp(kI * delta);
  return rotation(-angle_rad) * core * rotation(angle_rad);
}

double compensator_phase(double theta_rad, double hwp_angle_rad) {
  const Mat2c sandwich = waveplate(WaveplateKind::Quarter, 0.25 * M_PI) *
                         waveplate(WaveplateKind::Half, hwp_angle_rad) *
                         waveplate(WaveplateKind::Quarter, 0.25 * M_PI);
  Vec2c in;
  in << 1.0, std::exp(kI * theta_rad);
  const Vec2c out = sandwich * in;
  return wrap_phase(std::arg(out(1)) - std::arg(out(0)));
}

double compensation_angle(double theta_rad) {
  double phi = 0.25 * (M_PI - theta_rad);
  const double period = 0.5 * M_PI;  // HWP angle period for the relative phase
  phi -= period * std::floor(phi / period);
  return phi;
}

Vec2c ket(PolState s) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Vec2c v;
  switch (s) {
    case PolState::H: v << 1.0, 0.0; break;
    case PolState::V: v << 0.0, 1.0; break;
    case PolState::D: v << inv_sqrt2, inv_sqrt2; break;
    case PolState::A: v << inv_sqrt2, -inv_sqrt2; break;
    case PolState::R: v << inv_sqrt2, kI * inv_sqrt2; break;
    case PolState::L: v << inv_sqrt2, -kI * inv_sqrt2; break;
    default: throw InvalidInput("ket: unknown polarization label");
  }
  return v;
}

Mat2c projector(PolState s) {
  const Vec2c v = ket(s);
  return v * v.adjoint();
}

PolState basis_plus(Basis b) {
  switch (b) {
    case Basis::HV: return PolState::H;
    case Basis::DA: return PolState::D;
    case Basis::RL: return PolState::R;
  }
  throw InvalidInput("basis_plus: unknown basis");
}

PolState basis_minus(Basis b) {
  switch (b) {
    case Basis::HV: return PolState::V;
    case Basis::DA: return PolState::A;
    case Basis::RL: return PolState::L;
  }
  throw InvalidInput("basis_minus: unknown basis");
}

const char* label(PolState s) {
  switch (s) {
    case PolState::H: return "H";
    case PolState::V: return "V";
    case PolState::D: return "D";
    case PolState::A: return "A";
    case PolState::R: return "R";
    case PolState::L: return "L";
  }
  return "?";
}

const char* label(Basis b) {
  switch (b) {
    case Basis::HV: return "HV";
    case Basis::DA: return "DA";
    case Basis::RL: return "RL";
  }
  return "?";
}

TwoQubitState TwoQubitState::from_ket(const Vec4c& psi) {
  const double norm = psi.norm();
  if (!(norm > 1e-12)) {
    throw InvalidInput("TwoQubitState::from_ket: zero-norm vector");
  }
  const Vec4c n = psi / norm;
  TwoQubitState state;
  state.rho = n * n.adjoint();
  return state;
}

void TwoQubitState::validate() const {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidInput("TwoQubitState: matrix is not Hermitian");
  }
  if (std::abs(rho.trace().real() - 1.0) > 1e-10 || std::abs(rho.trace().imag()) > 1e-10) {
    throw InvalidInput("TwoQubitState: trace is not 1");
  }
  Eigen::SelfAdjointEigenSolver<Mat4c> solver(rho);
  if (solver.eigenvalues().minCoeff() < -1e-10) {
    throw InvalidInput("TwoQubitState: matrix is not positive semidefinite");
  }
}

double TwoQubitState::purity() const { return (rho * rho).trace().real(); }

TwoQubitState sagnac_state(const Vec2c& pump_polarization, double loop_phase_rad) {
  const double norm = pump_polarization.norm();
  if (!(norm > 1e-12)) {
    throw InvalidInput("sagnac_state: pump polarization has zero norm");
  }
  const Vec2c pump = pump_polarization / norm;
  Vec4c psi = Vec4c::Zero();
  psi(0) = pump(1);                                    // |HH>: clockwise path
  psi(3) = pump(0) * std::exp(kI * loop_phase_rad);    // |VV>: counterclockwise
  return TwoQubitState::from_ket(psi);
}

double born_probability(const TwoQubitState& state, PolState signal, PolState idler) {
  state.validate();
  const Vec4c v = kron(ket(signal), ket(idler));
  const double p = (v.adjoint() * state.rho * v)(0).real();
  return std::min(std::max(p, 0.0), 1.0);
}

Mat4c kron(const Mat2c& a, const Mat2c& b) {
  Mat4c out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    }
  }
  return out;
}

Vec4c kron(const Vec2c& a, const Vec2c& b) {
  Vec4c out;
  out << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
  return out;
}

}  // namespace qfc::jones
