#include "qfc/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "qfc/random.hpp"

namespace qfc::tomo {

using jones::Mat4c;
using jones::Vec4c;

namespace {

constexpr std::array<jones::Basis, 3> kBases{jones::Basis::HV, jones::Basis::DA,
                                             jones::Basis::RL};

// Projector kets for all 36 cells, built once.
const std::array<Vec4c, kSettings * kOutcomes>& cell_kets() {
  static const std::array<Vec4c, kSettings * kOutcomes> kets = [] {
    std::array<Vec4c, kSettings * kOutcomes> out;
    const auto settings = tomography_settings();
    for (int s = 0; s < kSettings; ++s) {
      for (int o = 0; o < kOutcomes; ++o) {
        const auto [ps, pi] = outcome_states(settings[s], o);
        out[static_cast<size_t>(s * kOutcomes + o)] =
            jones::kron(jones::ket(ps), jones::ket(pi));
      }
    }
    return out;
  }();
  return kets;
}

// 16 real parameters <-> lower-triangular T with real diagonal.
Mat4c params_to_t(const Eigen::Matrix<double, 16, 1>& p) {
  Mat4c t = Mat4c::Zero();
  t(0, 0) = p(0);
  t(1, 1) = p(1);
  t(2, 2) = p(2);
  t(3, 3) = p(3);
  int k = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      t(i, j) = std::complex<double>(p(k), p(k + 1));
      k += 2;
    }
  }
  return t;
}

Eigen::Matrix<double, 16, 1> t_to_params(const Mat4c& t) {
  Eigen::Matrix<double, 16, 1> p;
  p(0) = t(0, 0).real();
  p(1) = t(1, 1).real();
  p(2) = t(2, 2).real();
  p(3) = t(3, 3).real();
  int k = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      p(k) = t(i, j).real();
      p(k + 1) = t(i, j).imag();
      k += 2;
    }
  }
  return p;
}

// Log-likelihood up to a table-dependent constant: sum n ln p over cells,
// the per-setting Poisson scales being profiled at their closed-form optima.
double log_likelihood(const Mat4c& t, const TomographyTable& table) {
  const auto& kets = cell_kets();
  const double g = t.squaredNorm();
  double ll = 0.0;
  for (int s = 0; s < kSettings; ++s) {
    for (int o = 0; o < kOutcomes; ++o) {
      const double n = table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)];
      if (n <= 0.0) {
        continue;
      }
      const Vec4c w = t * kets[static_cast<size_t>(s * kOutcomes + o)];
      const double p = w.squaredNorm() / g;
      if (!(p > 0.0)) {
        return -std::numeric_limits<double>::infinity();
      }
      ll += n * std::log(p);
    }
  }
  return ll;
}

// Gradient of the log-likelihood with respect to the 16 real parameters.
// With p_k = |T v_k|^2 / ||T||_F^2 the Wirtinger derivative is
// dLL/dT* = (1/g) T (M - N I), M = sum (n_k / p_k) v_k v_k^dag.
Eigen::Matrix<double, 16, 1> gradient(const Mat4c& t, const TomographyTable& table) {
  const auto& kets = cell_kets();
  const double g = t.squaredNorm();
  Mat4c m = Mat4c::Zero();
  double total = 0.0;
  for (int s = 0; s < kSettings; ++s) {
    for (int o = 0; o < kOutcomes; ++o) {
      const double n = table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)];
      if (n <= 0.0) {
        continue;
      }
      const Vec4c& v = kets[static_cast<size_t>(s * kOutcomes + o)];
      const Vec4c w = t * v;
      const double p = std::max(w.squaredNorm() / g, 1e-300);
      m += (n / p) * (v * v.adjoint());
      total += n;
    }
  }
  const Mat4c w_grad = (t * (m - total * Mat4c::Identity())) / g;
  Eigen::Matrix<double, 16, 1> grad;
  grad(0) = 2.0 * w_grad(0, 0).real();
  grad(1) = 2.0 * w_grad(1, 1).real();
  grad(2) = 2.0 * w_grad(2, 2).real();
  grad(3) = 2.0 * w_grad(3, 3).real();
  int k = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      grad(k) = 2.0 * w_grad(i, j).real();
      grad(k + 1) = 2.0 * w_grad(i, j).imag();
      k += 2;
    }
  }
  return grad;
}

// Linear inversion of the 36 measured frequencies in the Pauli basis,
// projected onto the PSD cone and blended with a little of the maximally
// mixed state so the Cholesky start is full rank.
Mat4c linear_inversion_start(const TomographyTable& table) {
  using jones::Mat2c;
  std::array<Mat2c, 4> pauli;
  pauli[0] = Mat2c::Identity();
  pauli[1] << 0.0, 1.0, 1.0, 0.0;
  pauli[2] << 0.0, std::complex<double>(0.0, -1.0), std::complex<double>(0.0, 1.0), 0.0;
  pauli[3] << 1.0, 0.0, 0.0, -1.0;

  std::array<Mat4c, 16> basis;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      basis[static_cast<size_t>(4 * a + b)] = jones::kron(pauli[static_cast<size_t>(a)],
                                                          pauli[static_cast<size_t>(b)]);
    }
  }

  const auto& kets = cell_kets();
  Eigen::MatrixXd design(kSettings * kOutcomes, 15);
  Eigen::VectorXd target(kSettings * kOutcomes);
  for (int s = 0; s < kSettings; ++s) {
    double setting_total = 0.0;
    for (int o = 0; o < kOutcomes; ++o) {
      setting_total += table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)];
    }
    for (int o = 0; o < kOutcomes; ++o) {
      const int row = s * kOutcomes + o;
      const Vec4c& v = kets[static_cast<size_t>(row)];
      const double freq =
          setting_total > 0.0
              ? table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)] / setting_total
              : 0.25;
      // p = (1/4) sum_j c_j <v|B_j|v>, c_0 = 1.
      const double identity_part = 0.25 * (v.adjoint() * basis[0] * v)(0).real();
      target(row) = freq - identity_part;
      for (int j = 1; j < 16; ++j) {
        design(row, j - 1) = 0.25 * (v.adjoint() * basis[static_cast<size_t>(j)] * v)(0).real();
      }
    }
  }
  const Eigen::VectorXd coeff = design.colPivHouseholderQr().solve(target);

  Mat4c rho = 0.25 * basis[0];
  for (int j = 1; j < 16; ++j) {
    rho += 0.25 * coeff(j - 1) * basis[static_cast<size_t>(j)];
  }
  rho = 0.5 * (rho + rho.adjoint().eval());

  Eigen::SelfAdjointEigenSolver<Mat4c> solver(rho);
  Eigen::Vector4d ev = solver.eigenvalues().cwiseMax(0.0);
  const double sum = ev.sum();
  if (sum > 0.0) {
    ev /= sum;
  } else {
    ev.setConstant(0.25);
  }
  Mat4c projected = Mat4c::Zero();
  for (int i = 0; i < 4; ++i) {
    projected += ev(i) * solver.eigenvectors().col(i) * solver.eigenvectors().col(i).adjoint();
  }
  return 0.99 * projected + 0.01 * 0.25 * Mat4c::Identity();
}

// Lower-triangular T with T^dag T = rho, via Cholesky of the reversed matrix.
Mat4c reverse_cholesky(const Mat4c& rho) {
  Mat4c j = Mat4c::Zero();
  for (int i = 0; i < 4; ++i) {
    j(i, 3 - i) = 1.0;
  }
  const Mat4c flipped = j * rho * j;
  const Eigen::LLT<Mat4c> llt(flipped + 1e-14 * Mat4c::Identity());
  const Mat4c l = llt.matrixL();
  return j * l.adjoint() * j;
}

}  // namespace

std::array<jones::MeasurementSetting, kSettings> tomography_settings() {
  std::array<jones::MeasurementSetting, kSettings> out;
  int k = 0;
  for (auto bs : kBases) {
    for (auto bi : kBases) {
      out[static_cast<size_t>(k++)] = {bs, bi};
    }
  }
  return out;
}

std::pair<jones::PolState, jones::PolState> outcome_states(const jones::MeasurementSetting& s,
                                                           int outcome) {
  if (outcome < 0 || outcome >= kOutcomes) {
    throw InvalidInput("outcome_states: outcome index out of range");
  }
  const jones::PolState signal =
      (outcome & 2) ? jones::basis_minus(s.signal) : jones::basis_plus(s.signal);
  const jones::PolState idler =
      (outcome & 1) ? jones::basis_minus(s.idler) : jones::basis_plus(s.idler);
  return {signal, idler};
}

std::string setting_label(const jones::MeasurementSetting& s) {
  return std::string(jones::label(s.signal)) + "x" + jones::label(s.idler);
}

std::string outcome_label(const jones::MeasurementSetting& s, int outcome) {
  const auto [ps, pi] = outcome_states(s, outcome);
  return std::string(jones::label(ps)) + jones::label(pi);
}

TomographyTable simulate_tomography(const jones::TwoQubitState& rho, double total_rate_hz,
                                    double accidental_rate_hz, double time_s,
                                    std::uint64_t seed) {
  rho.validate();
  if (!(total_rate_hz >= 0.0) || !(accidental_rate_hz >= 0.0)) {
    throw InvalidInput("simulate_tomography: rates must be >= 0");
  }
  if (!(time_s > 0.0)) {
    throw InvalidInput("simulate_tomography: time must be > 0");
  }
  const auto settings = tomography_settings();
  TomographyTable table;
  table.integration_time_s = time_s;
  rng::Generator gen(seed);
  for (int s = 0; s < kSettings; ++s) {
    for (int o = 0; o < kOutcomes; ++o) {
      const auto [ps, pi] = outcome_states(settings[static_cast<size_t>(s)], o);
      const double p = jones::born_probability(rho, ps, pi);
      const double mean = (total_rate_hz * p + 0.25 * accidental_rate_hz) * time_s;
      table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)] =
          static_cast<double>(gen.poisson(mean));
      table.accidental_estimate[static_cast<size_t>(s)][static_cast<size_t>(o)] =
          0.25 * accidental_rate_hz * time_s;
    }
  }
  return table;
}

MleResult mle_reconstruct(const TomographyTable& table, const MleOptions& opts) {
  double grand_total = 0.0;
  for (int s = 0; s < kSettings; ++s) {
    double setting_total = 0.0;
    for (int o = 0; o < kOutcomes; ++o) {
      const double n = table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)];
      if (!(n >= 0.0)) {
        throw InvalidInput("mle_reconstruct: counts must be >= 0");
      }
      setting_total += n;
    }
    if (!(setting_total > 0.0)) {
      throw ReconstructionFailure("mle_reconstruct: setting " + std::to_string(s + 1) +
                                  " has no counts");
    }
    grand_total += setting_total;
  }
  if (!(grand_total > 0.0)) {
    throw ReconstructionFailure("mle_reconstruct: table is empty");
  }

  Mat4c t = reverse_cholesky(linear_inversion_start(table));
  t /= t.norm();
  Eigen::Matrix<double, 16, 1> params = t_to_params(t);

  MleResult result;
  double ll = log_likelihood(t, table);
  double step = 1.0 / grand_total;
  for (int it = 0; it < opts.max_iterations; ++it) {
    result.iterations = it + 1;
    const Eigen::Matrix<double, 16, 1> grad = gradient(t, table);
    const double grad_sq = grad.squaredNorm();
    if (!(grad_sq > 0.0)) {
      result.converged = true;
      break;
    }

    // Backtracking line search (Armijo) on the ascent direction.
    double alpha = step * 4.0;
    double new_ll = -std::numeric_limits<double>::infinity();
    Eigen::Matrix<double, 16, 1> candidate;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      candidate = params + alpha * grad;
      const Mat4c tc = params_to_t(candidate);
      new_ll = log_likelihood(tc, table);
      if (new_ll >= ll + 1e-4 * alpha * grad_sq) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    if (new_ll < ll) {
      result.monotone = false;
    }
    params = candidate;
    t = params_to_t(params);
    const double norm = t.norm();
    t /= norm;
    params = t_to_params(t);
    step = alpha;
    const double improvement = new_ll - ll;
    ll = new_ll;
    if (improvement <= opts.relative_tolerance * (std::fabs(ll) + 1.0)) {
      result.converged = true;
      break;
    }
  }

  const double g = t.squaredNorm();
  result.rho.rho = (t.adjoint() * t) / g;
  result.rho.rho = 0.5 * (result.rho.rho + result.rho.rho.adjoint().eval());
  result.log_likelihood = ll;
  return result;
}

double fidelity(const jones::TwoQubitState& rho, double target_phase_rad) {
  Vec4c target = Vec4c::Zero();
  target(0) = 1.0 / std::sqrt(2.0);
  target(3) = std::exp(std::complex<double>(0.0, target_phase_rad)) / std::sqrt(2.0);
  const double f = (target.adjoint() * rho.rho * target)(0).real();
  return std::min(std::max(f, 0.0), 1.0);
}

double state_fidelity(const jones::TwoQubitState& a, const jones::TwoQubitState& b) {
  Eigen::SelfAdjointEigenSolver<Mat4c> ea(a.rho);
  const Eigen::Vector4d va = ea.eigenvalues().cwiseMax(0.0);
  Mat4c sqrt_a = Mat4c::Zero();
  for (int i = 0; i < 4; ++i) {
    sqrt_a += std::sqrt(va(i)) * ea.eigenvectors().col(i) * ea.eigenvectors().col(i).adjoint();
  }
  const Mat4c m = sqrt_a * b.rho * sqrt_a;
  Eigen::SelfAdjointEigenSolver<Mat4c> em(0.5 * (m + m.adjoint().eval()));
  double tr = 0.0;
  for (int i = 0; i < 4; ++i) {
    tr += std::sqrt(std::max(em.eigenvalues()(i), 0.0));
  }
  return std::min(std::max(tr * tr, 0.0), 1.0);
}

double concurrence(const jones::TwoQubitState& rho) {
  jones::Mat2c sigma_y;
  sigma_y << 0.0, std::complex<double>(0.0, -1.0), std::complex<double>(0.0, 1.0), 0.0;
  const Mat4c yy = jones::kron(sigma_y, sigma_y);
  const Mat4c r = rho.rho * yy * rho.rho.conjugate() * yy;
  const Eigen::ComplexEigenSolver<Mat4c> solver(r);
  std::array<double, 4> lambda{};
  for (int i = 0; i < 4; ++i) {
    lambda[static_cast<size_t>(i)] = std::sqrt(std::max(solver.eigenvalues()(i).real(), 0.0));
  }
  std::sort(lambda.begin(), lambda.end(), std::greater<>());
  return std::max(0.0, lambda[0] - lambda[1] - lambda[2] - lambda[3]);
}

NetFidelityResult net_fidelity(const TomographyTable& table) {
  NetFidelityResult out;
  out.raw = fidelity(mle_reconstruct(table).rho);
  TomographyTable net = table;
  for (int s = 0; s < kSettings; ++s) {
    for (int o = 0; o < kOutcomes; ++o) {
      auto& cell = net.counts[static_cast<size_t>(s)][static_cast<size_t>(o)];
      cell = std::max(0.0, cell - net.accidental_estimate[static_cast<size_t>(s)]
                                                         [static_cast<size_t>(o)]);
      net.accidental_estimate[static_cast<size_t>(s)][static_cast<size_t>(o)] = 0.0;
    }
  }
  out.net = fidelity(mle_reconstruct(net).rho);
  return out;
}

std::string table_to_json(const TomographyTable& table) {
  nlohmann::json j;
  j["integration_time_s"] = table.integration_time_s;
  const auto settings = tomography_settings();
  nlohmann::json rows = nlohmann::json::array();
  for (int s = 0; s < kSettings; ++s) {
    nlohmann::json row;
    row["setting"] = setting_label(settings[static_cast<size_t>(s)]);
    nlohmann::json counts, accidentals;
    for (int o = 0; o < kOutcomes; ++o) {
      const std::string key = outcome_label(settings[static_cast<size_t>(s)], o);
      counts[key] = table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)];
      accidentals[key] =
          table.accidental_estimate[static_cast<size_t>(s)][static_cast<size_t>(o)];
    }
    row["counts"] = counts;
    row["accidental_estimate"] = accidentals;
    rows.push_back(row);
  }
  j["settings"] = rows;
  return j.dump(2);
}

TomographyTable table_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  TomographyTable table;
  table.integration_time_s = j.at("integration_time_s").get<double>();
  const auto settings = tomography_settings();
  const auto& rows = j.at("settings");
  if (rows.size() != kSettings) {
    throw InvalidInput("table_from_json: expected 9 settings");
  }
  for (int s = 0; s < kSettings; ++s) {
    const auto& row = rows.at(static_cast<size_t>(s));
    if (row.at("setting").get<std::string>() !=
        setting_label(settings[static_cast<size_t>(s)])) {
      throw InvalidInput("table_from_json: settings out of canonical order");
    }
    for (int o = 0; o < kOutcomes; ++o) {
      const std::string key = outcome_label(settings[static_cast<size_t>(s)], o);
      table.counts[static_cast<size_t>(s)][static_cast<size_t>(o)] =
          row.at("counts").at(key).get<double>();
      table.accidental_estimate[static_cast<size_t>(s)][static_cast<size_t>(o)] =
          row.at("accidental_estimate").at(key).get<double>();
    }
  }
  return table;
}

std::string state_to_json(const jones::TwoQubitState& state) {
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      entries.push_back({state.rho(i, j).real(), state.rho(i, j).imag()});
    }
  }
  nlohmann::json out;
  out["rho"] = entries;
  return out.dump(2);
}

jones::TwoQubitState state_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const auto& entries = j.at("rho");
  if (entries.size() != 16) {
    throw InvalidInput("state_from_json: expected 16 complex entries");
  }
  jones::TwoQubitState state;
  for (int i = 0; i < 4; ++i) {
    for (int jcol = 0; jcol < 4; ++jcol) {
      const auto& e = entries.at(static_cast<size_t>(4 * i + jcol));
      state.rho(i, jcol) = std::complex<double>(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
  return state;
}

}  // namespace qfc::tomo
