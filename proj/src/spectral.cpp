#include "qfc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qfc/counting.hpp"
#include "qfc/fitting.hpp"

namespace qfc::spectral {

void PowerSeries::validate() const {
  if (points.size() < 4) {
    throw InvalidInput("power series: need at least 4 points for a 3-parameter fit");
  }
  std::set<double> seen;
  for (const auto& p : points) {
    if (!(p.power_mw > 0.0)) {
      throw InvalidInput("power series: powers must be strictly positive");
    }
    if (!(p.rate_hz >= 0.0)) {
      throw InvalidInput("power series: rates must be >= 0");
    }
    if (!seen.insert(p.power_mw).second) {
      throw InvalidInput("power series: powers must be distinct");
    }
  }
}

QuadraticFit fit_power_quadratic(const PowerSeries& series) {
  series.validate();
  const int n = static_cast<int>(series.points.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd target(n);
  for (int i = 0; i < n; ++i) {
    const double p = series.points[static_cast<size_t>(i)].power_mw;
    design(i, 0) = p * p;
    design(i, 1) = p;
    design(i, 2) = 1.0;
    target(i) = series.points[static_cast<size_t>(i)].rate_hz;
  }

  const fit::NnlsResult constrained = fit::nnls(design, target);

  QuadraticFit out;
  out.a = constrained.coeffs(0);
  out.b = constrained.coeffs(1);
  out.c = constrained.coeffs(2);
  out.rss = constrained.rss;

  // Parameter uncertainties from the unconstrained fit covariance.
  const Eigen::MatrixXd xtx = design.transpose() * design;
  const Eigen::VectorXd unconstrained = xtx.ldlt().solve(design.transpose() * target);
  const double dof = std::max(1.0, static_cast<double>(n - 3));
  const double s2 = (design * unconstrained - target).squaredNorm() / dof;
  const Eigen::MatrixXd cov = s2 * xtx.inverse();
  out.sigma_a = std::sqrt(std::max(cov(0, 0), 0.0));
  out.sigma_b = std::sqrt(std::max(cov(1, 1), 0.0));
  return out;
}

ResonancePartition classify_resonant(const std::vector<ChannelFit>& fits,
                                     const ClassifyOptions& opts) {
  if (fits.size() < 2) {
    throw InvalidInput("classify_resonant: need at least 2 channels");
  }

  auto significant = [&](const ChannelFit& f) {
    return f.a > opts.a_significance_sigma * std::max(f.sigma_a, 0.0);
  };

  // Off-resonance reference: median linear term of the a-insignificant lines,
  // falling back to the overall median when every line looks significant.
  std::vector<double> reference_b;
  for (const auto& f : fits) {
    if (!significant(f)) {
      reference_b.push_back(f.b);
    }
  }
  if (reference_b.empty()) {
    for (const auto& f : fits) {
      reference_b.push_back(f.b);
    }
  }
  std::sort(reference_b.begin(), reference_b.end());
  const size_t mid = reference_b.size() / 2;
  const double median_b = reference_b.size() % 2 == 1
                              ? reference_b[mid]
                              : 0.5 * (reference_b[mid - 1] + reference_b[mid]);

  ResonancePartition partition;
  for (size_t i = 0; i < fits.size(); ++i) {
    if (significant(fits[i]) && fits[i].b > opts.b_median_factor * median_b) {
      partition.on_resonance.push_back(static_cast<int>(i));
    } else {
      partition.off_resonance.push_back(static_cast<int>(i));
    }
  }
  return partition;
}

double pgr(double rs, double ri, double rc) {
  if (!(rs >= 0.0) || !(ri >= 0.0)) {
    throw InvalidInput("pgr: rates must be >= 0");
  }
  if (!(rc > 0.0)) {
    throw UndefinedValue("pgr: rc must be positive");
  }
  return rs * ri / rc;
}

double spectral_brightness(double pgr_per_mw2, double bandwidth_mhz) {
  if (!(pgr_per_mw2 >= 0.0)) {
    throw InvalidInput("spectral_brightness: pgr must be >= 0");
  }
  if (!(bandwidth_mhz > 0.0)) {
    throw UndefinedValue("spectral_brightness: bandwidth must be positive");
  }
  return pgr_per_mw2 / bandwidth_mhz;
}

EfficiencyBudget efficiencies(double rs, double ri, double rc, double transmission_s,
                              double transmission_i, double detection) {
  if (!(rs > 0.0) || !(ri > 0.0)) {
    throw InvalidInput("efficiencies: rs and ri must be positive");
  }
  if (!(rc >= 0.0)) {
    throw InvalidInput("efficiencies: rc must be >= 0");
  }
  for (double v : {transmission_s, transmission_i, detection}) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw InvalidInput("efficiencies: transmissions and detection must be in (0, 1]");
    }
  }
  EfficiencyBudget out;
  out.eta_s = rc / ri;
  out.eta_i = rc / rs;
  out.extraction_s = out.eta_s / (transmission_s * detection);
  out.extraction_i = out.eta_i / (transmission_i * detection);
  out.consistent = out.extraction_s <= 1.0 + 1e-12 && out.extraction_i <= 1.0 + 1e-12;
  return out;
}

JsiGrid jsi(const std::vector<pairs::ChannelRateModel>& channels, double power_mw,
            double cross_accidental_rate_hz, double time_s, std::uint64_t seed) {
  const int n = static_cast<int>(channels.size());
  if (n < 1) {
    throw InvalidInput("jsi: need at least one channel model");
  }
  if (!(cross_accidental_rate_hz >= 0.0)) {
    throw InvalidInput("jsi: accidental rate must be >= 0");
  }
  if (!(time_s > 0.0)) {
    throw InvalidInput("jsi: time must be > 0");
  }
  JsiGrid grid(n, n);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      double rate = cross_accidental_rate_hz;
      if (row == col) {
        rate += pairs::expected_coincidences(channels[static_cast<size_t>(row)], power_mw)
                    .true_rate_hz;
      }
      const std::uint64_t cell_seed =
          rng::derive_seed(seed, static_cast<std::uint64_t>(row) * n + col);
      grid(row, col) = rate > 0.0
                           ? static_cast<double>(counting::sample_counts(rate, time_s, cell_seed))
                           : 0.0;
    }
  }
  return grid;
}

}  // namespace qfc::spectral
