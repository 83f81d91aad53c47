#include "ionphoton/emission.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ionphoton/errors.hpp"
#include "ionphoton/units.hpp"

namespace ionphoton {

std::string to_string(Basis b) {
  switch (b) {
    case Basis::HV: return "HV";
    case Basis::DA: return "DA";
    case Basis::RL: return "RL";
  }
  return "?";
}

Basis basis_from_string(const std::string& s) {
  if (s == "HV") return Basis::HV;
  if (s == "DA") return Basis::DA;
  if (s == "RL") return Basis::RL;
  throw std::invalid_argument("unknown basis '" + s + "'");
}

Eigen::Vector2cd detector_mode(Basis b, int detector) {
  if (detector != 1 && detector != 2) throw std::out_of_range("detector_mode: detector must be 1 or 2");
  const double r = 1.0 / std::sqrt(2.0);
  const double sign = detector == 1 ? 1.0 : -1.0;
  switch (b) {
    case Basis::HV: return detector == 1 ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
    case Basis::DA: return Eigen::Vector2cd(r, sign * r);
    case Basis::RL: return Eigen::Vector2cd(r, sign * r * kI);
  }
  return {};
}

DetectionWindow::DetectionWindow(double start, double end) : t_start(start), t_end(end) {
  if (!(start >= 0.0) || !(end >= start)) throw std::invalid_argument("DetectionWindow: need 0 <= t_start <= t_end");
}

std::vector<std::pair<std::string, ComplexMatrix>> cavity_observables(const CompositeSpace& space) {
  const ComplexMatrix ah = space.annihilation(Polarization::H);
  const ComplexMatrix av = space.annihilation(Polarization::V);
  return {{kObsHH, ah.adjoint() * ah}, {kObsVV, av.adjoint() * av}, {kObsVH, av.adjoint() * ah}};
}

CavityOutput cavity_output(const EvolutionResult& result, const SystemParams& params, const CompositeSpace& space) {
  CavityOutput out;
  out.times = result.times;
  const std::size_t n = result.times.size();
  out.flux.resize(n);
  const double rate = 2.0 * params.kappa;

  const auto hh = result.expectations.find(kObsHH);
  const auto vv = result.expectations.find(kObsVV);
  const auto vh = result.expectations.find(kObsVH);
  const bool recorded = hh != result.expectations.end() && vv != result.expectations.end() &&
                        vh != result.expectations.end();
  if (!recorded && result.states.size() != n) {
    throw std::invalid_argument("cavity_output: result tracks neither the cavity observables nor the states");
  }
  std::vector<Complex> s_hh, s_vv, s_vh;
  if (recorded) {
    s_hh = hh->second;
    s_vv = vv->second;
    s_vh = vh->second;
  } else {
    const auto obs = cavity_observables(space);
    s_hh = expectation_series(result, obs[0].second);
    s_vv = expectation_series(result, obs[1].second);
    s_vh = expectation_series(result, obs[2].second);
  }
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Matrix2cd f;
    f(0, 0) = s_hh[i].real();
    f(1, 1) = s_vv[i].real();
    f(0, 1) = s_vh[i];  // <a_V^dag a_H>
    f(1, 0) = std::conj(s_vh[i]);
    out.flux[i] = rate * f;
  }
  return out;
}

PhotonShape photon_shape(const CavityOutput& out, Basis basis, double path_efficiency) {
  PhotonShape s;
  s.basis = basis;
  s.times = out.times;
  const Eigen::Vector2cd e1 = detector_mode(basis, 1);
  const Eigen::Vector2cd e2 = detector_mode(basis, 2);
  for (const auto& f : out.flux) {
    s.rate_det1.push_back(std::max(0.0, path_efficiency * (e1.adjoint() * f * e1)(0, 0).real()));
    s.rate_det2.push_back(std::max(0.0, path_efficiency * (e2.adjoint() * f * e2)(0, 0).real()));
  }
  return s;
}

PhotonShape photon_shape(const EvolutionResult& result, Basis basis, const SystemParams& params,
                         const CompositeSpace& space) {
  return photon_shape(cavity_output(result, params, space), basis, params.path_efficiency);
}

PhotonShape bin_shape(const PhotonShape& shape, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_shape: bin width must be positive");
  PhotonShape b;
  b.basis = shape.basis;
  if (shape.times.empty()) return b;
  const double t0 = shape.times.front();
  std::size_t i = 0;
  for (int k = 0;; ++k) {
    const double lo = t0 + k * bin_width;
    const double hi = lo + bin_width;
    if (lo >= shape.times.back()) break;
    double r1 = 0.0, r2 = 0.0;
    int count = 0;
    // Half-open bins; the final grid point joins the last bin.
    while (i < shape.times.size() && (shape.times[i] < hi || i + 1 == shape.times.size())) {
      r1 += shape.rate_det1[i];
      r2 += shape.rate_det2[i];
      ++count;
      ++i;
    }
    if (count == 0) continue;
    b.times.push_back(0.5 * (lo + hi));
    b.rate_det1.push_back(r1 / count);
    b.rate_det2.push_back(r2 / count);
  }
  return b;
}

std::string shape_to_csv(const PhotonShape& shape) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "time_us,rate1,rate2,basis\n";
  for (std::size_t i = 0; i < shape.times.size(); ++i) {
    os << units::to_us(shape.times[i]) << ',' << shape.rate_det1[i] << ',' << shape.rate_det2[i] << ','
       << to_string(shape.basis) << '\n';
  }
  return os.str();
}

Eigen::Matrix2cd PolarizationMatrix::normalized() const {
  const double tr = matrix.trace().real();
  if (!(tr > 0.0)) throw NoDataError("PolarizationMatrix: zero weight cannot be normalized");
  return matrix / tr;
}

PolarizationMatrix emission_matrix(const CavityOutput& out, const DetectionWindow& window, double path_efficiency) {
  const auto& t = out.times;
  if (t.size() < 2) throw std::invalid_argument("emission_matrix: need at least two time points");
  const double slack = 1e-9 * (t.back() - t.front());
  if (window.t_start < t.front() - slack || window.t_end > t.back() + slack) {
    throw std::invalid_argument("emission_matrix: window lies outside the simulated time range");
  }
  PolarizationMatrix pol;
  pol.mean_time = 0.5 * (window.t_start + window.t_end);
  if (window.length() <= 0.0) return pol;

  const double a = std::max(window.t_start, t.front());
  const double b = std::min(window.t_end, t.back());
  Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
  double moment = 0.0;
  auto at = [&](std::size_t i, double x) -> Eigen::Matrix2cd {
    const double u = (x - t[i]) / (t[i + 1] - t[i]);
    return (1.0 - u) * out.flux[i] + u * out.flux[i + 1];
  };
  auto first = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), a) - t.begin());
  first = first == 0 ? 0 : first - 1;
  for (std::size_t i = first; i + 1 < t.size() && t[i] < b; ++i) {
    const double lo = std::max(a, t[i]);
    const double hi = std::min(b, t[i + 1]);
    if (hi <= lo) continue;
    const Eigen::Matrix2cd f_lo = at(i, lo);
    const Eigen::Matrix2cd f_hi = at(i, hi);
    acc += 0.5 * (hi - lo) * (f_lo + f_hi);
    moment += 0.5 * (hi - lo) * (lo * f_lo.trace().real() + hi * f_hi.trace().real());
  }
  pol.matrix = path_efficiency * 0.5 * (acc + acc.adjoint().eval());
  const double raw = acc.trace().real();
  pol.weight = pol.matrix.trace().real();
  if (raw > 0.0) pol.mean_time = moment / raw;
  return pol;
}

PolarizationMatrix emission_matrix(const EvolutionResult& result, const DetectionWindow& window,
                                   const SystemParams& params, const CompositeSpace& space) {
  return emission_matrix(cavity_output(result, params, space), window, params.path_efficiency);
}

PolarizationMatrix apply_noise(const PolarizationMatrix& pol, const SystemParams& params, const DetectionWindow& window,
                               const NoiseToggles& toggles, int n_detectors) {
  if (pol.weight < 0.0) throw std::invalid_argument("apply_noise: negative weight");
  const double s = pol.weight;
  const double d = toggles.dark_counts ? params.dark_rate * n_detectors * window.length() : 0.0;
  PolarizationMatrix out = pol;
  if (s <= 0.0 && d <= 0.0) return out;

  Eigen::Matrix2cd rho = s > 0.0 ? pol.normalized() : Eigen::Matrix2cd::Zero();
  if (d > 0.0) {
    const double w = d / (d + s);
    rho = (1.0 - w) * rho + w * 0.5 * Eigen::Matrix2cd::Identity();
  }
  double coherence = 1.0;
  if (toggles.init_error) coherence *= params.init_fidelity;
  if (toggles.dephasing && params.coherence_time_tau > 0.0) {
    coherence *= std::exp(-2.0 * pol.mean_time / params.coherence_time_tau);
  }
  rho(0, 1) *= coherence;
  rho(1, 0) *= coherence;
  out.matrix = rho;
  return out;
}

Efficiency process_efficiency(const CavityOutput& out, const DetectionWindow& window, const SystemParams& params) {
  const double internal = emission_matrix(out, window, 1.0).weight;
  return {internal * params.path_efficiency, internal};
}

nlohmann::json polarization_to_json(const PolarizationMatrix& pol) {
  Eigen::MatrixXcd m = pol.matrix;
  return {{"matrix", matrix_to_json(m)}, {"weight", pol.weight}, {"mean_time_us", units::to_us(pol.mean_time)}};
}

}  // namespace ionphoton
