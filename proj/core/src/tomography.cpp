#include "ionphoton/tomography.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "ionphoton/errors.hpp"
#include "ionphoton/units.hpp"

namespace ionphoton {

std::vector<MeasurementSetting> all_settings() {
  std::vector<MeasurementSetting> s;
  for (auto b : kAllBases) {
    s.push_back({b, false});
    s.push_back({b, true});
  }
  return s;
}

Eigen::Matrix2cd detector_projector(const MeasurementSetting& setting, int detector) {
  if (detector != 1 && detector != 2) throw std::out_of_range("detector_projector: detector must be 1 or 2");
  const int mode = setting.swapped ? 3 - detector : detector;
  const Eigen::Vector2cd e = detector_mode(setting.basis, mode);
  return e * e.adjoint();
}

std::int64_t CountRecord::total() const {
  std::int64_t n = 0;
  for (const auto& e : entries) n += e.det1 + e.det2;
  return n;
}

CountRecord simulate_counts(const Eigen::Matrix2cd& rho, std::span<const MeasurementSetting> settings,
                            std::int64_t n_total, std::uint64_t seed, const DetectionWindow& window) {
  if (n_total < 0) throw std::invalid_argument("simulate_counts: negative shot number");
  if (settings.empty()) throw std::invalid_argument("simulate_counts: no settings");
  if (std::abs(rho.trace() - Complex(1.0)) > kTraceTol) throw std::invalid_argument("simulate_counts: state is not normalized");
  CountRecord rec;
  const auto k = static_cast<std::int64_t>(settings.size());
  for (std::int64_t i = 0; i < k; ++i) {
    const auto& s = settings[static_cast<std::size_t>(i)];
    const std::int64_t shots = n_total / k + (i < n_total % k ? 1 : 0);
    const double p1 = std::clamp((detector_projector(s, 1) * rho).trace().real(), 0.0, 1.0);
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    std::binomial_distribution<std::int64_t> draw(shots, p1);
    const std::int64_t n1 = shots > 0 ? draw(rng) : 0;
    rec.entries.push_back({s, n1, shots - n1, window.t_start, window.t_end});
  }
  return rec;
}

std::string counts_to_csv(const CountRecord& record) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "basis,swapped,det1,det2,t_bin_start_us,t_bin_end_us\n";
  for (const auto& e : record.entries) {
    os << to_string(e.setting.basis) << ',' << (e.setting.swapped ? 1 : 0) << ',' << e.det1 << ',' << e.det2 << ','
       << units::to_us(e.t_bin_start) << ',' << units::to_us(e.t_bin_end) << '\n';
  }
  return os.str();
}

CountRecord counts_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  CountRecord rec;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("basis", 0) == 0) continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::invalid_argument("counts_from_csv: line " + std::to_string(lineno) + " needs 6 fields");
    try {
      CountEntry e;
      e.setting.basis = basis_from_string(f[0]);
      e.setting.swapped = std::stoi(f[1]) != 0;
      e.det1 = std::stoll(f[2]);
      e.det2 = std::stoll(f[3]);
      e.t_bin_start = units::us(std::stod(f[4]));
      e.t_bin_end = units::us(std::stod(f[5]));
      if (e.det1 < 0 || e.det2 < 0) throw std::invalid_argument("negative count");
      rec.entries.push_back(e);
    } catch (const std::exception& ex) {
      throw std::invalid_argument("counts_from_csv: line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return rec;
}

CountRecord relabel_detectors(const CountRecord& record) {
  CountRecord out = record;
  for (auto& e : out.entries) {
    std::swap(e.det1, e.det2);
    e.setting.swapped = !e.setting.swapped;
  }
  return out;
}

std::vector<Outcome> outcomes(const CountRecord& record) {
  std::vector<Outcome> out;
  for (const auto& e : record.entries) {
    out.push_back({detector_projector(e.setting, 1), static_cast<double>(e.det1)});
    out.push_back({detector_projector(e.setting, 2), static_cast<double>(e.det2)});
  }
  return out;
}

std::vector<Outcome> expected_outcomes(const Eigen::Matrix2cd& rho, std::span<const MeasurementSetting> settings) {
  std::vector<Outcome> out;
  for (const auto& s : settings) {
    for (int d : {1, 2}) {
      const Eigen::Matrix2cd p = detector_projector(s, d);
      out.push_back({p, std::max(0.0, (p * rho).trace().real())});
    }
  }
  return out;
}

namespace {

template <typename M>
M hermitize(const M& m) {
  return 0.5 * (m + m.adjoint());
}

void require_data(std::span<const Outcome> data, const char* who) {
  double total = 0.0;
  for (const auto& o : data) {
    if (o.weight < 0.0) throw std::invalid_argument(std::string(who) + ": negative weight");
    total += o.weight;
  }
  if (!(total > 0.0)) throw NoDataError(std::string(who) + ": no counts");
}

// Number of distinct measurement axes (projector directions up to complement) carrying data.
int informative_bases(std::span<const Outcome> data) {
  std::vector<Eigen::Vector3d> axes;
  for (const auto& o : data) {
    if (o.weight <= 0.0) continue;
    const Eigen::Vector3d r((o.projector(0, 1) + o.projector(1, 0)).real(),
                            (kI * (o.projector(0, 1) - o.projector(1, 0))).real(),
                            (o.projector(0, 0) - o.projector(1, 1)).real());
    bool known = false;
    for (const auto& a : axes) known = known || std::abs(std::abs(a.dot(r)) - a.norm() * r.norm()) < 1e-9;
    if (!known) axes.push_back(r);
  }
  return static_cast<int>(axes.size());
}

double state_log_likelihood(std::span<const Outcome> data, const Eigen::Matrix2cd& rho, double total) {
  double ll = 0.0;
  for (const auto& o : data) {
    if (o.weight <= 0.0) continue;
    ll += o.weight / total * std::log(std::max((o.projector * rho).trace().real(), 1e-300));
  }
  return ll;
}

}  // namespace

MleStateResult mle_state_detailed(std::span<const Outcome> data, const MleOptions& options,
                                  const std::optional<Eigen::Matrix2cd>& start) {
  require_data(data, "mle_state");
  if (informative_bases(data) < 2) throw NoDataError("mle_state: counts needed in at least two bases");
  double total = 0.0;
  for (const auto& o : data) total += o.weight;

  MleStateResult res;
  Eigen::Matrix2cd rho = start ? *start : Eigen::Matrix2cd(0.5 * Eigen::Matrix2cd::Identity());
  double ll = state_log_likelihood(data, rho, total);
  res.log_likelihood.push_back(ll);
  double eps = options.dilution;
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();

  for (int it = 0; it < options.max_iterations; ++it) {
    Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
    for (const auto& o : data) {
      if (o.weight <= 0.0) continue;
      const double p = std::max((o.projector * rho).trace().real(), 1e-300);
      r += (o.weight / total / p) * o.projector;
    }
    Eigen::Matrix2cd next;
    double ll_next = 0.0;
    for (;;) {
      const Eigen::Matrix2cd a = id + eps * r;
      next = hermitize(Eigen::Matrix2cd(a * rho * a.adjoint()));
      next /= next.trace().real();
      ll_next = state_log_likelihood(data, next, total);
      if (ll_next >= ll || eps < 1e-12) break;
      eps *= 0.5;
    }
    if (ll_next < ll) break;  // no ascent direction left at working precision
    const double gain = ll_next - ll;
    rho = next;
    ll = ll_next;
    res.log_likelihood.push_back(ll);
    res.iterations = it + 1;
    if (gain < options.tolerance) break;
  }
  res.rho = rho;
  return res;
}

DensityMatrix mle_state(const CountRecord& counts, const MleOptions& options) {
  const auto data = outcomes(counts);
  const Eigen::MatrixXcd rho = mle_state_detailed(data, options).rho;
  return DensityMatrix(rho);
}

// ---------------------------------------------------------------------------
// Process matrices

namespace {

// (v_m)_{i*2+k} = (sigma_m)_{k,i}: (I (x) sigma_m) applied to sum_i |i>|i>.
const std::array<Eigen::Vector4cd, 4>& pauli_vectors() {
  static const std::array<Eigen::Vector4cd, 4> v = [] {
    std::array<Eigen::Vector4cd, 4> out;
    for (int m = 0; m < 4; ++m) {
      const ComplexMatrix s = pauli(m);
      for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) out[static_cast<std::size_t>(m)](i * 2 + k) = s(k, i);
      }
    }
    return out;
  }();
  return v;
}

Eigen::Matrix2cd pauli2(int m) { return Eigen::Matrix2cd(pauli(m)); }

Eigen::Matrix2cd trace_out(const Eigen::Matrix4cd& j) {
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int l = 0; l < 2; ++l) r(i, l) = j(i * 2, l * 2) + j(i * 2 + 1, l * 2 + 1);
  }
  return r;
}

Eigen::Matrix4cd kron_in(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd r;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) r.block<2, 2>(i * 2, j * 2) = a(i, j) * b;
  }
  return r;
}

}  // namespace

ProcessMatrix::ProcessMatrix(const Eigen::Matrix4cd& chi) : chi_(chi) {
  const ComplexMatrix m = chi;
  const auto rep = check_physical(m);
  if (!rep.ok(1e-9, 1e-9, kEigenvalueFloor)) {
    std::ostringstream os;
    os << "ProcessMatrix: not a valid chi matrix (hermiticity " << rep.hermiticity_error << ", trace error "
       << rep.trace_error << ", min eigenvalue " << rep.min_eigenvalue << ")";
    throw PhysicalityError(os.str());
  }
  chi_ = hermitize(chi_);
}

ProcessMatrix ProcessMatrix::from_choi(const Eigen::Matrix4cd& choi) {
  const auto& v = pauli_vectors();
  Eigen::Matrix4cd chi;
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) {
      chi(m, n) = (v[static_cast<std::size_t>(m)].adjoint() * choi * v[static_cast<std::size_t>(n)])(0, 0) / 4.0;
    }
  }
  return ProcessMatrix(chi);
}

ProcessMatrix ProcessMatrix::from_unitary(const Eigen::Matrix2cd& u) {
  Eigen::Vector4cd c;
  for (int m = 0; m < 4; ++m) c(m) = (pauli2(m) * u).trace() / 2.0;
  return ProcessMatrix(c * c.adjoint());
}

Eigen::Matrix4cd ProcessMatrix::choi() const {
  const auto& v = pauli_vectors();
  Eigen::Matrix4cd j = Eigen::Matrix4cd::Zero();
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) j += chi_(m, n) * v[static_cast<std::size_t>(m)] * v[static_cast<std::size_t>(n)].adjoint();
  }
  return j;
}

Eigen::Matrix2cd ProcessMatrix::apply(const Eigen::Matrix2cd& rho) const {
  Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) out += chi_(m, n) * pauli2(m) * rho * pauli2(n);
  }
  return out;
}

bool tomographically_complete(std::span<const PureState> inputs) {
  if (inputs.size() < 4) return false;
  Eigen::MatrixXcd span(4, static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].dim() != 2) throw DimensionError("tomographically_complete: inputs must be qubit states");
    const ComplexMatrix p = inputs[k].projector();
    span.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::Vector4cd>(p.data());
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(span);
  return svd.singularValues()(3) > 1e-8;
}

namespace {

struct ProcessTerm {
  Eigen::Matrix4cd op;  // rho_in^T (x) projector
  double weight;        // normalized by the total
};

double process_log_likelihood(std::span<const ProcessTerm> terms, const Eigen::Matrix4cd& j) {
  double ll = 0.0;
  for (const auto& t : terms) ll += t.weight * std::log(std::max((t.op * j).trace().real(), 1e-300));
  return ll;
}

}  // namespace

MleProcessResult mle_process_detailed(std::span<const PureState> inputs, std::span<const std::vector<Outcome>> data,
                                      const MleOptions& options, const std::optional<Eigen::Matrix4cd>& start_choi) {
  if (inputs.size() != data.size()) throw std::invalid_argument("mle_process: one outcome list per input required");
  if (!tomographically_complete(inputs)) throw std::invalid_argument("mle_process: inputs are not tomographically complete");

  double total = 0.0;
  for (const auto& d : data) {
    for (const auto& o : d) {
      if (o.weight < 0.0) throw std::invalid_argument("mle_process: negative weight");
      total += o.weight;
    }
  }
  if (!(total > 0.0)) throw NoDataError("mle_process: no counts");
  for (std::size_t k = 0; k < data.size(); ++k) {
    double t = 0.0;
    for (const auto& o : data[k]) t += o.weight;
    if (!(t > 0.0)) throw NoDataError("mle_process: input " + std::to_string(k) + " has no counts");
  }

  std::vector<ProcessTerm> terms;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Eigen::Matrix2cd rin = Eigen::Matrix2cd(inputs[k].projector()).transpose();
    for (const auto& o : data[k]) {
      if (o.weight > 0.0) terms.push_back({kron_in(rin, o.projector), o.weight / total});
    }
  }

  MleProcessResult res;
  Eigen::Matrix4cd j = start_choi ? *start_choi : Eigen::Matrix4cd(0.5 * Eigen::Matrix4cd::Identity());
  double ll = process_log_likelihood(terms, j);
  res.log_likelihood.push_back(ll);
  double eps = options.dilution;
  const Eigen::Matrix4cd id = Eigen::Matrix4cd::Identity();

  for (int it = 0; it < options.max_iterations; ++it) {
    // Scaled so that Tr(K J) = Tr J at a fixed point.
    Eigen::Matrix4cd k = Eigen::Matrix4cd::Zero();
    for (const auto& t : terms) k += (2.0 * t.weight / std::max((t.op * j).trace().real(), 1e-300)) * t.op;
    Eigen::Matrix4cd next;
    double ll_next = 0.0;
    for (;;) {
      const Eigen::Matrix4cd a = id + eps * k;
      const Eigen::Matrix4cd m = hermitize(Eigen::Matrix4cd(a * j * a.adjoint()));
      // Restore Tr_out J = I: J' = (L (x) I) M (L (x) I), L = (Tr_out M)^{-1/2}.
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(hermitize(trace_out(m)));
      const Eigen::Matrix2cd l = es.operatorInverseSqrt();
      const Eigen::Matrix4cd lk = kron_in(l, Eigen::Matrix2cd::Identity());
      next = hermitize(Eigen::Matrix4cd(lk * m * lk));
      ll_next = process_log_likelihood(terms, next);
      if (ll_next >= ll || eps < 1e-12) break;
      eps *= 0.5;
    }
    if (ll_next < ll) break;
    const double gain = ll_next - ll;
    j = next;
    ll = ll_next;
    res.log_likelihood.push_back(ll);
    res.iterations = it + 1;
    if (gain < options.tolerance) break;
  }
  res.choi = j;
  return res;
}

ProcessMatrix mle_process(std::span<const PureState> inputs, std::span<const CountRecord> outputs,
                          const MleOptions& options) {
  std::vector<std::vector<Outcome>> data;
  for (const auto& r : outputs) data.push_back(outcomes(r));
  return ProcessMatrix::from_choi(mle_process_detailed(inputs, data, options).choi);
}

double process_fidelity(const ProcessMatrix& chi) { return chi.chi()(0, 0).real(); }

double process_fidelity(const ProcessMatrix& chi, const Eigen::Matrix2cd& target) {
  Eigen::Vector4cd c;
  for (int m = 0; m < 4; ++m) c(m) = (pauli2(m) * target).trace() / 2.0;
  return (c.adjoint() * chi.chi() * c)(0, 0).real();
}

double mean_state_fidelity_from_process(double f_process) {
  if (!(f_process >= 0.0 && f_process <= 1.0)) throw std::invalid_argument("process fidelity must lie in [0, 1]");
  return (2.0 * f_process + 1.0) / 3.0;
}

double process_fidelity_from_mean_state(double f_mean) {
  if (!(f_mean >= 1.0 / 3.0 && f_mean <= 1.0)) throw std::invalid_argument("mean state fidelity must lie in [1/3, 1]");
  return (3.0 * f_mean - 1.0) / 2.0;
}

// ---------------------------------------------------------------------------
// Bootstrap

CountRecord resample(const CountRecord& record, Rng& rng) {
  CountRecord out = record;
  for (auto& e : out.entries) {
    const std::int64_t n = e.det1 + e.det2;
    if (n == 0) continue;
    const double p = static_cast<double>(e.det1) / static_cast<double>(n);
    std::binomial_distribution<std::int64_t> draw(n, p);
    e.det1 = draw(rng);
    e.det2 = n - e.det1;
  }
  return out;
}

BootstrapVectorResult bootstrap_vector(std::span<const CountRecord> data, const VectorEstimator& estimator,
                                       int n_resamples, std::uint64_t seed, unsigned threads) {
  if (n_resamples < 100) throw std::invalid_argument("bootstrap: at least 100 resamples required");
  BootstrapVectorResult res;
  res.estimate = estimator(data);
  const std::size_t width = res.estimate.size();

  std::vector<std::vector<double>> values(static_cast<std::size_t>(n_resamples));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= n_resamples) return;
      try {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
        std::vector<CountRecord> replica;
        replica.reserve(data.size());
        for (const auto& rec : data) replica.push_back(resample(rec, rng));
        values[static_cast<std::size_t>(r)] = estimator(replica);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_resamples;
      }
    }
  };
  unsigned n_threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(n_resamples));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  res.replicas = values;
  res.sd.assign(width, 0.0);
  for (std::size_t c = 0; c < width; ++c) {
    double mean = 0.0;
    for (const auto& v : values) mean += v.at(c);
    mean /= n_resamples;
    double var = 0.0;
    for (const auto& v : values) var += (v[c] - mean) * (v[c] - mean);
    res.sd[c] = std::sqrt(var / (n_resamples - 1));
  }
  return res;
}

BootstrapResult bootstrap(std::span<const CountRecord> data, const MultiEstimator& estimator, int n_resamples,
                          std::uint64_t seed, unsigned threads) {
  const auto vr = bootstrap_vector(
      data, [&](std::span<const CountRecord> d) { return std::vector<double>{estimator(d)}; }, n_resamples, seed,
      threads);
  BootstrapResult r;
  r.estimate = vr.estimate[0];
  r.sd = vr.sd[0];
  for (const auto& v : vr.replicas) r.replicas.push_back(v[0]);
  return r;
}

BootstrapResult bootstrap(const CountRecord& data, const std::function<double(const CountRecord&)>& estimator,
                          int n_resamples, std::uint64_t seed, unsigned threads) {
  const std::vector<CountRecord> one{data};
  return bootstrap(
      one, [&](std::span<const CountRecord> d) { return estimator(d.front()); }, n_resamples, seed, threads);
}

}  // namespace ionphoton
