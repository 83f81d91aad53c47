#pragma once

// Simulated polarization tomography, maximum-likelihood state and process
// reconstruction, fidelities and multinomial bootstrap.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ionphoton/emission.hpp"
#include "ionphoton/operators.hpp"
#include "ionphoton/random.hpp"

namespace ionphoton {

struct MeasurementSetting {
  Basis basis = Basis::HV;
  bool swapped = false;  // detector paths exchanged

  bool operator==(const MeasurementSetting&) const = default;
};

// HV, DA, RL, each unswapped then swapped.
std::vector<MeasurementSetting> all_settings();

// Projector seen by detector 1 or 2 in this setting.
Eigen::Matrix2cd detector_projector(const MeasurementSetting& setting, int detector);

struct CountEntry {
  MeasurementSetting setting;
  std::int64_t det1 = 0;
  std::int64_t det2 = 0;
  double t_bin_start = 0.0;  // s
  double t_bin_end = 0.0;
};

struct CountRecord {
  std::vector<CountEntry> entries;

  std::int64_t total() const;
};

// n_total shots split as evenly as possible over the settings, binomial per setting.
CountRecord simulate_counts(const Eigen::Matrix2cd& rho, std::span<const MeasurementSetting> settings,
                            std::int64_t n_total, std::uint64_t seed, const DetectionWindow& window = {});

// basis,swapped,det1,det2,t_bin_start_us,t_bin_end_us
std::string counts_to_csv(const CountRecord& record);
CountRecord counts_from_csv(const std::string& csv);

// Exchange detector labels in every entry (det1 <-> det2 and swapped flag flipped).
CountRecord relabel_detectors(const CountRecord& record);

// Projector with its observed weight (a count, or an expected frequency).
struct Outcome {
  Eigen::Matrix2cd projector;
  double weight = 0.0;
};

std::vector<Outcome> outcomes(const CountRecord& record);
// Infinite-data limit: each setting contributes its outcome probabilities.
std::vector<Outcome> expected_outcomes(const Eigen::Matrix2cd& rho, std::span<const MeasurementSetting> settings);

struct MleOptions {
  double dilution = 0.1;
  double tolerance = 1e-10;  // stop when the mean log-likelihood gains less than this
  int max_iterations = 10000;
};

struct MleStateResult {
  Eigen::Matrix2cd rho;
  int iterations = 0;
  std::vector<double> log_likelihood;  // per accepted iteration, normalized per count
};

MleStateResult mle_state_detailed(std::span<const Outcome> data, const MleOptions& options = {},
                                  const std::optional<Eigen::Matrix2cd>& start = std::nullopt);
DensityMatrix mle_state(const CountRecord& counts, const MleOptions& options = {});

// 4x4 chi in the Pauli basis {1, X, Y, Z}, rho_out = sum chi_mn s_m rho s_n.
class ProcessMatrix {
 public:
  explicit ProcessMatrix(const Eigen::Matrix4cd& chi);

  static ProcessMatrix from_choi(const Eigen::Matrix4cd& choi);
  static ProcessMatrix from_unitary(const Eigen::Matrix2cd& u);

  const Eigen::Matrix4cd& chi() const { return chi_; }
  // Choi matrix sum_ij |i><j| (x) E(|i><j|), input factor first; trace 2.
  Eigen::Matrix4cd choi() const;
  Eigen::Matrix2cd apply(const Eigen::Matrix2cd& rho) const;

 private:
  Eigen::Matrix4cd chi_;
};

struct MleProcessResult {
  Eigen::Matrix4cd choi;
  int iterations = 0;
  std::vector<double> log_likelihood;
};

// data[k] are the outcomes observed for input state inputs[k].
MleProcessResult mle_process_detailed(std::span<const PureState> inputs, std::span<const std::vector<Outcome>> data,
                                      const MleOptions& options = {},
                                      const std::optional<Eigen::Matrix4cd>& start_choi = std::nullopt);
ProcessMatrix mle_process(std::span<const PureState> inputs, std::span<const CountRecord> outputs,
                          const MleOptions& options = {});

// True when the input projectors span the 2x2 operator space.
bool tomographically_complete(std::span<const PureState> inputs);

// Re chi_00
double process_fidelity(const ProcessMatrix& chi);
// Overlap with a unitary target, Tr(chi chi_U).
double process_fidelity(const ProcessMatrix& chi, const Eigen::Matrix2cd& target);

double mean_state_fidelity_from_process(double f_process);
double process_fidelity_from_mean_state(double f_mean);

struct BootstrapResult {
  double estimate = 0.0;
  double sd = 0.0;
  std::vector<double> replicas;  // ordered by replica index
};

// Resamples every entry binomially at fixed totals; replica r uses seed stream r.
CountRecord resample(const CountRecord& record, Rng& rng);

using MultiEstimator = std::function<double(std::span<const CountRecord>)>;
using VectorEstimator = std::function<std::vector<double>(std::span<const CountRecord>)>;

struct BootstrapVectorResult {
  std::vector<double> estimate;
  std::vector<double> sd;
  std::vector<std::vector<double>> replicas;  // ordered by replica index
};

// Several statistics from the same replicas. Requires n_resamples >= 100.
BootstrapVectorResult bootstrap_vector(std::span<const CountRecord> data, const VectorEstimator& estimator,
                                       int n_resamples, std::uint64_t seed, unsigned threads = 0);

// Replicas run on `threads` workers (0: hardware concurrency); results do not depend on it.
BootstrapResult bootstrap(std::span<const CountRecord> data, const MultiEstimator& estimator, int n_resamples,
                          std::uint64_t seed, unsigned threads = 0);
BootstrapResult bootstrap(const CountRecord& data, const std::function<double(const CountRecord&)>& estimator,
                          int n_resamples, std::uint64_t seed, unsigned threads = 0);

}  // namespace ionphoton
