#include <benchmark/benchmark.h>

#include "ionphoton/experiment.hpp"
#include "ionphoton/units.hpp"

using namespace ionphoton;

namespace {

struct Model {
  SystemParams params;
  LevelScheme scheme = LevelScheme::default_scheme();
  TimeDependentHamiltonian h;
  std::vector<ComplexMatrix> collapse;

  explicit Model(bool off_resonant) {
    params = tune_drives(SystemParams::defaults(), scheme, RamanTuning::LightShifted, off_resonant);
    h = build_full_hamiltonian(params, scheme, off_resonant);
    collapse = build_collapse_operators(params, scheme);
  }
};

void BM_LiouvillianApply(benchmark::State& state) {
  const Model m(state.range(0) != 0);
  const Liouvillian gen(m.h, m.collapse);
  const auto rho = prepare_input(M_PI / 4, M_PI, 1.0).matrix();
  ComplexVector y = Eigen::Map<const ComplexVector>(rho.data(), rho.size());
  ComplexVector dy(y.size());
  double t = 0.0;
  for (auto _ : state) {
    gen.apply(t, y, dy);
    benchmark::DoNotOptimize(dy.data());
    t += 1e-9;
  }
  state.counters["nnz"] = static_cast<double>(gen.nonzeros());
}
BENCHMARK(BM_LiouvillianApply)->Arg(0)->Arg(1);

void BM_Integrate(benchmark::State& state) {
  const Model m(state.range(1) != 0);
  const CompositeSpace space(m.scheme.size(), m.params.n_max);
  MasterEquationProblem p;
  p.hamiltonian = m.h;
  p.collapse_ops = m.collapse;
  p.rho0 = prepare_input(M_PI / 4, M_PI, 1.0).matrix();
  p.t_grid = uniform_grid(units::us(static_cast<double>(state.range(0))), 201);
  p.observables = cavity_observables(space);
  p.store_states = false;
  for (auto _ : state) benchmark::DoNotOptimize(integrate(p));
}
BENCHMARK(BM_Integrate)->Args({5, 0})->Args({5, 1})->Unit(benchmark::kMillisecond);

void BM_MleState(benchmark::State& state) {
  Eigen::Matrix2cd rho;
  rho << 0.9, 0.2, 0.2, 0.1;
  const auto counts = simulate_counts(rho, all_settings(), state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(mle_state(counts));
}
BENCHMARK(BM_MleState)->Arg(8100)->Arg(1'000'000);

void BM_MleProcess(benchmark::State& state) {
  std::vector<PureState> inputs;
  std::vector<CountRecord> records;
  std::uint64_t seed = 1;
  for (const auto& in : paper_input_states()) {
    inputs.push_back(in.qubit());
    Eigen::Matrix2cd rho = 0.9 * Eigen::Matrix2cd(in.qubit().projector()) + 0.05 * Eigen::Matrix2cd::Identity();
    records.push_back(simulate_counts(rho, all_settings(), state.range(0), seed++));
  }
  for (auto _ : state) benchmark::DoNotOptimize(mle_process(inputs, records));
}
BENCHMARK(BM_MleProcess)->Arg(8100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
