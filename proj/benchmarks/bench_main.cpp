#include <fstream>
#include <sstream>

#include <benchmark/benchmark.h>

#include "vartool/completion.hpp"
#include "vartool/emt.hpp"
#include "vartool/frontend.hpp"
#include "vartool/metric_geom.hpp"

using namespace vartool;

namespace {

ModelFile load(const char* name) {
  std::ifstream in(std::string(VARTOOL_MODELS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

ModelPtr metric_scalar(int n) {
  std::vector<int> sig(static_cast<std::size_t>(n), -1);
  sig[0] = 1;
  return declare_model({n, sig}, {BundleSpec::metric(), BundleSpec::scalar("phi")}, 1);
}

Expr scalar_density(const ModelSpec& m) {
  std::vector<Expr> parts;
  for (int k = 0; k < m.dim(); ++k)
    for (int l = 0; l < m.dim(); ++l)
      parts.push_back(m.metric_upper(k, l) * Expr(m.atom(1, {}, {k})) * Expr(m.atom(1, {}, {l})));
  return Rational(1, 2) * sum(parts) * m.sqrt_det();
}

void BM_ExpandProduct(benchmark::State& st) {
  std::vector<Expr> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(Expr(Atom::base(i)));
  Expr a = xs[0] + 2 * xs[1] - xs[2] + Rational(1, 3);
  Expr b = xs[1] * xs[2] - xs[3] + 5;
  for (auto _ : st) {
    Expr p = a;
    for (int k = 1; k < st.range(0); ++k) p *= k % 2 != 0 ? b : a;
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_ExpandProduct)->Arg(4)->Arg(8);

void BM_ScalarEulerLagrange(benchmark::State& st) {
  auto m = metric_scalar(static_cast<int>(st.range(0)));
  Lagrangian l{m, scalar_density(*m)};
  for (auto _ : st) benchmark::DoNotOptimize(euler_lagrange(l, m->atom(1, {})));
}
BENCHMARK(BM_ScalarEulerLagrange)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

void BM_ScalarEnergyMomentum(benchmark::State& st) {
  auto m = metric_scalar(static_cast<int>(st.range(0)));
  Lagrangian l{m, scalar_density(*m)};
  for (auto _ : st) benchmark::DoNotOptimize(tensorial(*m, em_tensor(l)));
}
BENCHMARK(BM_ScalarEnergyMomentum)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

void BM_Hilbert2D(benchmark::State& st) {
  ModelFile f = load("hilbert2.vl");
  Lagrangian l{f.model, f.lagrangian()};
  for (auto _ : st)
    for (const Atom& y : f.model->component_atoms(0)) benchmark::DoNotOptimize(euler_lagrange(l, y));
}
BENCHMARK(BM_Hilbert2D)->Unit(benchmark::kMillisecond);

void BM_EinsteinCheck4D(benchmark::State& st) {
  ModelFile f = load("hilbert4.vl");
  for (auto _ : st) benchmark::DoNotOptimize(einstein_check(*f.model, 20, 1));
}
BENCHMARK(BM_EinsteinCheck4D)->Unit(benchmark::kMillisecond);

void BM_FluidCompletion(benchmark::State& st) {
  ModelFile f = load("fluid.vl");
  for (auto _ : st)
    benchmark::DoNotOptimize(vainberg_tonti(f.source("dust").spec, ScalingLaw::metric(*f.model), f.rules));
}
BENCHMARK(BM_FluidCompletion)->Unit(benchmark::kMillisecond);

void BM_ParsePrint(benchmark::State& st) {
  ModelFile f = load("fluid.vl");
  AtomNamer namer = model_namer(*f.model);
  std::string text = to_text(f.source("dust").spec.eps.begin()->second * f.lagrangian(), namer);
  for (auto _ : st) benchmark::DoNotOptimize(to_text(parse_expression(*f.model, text), namer));
}
BENCHMARK(BM_ParsePrint);

}  // namespace
BENCHMARK_MAIN();
