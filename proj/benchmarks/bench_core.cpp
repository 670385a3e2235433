#include <benchmark/benchmark.h>

#include "skelot/energy.hpp"
#include "skelot/transport.hpp"

using namespace skelot;

namespace {

struct Fixture {
  std::unique_ptr<Model> model;
  Anchor anchor;
  GradientSemigroup semigroup;
  OkounkovBody body;
  BodyMeasure nu;
  SkeletonMeasure mu;
  std::unique_ptr<CostField> cost;

  static Fixture make(const std::string& spec, int lmax, int res) {
    Fixture f;
    ModelSpec ms = ModelSpec::parse(spec);
    if (ms.l_max < lmax) ms.l_max = lmax;
    f.model = std::make_unique<Model>(instantiate(ms));
    f.anchor = make_anchor(f.model->skeleton, f.model->bases, lmax, f.model->default_anchor(lmax));
    f.semigroup = gradient_semigroup(f.model->skeleton, f.model->bases, f.anchor);
    f.body = okounkov_body(f.semigroup);
    f.nu = body_measure(f.body, BodySampleScheme::lattice, res);
    f.mu = lebesgue_measure(f.model->skeleton);
    f.cost = std::make_unique<CostField>(CostField::closed_form(*f.model, f.anchor, f.body));
    return f;
  }
};

}  // namespace

static void BM_envelope_eval(benchmark::State& state) {
  ModelSpec ms = ModelSpec::parse("tate(1/2)");
  ms.l_max = static_cast<int>(state.range(0));
  Model m = instantiate(ms);
  const DegreeBasis& b = m.bases.at(ms.l_max);
  std::vector<double> x = {0.37};
  for (auto _ : state) {
    double acc = 0;
    for (const auto& s : b.sections) acc += s.eval(m.skeleton, 0, x);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_envelope_eval)->Arg(16)->Arg(64);

static void BM_wall_complex(benchmark::State& state) {
  ModelSpec ms = ModelSpec::parse("tate(1/2)");
  ms.l_max = static_cast<int>(state.range(0));
  Model m = instantiate(ms);
  for (auto _ : state) {
    WallComplex wc = wall_complex(m.skeleton, m.bases.at(ms.l_max));
    benchmark::DoNotOptimize(wc.chambers.size());
  }
}
BENCHMARK(BM_wall_complex)->Arg(8)->Arg(12);

static void BM_c_transform(benchmark::State& state) {
  Fixture f = Fixture::make("tate(1/2)", 12, static_cast<int>(state.range(0)));
  SkeletonGrid grid(f.model->skeleton, f.mu, 1.0 / 256);
  GridFunction zero{&grid, std::vector<double>(grid.size(), 0.0)};
  for (auto _ : state) {
    BodyFunction fc = c_transform_skeleton_to_body(zero, *f.cost, f.nu);
    benchmark::DoNotOptimize(fc.v[0]);
  }
}
BENCHMARK(BM_c_transform)->Arg(16)->Arg(64);

static void BM_laguerre_masses(benchmark::State& state) {
  Fixture f = Fixture::make("monomial(1)", 4, static_cast<int>(state.range(0)));
  PotentialPc pot(*f.cost, f.nu, std::vector<double>(f.nu.size(), 0.0));
  for (auto _ : state) {
    LaguerreDecomposition cells = laguerre_cells(pot, f.mu);
    benchmark::DoNotOptimize(cells.mass_sum);
  }
}
BENCHMARK(BM_laguerre_masses)->Arg(64)->Arg(1024);

static void BM_solve_1d(benchmark::State& state) {
  Fixture f = Fixture::make("monomial(1)", 4, static_cast<int>(state.range(0)));
  SolveOptions so;
  so.tol = 1e-6;
  so.max_iter = 100000;
  for (auto _ : state) {
    auto [pot, cert] = solve_kantorovich(f.mu, f.nu, *f.cost, so);
    benchmark::DoNotOptimize(cert.residual_inf);
  }
}
BENCHMARK(BM_solve_1d)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_polygon_clip(benchmark::State& state) {
  PolyD sq = PolyD::from_ccw({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  for (auto _ : state) {
    PolyD cut = sq;
    for (int k = 1; k < 8; ++k)
      cut = cut.clip({1.0, 0.5 + 0.1 * k}, 0.9 - 0.05 * k);
    benchmark::DoNotOptimize(cut.area());
  }
}
BENCHMARK(BM_polygon_clip);

BENCHMARK_MAIN();
