#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

using namespace skelot;

TEST_CASE("anchor normalisation and fekete exactness on affine families") {
  auto S = oracles::make_setup("monomial(1)", 12, 8);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x = {rng.uniform()};
    std::vector<double> p = {rng.uniform(0.05, 0.95)};
    CHECK(S.cost.eval(0, x, p) == doctest::Approx(p[0] * (x[0] - S.anchor.yd[0])).epsilon(1e-15));
    FeketeValue fv = fekete_cost(S.cost, 0, x, p);
    CHECK(fv.exact);
    CHECK(fv.error == 0.0);
    CHECK(fv.value == doctest::Approx(p[0] * (x[0] - S.anchor.yd[0])).epsilon(1e-15));
    // c(y, p; y) = 0.
    CHECK(S.cost.eval(0, S.anchor.yd, p) == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("exact-gradient directions evaluate with no approximation step") {
  // p equal to a scaled section gradient: the snapped section evaluates the
  // quotient of envelope values exactly.
  oracles::Setup S;
  {
    ModelSpec ms = ModelSpec::parse("tate(1/2)");
    ms.l_max = 12;
    S.model = std::make_unique<Model>(instantiate(ms));
    S.anchor = make_anchor(S.model->skeleton, S.model->bases, 12, S.model->default_anchor(12));
    S.semigroup = gradient_semigroup(S.model->skeleton, S.model->bases, S.anchor);
    S.body = okounkov_body(S.semigroup);
    S.cost = CostField::fekete(*S.model, S.anchor, S.body, 12);
  }
  const int l = 12;
  for (const auto& g : S.semigroup.levels.at(l)) {
    std::vector<double> p = {static_cast<double>(g[0]) / l};
    RatVec pr = {rat_frac(g[0], l)};
    if (!S.body.contains_interior(pr)) continue;
    std::vector<double> x = {0.3};
    FeketeValue fv = fekete_cost(S.cost, 0, x, p);
    CHECK(fv.degree == l);
    // Direct envelope quotient for the same section.
    for (const auto& s : S.model->bases.at(l).sections) {
      if (s.label != fv.label) continue;
      double direct = (s.eval(S.model->skeleton, 0, x) -
                       s.eval(S.model->skeleton, 0, S.anchor.yd)) / l;
      CHECK(fv.value == doctest::Approx(direct).epsilon(1e-15));
    }
  }
}

TEST_CASE("degree-truncated values near the closed form, with honest error bars") {
  auto SF = oracles::make_setup("tate(1/2)", 16, 8);
  ModelSpec ms = ModelSpec::parse("tate(1/2)");
  ms.l_max = 16;
  Model m = instantiate(ms);
  Anchor a = make_anchor(m.skeleton, m.bases, 16, m.default_anchor(16));
  auto gs = gradient_semigroup(m.skeleton, m.bases, a);
  auto body = okounkov_body(gs);
  CostField fk = CostField::fekete(m, a, body, 16);
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x = {rng.uniform()};
    std::vector<double> p = {rng.uniform(rat_d(body.poly.vertices().front()[0]) + 0.05,
                                          rat_d(body.poly.vertices().back()[0]) - 0.05)};
    FeketeValue fv = fekete_cost(fk, 0, x, p);
    double closed = SF.cost.eval(0, x, p);
    CHECK(std::fabs(fv.value - closed) <= fv.error + 0.08);
  }
}

TEST_CASE("fekete guards: outside the body, missing lattice points") {
  auto S = oracles::make_setup("monomial(1)", 8, 8);
  CHECK_THROWS_AS(fekete_cost(S.cost, 0, {0.5}, {1.5}), Error);
  CHECK_THROWS_AS(fekete_cost(S.cost, 0, {0.5}, {-0.1}), Error);

  // Sparse synthetic family: gradients {0,3} at degree 1 and {0,6} at
  // degree 2 never snap to p = 0.4.
  nlohmann::json doc;
  doc["n"] = 1;
  doc["faces"] = {{{"id", "seg"}, {"vertices", {{"0"}, {"1"}}}}};
  doc["gluings"] = nlohmann::json::array();
  Model sparse;
  sparse.name = "sparse";
  sparse.skeleton = Skeleton::build(doc);
  for (int l = 1; l <= 2; ++l) {
    DegreeBasis b;
    b.degree = l;
    for (long long g : {0LL, 3LL * l}) {
      TropicalSection s;
      s.degree = l;
      s.label = "s" + std::to_string(g);
      s.terms["seg"] = {MonomialTerm{{g}, Rat(0)}, MonomialTerm{{g + 12}, Rat(9)}};
      b.sections.push_back(std::move(s));
    }
    check_valuative_independence(sparse.skeleton, b);
    sparse.bases[l] = std::move(b);
  }
  Anchor a2 = make_anchor(sparse.skeleton, sparse.bases, 2, {0, {rat_frac(137, 1000)}});
  auto gs2 = gradient_semigroup(sparse.skeleton, sparse.bases, a2);
  auto body2 = okounkov_body(gs2);
  CostField fk2 = CostField::fekete(sparse, a2, body2, 2);
  // p = 0.4 snaps to gradient 0 at degree 1, so it still evaluates; p = 1.4
  // snaps to 1 and 3 which neither degree carries.
  CHECK_NOTHROW(fekete_cost(fk2, 0, {0.5}, {0.4}));
  CHECK_THROWS_AS(fekete_cost(fk2, 0, {0.5}, {1.4}), Error);
}

TEST_CASE("transforms: linear-cost endpoint max and definitional fixed points") {
  auto S = oracles::make_setup("monomial(1)", 8, 8);
  SkeletonGrid grid(S.model->skeleton, S.mu, 1.0 / 256);
  GridFunction zero{&grid, std::vector<double>(grid.size(), 0.0)};
  BodyFunction zc = c_transform_skeleton_to_body(zero, S.cost, S.nu);
  // sup_x p (x - y) sits at the rightmost grid node for p > 0.
  double xmax = 0;
  for (const auto& nd : grid.nodes()) xmax = std::max(xmax, nd.x[0]);
  for (size_t j = 0; j < S.nu.size(); ++j) {
    double p = S.nu.points()[j][0];
    CHECK(zc.v[j] == doctest::Approx(p * (xmax - S.anchor.yd[0])).epsilon(1e-13));
  }

  // phi = c(., p0) - k transforms back to k at p0.
  const size_t j0 = 3;
  const double k = 0.37;
  GridFunction phi{&grid, {}};
  phi.v.resize(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    phi.v[i] = S.cost.eval(grid.nodes()[i].face, grid.nodes()[i].x, S.nu.points()[j0]) - k;
  BodyFunction pc = c_transform_skeleton_to_body(phi, S.cost, S.nu);
  CHECK(pc.v[j0] == doctest::Approx(k).epsilon(1e-14));

  // Singleton body sample: psi^c(x) = c(x, p0) exactly.
  BodyFunction single;
  BodyMeasure one = body_measure(S.body, BodySampleScheme::lattice, 1);
  single.samples = &one;
  single.v = {0.0};
  GridFunction back = c_transform_body_to_skeleton(single, S.cost, grid);
  for (size_t i = 0; i < grid.size(); ++i)
    CHECK(back.v[i] ==
          doctest::Approx(S.cost.eval(grid.nodes()[i].face, grid.nodes()[i].x, one.points()[0]))
              .epsilon(1e-14));
}

TEST_CASE("transform calculus: one-sided bound, contraction, order reversal, triple") {
  for (const char* spec : {"monomial(1)", "tate(1/2)"}) {
    auto S = oracles::make_setup(spec, 8, 8);
    SkeletonGrid grid(S.model->skeleton, S.mu, 1.0 / 128);
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
      GridFunction f = oracles::random_grid_function(grid, rng);
      GridFunction g = oracles::random_grid_function(grid, rng);

      // (f^c)^c <= f, via the direct double-loop oracle for f^c.
      BodyFunction fc = c_transform_skeleton_to_body(f, S.cost, S.nu);
      for (size_t j = 0; j < S.nu.size(); ++j) {
        double direct = -1e300;
        for (size_t i = 0; i < grid.size(); ++i)
          direct = std::max(direct, S.cost.eval(grid.nodes()[i].face, grid.nodes()[i].x,
                                                S.nu.points()[j]) - f.v[i]);
        CHECK(fc.v[j] == doctest::Approx(direct).epsilon(1e-15));
      }
      GridFunction fcc = c_transform_body_to_skeleton(fc, S.cost, grid);
      double over = -1e300;
      for (size_t i = 0; i < grid.size(); ++i) over = std::max(over, fcc.v[i] - f.v[i]);
      CHECK(over <= 1e-10);

      // Order reversal and sup-norm contraction.
      GridFunction fmin{&grid, f.v};
      for (size_t i = 0; i < grid.size(); ++i) fmin.v[i] = std::min(f.v[i], g.v[i]);
      BodyFunction gc = c_transform_skeleton_to_body(g, S.cost, S.nu);
      BodyFunction mc = c_transform_skeleton_to_body(fmin, S.cost, S.nu);
      double dist = 0, tdist = 0;
      for (size_t j = 0; j < S.nu.size(); ++j) {
        CHECK(mc.v[j] >= fc.v[j] - 1e-12);  // smaller input, larger transform
        dist = std::max(dist, std::fabs(fc.v[j] - gc.v[j]));
      }
      for (size_t i = 0; i < grid.size(); ++i) tdist = std::max(tdist, std::fabs(f.v[i] - g.v[i]));
      CHECK(dist <= tdist + 1e-12);

      // Triple transform equals the single transform on the samples.
      BodyFunction fccc = c_transform_skeleton_to_body(fcc, S.cost, S.nu);
      for (size_t j = 0; j < S.nu.size(); ++j)
        CHECK(std::fabs(fccc.v[j] - fc.v[j]) <= 1e-10);
    }
  }
}

TEST_CASE("projection: fixed point, spike removal, idempotency") {
  auto S = oracles::make_setup("tate(1/2)", 8, 8);
  SkeletonGrid grid(S.model->skeleton, S.mu, 1.0 / 128);
  Rng rng(13);

  // A sample-set bundle is already projected.
  PotentialPc bundle(S.cost, S.nu, [&] {
    std::vector<double> w(S.nu.size());
    for (auto& v : w) v = rng.uniform(0, 0.4);
    return w;
  }());
  GridFunction f{&grid, {}};
  f.v.resize(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    f.v[i] = bundle.eval(grid.nodes()[i].face, grid.nodes()[i].x);
  GridFunction pf = project_to_Pc(f, S.cost, S.nu);
  for (size_t i = 0; i < grid.size(); ++i) CHECK(std::fabs(pf.v[i] - f.v[i]) <= 1e-10);

  // An upward spike is shaved; the output is a minorant.
  GridFunction spiked = f;
  spiked.v[grid.size() / 2] += 0.5;
  GridFunction ps = project_to_Pc(spiked, S.cost, S.nu);
  for (size_t i = 0; i < grid.size(); ++i) CHECK(ps.v[i] <= spiked.v[i] + 1e-12);
  CHECK(ps.v[grid.size() / 2] < spiked.v[grid.size() / 2] - 0.1);

  // Idempotency on random data.
  for (int t = 0; t < 10; ++t) {
    GridFunction r = oracles::random_grid_function(grid, rng);
    GridFunction p1 = project_to_Pc(r, S.cost, S.nu);
    GridFunction p2 = project_to_Pc(p1, S.cost, S.nu);
    for (size_t i = 0; i < grid.size(); ++i) CHECK(std::fabs(p2.v[i] - p1.v[i]) <= 1e-10);
  }
}

TEST_CASE("affine domains: whole face, chamber intersection, boundary failure") {
  auto S = oracles::make_setup("monomial(1)", 8, 8);
  ConvexPoly K = ConvexPoly::hull(1, {{rat_frac(1, 10)}, {rat_frac(9, 10)}});
  AffineDomainResult r = affine_domain(S.cost, K);
  REQUIRE(r.found);
  CHECK(r.domain.vertices().front()[0] == Rat(0));
  CHECK(r.domain.vertices().back()[0] == Rat(1));
  CHECK(r.missing_lattice.empty());

  // Circle model: the domain is a finite chamber intersection around the
  // anchor; on it the cost is exactly <p, x - y> for p in K. The anchor
  // sits near the middle so K = [0.3, 0.7] fits inside the truncated body.
  ModelSpec ms = ModelSpec::parse("tate(1/2)");
  ms.l_max = 8;
  Model m = instantiate(ms);
  Anchor a = make_anchor(m.skeleton, m.bases, 8, {0, {rat_frac(499, 1000)}});
  auto gs = gradient_semigroup(m.skeleton, m.bases, a);
  auto body = okounkov_body(gs);
  CostField fk = CostField::fekete(m, a, body, 8);
  auto SC = oracles::make_setup("tate(1/2)", 8, 8, std::nullopt, std::string("499/1000"));
  ConvexPoly K2 = ConvexPoly::hull(1, {{rat_frac(3, 10)}, {rat_frac(7, 10)}});
  AffineDomainResult r2 = affine_domain(fk, K2);
  REQUIRE(r2.found);
  CHECK(r2.domain.contains(a.y.coords, true));
  // On U the cost is exactly <p, x-y> for every certified direction, and,
  // by convexity pinching, for everything in their hull.
  double ulo = rat_d(r2.domain.vertices().front()[0]);
  double uhi = rat_d(r2.domain.vertices().back()[0]);
  double clo = rat_d(r2.certified.vertices().front()[0]);
  double chi = rat_d(r2.certified.vertices().back()[0]);
  CHECK(clo >= 0.3);
  CHECK(chi <= 0.7);
  CHECK(chi - clo >= 0.7 - 0.3 - 2.0 / 8);
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x = {rng.uniform(ulo, uhi)};
    std::vector<double> p = {rng.uniform(clo, chi)};
    CHECK(SC.cost.eval(0, x, p) ==
          doctest::Approx(p[0] * (x[0] - rat_d(a.y.coords[0]))).epsilon(1e-12));
  }

  // K touching the body boundary: the documented failure mode.
  ConvexPoly K3 = ConvexPoly::hull(1, {body.poly.vertices().front(), {rat_frac(1, 2)}});
  AffineDomainResult r3 = affine_domain(fk, K3);
  CHECK_FALSE(r3.found);
  CHECK(r3.failure.find("ShrunkToPoint") != std::string::npos);
}

TEST_CASE("anchor change covariance on the closed forms") {
  // c(x,p;y) - c(y',p;y) = c(x,p';y') under the gradient matching.
  for (const char* spec : {"monomial(1)", "tate(1/2)"}) {
    auto Sy = oracles::make_setup(spec, 8, 8);
    auto Sy2 = oracles::make_setup(spec, 8, 8, std::nullopt, std::string("241/990"));
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x = {rng.uniform()};
      std::vector<double> p = {rng.uniform(0.05, 0.6)};
      if (!Sy.body.contains_interior({Rat(p[0])})) continue;
      std::vector<double> y2 = Sy2.anchor.yd;
      auto match = Sy.cost.x_gradient(0, y2, p);
      if (!match.unique) continue;
      if (!Sy2.body.contains_interior({Rat(match.grad[0])})) continue;
      double lhs = Sy.cost.eval(0, x, p) - Sy.cost.eval(0, y2, p);
      double rhs = Sy2.cost.eval(0, x, match.grad);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("convexity of the cost in x and in p at sampled triples") {
  auto S = oracles::make_setup("tate(1/2)", 8, 8);
  for (size_t j = 0; j < S.nu.size(); ++j)
    CHECK(S.cost.eval(0, S.anchor.yd, S.nu.points()[j]) == 0.0);  // anchor normalisation
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    double x1 = rng.uniform(), x2 = rng.uniform();
    double plo = rat_d(S.body.poly.vertices().front()[0]) + 0.02;
    double phi = rat_d(S.body.poly.vertices().back()[0]) - 0.02;
    double p1 = rng.uniform(plo, phi), p2 = rng.uniform(plo, phi);
    std::vector<double> pm = {0.5 * (p1 + p2)};
    std::vector<double> xm = {0.5 * (x1 + x2)};
    // in x
    CHECK(S.cost.eval(0, xm, {p1}) <=
          0.5 * (S.cost.eval(0, {x1}, {p1}) + S.cost.eval(0, {x2}, {p1})) + 1e-9);
    // in p
    CHECK(S.cost.eval(0, {x1}, pm) <=
          0.5 * (S.cost.eval(0, {x1}, {p1}) + S.cost.eval(0, {x1}, {p2})) + 1e-9);
  }
}
