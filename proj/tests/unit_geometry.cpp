#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skelot/random.hpp"
#include "skelot/skeleton.hpp"

using namespace skelot;

namespace {

nlohmann::json segment_doc() {
  nlohmann::json doc;
  doc["n"] = 1;
  doc["faces"] = {{{"id", "seg"}, {"vertices", {{"0"}, {"1"}}}},
                  {{"id", "v0"}, {"vertices", {{"0"}}}},
                  {{"id", "v1"}, {"vertices", {{"1"}}}}};
  doc["gluings"] = nlohmann::json::array();
  return doc;
}

nlohmann::json circle_doc() {
  nlohmann::json doc = segment_doc();
  doc["gluings"] = {{{"from", "seg"}, {"to", "seg"}, {"linear", {{1}}}, {"translate", {"-1"}}}};
  return doc;
}

nlohmann::json verts2(std::initializer_list<std::pair<const char*, const char*>> vs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [a, b] : vs) {
    nlohmann::json v = nlohmann::json::array();
    v.push_back(a);
    v.push_back(b);
    arr.push_back(v);
  }
  return arr;
}

nlohmann::json two_squares_doc() {
  nlohmann::json doc;
  doc["n"] = 2;
  doc["faces"] = nlohmann::json::array();
  doc["faces"].push_back(
      {{"id", "sqA"}, {"vertices", verts2({{"0", "0"}, {"1", "0"}, {"1", "1"}, {"0", "1"}})}});
  doc["faces"].push_back(
      {{"id", "sqB"}, {"vertices", verts2({{"1", "0"}, {"2", "0"}, {"2", "1"}, {"1", "1"}})}});
  doc["faces"].push_back({{"id", "edge"}, {"vertices", verts2({{"1", "0"}, {"1", "1"}})}});
  doc["gluings"] = nlohmann::json::array();
  return doc;
}

}  // namespace

TEST_CASE("hull and volume, 1-D and 2-D") {
  ConvexPoly seg = ConvexPoly::hull(1, {{Rat(3)}, {Rat(1)}, {Rat(2)}});
  CHECK(seg.volume() == Rat(2));
  CHECK(seg.dim() == 1);

  ConvexPoly sq = ConvexPoly::hull(
      2, {{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(1), Rat(1)}, {Rat(0), Rat(1)},
          {rat_frac(1, 2), rat_frac(1, 2)}});
  CHECK(sq.vertices().size() == 4);  // interior point dropped
  CHECK(sq.volume() == Rat(1));
  CHECK(sq.contains({rat_frac(1, 2), rat_frac(1, 3)}, true));
  CHECK_FALSE(sq.contains({Rat(0), rat_frac(1, 2)}, true));
  CHECK(sq.contains({Rat(0), rat_frac(1, 2)}, false));

  // Collinear input collapses to a segment with zero area.
  ConvexPoly line = ConvexPoly::hull(2, {{Rat(0), Rat(0)}, {Rat(1), Rat(1)}, {Rat(2), Rat(2)}});
  CHECK(line.dim() == 1);
  CHECK(line.volume() == 0);
}

TEST_CASE("clip partitions volume exactly") {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<RatVec> pts;
    for (int i = 0; i < 6; ++i)
      pts.push_back({rng.rational(-4, 4, 3), rng.rational(-4, 4, 3)});
    ConvexPoly p = ConvexPoly::hull(2, pts);
    if (p.dim() < 2) continue;
    RatVec a = {rng.rational(-3, 3, 2), rng.rational(-3, 3, 2)};
    if (a[0] == 0 && a[1] == 0) a[0] = 1;
    Rat b = rng.rational(-2, 2, 3);
    ConvexPoly below = p.clip(a, b);
    ConvexPoly above = p.clip({-a[0], -a[1]}, -b);
    CHECK(below.volume() + above.volume() == p.volume());
  }
}

TEST_CASE("halfspaces agree with the vertex description") {
  ConvexPoly tri = ConvexPoly::hull(2, {{Rat(0), Rat(0)}, {Rat(2), Rat(0)}, {Rat(0), Rat(3)}});
  auto hs = tri.halfspaces();
  CHECK(hs.size() == 3);
  for (const auto& v : tri.vertices()) {
    int tight = 0;
    for (const auto& h : hs) {
      CHECK(dot(h.a, v) <= h.b);
      if (dot(h.a, v) == h.b) ++tight;
    }
    CHECK(tight >= 2);
  }
  CHECK(tri.centroid() == RatVec{rat_frac(2, 3), Rat(1)});
}

TEST_CASE("PolyD clip and area") {
  PolyD sq = PolyD::from_ccw({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CHECK(sq.area() == doctest::Approx(1.0));
  PolyD half = sq.clip({1, 0}, 0.5);
  CHECK(half.area() == doctest::Approx(0.5));
  PolyD corner = half.clip({0, 1}, 0.25);
  CHECK(corner.area() == doctest::Approx(0.125));
}

TEST_CASE("skeleton construction: segment, circle, squares") {
  Skeleton seg = Skeleton::build(segment_doc());
  CHECK(seg.n() == 1);
  CHECK(seg.top_faces().size() == 1);
  CHECK(seg.faces().size() == 3);

  Skeleton circle = Skeleton::build(circle_doc());
  CHECK(circle.gluings().size() == 1);
  auto samples = circle.gluing_samples(0);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].first.coords[0] == Rat(1));
  CHECK(samples[0].second.coords[0] == Rat(0));

  Skeleton squares = Skeleton::build(two_squares_doc());
  CHECK(squares.top_faces().size() == 2);
  CHECK(squares.face(squares.face_index("edge")).dim == 1);
}

TEST_CASE("gluing round-trip is the exact identity") {
  nlohmann::json doc;
  doc["n"] = 2;
  doc["faces"] = nlohmann::json::array();
  doc["faces"].push_back(
      {{"id", "sq"}, {"vertices", verts2({{"0", "0"}, {"1", "0"}, {"1", "1"}, {"0", "1"}})}});
  nlohmann::json g;
  g["from"] = "sq";
  g["to"] = "sq";
  g["linear"] = {{0, 1}, {-1, 0}};
  g["translate"] = {"1", "0"};
  doc["gluings"] = nlohmann::json::array();
  doc["gluings"].push_back(g);
  Skeleton sk = Skeleton::build(doc);
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    RatVec x = {rng.rational(-8, 8, 9), rng.rational(-8, 8, 9)};
    const Gluing& g = sk.gluings()[0];
    CHECK(g.apply_inverse(g.apply(x)) == x);
    CHECK(g.apply(g.apply_inverse(x)) == x);
  }
}

TEST_CASE("invalid complexes are rejected") {
  nlohmann::json bad = segment_doc();
  bad["gluings"] = {{{"from", "seg"}, {"to", "seg"}, {"linear", {{2}}}, {"translate", {"-1"}}}};
  CHECK_THROWS_AS(Skeleton::build(bad), Error);

  nlohmann::json dup = segment_doc();
  dup["faces"][0]["vertices"] = {{"0"}, {"0"}};
  CHECK_THROWS_AS(Skeleton::build(dup), Error);
}

TEST_CASE("lebesgue measure normalises") {
  Skeleton circle = Skeleton::build(circle_doc());
  SkeletonMeasure mu = lebesgue_measure(circle);
  CHECK(mu.pieces()[0].size() == 1);
  CHECK(mu.pieces()[0][0].value == Rat(1));  // unit face, density one

  Skeleton squares = Skeleton::build(two_squares_doc());
  SkeletonMeasure mu2 = lebesgue_measure(squares);
  for (int f : squares.top_faces()) CHECK(mu2.pieces()[f][0].value == rat_frac(1, 2));

  // Two-piece staircase density on [0,1], masses renormalised to one.
  Skeleton seg = Skeleton::build(segment_doc());
  DensitySpec ds;
  ds.pieces["seg"] = {{Box{{Rat(0)}, {rat_frac(1, 2)}}, rat_frac(1, 2)},
                      {Box{{rat_frac(1, 2)}, {Rat(1)}}, rat_frac(3, 2)}};
  SkeletonMeasure mu3 = lebesgue_measure(seg, ds);
  Rat total = mu3.mass_of_box(seg.face_index("seg"), Box{{Rat(0)}, {Rat(1)}});
  CHECK(total == Rat(1));

  DensitySpec zero;
  zero.pieces["seg"] = {{Box{{Rat(0)}, {Rat(1)}}, Rat(0)}};
  CHECK_THROWS_AS(lebesgue_measure(seg, zero), Error);
}

TEST_CASE("integrate: normalisation, symmetry, hand-checked kink") {
  Skeleton seg = Skeleton::build(segment_doc());
  SkeletonMeasure mu = lebesgue_measure(seg);
  const double h = 1.0 / 512;

  double one = integrate(mu, [](int, const std::vector<double>&) { return 1.0; }, h);
  CHECK(std::fabs(one - 1.0) < 1e-12);

  double mean = integrate(mu, [](int, const std::vector<double>& x) { return x[0]; }, h);
  CHECK(std::fabs(mean - 0.5) < h * h + 1e-12);

  // ∫ max(x, 1-x) dx = 3/4 by splitting at 1/2.
  double kink = integrate(
      mu, [](int, const std::vector<double>& x) { return std::max(x[0], 1.0 - x[0]); }, h);
  CHECK(std::fabs(kink - 0.75) < h * h + 1e-12);

  Skeleton squares = Skeleton::build(two_squares_doc());
  SkeletonMeasure mu2 = lebesgue_measure(squares);
  double one2 = integrate(mu2, [](int, const std::vector<double>&) { return 1.0; }, 1.0 / 32);
  CHECK(std::fabs(one2 - 1.0) < 1e-12);
}

TEST_CASE("integrate is linear and monotone up to quadrature tolerance") {
  Skeleton seg = Skeleton::build(segment_doc());
  SkeletonMeasure mu = lebesgue_measure(seg);
  const double h = 1.0 / 128;
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    auto f = [&](int, const std::vector<double>& x) { return std::sin(3 * x[0]); };
    auto g = [&](int, const std::vector<double>& x) { return x[0] * x[0]; };
    double lin = integrate(
        mu, [&](int fc, const std::vector<double>& x) { return a * f(fc, x) + b * g(fc, x); }, h);
    CHECK(lin == doctest::Approx(a * integrate(mu, f, h) + b * integrate(mu, g, h)).epsilon(1e-12));
    double above = integrate(
        mu, [&](int fc, const std::vector<double>& x) { return f(fc, x) + 0.25; }, h);
    CHECK(above >= integrate(mu, f, h) + 0.25 - 1e-12);
  }
}

TEST_CASE("grid weights are exact clipped cell masses") {
  // Triangle chart: boundary cells are clipped, total mass still one.
  nlohmann::json doc;
  doc["n"] = 2;
  doc["faces"] = nlohmann::json::array();
  doc["faces"].push_back(
      {{"id", "tri"}, {"vertices", verts2({{"0", "0"}, {"1", "0"}, {"0", "1"}})}});
  doc["gluings"] = nlohmann::json::array();
  Skeleton sk = Skeleton::build(doc);
  SkeletonMeasure mu = lebesgue_measure(sk);
  SkeletonGrid grid(sk, mu, 1.0 / 16);
  double total = 0;
  for (const auto& nd : grid.nodes()) {
    total += nd.w;
    CHECK(sk.face(nd.face).chart.contains({Rat(nd.x[0]), Rat(nd.x[1])}));
  }
  CHECK(std::fabs(total - 1.0) < 1e-12);
}
