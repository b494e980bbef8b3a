#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "ulab/constants.hpp"
#include "ulab/fixtures.hpp"
#include "ulab/group.hpp"
#include "ulab/rng.hpp"

using namespace ulab;
using testutil::random_alg;
using testutil::random_alg_norm;
using testutil::random_near_id;

namespace {

// Independent exponential oracle: plain truncated Taylor series, valid for
// moderate norms with terms summed until they vanish at double precision.
Mat exp_series_oracle(const Mat& x) {
  Mat term = ident(static_cast<int>(x.rows()));
  Mat acc = term;
  for (int k = 1; k <= 60; ++k) {
    term = term * x / static_cast<double>(k);
    acc += term;
    if (term.norm() < 1e-19 * acc.norm()) break;
  }
  return acc;
}

}  // namespace

TEST_CASE("exponential matches an independent series oracle") {
  CounterRng rng(7, "exp-oracle");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    for (int i = 0; i < 200; ++i) {
      Mat x = random_alg_norm(f, rng, 0.3);
      Mat got = mat_exp(x);
      Mat want = exp_series_oracle(x);
      CHECK((got - want).norm() <= 1e-12 * want.norm());
    }
  }
}

TEST_CASE("log(exp x) round trip inside the chart") {
  CounterRng rng(11, "log-roundtrip");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    for (int i = 0; i < 500; ++i) {
      double n = rng.uniform(0.0, 1.0);
      Mat x = random_alg_norm(f, rng, n);
      AlgebraElement back = log_grp(exp_alg({x, f.tag}));
      CHECK((back.m - x).norm() <= 1e-10 * (1.0 + x.norm()));
    }
  }
}

TEST_CASE("unipotent log is exact and linear in t") {
  const Fixture& f = fixture("sl2");
  GroupElement g = f.u_flow(0.01);
  CHECK(dist_id(g) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(dist(g, gid(f.tag)) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("exp of zero is the identity") {
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    GroupElement g = exp_alg({Mat::Zero(f.dim, f.dim), f.tag});
    CHECK((g.m - ident(f.dim)).norm() == 0.0);
    CHECK(dist_id(g) == 0.0);
  }
}

TEST_CASE("log chart rejects far and branch-ambiguous elements") {
  const Fixture& f = fixture("sl2");
  CHECK_THROWS_AS((void)log_grp(f.a_flow(2.0)), chart_error);
  GroupElement minus_id{-ident(2), GroupTag::SL2};
  CHECK_THROWS_AS((void)log_grp(minus_id), chart_error);
}

TEST_CASE("metric is right invariant") {
  CounterRng rng(13, "right-invariance");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    int trials = 3400;
    for (int i = 0; i < trials; ++i) {
      GroupElement g = random_near_id(f, rng, rng.uniform(0.0, 0.5));
      GroupElement h = random_near_id(f, rng, rng.uniform(0.0, 0.5));
      GroupElement k = random_near_id(f, rng, rng.uniform(0.0, 1.0));
      double d1 = dist(g, h);
      double d2 = dist(gmul(g, k), gmul(h, k));
      CHECK(std::abs(d1 - d2) <= 1e-9 * (1.0 + d1));
    }
  }
}

TEST_CASE("metric symmetry and identity of indiscernibles") {
  CounterRng rng(17, "metric-sym");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    for (int i = 0; i < 200; ++i) {
      GroupElement g = random_near_id(f, rng, rng.uniform(0.0, 2.0));
      GroupElement h = random_near_id(f, rng, rng.uniform(0.0, 2.0));
      CHECK(dist(g, h) == doctest::Approx(dist(h, g)).epsilon(1e-9));
      CHECK(dist(g, g) <= 1e-12);
    }
  }
}

TEST_CASE("triangle inequality holds with the quadratic chart slack") {
  CounterRng rng(19, "triangle");
  const double ctri = calib().C_tri;
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    for (int i = 0; i < 2000; ++i) {
      GroupElement g1 = random_near_id(f, rng, rng.uniform(0.0, 0.4));
      GroupElement g2 = random_near_id(f, rng, rng.uniform(0.0, 0.4));
      GroupElement g3 = random_near_id(f, rng, rng.uniform(0.0, 0.4));
      double d13 = dist(g1, g3);
      double d12 = dist(g1, g2);
      double d23 = dist(g2, g3);
      CHECK(d13 <= d12 + d23 + ctri * d12 * d23 + 1e-12);
    }
  }
}

TEST_CASE("product defect obeys the calibrated quadratic bound") {
  CounterRng rng(23, "bch");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    for (int i = 0; i < 300; ++i) {
      Mat x = random_alg_norm(f, rng, rng.uniform(1e-4, calib().eps_bch));
      Mat y = random_alg_norm(f, rng, rng.uniform(1e-4, calib().eps_bch));
      CHECK(bch_defect(x, y) <= bch_bound(x.norm(), y.norm()) + 1e-14);
    }
  }
}

TEST_CASE("product defect scales quadratically") {
  CounterRng rng(29, "bch-scaling");
  const Fixture& f = fixture("sl3corner");
  Mat x = random_alg_norm(f, rng, 1.0);
  Mat y = random_alg_norm(f, rng, 1.0);
  double d2 = bch_defect(1e-2 * x, 1e-2 * y);
  double d3 = bch_defect(1e-3 * x, 1e-3 * y);
  double ratio = d2 / d3;
  CHECK(ratio >= 50.0);
  CHECK(ratio <= 200.0);
}

TEST_CASE("norm bound dominates every element of a metric ball") {
  CounterRng rng(31, "norm-bound");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    // Diagonal scan: dist(a_p, e) grows linearly in the chart, then coarsely.
    for (double p = 0.0; p <= 3.0; p += 0.05) {
      GroupElement g = f.a_flow(p);
      double r = dist_id(g);
      CHECK(g.m.norm() <= norm_metric_bound(r));
    }
    // Random in-chart and far elements.
    for (int i = 0; i < 500; ++i) {
      GroupElement g = random_near_id(f, rng, rng.uniform(0.0, 3.0));
      double r = dist_id(g);
      CHECK(g.m.norm() <= norm_metric_bound(r));
    }
  }
}

TEST_CASE("far metric is symmetric and bounded below by the chart radius") {
  const Fixture& f = fixture("sl2");
  GroupElement g = f.a_flow(2.0);
  double d = dist_id(g);
  CHECK(d >= calib().chart_radius);
  CHECK(dist(g, gid(f.tag)) == doctest::Approx(dist(gid(f.tag), g)).epsilon(1e-12));
  // Coarse value for diag(e^2, e^-2): ||g - I|| averaged with the inverse side.
  double want = std::sqrt(std::pow(std::exp(2.0) - 1.0, 2) +
                          std::pow(std::exp(-2.0) - 1.0, 2));
  CHECK(d == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ambient-norm metric kind measures matrix difference") {
  const Fixture& f = fixture("sl2");
  Metric hs{Metric::Kind::HilbertSchmidt, 1e-9};
  GroupElement g = f.u_flow(0.3);
  CHECK(dist(g, gid(f.tag), hs) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("calibration table round trips through serialization") {
  const Calibration& c = calib();
  Calibration back = calibration_from_json(calibration_to_json(c));
  CHECK(back.C2 == c.C2);
  CHECK(back.C1[8] == c.C1[8]);
  CHECK(back.chart_radius == c.chart_radius);
  CHECK(back.w14 == c.w14);
}

TEST_CASE("coefficient-bound table matches its defining extremal polynomials") {
  // Degree-d table entry equals the largest coefficient of the degree-d
  // Chebyshev polynomial rescaled to [0,1]; spot check the hand-expanded ones.
  CHECK(c1_constant(0) == 1.0);
  CHECK(c1_constant(1) == 2.0);
  CHECK(c1_constant(2) == 8.0);   // 8s^2 - 8s + 1
  CHECK(c1_constant(3) == 48.0);  // 32s^3 - 48s^2 + 18s - 1
  CHECK(c1_constant(8) == 212992.0);
}
