#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ulab/constants.hpp"
#include "ulab/fixtures.hpp"
#include "ulab/flows.hpp"
#include "ulab/matching.hpp"
#include "ulab/rng.hpp"
#include "test_util.hpp"

using namespace ulab;

namespace {

Mat u2(double t) {
  Mat m = Mat::Identity(2, 2);
  m(0, 1) = t;
  return m;
}

Mat ubar2(double s) {
  Mat m = Mat::Identity(2, 2);
  m(1, 0) = s;
  return m;
}

Mat a2(double p) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = std::exp(p);
  m(1, 1) = std::exp(-p);
  return m;
}

// Independent check of u_{phi} ubar_s a_p u_{-t} = ubar_{s_t} a_{p_t} by plain products.
double identity_residual(const BestMatchParams& w, double t) {
  const BestMatchValue v = best_match_eval(w, t);
  Mat lhs = u2(v.phi) * ubar2(w.s) * a2(w.p) * u2(-t);
  Mat rhs = ubar2(v.s_t) * a2(v.p_t);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("matched-time closed forms reproduce the matrix identity") {
  CHECK(identity_residual({0.01, 0.1}, 3.0) <= 1e-12);

  BestMatchValue v = best_match_eval({0.0, 0.0}, 5.0);
  CHECK(v.phi == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(v.s_t == 0.0);
  CHECK(v.p_t == doctest::Approx(0.0).epsilon(1e-14));

  v = best_match_eval({0.3, -0.2}, 0.0);
  CHECK(v.phi == 0.0);
  CHECK(v.s_t == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(v.p_t == doctest::Approx(-0.2).epsilon(1e-14));

  CounterRng rng(20260815, "match-identity");
  for (int k = 0; k < 10000; ++k) {
    BestMatchParams w{rng.uniform(-0.5, 0.5), rng.uniform(-0.4, 0.4)};
    const double t = rng.uniform(-2.0, 2.0);
    if (std::exp(-w.p) - t * w.s * std::exp(w.p) < 0.05) continue;
    CHECK(identity_residual(w, t) <= 1e-12);
  }

  CHECK_THROWS_AS(best_match_eval({1.0, 0.0}, 1.0), std::domain_error);
}

TEST_CASE("matched-time coordinates obey the drift bounds on the chart domain") {
  CounterRng rng(20260815, "match-bounds");
  const double eps = calib().eps14;
  for (int k = 0; k < 1000; ++k) {
    double s = rng.uniform(1e-4, 0.5) * (rng.u64() % 2 ? 1.0 : -1.0);
    BestMatchParams w{s, rng.uniform(-eps, eps) * 0.999};
    const double t = rng.uniform(-1.0, 1.0) * eps / std::abs(s);
    const BestMatchValue v = best_match_eval(w, t);
    CHECK(std::abs(v.s_t) < 2.0 * std::abs(s));
    CHECK(std::abs(v.p_t) < 2.0 * (std::abs(w.p) + std::abs(t) * std::abs(s)));
    CHECK(std::abs(v.dphi - 1.0) < std::sqrt(eps));
  }
}

TEST_CASE("slope-deviation scan certifies the derivative bound") {
  CHECK(best_match_derivative_bound({0.0, 0.01}, calib().eps14));
  CHECK(best_match_derivative_bound({1e-3, 1e-3}, 1e-2));
  CHECK_THROWS_AS(best_match_derivative_bound({0.5, 0.4}, 0.5), std::domain_error);
  CHECK_THROWS_AS(best_match_derivative_bound({0.1, 0.03}, 0.02), std::domain_error);

  CounterRng rng(20260815, "match-slope");
  for (int k = 0; k < 200; ++k) {
    double s = rng.uniform(1e-4, 0.5) * (rng.u64() % 2 ? 1.0 : -1.0);
    double eps = rng.uniform(1e-3, calib().eps14);
    BestMatchParams w{s, rng.uniform(-eps, eps) * 0.999};
    CHECK(best_match_derivative_bound(w, eps, 256));
  }
}

// ---------------------------------------------------------------------------
// Good covers
// ---------------------------------------------------------------------------

namespace {

double cover_total(const GoodCover& gc) {
  double s = 0;
  for (auto& q : gc.covers) s += q.second - q.first;
  return s;
}

}  // namespace

TEST_CASE("good_cover inflates a single open to weight/sqrt(eps) around it") {
  const double eps = 1.0 / 400.0;
  GoodCover gc = good_cover({{40.0, 40.5, 0.5}}, eps, 100.0);
  REQUIRE(gc.covers.size() == 1);
  CHECK(gc.assignment == std::vector<int>{0});
  const double len = gc.covers[0].second - gc.covers[0].first;
  CHECK(len == doctest::Approx(0.5 / std::sqrt(eps)).epsilon(1e-12));
  CHECK(gc.covers[0].first <= 40.0);
  CHECK(gc.covers[0].second >= 40.5);
}

TEST_CASE("good_cover keeps far-apart opens in separate covers with exact lengths") {
  const double eps = 1.0 / 400.0;  // sqrt(eps) = 1/20: weight 0.1 -> length 2
  GoodCover gc = good_cover({{10.0, 10.1, 0.1}, {50.0, 50.1, 0.1}}, eps, 100.0);
  REQUIRE(gc.covers.size() == 2);
  CHECK(gc.assignment == std::vector<int>{0, 1});
  CHECK(gc.covers[0].first == doctest::Approx(9.05).epsilon(1e-12));
  CHECK(gc.covers[0].second == doctest::Approx(11.05).epsilon(1e-12));
  CHECK(gc.covers[1].first == doctest::Approx(49.05).epsilon(1e-12));
  CHECK(gc.covers[1].second == doctest::Approx(51.05).epsilon(1e-12));
}

TEST_CASE("good_cover merges overlapping inflated intervals and sums their weights") {
  const double eps = 1.0 / 400.0;
  // Separate inflations would be [9.05,11.05] and [11.05,13.05]: they touch,
  // so the covers merge into one of length (0.1+0.1)/sqrt(eps) = 4.
  GoodCover gc = good_cover({{10.0, 10.1, 0.1}, {12.0, 12.1, 0.1}}, eps, 100.0);
  REQUIRE(gc.covers.size() == 1);
  CHECK(gc.assignment == std::vector<int>{0, 0});
  const double len = gc.covers[0].second - gc.covers[0].first;
  CHECK(len == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(gc.covers[0].first <= 10.0);
  CHECK(gc.covers[0].second >= 12.1);
}

TEST_CASE("good_cover rejects malformed input") {
  CHECK_THROWS_AS(good_cover({{1.0, 2.0, 1.0}}, 0.004, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(good_cover({{1.0, 2.0, 1.0}}, 0.01, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(good_cover({{1.0, 2.0, 0.5}}, 0.002, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(good_cover({{1.0, 3.0, 2.0}, {2.5, 4.0, 1.5}}, 0.002, 100.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(good_cover({{0.0, 30.0, 30.0}}, 1.0 / 400.0, 100.0),
                  std::invalid_argument);  // total weight >= 20*eps*R
}

TEST_CASE("good_cover properties hold on random disjoint families") {
  CounterRng rng(20260815, "good-cover");
  for (int trial = 0; trial < 300; ++trial) {
    const double R = rng.uniform(20.0, 200.0);
    const double eps = rng.uniform(1e-5, 1.0 / 400.0);
    const int n = rng.uniform_int(1, 12);
    const double budget = 20.0 * eps * R * 0.9;
    std::vector<WeightedOpen> opens;
    double cursor = 0.0, used = 0.0;
    for (int i = 0; i < n && used < budget; ++i) {
      const double len = std::min(rng.uniform(1e-4, budget / n), budget - used);
      const double lo = cursor + rng.uniform(0.0, (R - cursor) * 0.2);
      if (lo + len >= R) break;
      const double w = len * rng.uniform(1.0, 1.3);
      if (used + w >= budget) break;
      opens.push_back({lo, lo + len, w});
      used += w;
      cursor = lo + len + 1e-6;
    }
    if (opens.empty()) continue;
    GoodCover gc = good_cover(opens, eps, R);
    REQUIRE(gc.assignment.size() == opens.size());

    // Covers lie in [0,R], are disjoint, and contain their assigned opens.
    std::vector<double> wsum(gc.covers.size(), 0.0);
    for (size_t i = 0; i < opens.size(); ++i) {
      const int j = gc.assignment[i];
      REQUIRE(j >= 0);
      REQUIRE(static_cast<size_t>(j) < gc.covers.size());
      CHECK(gc.covers[j].first <= opens[i].lo + 1e-12);
      CHECK(gc.covers[j].second >= opens[i].hi - 1e-12);
      wsum[j] += opens[i].weight;
    }
    for (size_t j = 0; j < gc.covers.size(); ++j) {
      CHECK(gc.covers[j].first >= -1e-12);
      CHECK(gc.covers[j].second <= R + 1e-12);
      if (j + 1 < gc.covers.size())
        CHECK(gc.covers[j].second <= gc.covers[j + 1].first + 1e-12);
      // Exact length law: l(Q_j) = (sum of assigned weights)/sqrt(eps).
      const double len = gc.covers[j].second - gc.covers[j].first;
      CHECK(std::abs(len - wsum[j] / std::sqrt(eps)) < 1e-9 * (1.0 + len));
      CHECK(wsum[j] > 0.0);
    }
    CHECK(cover_total(gc) < R + 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Piecewise-linear evaluation and mollified slopes
// ---------------------------------------------------------------------------

namespace {

MatchingResult pwl_result(std::vector<double> t, std::vector<double> h) {
  MatchingResult m;
  m.knots_t = std::move(t);
  m.knots_h = std::move(h);
  m.A = {{m.knots_t.front(), m.knots_t.back()}};
  m.R = std::max(std::abs(m.knots_t.front()), std::abs(m.knots_t.back()));
  m.delta = 0.1;
  m.eps = 0.05;
  return m;
}

double fd_slope(const MatchingResult& m, double t, double eta) {
  // Five-point central difference on g(t) = h(t) - t, then add 1 back.
  const auto g = [&](double s) { return matching_eval(m, s) - s; };
  return 1.0 + (g(t - 2 * eta) - 8 * g(t - eta) + 8 * g(t + eta) - g(t + 2 * eta)) /
                   (12.0 * eta);
}

}  // namespace

TEST_CASE("matching_eval interpolates knots and extends with constant deviation") {
  MatchingResult m = pwl_result({-2.0, 0.0, 1.0, 3.0}, {-2.1, 0.0, 1.05, 3.05});
  CHECK(matching_eval(m, -2.0) == doctest::Approx(-2.1).epsilon(1e-15));
  CHECK(matching_eval(m, 0.0) == 0.0);
  CHECK(matching_eval(m, 0.5) == doctest::Approx(0.525).epsilon(1e-14));
  CHECK(matching_eval(m, 2.0) == doctest::Approx(2.05).epsilon(1e-14));
  CHECK(matching_slope(m, 0.5) == doctest::Approx(1.05).epsilon(1e-13));
  CHECK(matching_slope(m, 2.0) == doctest::Approx(1.0).epsilon(1e-13));
  // Beyond the last knot h - t stays frozen at its boundary value.
  CHECK(matching_eval(m, 5.0) == doctest::Approx(5.05).epsilon(1e-14));
  CHECK(matching_slope(m, 5.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(matched_length(m) == doctest::Approx(5.0));
}

TEST_CASE("smoothed evaluation equals the chord away from knots and blends at bends") {
  // Hand-built smoothed container: one slope change per half.
  MatchingResult m;
  m.smoothed = true;
  m.delta = 0.02;
  m.eps = 0.05;
  m.R = 100.0;
  m.zero_anchored = true;
  m.mollify_width = 3e-4;
  m.glue_scale = 0.01;
  m.pos_knots_t = {0.0, 40.0, 41.0, 100.0};
  m.pos_knots_h = {0.0, 40.0, 41.02, 100.02};
  // Negative half carries deviation right up to the origin so the glue window
  // sees a nonzero blended term.
  m.neg_knots_t = {-100.0, -0.5, 0.0};
  m.neg_knots_h = {-100.02, -0.52, 0.0};
  m.A = {{-100.0, 100.0}};

  // Far from every bend and from the glue window the value is the plain chord.
  CHECK(matching_eval(m, 20.0) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(matching_eval(m, 70.0) == doctest::Approx(70.02).epsilon(1e-14));
  CHECK(matching_eval(m, -80.0) == doctest::Approx(-80.02).epsilon(1e-14));
  CHECK(matching_slope(m, 70.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(matching_slope(m, 40.5) == doctest::Approx(1.02).epsilon(1e-13));
  // Value pinned at the origin by construction.
  CHECK(matching_eval(m, 0.0) == 0.0);

  // At a bend the mollified slope is the average of the adjacent chords.
  CHECK(matching_slope(m, 40.0) == doctest::Approx(1.01).epsilon(1e-12));
  CHECK(matching_slope(m, 41.0) == doctest::Approx(1.01).epsilon(1e-12));
  CHECK(matching_slope(m, -0.5) == doctest::Approx(1.02).epsilon(1e-12));

  // Five-point finite differences on h - id reproduce the stored derivative.
  const double eta = m.mollify_width / 128.0;
  CounterRng rng(20260815, "fd-consistency");
  for (int k = 0; k < 200; ++k) {
    double t = rng.uniform(-99.0, 99.0);
    if (k % 4 == 0) t = 40.0 + rng.uniform(-2.0, 2.0) * m.mollify_width;
    if (k % 4 == 1) t = -0.5 + rng.uniform(-2.0, 2.0) * m.mollify_width;
    if (k % 4 == 2) t = rng.uniform(-4.0, 4.0) * m.glue_scale;
    CHECK(std::abs(fd_slope(m, t, eta) - matching_slope(m, t)) < 1e-8);
  }

  // Monotone increasing on a coarse sweep (slopes stay near one).
  double prev = matching_eval(m, -100.0);
  for (int i = 1; i <= 400; ++i) {
    const double t = -100.0 + 0.5 * i;
    const double v = matching_eval(m, t);
    CHECK(v > prev);
    prev = v;
  }
}

// ---------------------------------------------------------------------------
// Matching finder
// ---------------------------------------------------------------------------

namespace {

QuotientPoint generic_point() {
  const Fixture& f = fixture(GroupTag::SL2);
  CounterRng rng(20260815, "matching-base-point");
  GroupElement g = testutil::random_near_id(f, rng, 0.4);
  GroupElement h = testutil::random_near_id(f, rng, 0.3);
  return reduce(GroupElement{g.m * h.m, f.tag});
}

double intervals_length(const std::vector<std::pair<double, double>>& iv) {
  double s = 0;
  for (auto& p : iv) s += p.second - p.first;
  return s;
}

bool in_intervals(const std::vector<std::pair<double, double>>& iv, double t) {
  for (auto& p : iv)
    if (t >= p.first - 1e-12 && t <= p.second + 1e-12) return true;
  return false;
}

}  // namespace

TEST_CASE("find_matching on identical points returns the identity matching") {
  QuotientPoint x = generic_point();
  auto m = find_matching(x, x, 0.4, 0.05, 2.0, 0.04);
  REQUIRE(m.has_value());
  CHECK(m->zero_anchored);
  CHECK(!m->smoothed);
  REQUIRE(m->A.size() == 1);
  CHECK(m->A[0].first == doctest::Approx(-2.0));
  CHECK(m->A[0].second == doctest::Approx(2.0));
  CHECK(matching_eval(*m, 0.0) == 0.0);
  for (double t : {-2.0, -1.3, -0.2, 0.7, 2.0})
    CHECK(matching_eval(*m, t) == doctest::Approx(t).epsilon(1e-12));
  CHECK(matched_length(*m) == doctest::Approx(4.0));
}

TEST_CASE("find_matching absorbs a small u-shift into the identity matching") {
  QuotientPoint x = generic_point();
  QuotientPoint y = flow_u(x, 0.3);
  auto m = find_matching(x, y, 0.4, 0.05, 2.0, 0.04);
  REQUIRE(m.has_value());
  // u_t y = u_{t+0.3} x stays within delta of u_t x for all t, so nothing is
  // dropped from A and the matching is the identity.
  CHECK(matched_length(*m) == doctest::Approx(4.0));
  for (double t : {-1.7, 0.0, 1.1})
    CHECK(matching_eval(*m, t) == doctest::Approx(t).epsilon(1e-12));
}

TEST_CASE("find_matching tracks the matched-time flow of a small opposite shear") {
  // y = ubar_eta x: the true matching is phi(t) = t/(1 + t*eta) with residual
  // staying below delta across [-R, R] = [-0.5*0.08/eta, ...] for these
  // parameters.  The slope budget eps must exceed sqrt(chart eps): the true
  // matched-time curve has |phi' - 1| up to ~0.085 here, and following it
  // excises ~2*R*0.08 of ramp cells from A.
  const double eta = 0.005, delta = 0.08, eps = 0.3, R = 8.0, gs = 0.008;
  QuotientPoint x = generic_point();
  QuotientPoint y = flow_ubar(x, eta);
  auto m = find_matching(x, y, delta, eps, R, gs);
  REQUIRE(m.has_value());
  CHECK(matching_eval(*m, 0.0) == 0.0);

  // h must agree with the closed-form matched time to within two grid steps.
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double t = -R + 2.0 * R * i / 400.0;
    if (!in_intervals(m->A, t)) continue;
    const double phi = best_match_eval({-eta, 0.0}, t).phi;
    worst = std::max(worst, std::abs(matching_eval(*m, t) - phi));
  }
  MESSAGE("sup |h - phi| on A = ", worst, " vs bound ", 2.0 * gs);
  CHECK(worst <= 2.0 * gs);

  // Matched times really are delta-close in the quotient.
  for (int i = 0; i <= 40; ++i) {
    const double t = -R + 2.0 * R * i / 40.0;
    if (!in_intervals(m->A, t)) continue;
    CHECK(quotient_dist(flow_u(x, matching_eval(*m, t)), flow_u(y, t)) < delta);
  }

  // Monotonicity of the matching and coverage of most of [-R, R].
  for (size_t i = 1; i < m->knots_h.size(); ++i) {
    CHECK(m->knots_h[i] > m->knots_h[i - 1]);
    CHECK(m->knots_t[i] > m->knots_t[i - 1]);
  }
  CHECK(intervals_length(m->A) > (1.0 - eps) * 2.0 * R);

  // Determinism: a second run yields the identical result.
  auto m2 = find_matching(x, y, delta, eps, R, gs);
  REQUIRE(m2.has_value());
  CHECK(m2->knots_t == m->knots_t);
  CHECK(m2->knots_h == m->knots_h);
  CHECK(m2->A == m->A);
}

TEST_CASE("find_matching refuses drifting pairs and bad arguments") {
  QuotientPoint x = generic_point();
  // A large opposite shear kicks u_t y away from the u-orbit of x quickly:
  // the matched set is too short and no matching exists.
  QuotientPoint y = flow_ubar(x, 0.2);
  CHECK(!find_matching(x, y, 0.2, 0.05, 2.0, 0.02).has_value());

  CHECK_THROWS_AS(find_matching(x, y, 0.1, 0.05, 4.0, 0.02), std::invalid_argument);
  CHECK_THROWS_AS(find_matching(x, y, 0.1, 0.05, 0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(find_matching(x, y, 0.0, 0.05, 4.0, 0.01), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Smoothing
// ---------------------------------------------------------------------------

namespace {

MatchingResult finder_style(std::vector<double> kt, std::vector<double> kh,
                            std::vector<std::pair<double, double>> A, double delta,
                            double eps, double R) {
  MatchingResult m;
  m.knots_t = std::move(kt);
  m.knots_h = std::move(kh);
  m.A = std::move(A);
  m.delta = delta;
  m.eps = eps;
  m.R = R;
  m.zero_anchored = true;
  return m;
}

double fd_slope_smoothed(const MatchingResult& m, double t, double eta) {
  const auto g = [&](double s) { return matching_eval(m, s) - s; };
  return 1.0 + (g(t - 2 * eta) - 8 * g(t - eta) + 8 * g(t + eta) - g(t + 2 * eta)) /
                   (12.0 * eta);
}

}  // namespace

TEST_CASE("smooth_matching keeps an identity matching flat") {
  const double eps = 1e-3, R = 100.0;
  MatchingResult m =
      finder_style({-R, 0.0, R}, {-R, 0.0, R}, {{-R, R}}, 0.01, eps, R);
  MatchingResult sm = smooth_matching(m);
  CHECK(sm.smoothed);
  CHECK(sm.delta == doctest::Approx(0.02));
  CHECK(sm.eps == doctest::Approx(calib().C_smooth * std::sqrt(eps)));
  CHECK(matching_eval(sm, 0.0) == 0.0);
  for (int i = 0; i <= 200; ++i) {
    const double t = -R + 2.0 * R * i / 200.0;
    CHECK(std::abs(matching_eval(sm, t) - t) < 1e-6);
    CHECK(std::abs(matching_slope(sm, t) - 1.0) < 1e-6);
  }
  CHECK(matched_length(sm) > (1.0 - sm.eps) * 2.0 * R);
}

TEST_CASE("smooth_matching straightens a single unmatched gap") {
  const double eps = 1e-3, delta = 0.2, R = 100.0;
  // One gap (5, 5.15) on the positive side where h jumps by 0.02 extra.
  MatchingResult m = finder_style(
      {-R, 5.0, 5.15, R}, {-R, 5.0, 5.17, R + 0.02},
      {{-R, 5.0}, {5.15, R}}, delta, eps, R);
  MatchingResult sm = smooth_matching(m);

  const double bound = calib().C_smooth * std::sqrt(eps);
  CHECK(sm.eps == doctest::Approx(bound));

  // Slope obeys the smoothed-regularity bound everywhere on a dense sweep.
  for (int i = 0; i <= 4000; ++i) {
    const double t = -R + 2.0 * R * i / 4000.0;
    CHECK(std::abs(matching_slope(sm, t) - 1.0) < bound);
  }
  CHECK(matching_eval(sm, 0.0) == 0.0);

  // Finite differences on the stored sample grid agree with stored slopes.
  REQUIRE(sm.sample_t.size() == sm.sample_h.size());
  REQUIRE(sm.sample_t.size() == sm.sample_dh.size());
  const double eta = sm.mollify_width / 128.0;
  for (size_t i = 0; i < sm.sample_t.size(); ++i) {
    const double t = sm.sample_t[i];
    CHECK(matching_eval(sm, t) == sm.sample_h[i]);
    CHECK(matching_slope(sm, t) == sm.sample_dh[i]);
    if (i % 4 == 0)
      CHECK(std::abs(fd_slope_smoothed(sm, t, eta) - sm.sample_dh[i]) < 1e-8);
  }

  // The straightened cover around the gap is excised from the matched set,
  // with a mollifier-width fringe.
  const double sq = std::sqrt(eps);
  bool found_gap_cover = false;
  for (auto& a : sm.A) {
    CHECK(!(a.first < 5.075 && a.second > 5.075));  // gap midpoint gone
  }
  for (size_t i = 1; i + 1 < sm.pos_knots_t.size(); ++i) {
    const double span = sm.pos_knots_t[i + 1] - sm.pos_knots_t[i];
    if (span > 0.15 / sq * 0.99 && sm.pos_knots_t[i] < 5.075 &&
        sm.pos_knots_t[i + 1] > 5.075)
      found_gap_cover = true;
  }
  CHECK(found_gap_cover);

  // On the refined matched set the smoothed matching stays delta-close to the
  // original one, so quotient distances grow by at most one extra delta.
  for (auto& a : sm.A) {
    for (int i = 0; i <= 20; ++i) {
      const double t = a.first + (a.second - a.first) * i / 20.0;
      CHECK(std::abs(matching_eval(sm, t) - matching_eval(m, t)) < delta);
    }
  }

  // Matched-length guarantee survives the excision.
  CHECK(matched_length(sm) > (1.0 - sm.eps) * 2.0 * R);
  CHECK(sm.zero_anchored);
}

TEST_CASE("smooth_matching survives a budget-edge family of unmatched gaps") {
  const double eps = 1e-3, delta = 0.3, R = 100.0;
  // Nineteen 0.01-wide gaps at +-10, +-20, ..., with h jumping an extra 0.004
  // across each: total weight 19 * 0.014 = 0.266 out of the 20*eps*R = 2 cap
  // per side used by the straightening stage.
  std::vector<double> kt{-R}, kh{-R - 9 * 0.004};
  std::vector<std::pair<double, double>> A;
  double lo = -R;
  for (int g = -9; g <= 9; ++g) {
    if (g == 0) continue;
    const double t0 = 10.0 * g, t1 = 10.0 * g + 0.01;
    A.push_back({lo, t0});
    const double h0 = kh.back() + (t0 - kt.back());  // matched pieces have slope 1
    kt.push_back(t0);
    kh.push_back(h0);
    kt.push_back(t1);
    kh.push_back(h0 + 0.01 + 0.004);
    lo = t1;
  }
  A.push_back({lo, R});
  kt.push_back(R);
  kh.push_back(kh.back() + (R - kt[kt.size() - 2]));
  MatchingResult m = finder_style(kt, kh, A, delta, eps, R);
  REQUIRE(std::abs(matching_eval(m, 0.0)) < 1e-9);

  MatchingResult sm = smooth_matching(m);
  const double bound = calib().C_smooth * std::sqrt(eps);
  double worst = 0.0;
  for (int i = 0; i <= 8000; ++i) {
    const double t = -R + 2.0 * R * i / 8000.0;
    worst = std::max(worst, std::abs(matching_slope(sm, t) - 1.0));
  }
  MESSAGE("max |slope-1| = ", worst, " vs bound ", bound);
  CHECK(worst < bound);
  CHECK(matching_eval(sm, 0.0) == 0.0);
  CHECK(matched_length(sm) > (1.0 - bound) * 2.0 * R);

  const double eta = sm.mollify_width / 128.0;
  for (size_t i = 0; i < sm.sample_t.size(); i += 8) {
    CHECK(std::abs(fd_slope_smoothed(sm, sm.sample_t[i], eta) - sm.sample_dh[i]) <
          1e-8);
  }
  for (auto& a : sm.A) {
    for (int i = 0; i <= 8; ++i) {
      const double t = a.first + (a.second - a.first) * i / 8.0;
      CHECK(std::abs(matching_eval(sm, t) - matching_eval(m, t)) < delta);
    }
  }
}

TEST_CASE("smooth_matching validates its input contract") {
  const double R = 100.0;
  auto ok = finder_style({-R, 0.0, R}, {-R, 0.0, R}, {{-R, R}}, 0.01, 1e-3, R);
  CHECK_NOTHROW(smooth_matching(ok));

  auto bad = ok;
  bad.eps = 0.01;  // above the smoothing gate
  CHECK_THROWS_AS(smooth_matching(bad), std::domain_error);

  bad = ok;
  bad.R = 50.0;
  bad.knots_t = {-50.0, 0.0, 50.0};
  bad.knots_h = bad.knots_t;
  bad.A = {{-50.0, 50.0}};
  CHECK_THROWS_AS(smooth_matching(bad), std::domain_error);

  bad = ok;
  bad.delta = 1e-6;  // too small for the blend window
  CHECK_THROWS_AS(smooth_matching(bad), std::domain_error);

  bad = ok;
  bad.smoothed = true;  // already smoothed
  CHECK_THROWS_AS(smooth_matching(bad), std::domain_error);

  bad = ok;
  bad.knots_h = {-R, 0.0, R + 1.0};  // slope 1.01 > 1 + eps on matched piece
  CHECK_THROWS_AS(smooth_matching(bad), std::domain_error);

  bad = ok;
  bad.A = {{-R, -1.0}, {1.0, R}};  // 0 not matched
  CHECK_THROWS_AS(smooth_matching(bad), std::domain_error);
}

TEST_CASE("finder output feeds the smoother and stays 2*delta-close in the quotient") {
  const double eta = 2e-6, delta = 0.4, eps = 1e-3, R = 100.0, gs = 0.04;
  QuotientPoint x = generic_point();
  QuotientPoint y = flow_ubar(x, eta);
  auto m = find_matching(x, y, delta, eps, R, gs);
  REQUIRE(m.has_value());
  CHECK(intervals_length(m->A) > (1.0 - eps) * 2.0 * R);

  MatchingResult sm = smooth_matching(*m);
  CHECK(sm.delta == doctest::Approx(2.0 * delta));
  CHECK(matching_eval(sm, 0.0) == 0.0);

  const double bound = calib().C_smooth * std::sqrt(eps);
  for (auto& a : sm.A) {
    for (int i = 0; i <= 10; ++i) {
      const double t = a.first + (a.second - a.first) * i / 10.0;
      CHECK(std::abs(matching_slope(sm, t) - 1.0) < bound);
      CHECK(quotient_dist(flow_u(x, matching_eval(sm, t)), flow_u(y, t)) <
            2.0 * delta);
    }
  }
  CHECK(matched_length(sm) > (1.0 - bound) * 2.0 * R);
}

TEST_CASE("matching serialization round-trips through JSON text") {
  MatchingResult m = finder_style({-100.0, 0.0, 100.0}, {-100.0, 0.0, 100.0},
                                  {{-100.0, 100.0}}, 0.01, 1e-3, 100.0);
  const std::string js = matching_to_json(m);
  CHECK(js.find("\"delta\"") != std::string::npos);
  CHECK(js.find("\"matched_length\"") != std::string::npos);
  CHECK(js.find("\"knots_t\"") != std::string::npos);

  MatchingResult sm = smooth_matching(m);
  const std::string js2 = matching_to_json(sm);
  CHECK(js2.find("\"smoothed\": true") != std::string::npos);
  CHECK(js2.find("\"mollify_width\"") != std::string::npos);
}
