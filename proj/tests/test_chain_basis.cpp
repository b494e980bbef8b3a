#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "ulab/chain_basis.hpp"
#include "ulab/fixtures.hpp"
#include "ulab/rng.hpp"

using namespace ulab;

TEST_CASE("triple and chain relations hold to machine precision") {
  for (const auto& name : fixture_names()) {
    const ChainBasis& cb = chain_basis(tag_from_name(name));
    CHECK(chain_relation_residual(cb) <= 1e-12);
  }
}

TEST_CASE("adjoint-representation chain oracle") {
  // Acting on its own algebra, the triple generates the length-3 chain
  // {2u, a, -ubar}: frozen from the hand computation
  //   [2u, ubar]/1 = 2a/2 = a,   [a, ubar]/2 = -ubar.
  const Fixture& f = fixture("sl2");
  Chain ch = build_chain_from_top(2.0 * f.triplet.u.m, 2, f.triplet);
  REQUIRE(ch.x.size() == 3);
  CHECK((ch.x[0] - 2.0 * f.triplet.u.m).norm() <= 1e-14);
  CHECK((ch.x[1] - f.triplet.a.m).norm() <= 1e-14);
  CHECK((ch.x[2] + f.triplet.ubar.m).norm() <= 1e-14);
}

TEST_CASE("rank-one setup has no chains and is the degenerate case") {
  const ChainBasis& cb = chain_basis(GroupTag::SL2);
  CHECK(cb.chains.empty());
  CHECK(cb.loosely_kronecker);
  CHECK(cb.n_coords() == 3);
}

TEST_CASE("product setup carries one adjoint chain") {
  const ChainBasis& cb = chain_basis(GroupTag::SL2xSL2);
  REQUIRE(cb.chains.size() == 1);
  CHECK(cb.chains[0].q == 2);
  CHECK_FALSE(cb.chains[0].central);
  CHECK_FALSE(cb.loosely_kronecker);

  // Frozen chain entries: top (u,-u)/sqrt2, then (a,-a)/(2 sqrt2), (-ubar,ubar)/(2 sqrt2).
  const Fixture& f = fixture("sl2xsl2");
  const double s = 1.0 / std::sqrt(2.0);
  Mat top = s * (f.basis[0].m - f.basis[3].m);
  Mat mid = 0.5 * s * (f.basis[1].m - f.basis[4].m);
  Mat bot = 0.5 * s * (f.basis[5].m - f.basis[2].m);
  CHECK((cb.chains[0].x[0] - top).norm() <= 1e-12);
  CHECK((cb.chains[0].x[1] - mid).norm() <= 1e-12);
  CHECK((cb.chains[0].x[2] - bot).norm() <= 1e-12);

  GradedSpaces g = graded_spaces(cb);
  CHECK(g.plus.size() == 2);
  CHECK(g.zero.size() == 2);
  CHECK(g.minus.size() == 2);
  CHECK(g.v_plus.size() == 2);
}

TEST_CASE("rank-two setup carries two weight-1 chains and one central line") {
  const ChainBasis& cb = chain_basis(GroupTag::SL3);
  REQUIRE(cb.chains.size() == 3);
  CHECK(cb.chains[0].q == 1);
  CHECK(cb.chains[1].q == 1);
  CHECK(cb.chains[2].q == 0);
  CHECK(cb.chains[2].central);
  CHECK_FALSE(cb.loosely_kronecker);

  const Fixture& f = fixture("sl3corner");
  // chains frozen: {E13, -E23}, {E32, E31}, {H2/sqrt6}
  CHECK((cb.chains[0].x[0] - f.basis[3].m).norm() <= 1e-12);
  CHECK((cb.chains[0].x[1] + f.basis[4].m).norm() <= 1e-12);
  CHECK((cb.chains[1].x[0] - f.basis[6].m).norm() <= 1e-12);
  CHECK((cb.chains[1].x[1] - f.basis[5].m).norm() <= 1e-12);
  CHECK((cb.chains[2].x[0] - f.basis[7].m / std::sqrt(6.0)).norm() <= 1e-12);

  GradedSpaces g = graded_spaces(cb);
  CHECK(g.plus.size() == 3);
  CHECK(g.zero.size() == 2);
  CHECK(g.minus.size() == 3);
  CHECK(g.v_plus.size() == 3);
}

TEST_CASE("chain coordinates invert the basis expansion") {
  CounterRng rng(41, "chain-coords");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    const ChainBasis& cb = chain_basis(f.tag);
    for (int i = 0; i < 200; ++i) {
      Mat y = testutil::random_alg(f, rng, 1.0);
      Vec c = cb.coords(y);
      CHECK((cb.from_coords(c) - y).norm() <= 1e-10 * (1.0 + y.norm()));
    }
  }
}

TEST_CASE("diagonal conjugation rescales each chain coordinate exponentially") {
  CounterRng rng(43, "conj-weights");
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    const ChainBasis& cb = chain_basis(f.tag);
    Vec wts = coord_conj_weights(cb);
    for (int i = 0; i < 100; ++i) {
      Mat y = testutil::random_alg(f, rng, 1.0);
      double p = rng.uniform(-1.0, 1.0);
      Mat am = f.a_flow(-p).m, ap = f.a_flow(p).m;
      Vec got = cb.coords(am * y * ap);
      Vec want = cb.coords(y);
      for (int k = 0; k < cb.n_coords(); ++k)
        want[k] *= std::exp(wts[k] * p);
      CHECK((got - want).norm() <= 1e-9 * (1.0 + want.norm()));
    }
  }
}

TEST_CASE("graded pieces have the advertised conjugation weights") {
  for (const auto& name : fixture_names()) {
    const ChainBasis& cb = chain_basis(tag_from_name(name));
    const Mat& a = cb.triplet.a.m;
    GradedSpaces g = graded_spaces(cb);
    auto weight_of = [&](const Mat& x) {
      return trace_ip(bracket(a, x), x) / trace_ip(x, x);
    };
    for (const Mat& x : g.plus) CHECK(weight_of(x) >= 1.0 - 1e-9);
    for (const Mat& x : g.zero) CHECK(std::abs(weight_of(x)) <= 1e-9);
    for (const Mat& x : g.minus) CHECK(weight_of(x) <= -1.0 + 1e-9);
    for (const Mat& x : g.v_plus) CHECK(weight_of(x) >= 1.0 - 1e-9);
  }
}

TEST_CASE("chain construction is deterministic") {
  for (const auto& name : fixture_names()) {
    const Fixture& f = fixture(name);
    ChainBasis a = build_chain_basis(f);
    ChainBasis b = build_chain_basis(f);
    REQUIRE(a.chains.size() == b.chains.size());
    for (size_t j = 0; j < a.chains.size(); ++j)
      for (size_t i = 0; i < a.chains[j].x.size(); ++i)
        CHECK((a.chains[j].x[i] - b.chains[j].x[i]).norm() == 0.0);
  }
}
