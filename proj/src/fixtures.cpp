#include "ulab/fixtures.hpp"

#include <cmath>
#include <stdexcept>

namespace ulab {

namespace {

Mat unit(int n, int i, int j) {
  Mat m = Mat::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

Mat blockdiag(const Mat& a, const Mat& b) {
  Mat m = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

Fixture make_sl2() {
  Fixture f;
  f.tag = GroupTag::SL2;
  f.name = "sl2";
  f.dim = 2;
  f.alg_dim = 3;
  Mat u = unit(2, 0, 1);
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 1;
  a(1, 1) = -1;
  Mat ubar = unit(2, 1, 0);
  f.basis = {{u, f.tag}, {a, f.tag}, {ubar, f.tag}};
  f.basis_names = {"u", "a", "ubar"};
  f.triplet = {{u, f.tag}, {a, f.tag}, {ubar, f.tag}};
  Mat T = ident(2);
  T(0, 1) = 1;
  Mat S = Mat::Zero(2, 2);
  S(0, 1) = -1;
  S(1, 0) = 1;
  f.lattice_gens = {T, S};
  return f;
}

Fixture make_sl2xsl2() {
  Fixture f;
  f.tag = GroupTag::SL2xSL2;
  f.name = "sl2xsl2";
  f.dim = 4;
  f.alg_dim = 6;
  const Fixture s = make_sl2();
  Mat z = Mat::Zero(2, 2);
  Mat u1 = blockdiag(s.basis[0].m, z), a1 = blockdiag(s.basis[1].m, z),
      w1 = blockdiag(s.basis[2].m, z);
  Mat u2 = blockdiag(z, s.basis[0].m), a2 = blockdiag(z, s.basis[1].m),
      w2 = blockdiag(z, s.basis[2].m);
  f.basis = {{u1, f.tag}, {a1, f.tag}, {w1, f.tag},
             {u2, f.tag}, {a2, f.tag}, {w2, f.tag}};
  f.basis_names = {"u1", "a1", "ubar1", "u2", "a2", "ubar2"};
  f.triplet = {{u1 + u2, f.tag}, {a1 + a2, f.tag}, {w1 + w2, f.tag}};
  Mat i2 = ident(2);
  for (const Mat& g : s.lattice_gens) {
    f.lattice_gens.push_back(blockdiag(g, i2));
    f.lattice_gens.push_back(blockdiag(i2, g));
  }
  return f;
}

Fixture make_sl3() {
  Fixture f;
  f.tag = GroupTag::SL3;
  f.name = "sl3corner";
  f.dim = 3;
  f.alg_dim = 8;
  Mat h1 = Mat::Zero(3, 3);
  h1(0, 0) = 1;
  h1(1, 1) = -1;
  Mat h2 = Mat::Zero(3, 3);
  h2(0, 0) = 1;
  h2(1, 1) = 1;
  h2(2, 2) = -2;
  f.basis = {{unit(3, 0, 1), f.tag}, {unit(3, 1, 0), f.tag}, {h1, f.tag},
             {unit(3, 0, 2), f.tag}, {unit(3, 1, 2), f.tag}, {unit(3, 2, 0), f.tag},
             {unit(3, 2, 1), f.tag}, {h2, f.tag}};
  f.basis_names = {"E12", "E21", "H1", "E13", "E23", "E31", "E32", "H2"};
  f.triplet = {{unit(3, 0, 1), f.tag}, {h1, f.tag}, {unit(3, 1, 0), f.tag}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) f.lattice_gens.push_back(ident(3) + unit(3, i, j));
  return f;
}

}  // namespace

GroupElement Fixture::u_flow(double t) const {
  // exp(t u) with u strictly upper nilpotent of square zero in every setup.
  return {ident(dim) + t * triplet.u.m, tag};
}

GroupElement Fixture::ubar_flow(double s) const {
  return {ident(dim) + s * triplet.ubar.m, tag};
}

GroupElement Fixture::a_flow(double p) const {
  Mat m = ident(dim);
  const Mat& a = triplet.a.m;
  for (int i = 0; i < dim; ++i) m(i, i) = std::exp(p * a(i, i));
  return {m, tag};
}

Vec Fixture::coords(const Mat& x) const {
  Vec c(alg_dim);
  for (int i = 0; i < alg_dim; ++i)
    c[i] = trace_ip(x, basis[static_cast<size_t>(i)].m) /
           trace_ip(basis[static_cast<size_t>(i)].m, basis[static_cast<size_t>(i)].m);
  return c;
}

Mat Fixture::from_coords(const Vec& c) const {
  Mat x = Mat::Zero(dim, dim);
  for (int i = 0; i < alg_dim && i < c.size(); ++i)
    x += c[i] * basis[static_cast<size_t>(i)].m;
  return x;
}

const Fixture& fixture(GroupTag tag) {
  static const Fixture f2 = make_sl2();
  static const Fixture f22 = make_sl2xsl2();
  static const Fixture f3 = make_sl3();
  switch (tag) {
    case GroupTag::SL2: return f2;
    case GroupTag::SL2xSL2: return f22;
    case GroupTag::SL3: return f3;
  }
  return f2;
}

const Fixture& fixture(const std::string& name) { return fixture(tag_from_name(name)); }

std::vector<std::string> fixture_names() { return {"sl2", "sl2xsl2", "sl3corner"}; }

}  // namespace ulab
