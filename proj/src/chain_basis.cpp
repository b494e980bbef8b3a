#include "ulab/chain_basis.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ulab {

namespace {

Vec vec_of(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat mat_of(const Vec& v, int n) {
  return Eigen::Map<const Mat>(v.data(), n, n);
}

// Gram-Schmidt selection of an orthonormal basis from a spanning candidate list.
std::vector<Vec> orthonormalize(const std::vector<Vec>& cand, double tol) {
  std::vector<Vec> out;
  for (Vec v : cand) {
    for (const Vec& w : out) v -= w.dot(v) * w;
    // second pass for numerical cleanliness
    for (const Vec& w : out) v -= w.dot(v) * w;
    if (v.norm() > tol) out.push_back(v / v.norm());
  }
  return out;
}

}  // namespace

double lowering_coeff(int q, int k) {
  return static_cast<double>((k + 1) * (q - k));
}

Chain build_chain_from_top(const Mat& top, int q, const Sl2Triplet& t) {
  Chain ch;
  ch.q = q;
  ch.x.resize(static_cast<size_t>(q) + 1);
  ch.x[0] = top;
  for (int k = 1; k <= q; ++k)
    ch.x[static_cast<size_t>(k)] =
        bracket(ch.x[static_cast<size_t>(k) - 1], t.ubar.m) /
        (static_cast<double>(k) * (q - k + 1));
  ch.central = (q == 0);
  return ch;
}

ChainBasis build_chain_basis(const Fixture& f) {
  ChainBasis cb;
  cb.tag = f.tag;
  cb.triplet = f.triplet;
  const int n = f.dim;
  const Mat& u = f.triplet.u.m;
  const Mat& a = f.triplet.a.m;

  // Orthonormal basis of the trace-form complement W of the triple span.
  std::vector<Vec> span_t = {vec_of(u).normalized(), vec_of(a).normalized(),
                             vec_of(f.triplet.ubar.m).normalized()};
  std::vector<Vec> proj;
  for (const auto& b : f.basis) {
    Vec v = vec_of(b.m);
    for (const Vec& t : span_t) v -= t.dot(v) * t;
    proj.push_back(v);
  }
  std::vector<Vec> wbasis = orthonormalize(proj, 1e-8);
  const int w = static_cast<int>(wbasis.size());

  if (w > 0) {
    Mat Q(n * n, w);
    for (int i = 0; i < w; ++i) Q.col(i) = wbasis[static_cast<size_t>(i)];

    auto op_on_w = [&](const Mat& z) {
      // matrix of y -> [y, z] on W, in the orthonormal coordinates
      Mat op(w, w);
      for (int i = 0; i < w; ++i)
        op.col(i) = Q.transpose() * vec_of(bracket(mat_of(Q.col(i), n), z));
      return op;
    };
    Mat pu = op_on_w(u);
    Mat pa = op_on_w(a);

    // W must be invariant under the triple action.
    for (int i = 0; i < w; ++i) {
      Vec img = vec_of(bracket(mat_of(Q.col(i), n), u));
      if ((img - Q * (Q.transpose() * img)).norm() > 1e-9)
        throw std::runtime_error("chain basis: complement not invariant");
    }

    // Kernel of the lowering action.
    Eigen::JacobiSVD<Mat> svd(pu, Eigen::ComputeFullV);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-10) ++rank;
    Mat K = svd.matrixV().rightCols(w - rank);  // ker(pu), orthonormal columns

    // The diagonal action is symmetric on W and preserves the kernel.
    Mat pa_k = K.transpose() * pa * K;
    pa_k = 0.5 * (pa_k + pa_k.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(pa_k);

    // Group kernel vectors by integer eigenvalue -q.
    struct Seed {
      int q;
      int order;
      Mat top;
    };
    std::vector<Seed> seeds;
    std::vector<std::pair<int, std::vector<int>>> groups;  // q -> eigen indices
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      double lam = es.eigenvalues()[i];
      int q = static_cast<int>(std::lround(-lam));
      if (std::abs(lam + q) > 1e-8) throw std::runtime_error("chain basis: non-integer weight");
      bool found = false;
      for (auto& g : groups)
        if (g.first == q) {
          g.second.push_back(i);
          found = true;
        }
      if (!found) groups.push_back({q, {i}});
    }

    int order = 0;
    for (auto& g : groups) {
      const int q = g.first;
      Mat S(n * n, static_cast<int>(g.second.size()));
      for (size_t c = 0; c < g.second.size(); ++c)
        S.col(static_cast<int>(c)) = Q * (K * es.eigenvectors().col(g.second[c]));
      // Deterministic tops: project fixture basis vectors onto the eigenspace
      // in fixture order and orthonormalize.
      std::vector<Vec> cand;
      for (const auto& b : f.basis) cand.push_back(S * (S.transpose() * vec_of(b.m)));
      std::vector<Vec> tops = orthonormalize(cand, 1e-6);
      if (static_cast<int>(tops.size()) != S.cols())
        throw std::runtime_error("chain basis: eigenspace selection failed");
      for (Vec& t : tops) {
        // sign convention: largest fixture coordinate positive
        Vec c = f.coords(mat_of(t, n));
        int arg = 0;
        for (int i = 1; i < c.size(); ++i)
          if (std::abs(c[i]) > std::abs(c[arg]) + 1e-12) arg = i;
        if (c[arg] < 0) t = -t;
        seeds.push_back({q, order++, mat_of(t, n)});
      }
    }
    std::stable_sort(seeds.begin(), seeds.end(), [](const Seed& x, const Seed& y) {
      if (x.q != y.q) return x.q > y.q;
      return x.order < y.order;
    });
    for (const auto& s : seeds)
      cb.chains.push_back(build_chain_from_top(s.top, s.q, cb.triplet));
  }

  cb.loosely_kronecker = cb.chains.empty();

  cb.full_basis = {u, a, f.triplet.ubar.m};
  cb.names = {"u", "a", "ubar"};
  for (size_t j = 0; j < cb.chains.size(); ++j)
    for (int i = 0; i <= cb.chains[j].q; ++i) {
      cb.full_basis.push_back(cb.chains[j].x[static_cast<size_t>(i)]);
      cb.names.push_back("x(" + std::to_string(i) + "," + std::to_string(j) + ")");
    }

  const int m = cb.n_coords();
  Mat B(n * n, m);
  for (int i = 0; i < m; ++i) B.col(i) = vec_of(cb.full_basis[static_cast<size_t>(i)]);
  cb.coord_pinv = (B.transpose() * B).ldlt().solve(B.transpose());
  return cb;
}

int ChainBasis::chain_offset(int j) const {
  int off = 3;
  for (int k = 0; k < j; ++k) off += chains[static_cast<size_t>(k)].q + 1;
  return off;
}

Vec ChainBasis::coords(const Mat& y) const { return coord_pinv * vec_of(y); }

Mat ChainBasis::from_coords(const Vec& c) const {
  const int n = full_basis[0].rows();
  Mat y = Mat::Zero(n, n);
  for (int i = 0; i < n_coords() && i < c.size(); ++i)
    y += c[i] * full_basis[static_cast<size_t>(i)];
  return y;
}

const ChainBasis& chain_basis(GroupTag tag) {
  static const ChainBasis c2 = build_chain_basis(fixture(GroupTag::SL2));
  static const ChainBasis c22 = build_chain_basis(fixture(GroupTag::SL2xSL2));
  static const ChainBasis c3 = build_chain_basis(fixture(GroupTag::SL3));
  switch (tag) {
    case GroupTag::SL2: return c2;
    case GroupTag::SL2xSL2: return c22;
    case GroupTag::SL3: return c3;
  }
  return c2;
}

double chain_relation_residual(const ChainBasis& cb) {
  const Mat& u = cb.triplet.u.m;
  const Mat& a = cb.triplet.a.m;
  const Mat& ub = cb.triplet.ubar.m;
  double r = 0.0;
  auto upd = [&](const Mat& d) { r = std::max(r, d.norm()); };
  upd(bracket(a, u) - 2.0 * u);
  upd(bracket(a, ub) + 2.0 * ub);
  upd(bracket(u, ub) - a);
  for (const auto& ch : cb.chains) {
    const int q = ch.q;
    for (int k = 0; k <= q; ++k) {
      const Mat& xk = ch.x[static_cast<size_t>(k)];
      Mat low = bracket(xk, u);
      upd(k == 0 ? low : Mat(low - ch.x[static_cast<size_t>(k) - 1]));
      upd(bracket(xk, a) - (2.0 * k - q) * xk);
      Mat raise = bracket(xk, ub);
      upd(k == q ? raise
                 : Mat(raise - lowering_coeff(q, k) * ch.x[static_cast<size_t>(k) + 1]));
    }
  }
  return r;
}

Vec coord_conj_weights(const ChainBasis& cb) {
  Vec wts(cb.n_coords());
  wts[0] = -2.0;
  wts[1] = 0.0;
  wts[2] = 2.0;
  int idx = 3;
  for (const auto& ch : cb.chains)
    for (int i = 0; i <= ch.q; ++i) wts[idx++] = 2.0 * i - ch.q;
  return wts;
}

GradedSpaces graded_spaces(const ChainBasis& cb) {
  GradedSpaces g;
  g.plus = {cb.triplet.u.m};
  g.zero = {cb.triplet.a.m};
  g.minus = {cb.triplet.ubar.m};
  g.v_plus = {cb.triplet.u.m};
  for (const auto& ch : cb.chains) {
    if (ch.q > 0) g.v_plus.push_back(ch.x[0]);
    for (int i = 0; i <= ch.q; ++i) {
      const Mat& x = ch.x[static_cast<size_t>(i)];
      const int wt = ch.q - 2 * i;  // standard diagonal weight
      if (wt > 0)
        g.plus.push_back(x);
      else if (wt == 0)
        g.zero.push_back(x);
      else
        g.minus.push_back(x);
    }
  }
  return g;
}

}  // namespace ulab
