#include "ulab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "ulab/fixtures.hpp"

namespace ulab {

namespace {

bool integer_entries(const Mat& m, double tol) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j) - std::lround(m(i, j))) > tol) return false;
  return true;
}

Eigen::MatrixXi round_int(const Mat& m) {
  Eigen::MatrixXi r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = static_cast<int>(std::lround(m(i, j)));
  return r;
}

std::int64_t idet(const Eigen::MatrixXi& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 2) {
    return static_cast<std::int64_t>(m(0, 0)) * m(1, 1) -
           static_cast<std::int64_t>(m(0, 1)) * m(1, 0);
  }
  if (n == 3) {
    std::int64_t d = 0;
    d += static_cast<std::int64_t>(m(0, 0)) *
         (static_cast<std::int64_t>(m(1, 1)) * m(2, 2) -
          static_cast<std::int64_t>(m(1, 2)) * m(2, 1));
    d -= static_cast<std::int64_t>(m(0, 1)) *
         (static_cast<std::int64_t>(m(1, 0)) * m(2, 2) -
          static_cast<std::int64_t>(m(1, 2)) * m(2, 0));
    d += static_cast<std::int64_t>(m(0, 2)) *
         (static_cast<std::int64_t>(m(1, 0)) * m(2, 1) -
          static_cast<std::int64_t>(m(1, 1)) * m(2, 0));
    return d;
  }
  // 4x4 block-diagonal product case
  return idet(m.topLeftCorner(2, 2)) * idet(m.bottomRightCorner(2, 2));
}

struct IntMatKey {
  std::vector<int> v;
  bool operator==(const IntMatKey& o) const { return v == o.v; }
};

struct IntMatKeyHash {
  size_t operator()(const IntMatKey& k) const {
    size_t h = 1469598103934665603ull;
    for (int x : k.v) {
      h ^= static_cast<size_t>(x) + 0x9e3779b9;
      h *= 1099511628211ull;
    }
    return h;
  }
};

IntMatKey key_of(const Eigen::MatrixXi& m) {
  IntMatKey k;
  k.v.reserve(static_cast<size_t>(m.size()));
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) k.v.push_back(m(i, j));
  return k;
}

}  // namespace

const LatticeSpec& lattice(GroupTag tag) {
  // -I lies in the SL2 factors' lattices (the ambient center); the SL3 center
  // is trivial.
  static const LatticeSpec s2{GroupTag::SL2, "SL2(Z)", fixture(GroupTag::SL2).lattice_gens,
                              true};
  static const LatticeSpec s22{GroupTag::SL2xSL2, "SL2(Z) x SL2(Z)",
                               fixture(GroupTag::SL2xSL2).lattice_gens, true};
  static const LatticeSpec s3{GroupTag::SL3, "SL3(Z)", fixture(GroupTag::SL3).lattice_gens,
                              false};
  switch (tag) {
    case GroupTag::SL2: return s2;
    case GroupTag::SL2xSL2: return s22;
    case GroupTag::SL3: return s3;
  }
  return s2;
}

bool is_lattice_element(const LatticeSpec& spec, const Mat& m, double tol) {
  if (m.rows() != tag_dim(spec.tag)) return false;
  if (!integer_entries(m, tol)) return false;
  Eigen::MatrixXi r = round_int(m);
  if (spec.tag == GroupTag::SL2xSL2) {
    if (!r.topRightCorner(2, 2).isZero() || !r.bottomLeftCorner(2, 2).isZero())
      return false;
    return idet(r.topLeftCorner(2, 2)) == 1 && idet(r.bottomRightCorner(2, 2)) == 1;
  }
  return idet(r) == 1;
}

std::vector<Mat> lattice_ball(const LatticeSpec& spec, double radius) {
  const int n = tag_dim(spec.tag);
  const double cap = radius + std::max(2.5, 0.25 * radius);

  std::vector<Mat> steps;
  for (const Mat& g : spec.gens) {
    steps.push_back(g);
    Mat gi = g.inverse();
    gi = round_int(gi).cast<double>();
    steps.push_back(gi);
  }

  std::unordered_set<IntMatKey, IntMatKeyHash> seen;
  std::vector<Eigen::MatrixXi> frontier{round_int(ident(n))};
  std::vector<Eigen::MatrixXi> all = frontier;
  seen.insert(key_of(frontier[0]));

  while (!frontier.empty()) {
    std::vector<Eigen::MatrixXi> next;
    for (const auto& g : frontier)
      for (const Mat& s : steps) {
        Eigen::MatrixXi h = round_int(g.cast<double>() * s);
        if (h.cast<double>().norm() > cap) continue;
        IntMatKey k = key_of(h);
        if (seen.count(k)) continue;
        seen.insert(k);
        next.push_back(h);
        all.push_back(h);
        if (all.size() > 2000000) throw std::runtime_error("lattice_ball: too many elements");
      }
    frontier = std::move(next);
  }

  std::vector<Mat> out;
  for (const auto& g : all) {
    Mat m = g.cast<double>();
    if (m.norm() <= radius + 1e-9) out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const Mat& a, const Mat& b) {
    double na = a.norm(), nb = b.norm();
    if (std::abs(na - nb) > 1e-12) return na < nb;
    for (int j = 0; j < a.cols(); ++j)
      for (int i = 0; i < a.rows(); ++i)
        if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
    return false;
  });
  return out;
}

std::vector<Mat> nearby_lattice(const LatticeSpec& spec, const Mat& target, double window) {
  std::vector<Mat> out;
  auto push = [&](const Mat& g) {
    if (!is_lattice_element(spec, g)) return;
    if ((g - target).norm() > window) return;
    for (const Mat& h : out)
      if ((h - g).norm() < 0.5) return;
    out.push_back(g);
  };
  Mat r = round_int(target).cast<double>();
  push(r);
  // Entries close to a half-integer: try the other rounding too.
  for (int i = 0; i < target.rows(); ++i)
    for (int j = 0; j < target.cols(); ++j) {
      double frac = target(i, j) - std::floor(target(i, j));
      if (std::abs(frac - 0.5) < 0.2) {
        Mat r2 = r;
        r2(i, j) = std::floor(target(i, j)) + (r(i, j) == std::floor(target(i, j)) ? 1.0 : 0.0);
        push(r2);
      }
    }
  return out;
}

namespace {

// Two-dimensional lattice-basis reduction of the columns of a 2x2 block;
// returns the unimodular right factor bringing the block to a reduced basis.
Mat gauss_reduce_block(const Mat& g) {
  Mat gamma = ident(2);
  Vec v1 = g.col(0), v2 = g.col(1);
  for (int it = 0; it < 64; ++it) {
    if (v1.squaredNorm() > v2.squaredNorm()) {
      std::swap(v1, v2);
      Mat sw(2, 2);
      sw << 0, 1, 1, 0;
      gamma = gamma * sw;
    }
    double m = std::round(v2.dot(v1) / v1.squaredNorm());
    if (m == 0.0) break;
    v2 -= m * v1;
    Mat op = ident(2);
    op(0, 1) = -m;
    gamma = gamma * op;
  }
  if (idet(round_int(gamma)) < 0) gamma.col(1) = -gamma.col(1);
  // canonical sign via -I in the lattice
  Mat rep = g * gamma;
  if (rep.trace() < 0.0) gamma = -gamma;
  return gamma;
}

const std::vector<Mat>& sl3_search_ball() {
  static const std::vector<Mat> ball = [] {
    std::vector<Mat> b = lattice_ball(lattice(GroupTag::SL3), 2.9);
    return b;
  }();
  return ball;
}

}  // namespace

QuotientPoint reduce(const GroupElement& g) {
  if (!finite(g.m)) throw std::invalid_argument("reduce: non-finite lift");
  Mat gamma;
  if (g.tag == GroupTag::SL2) {
    gamma = gauss_reduce_block(g.m);
  } else if (g.tag == GroupTag::SL2xSL2) {
    gamma = Mat::Zero(4, 4);
    gamma.topLeftCorner(2, 2) = gauss_reduce_block(g.m.topLeftCorner(2, 2));
    gamma.bottomRightCorner(2, 2) = gauss_reduce_block(g.m.bottomRightCorner(2, 2));
  } else {
    gamma = ident(3);
    Mat rep = g.m;
    const auto& ball = sl3_search_ball();
    for (int it = 0; it < 200; ++it) {
      double best = rep.norm() - 1e-12;
      const Mat* arg = nullptr;
      for (const Mat& h : ball) {
        double n = (rep * h).norm();
        if (n < best) {
          best = n;
          arg = &h;
        }
      }
      if (!arg) break;
      rep = rep * (*arg);
      gamma = gamma * (*arg);
    }
  }
  return {{g.m * gamma, g.tag}};
}

double quotient_dist(const QuotientPoint& x, const QuotientPoint& y, const Metric& m) {
  if (x.lift.tag != y.lift.tag) throw std::invalid_argument("quotient_dist: mixed tags");
  const LatticeSpec& spec = lattice(x.lift.tag);
  Mat rel = y.lift.m.inverse() * x.lift.m;
  std::vector<Mat> cand = nearby_lattice(spec, rel, 4.0);
  cand.push_back(ident(tag_dim(spec.tag)));
  double best = std::numeric_limits<double>::infinity();
  for (const Mat& gamma : cand) {
    GroupElement yg{y.lift.m * gamma, y.lift.tag};
    best = std::min(best, dist(x.lift, yg, m));
  }
  return best;
}

bool quotient_dist_certified(const QuotientPoint& x, const QuotientPoint& y, double d,
                             const Metric& m) {
  // Any translate beating distance d has its lattice element within window W of
  // the relative matrix; rounding covers every integer matrix within 0.5.
  double yi = y.lift.m.inverse().norm();
  double window = (m.kind == Metric::Kind::HilbertSchmidt)
                      ? d * yi
                      : (std::expm1(d)) * x.lift.m.norm() * yi;
  return window < 0.5;
}

namespace {

// Integer k x k matrices g with det 1 and ||a g_col - b_col|| <= colw[col] for
// every column: per-column box scan around a^{-1} b_col (the box radius
// colw * ||a^{-1}||_F bounds the preimage of the column ball), then the
// determinant filter over column combinations.
std::vector<Eigen::MatrixXi> block_det1_candidates(const Mat& a, const Mat& b,
                                                   const std::vector<double>& colw) {
  const int k = static_cast<int>(a.rows());
  const Mat ainv = a.inverse();
  const double ainv_norm = ainv.norm();

  std::vector<std::vector<Eigen::VectorXi>> cols(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    const Vec center = ainv * b.col(j);
    const double r = colw[static_cast<size_t>(j)] * ainv_norm + 1e-9;
    std::vector<long> lo(static_cast<size_t>(k)), hi(static_cast<size_t>(k));
    double box = 1.0;
    bool empty = false;
    for (int i = 0; i < k; ++i) {
      lo[static_cast<size_t>(i)] = std::lround(std::ceil(center[i] - r));
      hi[static_cast<size_t>(i)] = std::lround(std::floor(center[i] + r));
      if (hi[static_cast<size_t>(i)] < lo[static_cast<size_t>(i)]) empty = true;
      box *= std::max(0.0, static_cast<double>(hi[static_cast<size_t>(i)] -
                                               lo[static_cast<size_t>(i)]) + 1.0);
    }
    if (empty) return {};
    if (box > 4e6) throw std::runtime_error("lattice_near_product: search box too large");
    Eigen::VectorXi v(k);
    for (int i = 0; i < k; ++i) v[i] = static_cast<int>(lo[static_cast<size_t>(i)]);
    while (true) {
      if ((a * v.cast<double>() - b.col(j)).norm() <= colw[static_cast<size_t>(j)] + 1e-9)
        cols[static_cast<size_t>(j)].push_back(v);
      int i = 0;
      for (; i < k; ++i) {
        if (v[i] < hi[static_cast<size_t>(i)]) {
          ++v[i];
          break;
        }
        v[i] = static_cast<int>(lo[static_cast<size_t>(i)]);
      }
      if (i == k) break;
    }
    if (cols[static_cast<size_t>(j)].empty()) return {};
  }

  double combos = 1.0;
  for (const auto& c : cols) combos *= static_cast<double>(c.size());
  if (combos > 4e6) throw std::runtime_error("lattice_near_product: too many column combinations");

  std::vector<Eigen::MatrixXi> out;
  std::vector<size_t> idx(static_cast<size_t>(k), 0);
  while (true) {
    Eigen::MatrixXi g(k, k);
    for (int j = 0; j < k; ++j) g.col(j) = cols[static_cast<size_t>(j)][idx[static_cast<size_t>(j)]];
    if (idet(g) == 1) out.push_back(g);
    int j = 0;
    for (; j < k; ++j) {
      if (++idx[static_cast<size_t>(j)] < cols[static_cast<size_t>(j)].size()) break;
      idx[static_cast<size_t>(j)] = 0;
    }
    if (j == k) break;
  }
  return out;
}

bool entry_less(const Mat& a, const Mat& b) {
  for (int j = 0; j < a.cols(); ++j)
    for (int i = 0; i < a.rows(); ++i)
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
  return false;
}

// Lift bookkeeping: the exact lattice element with big * gamma = red.
Mat recover_translate(const LatticeSpec& spec, const Mat& big, const Mat& red, const char* who) {
  Mat g = big.inverse() * red;
  Mat r = round_int(g).cast<double>();
  if ((g - r).cwiseAbs().maxCoeff() > 1e-6 || !is_lattice_element(spec, r) ||
      (big * r - red).norm() > 1e-6 * (1.0 + red.norm()))
    throw std::runtime_error(std::string(who) + ": lift bookkeeping lost integrality");
  return r;
}

void flip_negative_block(Mat& m, int r0, int k) {
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) {
      double v = m(r0 + i, r0 + j);
      if (std::abs(v) > 1e-9) {
        if (v < 0.0) m.block(r0, r0, k, k) *= -1.0;
        return;
      }
    }
}

}  // namespace

std::vector<Mat> lattice_near_product(const LatticeSpec& spec, const Mat& a, const Mat& b,
                                      double window) {
  const int n = tag_dim(spec.tag);
  if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != n)
    throw std::invalid_argument("lattice_near_product: dimension mismatch");
  if (!(window >= 0.0) || !finite(a) || !finite(b))
    throw std::invalid_argument("lattice_near_product: bad window or non-finite input");

  std::vector<Mat> out;
  if (spec.tag == GroupTag::SL2xSL2) {
    std::vector<double> w2{window, window};
    auto top = block_det1_candidates(a.topLeftCorner(2, 2), b.topLeftCorner(2, 2), w2);
    auto bot = block_det1_candidates(a.bottomRightCorner(2, 2), b.bottomRightCorner(2, 2), w2);
    for (const auto& t : top)
      for (const auto& bo : bot) {
        Mat g = Mat::Zero(4, 4);
        g.topLeftCorner(2, 2) = t.cast<double>();
        g.bottomRightCorner(2, 2) = bo.cast<double>();
        if ((a * g - b).norm() <= window + 1e-9) out.push_back(g);
      }
  } else {
    std::vector<double> w(static_cast<size_t>(n), window);
    for (const auto& g : block_det1_candidates(a, b, w)) {
      Mat gd = g.cast<double>();
      if ((a * gd - b).norm() <= window + 1e-9) out.push_back(gd);
    }
  }
  std::sort(out.begin(), out.end(), entry_less);
  return out;
}

GroupElement center_canonical(const LatticeSpec& spec, const GroupElement& g) {
  if (!spec.center_in_lattice) return g;
  Mat m = g.m;
  if (spec.tag == GroupTag::SL2xSL2) {
    flip_negative_block(m, 0, 2);
    flip_negative_block(m, 2, 2);
  } else {
    flip_negative_block(m, 0, static_cast<int>(m.rows()));
  }
  return {m, g.tag};
}

std::optional<GroupElement> track_gamma(const GroupElement& x_lift, const GroupElement& y_lift,
                                        double t, double s,
                                        const std::function<GroupElement(double)>& u_flow,
                                        double eps, const Metric& met) {
  if (x_lift.tag != y_lift.tag) throw std::invalid_argument("track_gamma: mixed group tags");
  if (met.kind != Metric::Kind::RightInvariantChart)
    throw std::invalid_argument("track_gamma: needs the right-invariant chart metric");
  if (!(eps > 0.0) || !(2.0 * eps <= calib().chart_radius))
    throw std::invalid_argument("track_gamma: eps outside (0, chart_radius / 2]");

  const LatticeSpec& spec = lattice(x_lift.tag);
  const GroupElement fx = gmul(u_flow(t), x_lift);
  const GroupElement fy = gmul(u_flow(s), y_lift);
  const QuotientPoint mx = reduce(fx);
  const QuotientPoint my = reduce(fy);
  const Mat bx = recover_translate(spec, fx.m, mx.lift.m, "track_gamma");
  const Mat cy = recover_translate(spec, fy.m, my.lift.m, "track_gamma");

  // dist(mx, my g) < 2 eps forces my g = exp(-E) mx with ||E|| < 2 eps, so g
  // lies in this Frobenius window around my^{-1} mx.
  const double window = std::expm1(2.0 * eps) * mx.lift.m.norm() + 1e-9;
  struct Hit {
    double d = 0.0;
    Mat g, canon;
  };
  std::vector<Hit> hits;  // best representative per center orbit
  for (const Mat& g : lattice_near_product(spec, my.lift.m, mx.lift.m, window)) {
    double d = dist(mx.lift, {my.lift.m * g, x_lift.tag}, met);
    if (d >= 2.0 * eps) continue;
    Mat canon = center_canonical(spec, {g, x_lift.tag}).m;
    bool merged = false;
    for (Hit& h : hits)
      if ((h.canon - canon).norm() < 0.5) {
        if (d < h.d) {
          h.d = d;
          h.g = g;
        }
        merged = true;
        break;
      }
    if (!merged) hits.push_back({d, g, canon});
  }
  if (hits.size() >= 2)
    throw injectivity_error(
        "track_gamma: two lattice candidates within 2 eps = " + std::to_string(2.0 * eps) +
        " (eps exceeds the local injectivity scale)");
  if (hits.empty() || !(hits[0].d < eps)) return std::nullopt;

  // gamma = cy g bx^{-1}: dist(fx, fy gamma) = dist(mx, my g) by right
  // invariance; closed in integer arithmetic.
  const Mat bxinv = round_int(bx.inverse()).cast<double>();
  const Mat gamma = cy * hits[0].g * bxinv;
  const Mat gr = round_int(gamma).cast<double>();
  if ((gamma - gr).cwiseAbs().maxCoeff() > 1e-6 || !is_lattice_element(spec, gr))
    throw std::runtime_error("track_gamma: translate bookkeeping lost integrality");
  return GroupElement{gr, x_lift.tag};
}

double injectivity_probe(const QuotientPoint& x, const std::vector<double>& radius_grid) {
  if (radius_grid.empty()) throw std::invalid_argument("injectivity_probe: empty radius grid");
  const LatticeSpec& spec = lattice(x.lift.tag);
  double rmax = 0.0;
  for (double r : radius_grid) {
    if (!(r > 0.0) || !(2.0 * r <= calib().chart_radius))
      throw std::invalid_argument("injectivity_probe: grid radius outside (0, chart_radius / 2]");
    rmax = std::max(rmax, r);
  }

  // dist_id(q) < 2 r implies ||q - I||_F <= e^{2r} - 1 =: wq, and per column
  // ||x gamma_col - x_col|| <= wq ||x_col||; the enumeration below is therefore
  // exhaustive for every grid scale.
  const double wq = std::expm1(2.0 * rmax) + 1e-9;
  const Mat& xm = x.lift.m;
  const Mat xinv = xm.inverse();
  const int n = tag_dim(spec.tag);

  std::vector<Mat> cand;
  auto block_cands = [&](int r0, int k) {
    Mat a = xm.block(r0, r0, k, k);
    std::vector<double> w(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) w[static_cast<size_t>(j)] = wq * a.col(j).norm();
    return block_det1_candidates(a, a, w);
  };
  if (spec.tag == GroupTag::SL2xSL2) {
    auto top = block_cands(0, 2);
    auto bot = block_cands(2, 2);
    for (const auto& t : top)
      for (const auto& bo : bot) {
        Mat g = Mat::Zero(4, 4);
        g.topLeftCorner(2, 2) = t.cast<double>();
        g.bottomRightCorner(2, 2) = bo.cast<double>();
        cand.push_back(g);
      }
  } else {
    for (const auto& g : block_cands(0, n)) cand.push_back(g.cast<double>());
  }

  double m_inf = std::numeric_limits<double>::infinity();
  const Mat id = ident(n);
  for (const Mat& g : cand) {
    if ((g - id).cwiseAbs().maxCoeff() < 0.5) continue;  // gamma = e
    GroupElement q{xm * g * xinv, x.lift.tag};
    m_inf = std::min(m_inf, dist_id(q));
  }

  double best = 0.0;
  for (double r : radius_grid)
    if (2.0 * r <= m_inf + 1e-12) best = std::max(best, r);
  return best;
}

}  // namespace ulab
