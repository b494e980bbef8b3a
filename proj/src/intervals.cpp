#include "ulab/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ulab/chain_basis.hpp"
#include "ulab/constants.hpp"
#include "ulab/fixtures.hpp"
#include "ulab/flows.hpp"
#include "ulab/group.hpp"
#include "ulab/poly.hpp"

namespace ulab {

// ---------------------------------------------------------------------------
// Separation threshold.

double gap_lemma_r2(double C, double w, int n_max) {
  if (!(C > 0.0) || !std::isfinite(C) || !(w > 0.0) || !std::isfinite(w) || n_max < 1)
    throw std::invalid_argument("gap_lemma_r2: need C > 0, w > 0, n_max >= 1");
  const double lnm = std::log2(static_cast<double>(n_max));
  const double lC = std::log2(C);
  // -log2(1 - 2^{-w}), stable for small w
  const double tail = -std::log2(-std::expm1(-w * std::numbers::ln2));
  const double floor_crude = std::log2(16.0) + lnm;
  const double growth = (1.0 + 1.0 / w) * (200.0 + 2.0 * lnm) - lC / w;
  const double summable = floor_crude + 2.0 + (6.0 + lnm - lC + tail) / w;
  double L = std::max({floor_crude, growth, summable}) + 2.0;  // margin for the floor slack
  if (!(L <= 900.0))
    throw std::domain_error("gap_lemma_r2: threshold leaves double-precision range");
  return std::exp2(L);
}

// ---------------------------------------------------------------------------
// Selector.

namespace {

double family_length(const std::vector<BlockInterval>& fam) {
  double s = 0.0;
  for (const BlockInterval& b : fam) s += b.len;
  return s;
}

}  // namespace

GapSelection gap_lemma_select(const BlockPartition& bp) {
  if (!(bp.R > 0.0) || !std::isfinite(bp.R) || bp.n_max < 1 || !(bp.C > 0.0) ||
      !std::isfinite(bp.C) || !(bp.w > 0.0) || !std::isfinite(bp.w) || bp.families.empty())
    throw std::invalid_argument("gap_lemma_select: malformed partition");
  const double tol = 1e-12 * bp.R;

  struct Tagged {
    BlockInterval iv;
    int family;  // -1 for junk
  };
  std::vector<Tagged> all;
  double covered = 0.0;
  auto admit = [&](const BlockInterval& b, int fam) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.len) || !(b.len > 0.0))
      throw std::invalid_argument("gap_lemma_select: malformed partition");
    if (b.lo < -tol || b.hi() > bp.R + tol)
      throw std::invalid_argument("gap_lemma_select: interval outside [0, R]");
    all.push_back({b, fam});
    covered += b.len;
  };
  for (const BlockInterval& b : bp.junk) admit(b, -1);
  for (size_t p = 0; p < bp.families.size(); ++p) {
    if (bp.families[p].size() > static_cast<size_t>(bp.n_max))
      throw std::invalid_argument("gap_lemma_select: family exceeds n_max blocks");
    for (const BlockInterval& b : bp.families[p]) admit(b, static_cast<int>(p));
  }
  std::sort(all.begin(), all.end(),
            [](const Tagged& a, const Tagged& b) { return a.iv.lo < b.iv.lo; });
  for (size_t i = 1; i < all.size(); ++i)
    if (all[i].iv.lo < all[i - 1].iv.hi() - tol)
      throw std::invalid_argument("gap_lemma_select: overlapping intervals");
  if (std::abs(covered - bp.R) > tol)
    throw std::invalid_argument("gap_lemma_select: intervals do not tile [0, R]");

  const double r21 = gap_lemma_r2(bp.C, bp.w, bp.n_max);
  if (bp.R < r21 - tol)
    throw std::invalid_argument("gap_lemma_select: R below the separation threshold R21");

  double block_total = 0.0;
  for (const auto& fam : bp.families) block_total += family_length(fam);
  if (block_total < (1.0 - 1e-3) * bp.R - tol)
    throw std::invalid_argument("gap_lemma_select: family lengths total less than (1 - 1e-3) R");

  // gap law between blocks of distinct families
  for (const Tagged& a : all)
    for (const Tagged& b : all) {
      if (a.family < 0 || b.family < 0 || a.family >= b.family) continue;
      double gap = std::max(b.iv.lo - a.iv.hi(), a.iv.lo - b.iv.hi());
      double need = std::max(r21, bp.C * std::pow(std::min(a.iv.len, b.iv.len), 1.0 + bp.w));
      if (gap < need - tol)
        throw std::invalid_argument("gap_lemma_select: cross-family gap below the separation law");
    }

  // one maximal block per family (leftmost on ties), dropped when shorter
  // than R21 / (16 n_max)
  struct Maximal {
    int family = -1, index = -1;
    double len = 0.0;
  };
  std::vector<Maximal> survivors;
  for (size_t p = 0; p < bp.families.size(); ++p) {
    int best = -1;
    for (size_t i = 0; i < bp.families[p].size(); ++i)
      if (best < 0 || bp.families[p][i].len > bp.families[p][static_cast<size_t>(best)].len)
        best = static_cast<int>(i);
    if (best < 0) continue;
    double len = bp.families[p][static_cast<size_t>(best)].len;
    if (len < r21 / (16.0 * bp.n_max)) continue;
    survivors.push_back({static_cast<int>(p), best, len});
  }

  // dyadic length classes; keep the topmost class holding exactly one block
  int chosen = -1;
  {
    std::vector<int> expo(survivors.size());
    for (size_t i = 0; i < survivors.size(); ++i) expo[i] = std::ilogb(survivors[i].len);
    int best_n = std::numeric_limits<int>::min();
    for (size_t i = 0; i < survivors.size(); ++i) {
      int count = 0;
      for (size_t k = 0; k < survivors.size(); ++k)
        if (expo[k] == expo[i]) ++count;
      if (count == 1 && expo[i] > best_n) {
        best_n = expo[i];
        chosen = static_cast<int>(i);
      }
    }
  }
  if (chosen < 0)
    throw std::logic_error("gap_lemma_select: no singleton dyadic class (selection impossible)");

  GapSelection sel;
  sel.family = survivors[static_cast<size_t>(chosen)].family;
  sel.index_in_family = survivors[static_cast<size_t>(chosen)].index;
  sel.chosen = bp.families[static_cast<size_t>(sel.family)][static_cast<size_t>(sel.index_in_family)];
  sel.family_total = family_length(bp.families[static_cast<size_t>(sel.family)]);
  if (sel.chosen.len < bp.R / (32.0 * bp.n_max) - tol ||
      sel.family_total < 0.75 * bp.R - tol)
    throw std::logic_error("gap_lemma_select: selection failed its guaranteed conclusions");
  return sel;
}

bool gap_lemma_bruteforce(const BlockPartition& bp) {
  for (const auto& fam : bp.families) {
    double total = 0.0;
    for (const BlockInterval& b : fam) total += b.len;
    if (total < 0.75 * bp.R) continue;
    for (const BlockInterval& b : fam)
      if (b.len >= bp.R / (32.0 * bp.n_max)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Generator words.

std::string sl2z_word(const Mat& gamma) {
  if (gamma.rows() != 2 || gamma.cols() != 2)
    throw std::invalid_argument("sl2z_word: need a 2x2 matrix");
  long long e[4];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double v = gamma(i, j);
      double r = std::round(v);
      if (std::abs(v - r) > 1e-9 || std::abs(r) > 9e15)
        throw std::invalid_argument("sl2z_word: entries are not (safe) integers");
      e[2 * i + j] = static_cast<long long>(r);
    }
  long long a = e[0], b = e[1], c = e[2], d = e[3];
  if (a * d - b * c != 1) throw std::invalid_argument("sl2z_word: determinant is not one");

  std::string out;
  auto emit = [&out](const std::string& tok) {
    if (!out.empty()) out += ' ';
    out += tok;
  };
  auto emit_t = [&emit](long long q) {
    if (q != 0) emit("T^" + std::to_string(q));
  };
  // peel gamma = T^q S gamma' with q the nearest integer to a / c
  while (c != 0) {
    long long q = std::llround(static_cast<double>(a) / static_cast<double>(c));
    while (std::abs(a - q * c) > std::abs(a - (q + 1) * c)) ++q;  // exact nearest
    while (std::abs(a - q * c) > std::abs(a - (q - 1) * c)) --q;
    emit_t(q);
    emit("S");
    long long na = c, nb = d, nc = q * c - a, nd = q * d - b;
    a = na;
    b = nb;
    c = nc;
    d = nd;
  }
  if (a == 1) {
    emit_t(b);
  } else {  // a == d == -1: gamma = S^2 T^{-b}
    emit("S");
    emit("S");
    emit_t(-b);
  }
  return out.empty() ? "e" : out;
}

// ---------------------------------------------------------------------------
// Orbit-pair interval cover.

namespace {

struct Anchor {
  double t = 0.0, h = 0.0;
  GroupElement mx, myg;  // aligned reduced lifts at the anchor
  Mat canon;             // center-normalized tracked translate
  IntervalCover cover;
  bool has_cover = false;
};

Mat round_entries(const Mat& m) { return m.array().round().matrix(); }

}  // namespace

std::vector<CoverBlock> build_orbit_cover(const QuotientPoint& x, const QuotientPoint& y,
                                          const MatchingResult& m,
                                          const std::vector<double>& good_times, double delta) {
  if (x.lift.tag != y.lift.tag)
    throw std::invalid_argument("build_orbit_cover: mixed group tags");
  if (!(delta > 0.0) || !(24.0 * delta <= calib().eps14 + 1e-15))
    throw std::invalid_argument("build_orbit_cover: delta outside the interval-cover range");
  if (good_times.empty()) throw std::invalid_argument("build_orbit_cover: no good times");

  std::vector<double> gt = good_times;
  std::sort(gt.begin(), gt.end());
  gt.erase(std::unique(gt.begin(), gt.end(),
                       [](double p, double q) { return std::abs(p - q) < 1e-12; }),
           gt.end());
  const double tol = 1e-9 * (1.0 + m.R);
  for (double t : gt) {
    bool inside = false;
    for (const auto& iv : m.A)
      if (t >= iv.first - tol && t <= iv.second + tol) {
        inside = true;
        break;
      }
    if (!inside) throw std::invalid_argument("build_orbit_cover: good time outside the matched set");
  }
  double slack = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < gt.size(); ++i) slack = std::min(slack, gt[i] - gt[i - 1]);
  if (!std::isfinite(slack)) slack = 1e-9;  // a single good time

  const Fixture& f = fixture(x.lift.tag);
  const LatticeSpec& spec = lattice(x.lift.tag);
  const ChainBasis& cb = chain_basis(x.lift.tag);
  auto uf = [&f](double v) { return f.u_flow(v); };
  auto h_of = [&m](double tt) { return matching_eval(m, tt); };

  auto make_anchor = [&](double tm) {
    Anchor a;
    a.t = tm;
    a.h = h_of(tm);
    std::optional<GroupElement> g;
    try {
      g = track_gamma(x.lift, y.lift, a.h, tm, uf, delta);
    } catch (const injectivity_error& e) {
      throw injectivity_error(std::string(e.what()) + " at good time t = " + std::to_string(tm));
    }
    if (!g)
      throw std::logic_error("build_orbit_cover: good time t = " + std::to_string(tm) +
                             " is not delta-matched by any lattice translate");
    a.canon = center_canonical(spec, *g).m;
    // aligned O(1) lifts: with bx, cy the exact translates tying the flowed
    // lifts to their reductions, gamma = cy g bx^{-1} gives the reduced pair
    // (mx, my g) at the same chart distance by right invariance.
    GroupElement fxg = gmul(uf(a.h), x.lift);
    GroupElement fyg = gmul(uf(tm), y.lift);
    QuotientPoint qx = reduce(fxg);
    QuotientPoint qy = reduce(fyg);
    Mat bx = round_entries(fxg.m.inverse() * qx.lift.m);
    Mat cy = round_entries(fyg.m.inverse() * qy.lift.m);
    Mat gred = round_entries(cy.inverse() * g->m * bx);
    a.mx = qx.lift;
    a.myg = {Mat(qy.lift.m * gred), x.lift.tag};
    if (!(dist(a.mx, a.myg) < delta))
      throw std::logic_error("build_orbit_cover: anchor lift alignment failed");
    return a;
  };

  const double t_end = gt.back();
  auto cover_of = [&](Anchor& a) -> const IntervalCover& {
    if (!a.has_cover) {
      double ra = std::max(slack, t_end - a.t);
      auto hr = [&](double tau) { return h_of(a.t + tau) - a.h; };
      a.cover = matching_interval_cover(a.mx, a.myg, hr, delta, ra, cb);
      a.has_cover = true;
    }
    return a.cover;
  };
  auto dpair = [&](const Anchor& a, double t) {
    return dist(gmul(uf(h_of(t) - a.h), a.mx), gmul(uf(t - a.t), a.myg));
  };

  std::vector<Anchor> anchors;
  std::vector<CoverBlock> blocks;
  size_t j = 0;
  while (j < gt.size()) {
    Anchor a = make_anchor(gt[j]);
    int prior = -1;  // earliest prior block carrying the same translate
    for (size_t i = 0; i < anchors.size(); ++i)
      if ((anchors[i].canon - a.canon).norm() == 0.0) {
        prior = static_cast<int>(i);
        break;
      }
    double w_hi = 0.0;  // absolute right end of the admissible extension window
    if (prior < 0) {
      const IntervalCover& cov = cover_of(a);
      int q = -1;
      for (size_t p = 0; p < cov.pieces.size(); ++p)
        if (cov.pieces[p].lo <= slack && cov.pieces[p].hi >= -slack) {
          q = static_cast<int>(p);
          break;
        }
      if (q < 0)
        throw std::logic_error("build_orbit_cover: anchor missing from its own interval cover");
      w_hi = a.t + cov.pieces[static_cast<size_t>(q)].hi;
    } else {
      Anchor& ap = anchors[static_cast<size_t>(prior)];
      const IntervalCover& cov = cover_of(ap);
      const double rel = a.t - ap.t;
      int q = -1;
      for (size_t p = 0; p < cov.pieces.size(); ++p)
        if (cov.pieces[p].lo - slack <= rel && rel <= cov.pieces[p].hi + slack) {
          q = static_cast<int>(p);
          break;
        }
      if (q < 0)
        throw std::logic_error(
            "build_orbit_cover: recurrence time missing from the prior interval cover");
      w_hi = ap.t + cov.pieces[static_cast<size_t>(q)].hi;
    }
    // last good time in the window still delta-matched against the anchor lifts
    size_t jhi = j;
    while (jhi + 1 < gt.size() && gt[jhi + 1] <= w_hi + tol) ++jhi;
    size_t jr = jhi;
    for (;; --jr) {
      if (dpair(a, gt[jr]) <= delta + 1e-12) break;
      if (jr == j) break;  // the anchor itself is delta-matched by construction
    }
    CoverBlock b;
    b.t_lo = gt[j];
    b.t_hi = gt[jr];
    b.gamma = {a.canon, x.lift.tag};
    b.anchor_x = a.mx;
    b.anchor_y = a.myg;
    blocks.push_back(b);
    anchors.push_back(std::move(a));
    j = jr + 1;
  }

  std::vector<Mat> seen;  // class ids in order of first appearance
  for (CoverBlock& b : blocks) {
    size_t i = 0;
    for (; i < seen.size(); ++i)
      if ((seen[i] - b.gamma.m).norm() == 0.0) break;
    if (i == seen.size()) seen.push_back(b.gamma.m);
    b.class_id = static_cast<int>(i);
  }
  return blocks;
}

std::string cover_to_json(const std::vector<CoverBlock>& blocks) {
  nlohmann::json j;
  int n_classes = 0;
  nlohmann::json arr = nlohmann::json::array();
  for (const CoverBlock& b : blocks) {
    n_classes = std::max(n_classes, b.class_id + 1);
    nlohmann::json jb;
    jb["t_lo"] = b.t_lo;
    jb["t_hi"] = b.t_hi;
    jb["class_id"] = b.class_id;
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < b.gamma.m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < b.gamma.m.cols(); ++c) row.push_back(b.gamma.m(r, c));
      rows.push_back(row);
    }
    jb["gamma"] = rows;
    if (b.gamma.m.rows() == 2) jb["word"] = sl2z_word(b.gamma.m);
    arr.push_back(jb);
  }
  j["n_blocks"] = blocks.size();
  j["n_classes"] = n_classes;
  j["blocks"] = arr;
  return j.dump(2);
}

}  // namespace ulab
