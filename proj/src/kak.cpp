#include "ulab/kak.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ulab/constants.hpp"
#include "ulab/matching.hpp"

namespace ulab {

namespace {

struct CoordSplit {
  std::vector<int> z_idx;   // full-coordinate indices of central chain vectors
  std::vector<int> tr_idx;  // indices of non-central chain vectors
};

CoordSplit coord_split(const ChainBasis& cb) {
  CoordSplit s;
  for (int j = 0; j < int(cb.chains.size()); ++j) {
    const int off = cb.chain_offset(j);
    if (cb.chains[j].central) {
      s.z_idx.push_back(off);
    } else {
      for (int i = 0; i <= cb.chains[j].q; ++i) s.tr_idx.push_back(off + i);
    }
  }
  return s;
}

Mat combine(const ChainBasis& cb, const std::vector<int>& idx, const Vec& theta_full) {
  const int d = cb.full_basis.empty() ? tag_dim(cb.tag) : int(cb.full_basis[0].rows());
  Mat y = Mat::Zero(d, d);
  for (int k : idx) y += theta_full[k] * cb.full_basis[k];
  return y;
}

// u_{t0} ubar_{t2} a_{t1} exp(z) exp(tr) for the full coordinate vector.
Mat assemble(const Fixture& f, const ChainBasis& cb, const CoordSplit& s, const Vec& theta) {
  Mat h = f.u_flow(theta[0]).m * f.ubar_flow(theta[2]).m * f.a_flow(theta[1]).m;
  return h * mat_exp(combine(cb, s.z_idx, theta)) * mat_exp(combine(cb, s.tr_idx, theta));
}

}  // namespace

KakCoordinates decompose(const GroupElement& g, const ChainBasis& cb) {
  if (g.tag != cb.tag) throw std::invalid_argument("decompose: fixture mismatch");
  if (dist_id(g) >= calib().eps6) throw chart_error("decompose: outside the factorization chart");
  const Fixture& f = fixture(cb.tag);
  const CoordSplit split = coord_split(cb);
  const int m = cb.n_coords();
  const int d = f.dim;

  Vec theta = Vec::Zero(m);
  auto residual = [&](const Vec& th) -> Vec {
    Mat diff = assemble(f, cb, split, th) - g.m;
    return Eigen::Map<const Vec>(diff.data(), d * d);
  };

  Vec r = residual(theta);
  bool converged = r.norm() <= 1e-13 * d;
  for (int iter = 0; iter < 50 && !converged; ++iter) {
    Eigen::MatrixXd jac(d * d, m);
    const double h = 1e-7;
    for (int c = 0; c < m; ++c) {
      Vec th = theta;
      th[c] += h;
      jac.col(c) = (residual(th) - r) / h;
    }
    Vec step = jac.colPivHouseholderQr().solve(-r);
    double lam = 1.0;
    Vec r_new;
    for (int back = 0; back < 30; ++back) {
      r_new = residual(theta + lam * step);
      if (r_new.norm() <= r.norm() || lam * step.norm() < 1e-16) break;
      lam *= 0.5;
    }
    theta += lam * step;
    const double prev = r.norm();
    r = r_new;
    converged = r.norm() <= 1e-13 * d || (prev - r.norm() < 1e-16 && r.norm() < 1e-10);
  }
  if (r.norm() > 1e-9 * (1.0 + g.m.norm()))
    throw chart_error("decompose: no convergence to the factorization");

  KakCoordinates kc;
  kc.tag = cb.tag;
  kc.theta_u = theta[0];
  kc.theta_a = theta[1];
  kc.theta_ubar = theta[2];
  kc.z_coords = Vec::Zero(int(split.z_idx.size()));
  for (int k = 0; k < int(split.z_idx.size()); ++k) kc.z_coords[k] = theta[split.z_idx[k]];
  kc.tr_coords = Vec::Zero(int(split.tr_idx.size()));
  for (int k = 0; k < int(split.tr_idx.size()); ++k) kc.tr_coords[k] = theta[split.tr_idx[k]];
  kc.z_part = GroupElement{mat_exp(combine(cb, split.z_idx, theta)), cb.tag};
  kc.tr_part = GroupElement{mat_exp(combine(cb, split.tr_idx, theta)), cb.tag};
  kc.residual = r.norm();
  return kc;
}

GroupElement h_part(const KakCoordinates& kc) {
  const Fixture& f = fixture(kc.tag);
  Mat h = f.u_flow(kc.theta_u).m * f.ubar_flow(kc.theta_ubar).m * f.a_flow(kc.theta_a).m;
  return GroupElement{h, kc.tag};
}

GroupElement reconstruct(const KakCoordinates& kc) {
  return GroupElement{h_part(kc).m * kc.z_part.m * kc.tr_part.m, kc.tag};
}

std::string kak_coordinates_to_json(const KakCoordinates& kc, const ChainBasis& cb) {
  nlohmann::json j;
  j["group"] = tag_name(kc.tag);
  j["theta_u"] = kc.theta_u;
  j["theta_a"] = kc.theta_a;
  j["theta_ubar"] = kc.theta_ubar;
  j["z"] = std::vector<double>(kc.z_coords.data(), kc.z_coords.data() + kc.z_coords.size());
  j["tr"] = std::vector<double>(kc.tr_coords.data(), kc.tr_coords.data() + kc.tr_coords.size());
  std::vector<std::string> tr_names;
  for (int jj = 0; jj < int(cb.chains.size()); ++jj)
    if (!cb.chains[jj].central)
      for (int i = 0; i <= cb.chains[jj].q; ++i) tr_names.push_back(cb.names[cb.chain_offset(jj) + i]);
  j["tr_names"] = tr_names;
  j["residual"] = kc.residual;
  return j.dump(2);
}

BowenCertificate bowen_sup(const GroupElement& g, double R, const ChainBasis& cb, int n_grid) {
  if (!(R > 0.0)) throw std::domain_error("bowen_sup: needs R > 0");
  const Mat& u = cb.triplet.u.m;
  if ((u * u).norm() > 1e-12 * (1.0 + u.norm() * u.norm()))
    throw std::logic_error("bowen_sup: flow generator not square-zero");
  const Mat x = mat_log(g.m);
  // u_t x u_{-t} = x + t[u,x] - t^2 u x u, so the squared Frobenius norm is the
  // quartic below; a 177-point grid pins its sup within factor 1.1 (Markov).
  const Mat b = u * x - x * u;
  const Mat c = -(u * x * u);
  const double c0 = trace_ip(x, x);
  const double c1 = 2.0 * trace_ip(x, b);
  const double c2 = trace_ip(b, b) + 2.0 * trace_ip(x, c);
  const double c3 = 2.0 * trace_ip(b, c);
  const double c4 = trace_ip(c, c);

  BowenCertificate cert;
  cert.n_grid = std::max(177, n_grid);
  double max_p = 0.0;
  for (int k = 0; k < cert.n_grid; ++k) {
    const double t = -R + 2.0 * R * double(k) / double(cert.n_grid - 1);
    const double p = (((c4 * t + c3) * t + c2) * t + c1) * t + c0;
    if (p > max_p) max_p = p;
  }
  cert.lo = std::sqrt(std::max(0.0, max_p));
  cert.hi = std::sqrt(1.1 * std::max(0.0, max_p));
  return cert;
}

bool bowen_member(const GroupElement& g, double R, double eps, const ChainBasis& cb, int n_grid) {
  if (!(eps > 0.0) || eps >= calib().chart_radius)
    throw std::domain_error("bowen_member: needs 0 < eps < chart radius");
  try {
    return bowen_sup(g, R, cb, n_grid).hi < eps;
  } catch (const chart_error&) {
    return false;  // no chart logarithm => already eps-far at t = 0
  }
}

bool kak_member(const GroupElement& g, double R, double eps, const ChainBasis& cb) {
  const KakCoordinates kc = decompose(g, cb);
  if (!(std::abs(kc.theta_ubar) < eps / R)) return false;
  if (!(std::abs(kc.theta_a) < eps)) return false;
  if (!(std::abs(kc.theta_u) < eps)) return false;
  return bowen_member(gmul(kc.z_part, kc.tr_part), R, eps, cb);
}

GroupElement sample_kak(const ChainBasis& cb, double R, double eps, CounterRng& rng,
                        double margin) {
  const Fixture& f = fixture(cb.tag);
  const CoordSplit split = coord_split(cb);
  const int m = cb.n_coords();
  const double box = margin * eps / (2.718281828459045 * 1.4142135623730951 * double(m));

  Vec theta = Vec::Zero(m);
  theta[0] = rng.uniform(-1.0, 1.0) * margin * eps;
  theta[1] = rng.uniform(-1.0, 1.0) * margin * eps;
  theta[2] = rng.uniform(-1.0, 1.0) * margin * eps / R;
  for (int k : split.z_idx) theta[k] = rng.uniform(-1.0, 1.0) * box;
  for (int j = 0; j < int(cb.chains.size()); ++j) {
    if (cb.chains[j].central) continue;
    const int off = cb.chain_offset(j);
    double level_scale = box;
    for (int i = 0; i <= cb.chains[j].q; ++i) {
      theta[off + i] = rng.uniform(-1.0, 1.0) * level_scale;
      level_scale /= R;
    }
  }
  GroupElement g{assemble(f, cb, split, theta), cb.tag};
  if (!kak_member(g, R, eps, cb))
    throw std::logic_error("sample_kak: box sample failed the membership certificate");
  return g;
}

double kak_stay_close(const GroupElement& g, double R, double delta, int t_grid,
                      const ChainBasis& cb) {
  if (!(delta > 0.0) || delta > calib().delta12)
    throw std::domain_error("kak_stay_close: needs 0 < delta <= delta12");
  if (!kak_member(g, R, delta, cb)) throw std::domain_error("kak_stay_close: not a member");
  const KakCoordinates kc = decompose(g, cb);
  const BestMatchParams w{kc.theta_ubar, kc.theta_a};
  const Fixture& f = fixture(cb.tag);
  const int n = 2 * std::max(1, t_grid) + 1;
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = -R + 2.0 * R * double(k) / double(n - 1);
    double phi;
    try {
      phi = best_match_eval(w, t).phi;
    } catch (const std::domain_error&) {
      throw std::runtime_error("kak_stay_close: matching singularity inside the window");
    }
    const double d = dist_id(GroupElement{f.u_flow(phi).m * g.m * f.u_flow(-t).m, cb.tag});
    if (d > worst) worst = d;
  }
  return worst;
}

bool match_to_kak(const GroupElement& g, double a, double b, double eps,
                  const ChainBasis& cb, int t_grid) {
  const KakCoordinates kc = decompose(g, cb);
  const double lim =
      kc.theta_ubar == 0.0 ? std::numeric_limits<double>::infinity() : eps / std::abs(kc.theta_ubar);
  if (!(0.0 <= a && a <= b && b <= lim * (1.0 + 1e-12)))
    throw std::domain_error("match_to_kak: interval outside [0, eps/|theta_ubar|]");
  const BestMatchParams w{kc.theta_ubar, kc.theta_a};
  const Fixture& f = fixture(cb.tag);
  const int n = std::max(2, t_grid);
  std::vector<GroupElement> slices;
  slices.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double t = a + (b - a) * double(k) / double(n - 1);
    const double phi = best_match_eval(w, t).phi;
    GroupElement gt{f.u_flow(phi).m * g.m * f.u_flow(-t).m, cb.tag};
    if (dist_id(gt) >= eps)
      throw std::domain_error("match_to_kak: closeness precondition fails on the interval");
    slices.push_back(gt);
  }
  const double r_out = std::max(b - a, 1e-9);
  for (const GroupElement& gt : slices)
    if (!kak_member(gt, r_out, calib().C12 * eps, cb)) return false;
  return true;
}

KakCoordinates rescale_by_diag(const GroupElement& g, double R, double delta,
                               const ChainBasis& cb) {
  if (!kak_member(g, R, delta, cb))
    throw std::invalid_argument("rescale_by_diag: not a Kakutani-Bowen member");
  const Fixture& f = fixture(cb.tag);
  const double p = 0.5 * std::log(R);
  GroupElement bar{f.a_flow(-p).m * g.m * f.a_flow(p).m, cb.tag};
  return decompose(bar, cb);
}

std::pair<GroupElement, double> commute_past_unipotent(const KakCoordinates& kc, double r,
                                                       double R, double delta) {
  if (!(R > 1.0) || !(delta > 0.0))
    throw std::invalid_argument("commute_past_unipotent: needs R > 1, delta > 0");
  const double tol = 1.0 + 1e-9;
  if (dist_id(h_part(kc)) > delta * tol || dist_id(kc.z_part) > delta * tol)
    throw std::invalid_argument("commute_past_unipotent: h or z part outside the delta ball");
  if (dist_id(kc.tr_part) > delta / R * tol)
    throw std::invalid_argument("commute_past_unipotent: tr part outside the delta/R ball");
  if (std::abs(r) > std::pow(R, calib().w14) * tol)
    throw std::invalid_argument("commute_past_unipotent: |r| exceeds R^w14");
  const Fixture& f = fixture(kc.tag);
  const Mat g = reconstruct(kc).m;
  const Mat h_inv = h_part(kc).m.inverse();
  const Mat z_inv = kc.z_part.m.inverse();
  GroupElement z1{f.u_flow(r).m * g * h_inv * f.u_flow(-r).m * z_inv, kc.tag};
  return {z1, dist_id(z1)};
}

QuotientKakResult kak_member_quotient(const QuotientPoint& x, const QuotientPoint& y,
                                      double R, double eps, const ChainBasis& cb) {
  const LatticeSpec& spec = lattice(cb.tag);
  const Mat target = ginv(x.lift).m * y.lift.m;  // gamma making the displacement small
  std::vector<Mat> candidates = nearby_lattice(spec, target, 4.0);
  candidates.push_back(Mat::Identity(target.rows(), target.cols()));
  QuotientKakResult res;
  std::vector<Mat> seen;
  for (const Mat& gamma : candidates) {
    bool dup = false;
    for (const Mat& s : seen) dup = dup || (s - gamma).norm() < 0.5;
    if (dup) continue;
    seen.push_back(gamma);
    GroupElement g{x.lift.m * gamma * ginv(y.lift).m, cb.tag};
    if (dist_id(g) >= calib().eps6) continue;
    try {
      if (kak_member(g, R, eps, cb)) ++res.n_qualifying;
    } catch (const chart_error&) {
    }
  }
  res.member = res.n_qualifying >= 1;
  res.ambiguous = res.n_qualifying >= 2;
  return res;
}

}  // namespace ulab
