#pragma once

#include <array>
#include <string>

#include "ulab/linalg.hpp"

namespace ulab {

// Calibrated constants.  The source statements assert these constants exist; the
// shipped values are produced by the `calibrate` subcommand (dense sampling per
// group) and mirrored in data/calibration.json.  Tests and experiments read them
// from here so results are reproducible without the data file.
struct Calibration {
  // Metric chart: d(g,h) = ||log(g h^{-1})|| while the principal log converges and
  // stays below chart_radius; beyond that a symmetric coarse surrogate is used.
  double chart_radius = 1.2;
  double chart_series_gate = 0.25;  // direct log series below this ||q - I||
  int chart_max_sqrts = 40;

  // Norm growth bound: dist(g,e) < R implies ||g|| < C2 * exp(R / delta1).
  double C2 = 8.0;
  double delta1 = 1.0;

  // log(exp X exp Y) - (X+Y) bound ||.|| <= C_bch ||X|| ||Y|| on the bch ball.
  double C_bch = 2.0;
  double eps_bch = 0.1;

  // Quadratic slack constant for the chordal-metric triangle inequality test.
  double C_tri = 2.5;

  // Chart radius for the product-of-exponentials coordinate decomposition.
  double eps6 = 0.35;

  // Best-matching reparameterization chart constant (|theta_a| < eps14 etc.).
  // 0.04 keeps the worst-case slope deviation 1/(e^{-e} - e*e^e)^2 - 1 = 0.184
  // under sqrt(eps) = 0.2; at 0.05 the bound fails (0.238 > 0.224).
  double eps14 = 0.04;
  // Stay-close chart constant: members up to this delta obey the 10*delta bound.
  double delta12 = 0.04;

  // Interval-to-ball constant: matched intervals land in Kak(b-a, C12*eps).
  double C12 = 24.0;
  // Interval-cover closeness constant (best-match distance < C52 * delta on covers).
  double C52 = 48.0;

  // Smoothed-matching constant: slope and length degrade by at most C_smooth*sqrt(eps).
  double C_smooth = 12.0;
  double smooth_eps_gate = 1e-3;

  // Exponent window for commuting a bounded unipotent time past the decomposition.
  double w14 = 0.01;

  // Coefficient <-> sup bounds on [0,T]: |a_k| <= C1(d) T^{-k} eps when sup <= eps,
  // and conversely.  Shifted-Chebyshev-calibrated, degrees 0..8.
  std::array<double, 9> C1{};

  Calibration();
};

const Calibration& calib();

// Serialize the table (data/calibration.json round trip used by `calibrate`).
std::string calibration_to_json(const Calibration& c);
Calibration calibration_from_json(const std::string& text);

double c1_constant(int degree);

}  // namespace ulab
