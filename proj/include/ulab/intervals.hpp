#pragma once

#include <string>
#include <vector>

#include "ulab/lattice.hpp"
#include "ulab/linalg.hpp"
#include "ulab/matching.hpp"

namespace ulab {

// Interval stored as (left end, length).  Lengths are kept exact even when
// the separation scale pushes the right endpoint to ~2^400, where storing
// (lo, hi) would round small lengths away entirely.
struct BlockInterval {
  double lo = 0.0;
  double len = 0.0;
  double hi() const { return lo + len; }
};

// A partition of [0, R] into junk intervals plus families of blocks, under
// the gap law: every family holds at most n_max blocks, the families' block
// lengths total at least (1 - 1e-3) R, and blocks of different families are
// separated by at least max(R21(C, w, n_max), C min(l, l')^(1+w)) where l, l'
// are the two block lengths.
struct BlockPartition {
  std::vector<BlockInterval> junk;
  std::vector<std::vector<BlockInterval>> families;
  double R = 0.0;
  double C = 1.0;   // separation constant of the gap law
  double w = 1.0;   // separation exponent of the gap law
  int n_max = 1;    // cap on blocks per family
};

// Separation threshold R21(C, w, n_max) > 16 n_max making the dyadic
// selection below sound: beyond the crude floor it enforces
// R21^w >= 2^200 n_max^2 / C-style growth together with summability of the
// dyadic tail sum_{n >= n0} 2^(n+2) / (C 2^(n(1+w))) < 1 / (16 n_max) at
// n0 = floor(log2(R21 / (16 n_max))) - 1.  Solved in log2 space; the value
// is astronomically large for small w and throws std::domain_error once it
// leaves double-precision range.
double gap_lemma_r2(double C, double w, int n_max);

struct GapSelection {
  BlockInterval chosen;
  int family = -1;           // index into BlockPartition::families
  int index_in_family = -1;  // index of the chosen block inside its family
  double family_total = 0.0; // total block length of the chosen family
};

// Constructive block selector: given a partition satisfying the gap law on
// [0, R] with R >= R21, returns a block of length >= R / (32 n_max) whose
// family totals at least (3/4) R.  The construction takes one longest block
// per family (leftmost on ties), discards those shorter than R21 / (16 n_max),
// groups the rest into dyadic length classes, and keeps the longest block of
// the topmost class containing exactly one block.  Hypothesis violations
// throw std::invalid_argument naming the violated clause; failure of the
// guaranteed conclusions would be a bug and throws std::logic_error.
GapSelection gap_lemma_select(const BlockPartition& bp);

// Independent check of the selector's promise: true iff some block of length
// at least R / (32 n_max) sits in a family whose blocks total at least
// (3/4) R.  Pure scan with no hypothesis validation so it cannot share a
// code path with the selector.
bool gap_lemma_bruteforce(const BlockPartition& bp);

// One block of the matched-interval cover of an orbit pair: a grid-snapped
// window [t_lo, t_hi] of good times, the lattice translate identified at the
// block's anchor (center-normalized), the first-seen class index of that
// translate, and the aligned reduced anchor lifts the window scan used.
struct CoverBlock {
  double t_lo = 0.0;
  double t_hi = 0.0;
  int class_id = -1;
  GroupElement gamma;
  GroupElement anchor_x;
  GroupElement anchor_y;
};

// Greedy cover of the good times of a matching by blocks of stable lattice
// identification.  good_times must be sorted times inside the matched set of
// m; delta is the closeness scale (the tracked translate at a good time t is
// the unique gamma with d(u_{h(t)} x, u_t y gamma) < delta).  Each block
// starts at the first uncovered good time, looks up the window of admissible
// extension from the polynomial interval cover at its anchor (reusing the
// window of the earliest prior block carrying the same translate, when one
// exists), and ends at the last good time in that window still delta-matched
// against the anchor lifts.  Throws std::invalid_argument on malformed input
// and std::logic_error when a good time fails to track or to fall in its
// window (either means the times were not good for this delta).
std::vector<CoverBlock> build_orbit_cover(const QuotientPoint& x, const QuotientPoint& y,
                                          const MatchingResult& m,
                                          const std::vector<double>& good_times, double delta);

// JSON dump of a cover: per block the window, class id, translate entries,
// and a generator word for 2x2 translates.
std::string cover_to_json(const std::vector<CoverBlock>& blocks);

// Word for an integer unimodular 2x2 matrix in the generators
// T = [[1,1],[0,1]] and S = [[0,-1],[1,0]], via the Euclidean algorithm on
// the first column ("e" for the identity); multiplying the word back yields
// the input exactly.
std::string sl2z_word(const Mat& gamma);

}  // namespace ulab
