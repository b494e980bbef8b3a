#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ulab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class GroupTag { SL2, SL2xSL2, SL3 };

inline std::string tag_name(GroupTag t) {
  switch (t) {
    case GroupTag::SL2: return "sl2";
    case GroupTag::SL2xSL2: return "sl2xsl2";
    case GroupTag::SL3: return "sl3corner";
  }
  return "?";
}

inline GroupTag tag_from_name(const std::string& s) {
  if (s == "sl2") return GroupTag::SL2;
  if (s == "sl2xsl2") return GroupTag::SL2xSL2;
  if (s == "sl3corner" || s == "sl3") return GroupTag::SL3;
  throw std::invalid_argument("unknown fixture name: " + s);
}

// Group elements are real matrices with unit determinant; algebra elements are
// traceless real matrices of the same size.  The tag identifies the ambient group.
struct GroupElement {
  Mat m;
  GroupTag tag;
};

struct AlgebraElement {
  Mat m;
  GroupTag tag;
};

struct Metric {
  enum class Kind { RightInvariantChart, HilbertSchmidt };
  Kind kind = Kind::RightInvariantChart;
  double tolerance = 1e-9;
};

inline double fro(const Mat& m) { return m.norm(); }

inline bool finite(const Mat& m) { return m.allFinite(); }

inline Mat ident(int n) { return Mat::Identity(n, n); }

// Standard matrix commutator.
inline Mat bracket(const Mat& x, const Mat& y) { return x * y - y * x; }

// Trace-form inner product on the algebra.
inline double trace_ip(const Mat& x, const Mat& y) { return (x.transpose() * y).trace(); }

struct chart_error : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace ulab
