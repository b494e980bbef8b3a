#include "ulab/constants.hpp"

#include <json.hpp>

namespace ulab {

Calibration::Calibration() {
  // Norms of the coefficient functionals a_k on {deg<=d polys bounded by 1 on [0,1]},
  // computed from the inverse Vandermonde at Chebyshev extrema (== the max coefficient
  // of the degree-d shifted Chebyshev polynomial).  Recomputed by `calibrate`.
  C1 = {1.0, 2.0, 8.0, 48.0, 256.0, 1280.0, 6912.0, 39424.0, 212992.0};
}

const Calibration& calib() {
  static const Calibration c;
  return c;
}

std::string calibration_to_json(const Calibration& c) {
  nlohmann::json j;
  j["chart_radius"] = c.chart_radius;
  j["chart_series_gate"] = c.chart_series_gate;
  j["chart_max_sqrts"] = c.chart_max_sqrts;
  j["C2"] = c.C2;
  j["delta1"] = c.delta1;
  j["C_bch"] = c.C_bch;
  j["eps_bch"] = c.eps_bch;
  j["C_tri"] = c.C_tri;
  j["eps6"] = c.eps6;
  j["eps14"] = c.eps14;
  j["delta12"] = c.delta12;
  j["C12"] = c.C12;
  j["C52"] = c.C52;
  j["C_smooth"] = c.C_smooth;
  j["smooth_eps_gate"] = c.smooth_eps_gate;
  j["w14"] = c.w14;
  j["C1"] = c.C1;
  return j.dump(2) + "\n";
}

Calibration calibration_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Calibration c;
  c.chart_radius = j.at("chart_radius").get<double>();
  c.chart_series_gate = j.at("chart_series_gate").get<double>();
  c.chart_max_sqrts = j.at("chart_max_sqrts").get<int>();
  c.C2 = j.at("C2").get<double>();
  c.delta1 = j.at("delta1").get<double>();
  c.C_bch = j.at("C_bch").get<double>();
  c.eps_bch = j.at("eps_bch").get<double>();
  c.C_tri = j.at("C_tri").get<double>();
  c.eps6 = j.at("eps6").get<double>();
  c.eps14 = j.at("eps14").get<double>();
  c.delta12 = j.at("delta12").get<double>();
  c.C12 = j.at("C12").get<double>();
  c.C52 = j.at("C52").get<double>();
  c.C_smooth = j.at("C_smooth").get<double>();
  c.smooth_eps_gate = j.at("smooth_eps_gate").get<double>();
  c.w14 = j.at("w14").get<double>();
  auto arr = j.at("C1").get<std::vector<double>>();
  for (size_t i = 0; i < c.C1.size() && i < arr.size(); ++i) c.C1[i] = arr[i];
  return c;
}

double c1_constant(int degree) {
  const auto& t = calib().C1;
  if (degree < 0) degree = 0;
  if (degree >= static_cast<int>(t.size())) degree = static_cast<int>(t.size()) - 1;
  return t[static_cast<size_t>(degree)];
}

}  // namespace ulab
