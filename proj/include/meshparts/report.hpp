#pragma once

#include <charconv>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/pca.hpp"

namespace meshparts {

namespace detail {

// Locale-independent decimal formatting for CSV cells.
inline std::string csv_number(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace detail

struct LabeledEncodings {
  std::string label;
  DenseMatrix rows;  // M_i x Z
};

/// 2-sigma covariance ellipse of a label's 2D embedding.
struct EllipseSummary {
  std::string label;
  std::size_t count = 0;
  double center[2] = {0.0, 0.0};
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // radians of the major axis
  double area = 0.0;
};

struct DiversityReport {
  std::string csv;          // label,pc1,pc2 rows in input order
  std::string summary_csv;  // one ellipse row per label
  DenseMatrix coords;       // all embedded points, input order
  std::vector<EllipseSummary> ellipses;
};

/// Joint PCA embedding of every labeled set plus per-label ellipse summaries.
inline DiversityReport diversity_report(const std::vector<LabeledEncodings>& sets) {
  require(!sets.empty(), "diversity_report: no sets given");
  std::set<std::string> labels;
  std::size_t total = 0;
  const std::size_t z = sets.front().rows.cols;
  for (const auto& s : sets) {
    require(s.rows.rows >= 1, "diversity_report: set '" + s.label + "' is empty");
    require(s.rows.cols == z, "diversity_report: encoding widths differ");
    if (!labels.insert(s.label).second)
      throw DataError("diversity_report: duplicate label '" + s.label + "'");
    total += s.rows.rows;
  }

  DenseMatrix all(total, z);
  std::size_t at = 0;
  for (const auto& s : sets) {
    for (std::size_t i = 0; i < s.rows.rows; ++i, ++at)
      for (std::size_t j = 0; j < z; ++j) all(at, j) = s.rows(i, j);
  }

  DiversityReport report;
  report.coords = pca_embed(all);

  report.csv = "label,pc1,pc2\n";
  at = 0;
  for (const auto& s : sets) {
    EllipseSummary e;
    e.label = s.label;
    e.count = s.rows.rows;
    const std::size_t begin = at;
    for (std::size_t i = 0; i < s.rows.rows; ++i, ++at) {
      report.csv += s.label + "," + detail::csv_number(report.coords(at, 0)) + "," +
                    detail::csv_number(report.coords(at, 1)) + "\n";
      e.center[0] += report.coords(at, 0);
      e.center[1] += report.coords(at, 1);
    }
    e.center[0] /= static_cast<double>(e.count);
    e.center[1] /= static_cast<double>(e.count);

    // 2x2 covariance of this label's points, eigen-decomposed in closed form
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = begin; i < begin + e.count; ++i) {
      const double dx = report.coords(i, 0) - e.center[0];
      const double dy = report.coords(i, 1) - e.center[1];
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
    if (e.count > 1) {
      const double inv = 1.0 / static_cast<double>(e.count - 1);
      sxx *= inv;
      syy *= inv;
      sxy *= inv;
    } else {
      sxx = syy = sxy = 0.0;
    }
    const double mean = 0.5 * (sxx + syy);
    const double root = std::sqrt(std::max(0.0, mean * mean - (sxx * syy - sxy * sxy)));
    const double l1 = std::max(0.0, mean + root);
    const double l2 = std::max(0.0, mean - root);
    e.semi_major = 2.0 * std::sqrt(l1);
    e.semi_minor = 2.0 * std::sqrt(l2);
    e.angle = (sxy == 0.0 && sxx >= syy) ? 0.0 : std::atan2(l1 - sxx, sxy);
    const double pi = 3.14159265358979323846;
    e.area = pi * e.semi_major * e.semi_minor;
    report.ellipses.push_back(e);
  }

  report.summary_csv = "label,count,center_pc1,center_pc2,semi_major,semi_minor,angle_rad,area\n";
  for (const auto& e : report.ellipses) {
    report.summary_csv += e.label + "," + std::to_string(e.count) + "," +
                          detail::csv_number(e.center[0]) + "," + detail::csv_number(e.center[1]) +
                          "," + detail::csv_number(e.semi_major) + "," +
                          detail::csv_number(e.semi_minor) + "," + detail::csv_number(e.angle) +
                          "," + detail::csv_number(e.area) + "\n";
  }
  return report;
}

}  // namespace meshparts
