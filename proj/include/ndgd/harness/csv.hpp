#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>

#include "ndgd/dynamics.hpp"

namespace ndgd {

inline constexpr const char* kTrajectorySchema = "ndgd-trajectory/1";
inline constexpr const char* kSummarySchema = "ndgd-summary/1";

// Shortest round-trip-safe text with 17 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (res.ec != std::errc()) return "nan";
  return std::string(buf, res.ptr);
}

inline std::string trajectory_header(std::size_t m, std::size_t n, bool wide) {
  std::string h = "iter,q_value,q_grad_norm,consensus_err,f_of_mean";
  for (std::size_t j = 0; j < n; ++j) h += ",mean_x_" + std::to_string(j + 1);
  h += ",dist_to_ref";
  if (wide) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) h += ",x_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
  }
  return h;
}

inline std::string trajectory_row(const TrajectoryRecord& r, bool wide) {
  std::string row = std::to_string(r.iteration);
  auto put = [&row](double v) {
    row += ',';
    row += format_double(v);
  };
  put(r.q_value);
  put(r.q_grad_norm);
  put(r.consensus_err);
  put(r.f_of_mean);
  for (Eigen::Index j = 0; j < r.mean.size(); ++j) put(r.mean(j));
  put(r.mean_to_ref ? r.mean_to_ref->distance : std::nan(""));
  if (wide && r.blocks) {
    for (Eigen::Index k = 0; k < r.blocks->flat().size(); ++k) put(r.blocks->flat()(k));
  }
  return row;
}

// Comment line with the schema tag, fixed header, one row per record; LF endings.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t m, std::size_t n, bool wide) {
  out << "# " << kTrajectorySchema << '\n';
  out << trajectory_header(m, n, wide) << '\n';
  for (const auto& r : traj.records) out << trajectory_row(r, wide) << '\n';
}

}  // namespace ndgd
