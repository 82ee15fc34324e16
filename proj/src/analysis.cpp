#include "vsgrasp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "vsgrasp/error.hpp"

namespace vsgrasp {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "fit_line needs two or more paired samples");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "fit_line needs distinct abscissae");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.samples = static_cast<int>(x.size());
  return fit;
}

LinearFit fit_log_error(const ServoTrace& trace) {
  std::vector<double> t, ly;
  for (const auto& row : trace.rows) {
    if (row.error_px > 0.0) {
      t.push_back(row.time_s);
      ly.push_back(std::log(row.error_px));
    }
  }
  return fit_line(t, ly);
}

double time_to_half_error(const ServoTrace& trace) {
  if (trace.rows.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  const double half = 0.5 * trace.rows.front().error_px;
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const TraceRow& a = trace.rows[i - 1];
    const TraceRow& b = trace.rows[i];
    if (b.error_px <= half) {
      if (b.error_px <= 0.0 || a.error_px <= 0.0) {
        return b.time_s;
      }
      const double la = std::log(a.error_px);
      const double lb = std::log(b.error_px);
      const double f = (std::log(half) - la) / (lb - la);
      return a.time_s + f * (b.time_s - a.time_s);
    }
  }
  return std::numeric_limits<double>::infinity();
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "median of an empty set");
  }
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

void write_trace_csv(std::ostream& out, const ServoTrace& trace) {
  out << "step,time_s,error_px,vx,vy,vz,wx,wy,wz,pose_rms_px,ms_pose,ms_jacobian,ms_control\n";
  out << std::setprecision(17);
  for (const auto& r : trace.rows) {
    out << r.step << ',' << r.time_s << ',' << r.error_px << ',' << r.screw.linear.x() << ','
        << r.screw.linear.y() << ',' << r.screw.linear.z() << ',' << r.screw.angular.x() << ','
        << r.screw.angular.y() << ',' << r.screw.angular.z() << ',' << r.pose_rms_px << ','
        << r.ms_pose << ',' << r.ms_jacobian << ',' << r.ms_control << '\n';
  }
}

}  // namespace vsgrasp
