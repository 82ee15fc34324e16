#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "vsgrasp/servo_sim.hpp"

namespace vsgrasp {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int samples = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least-squares fit of ln(error_px) against time over rows with positive error.
LinearFit fit_log_error(const ServoTrace& trace);

/// First time the error reaches half its initial value, log-linearly
/// interpolated between samples; +inf when it never does.
double time_to_half_error(const ServoTrace& trace);

double median(std::vector<double> values);

void write_trace_csv(std::ostream& out, const ServoTrace& trace);

}  // namespace vsgrasp
