#pragma once

#include <vector>

#include "tlsmap/geometry.hpp"

namespace tlsmap {

struct ScheduleSegment {
  Conductor active_electrode = Conductor::Vacuum;
  int step_count = 0;
  double step_size = 0.0;  // V
};

// Segmented multi-electrode ramp. Every swept electrode starts at v_start;
// each segment advances exactly one electrode by segment_size in step_size
// increments while the others hold their accumulated level, cycling through
// electrode_order until every electrode reaches v_end.
struct VoltageSchedule {
  double v_start = 0.0;      // V
  double v_end = 0.0;        // V
  double segment_size = 0.0; // V per segment
  double step_size = 0.0;    // V per step
  std::vector<Conductor> electrode_order;
  std::vector<ScheduleSegment> segments;
  int steps_per_segment = 0;

  long total_steps() const {
    return static_cast<long>(segments.size()) * steps_per_segment;
  }

  // Cumulative voltage of each electrode (aligned with electrode_order)
  // after global step `step` has been applied.
  std::vector<double> voltages_at(long step) const;

  // total_steps() x electrode_order.size() table of cumulative voltages.
  std::vector<std::vector<double>> voltage_table() const;
};

VoltageSchedule build_schedule(double v_start, double v_end,
                               double segment_size, double step_size,
                               const std::vector<Conductor>& electrode_order);

}  // namespace tlsmap
