#include "tlsmap/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tlsmap/errors.hpp"

namespace tlsmap {

std::vector<double> VoltageSchedule::voltages_at(long step) const {
  if (step < 0 || step >= total_steps())
    throw ConfigError("voltages_at: step index out of range");
  std::size_t n = electrode_order.size();
  long seg = step / steps_per_segment;
  int local = static_cast<int>(step % steps_per_segment);
  long cycles = seg / static_cast<long>(n);
  long pos_in_cycle = seg % static_cast<long>(n);

  std::vector<double> v(n, v_start);
  for (std::size_t r = 0; r < n; ++r) {
    long completed = cycles + (static_cast<long>(r) < pos_in_cycle ? 1 : 0);
    v[r] += completed * segment_size;
    if (static_cast<long>(r) == pos_in_cycle) v[r] += (local + 1) * step_size;
  }
  return v;
}

std::vector<std::vector<double>> VoltageSchedule::voltage_table() const {
  std::vector<std::vector<double>> table;
  table.reserve(total_steps());
  for (long s = 0; s < total_steps(); ++s) table.push_back(voltages_at(s));
  return table;
}

VoltageSchedule build_schedule(double v_start, double v_end,
                               double segment_size, double step_size,
                               const std::vector<Conductor>& electrode_order) {
  if (electrode_order.empty())
    throw ConfigError("build_schedule: electrode order is empty");
  for (std::size_t i = 0; i < electrode_order.size(); ++i) {
    if (!is_electrode(electrode_order[i]))
      throw ConfigError("build_schedule: '" +
                        conductor_name(electrode_order[i]) +
                        "' is not a sweepable electrode");
    for (std::size_t j = i + 1; j < electrode_order.size(); ++j)
      if (electrode_order[i] == electrode_order[j])
        throw ConfigError("build_schedule: duplicate electrode in order");
  }
  if (!(segment_size > 0))
    throw ConfigError("build_schedule: segment_size must be positive");
  if (!(step_size > 0))
    throw ConfigError("build_schedule: step_size must be positive");
  if (!(v_end > v_start))
    throw ConfigError("build_schedule: v_end must exceed v_start");

  double steps_f = segment_size / step_size;
  if (std::abs(steps_f - std::round(steps_f)) > 1e-9 * steps_f)
    throw ConfigError("build_schedule: step_size must divide segment_size");
  double segs_f = (v_end - v_start) / segment_size;
  if (std::abs(segs_f - std::round(segs_f)) > 1e-9 * std::max(segs_f, 1.0))
    throw ConfigError(
        "build_schedule: segment_size must divide the sweep range");

  VoltageSchedule sched;
  sched.v_start = v_start;
  sched.v_end = v_end;
  sched.segment_size = segment_size;
  sched.step_size = step_size;
  sched.electrode_order = electrode_order;
  sched.steps_per_segment = static_cast<int>(std::round(steps_f));

  long per_electrode = static_cast<long>(std::round(segs_f));
  long total = per_electrode * static_cast<long>(electrode_order.size());
  sched.segments.reserve(total);
  for (long k = 0; k < total; ++k) {
    sched.segments.push_back({electrode_order[k % electrode_order.size()],
                              sched.steps_per_segment, step_size});
  }
  return sched;
}

}  // namespace tlsmap
