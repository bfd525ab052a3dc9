#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tlsmap/scan.hpp"
#include "tlsmap/schedule.hpp"

namespace tlsmap {

struct TracePoint {
  long step = 0;
  double frequency_ghz = 0.0;
  double depth = 0.0;      // population units below the step baseline
  double sigma_ghz = 0.0;  // frequency uncertainty
};

struct TraceData {
  std::vector<TracePoint> points;  // step strictly increasing
  std::string source_scan;
  int trace_index = -1;

  double min_frequency() const;
};

struct ExtractionOptions {
  double min_depth = 0.04;      // dip depth threshold below baseline
  double max_jump_ghz = 0.01;   // per-step linking window
  int min_points = 10;          // shorter traces discarded
  int max_gap_steps = 40;       // a trace survives this many missed steps
  double sigma_floor = 1e-3;    // noise floor for the uncertainty estimate
};

// Dip detection and greedy linking. Per step, the baseline is the median
// population; local minima deeper than min_depth become candidates whose
// frequency is refined from the three points around the minimum. Candidates
// attach to the open trace whose extrapolated frequency is closest, within
// max_jump_ghz (ties: lower frequency, then older trace).
std::vector<TraceData> extract_traces(const SpectroscopyScan& scan,
                                      const ExtractionOptions& options = {});

// Externally labeled mode: anchors give approximate (step, frequency)
// points of one trace; each snaps to the nearest local minimum within
// snap_pixels, bypassing threshold detection.
TraceData trace_from_labels(const SpectroscopyScan& scan,
                            const std::vector<std::pair<long, double>>& anchors,
                            int snap_pixels = 5,
                            const ExtractionOptions& options = {});

struct GammaEstimate {
  Conductor electrode = Conductor::Vacuum;
  double value = 0.0;  // GHz per volt
  double se = 0.0;
};

struct TraceFit {
  double delta_over_h = 0.0;  // GHz
  double delta_se = 0.0;
  double epsilon0_over_h = 0.0;  // GHz
  double epsilon0_se = 0.0;
  std::vector<GammaEstimate> gammas;   // identifiable electrodes only
  std::vector<Conductor> missing;      // electrodes without voltage coverage
  double residual_rms_ghz = 0.0;       // weighted RMS in GHz
  double chi2 = 0.0;
  long n_points = 0;
  bool converged = false;
  bool crossed_symmetry = false;
  double max_abs_correlation = 0.0;
  std::string source_scan;
  int trace_index = -1;

  double zero_voltage_frequency() const;
  std::optional<double> gamma_for(Conductor electrode) const;
};

struct FitOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;        // relative chi^2 improvement
  double min_voltage_span = 1e-9;  // V; below this an electrode is absent
  double sigma_floor_ghz = 1e-6;   // weight floor
};

// Weighted Levenberg-Marquardt fit of
//   f(step) = sqrt((D)^2 + (e0 + sum_i g_i V_i(step))^2)
// with multi-start initialization over branch-sign patterns. The global
// (e0, g) sign ambiguity is resolved by making the largest-|g| electrode
// positive. Electrodes whose voltage never varies over the trace are
// reported in `missing`; fewer than two identifiable electrodes is an error.
TraceFit fit_hyperbola(const TraceData& trace, const VoltageSchedule& schedule,
                       const FitOptions& options = {});

// One JSON record per line.
void save_traces_jsonl(const std::vector<TraceData>& traces,
                       const std::string& path);
std::vector<TraceData> load_traces_jsonl(const std::string& path);
void save_fits_jsonl(const std::vector<TraceFit>& fits,
                     const std::string& path);
std::vector<TraceFit> load_fits_jsonl(const std::string& path);

// Collapses near-identical fits (same TLS seen in several trace fragments):
// two fits merge when delta and every shared gamma agree within rel_tol;
// the lower-chi2 representative survives. Order of survivors follows the
// input order.
std::vector<TraceFit> dedup_fits(const std::vector<TraceFit>& fits,
                                 double rel_tol = 0.05);

// Re-joins fragments of one defect's trace: a defect that keeps leaving the
// scan window comes back as several short traces whose individual fits agree
// only loosely. Fits whose parameters match up to a global sign flip have
// their points pooled and refitted; a merge sticks only when the pooled fit
// converges within max_residual_ghz, so distinct defects that merely look
// alike stay separate. `traces` and `fits` are parallel arrays.
struct FragmentPool {
  std::vector<TraceData> traces;
  std::vector<TraceFit> fits;
};
FragmentPool merge_trace_fragments(std::vector<TraceData> traces,
                                   std::vector<TraceFit> fits,
                                   const VoltageSchedule& schedule,
                                   const FitOptions& options,
                                   double max_residual_ghz);

}  // namespace tlsmap
