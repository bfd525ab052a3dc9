#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tlsmap/errors.hpp"
#include "tlsmap/trace_fit.hpp"

namespace tlsmap {
namespace {

struct Candidate {
  double frequency_ghz;
  double depth;
  double sigma_ghz;
};

double row_median(const double* row, std::size_t n) {
  std::vector<double> copy(row, row + n);
  std::size_t mid = n / 2;
  std::nth_element(copy.begin(), copy.begin() + mid, copy.end());
  double hi = copy[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(copy.begin(), copy.begin() + mid);
  return 0.5 * (lo + hi);
}

// Refine a pixel minimum with the parabola through its neighbors; the
// vertex offset is clamped to half a pixel.
double parabolic_offset(double left, double center, double right) {
  double denom = left - 2.0 * center + right;
  if (denom <= 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

// A swap dip rides on an exponential: -ln(P/baseline) is Lorentzian in
// detuning, so its reciprocal is quadratic. The reciprocal parabola finds
// the center exactly for an isolated clean dip; it needs all three points
// clearly below baseline, otherwise the plain parabola is safer.
double dip_offset(double left, double center, double right, double baseline,
                  double sigma_eff) {
  double guard = std::max(5.0 * sigma_eff, 1e-12);
  if (left < baseline - guard && right < baseline - guard && center > 0 &&
      left > 0 && right > 0) {
    double ul = 1.0 / std::log(baseline / left);
    double uc = 1.0 / std::log(baseline / center);
    double ur = 1.0 / std::log(baseline / right);
    double denom = ul - 2.0 * uc + ur;
    if (denom > 0.0) {
      double offset = 0.5 * (ul - ur) / denom;
      if (std::abs(offset) <= 0.5) return offset;
    }
  }
  return parabolic_offset(left, center, right);
}

std::vector<Candidate> find_dips(const SpectroscopyScan& scan, long step,
                                 const ExtractionOptions& opt) {
  const std::size_t nf = scan.freq_count();
  const double* row = &scan.population[static_cast<std::size_t>(step) * nf];
  double baseline = row_median(row, nf);
  double freq_step =
      scan.probe_frequencies_ghz[1] - scan.probe_frequencies_ghz[0];
  double sigma_eff = std::max(scan.noise_sigma, opt.sigma_floor);

  std::vector<Candidate> dips;
  for (std::size_t f = 1; f + 1 < nf; ++f) {
    if (!(row[f] < row[f - 1] && row[f] <= row[f + 1])) continue;
    double depth = baseline - row[f];
    if (depth <= opt.min_depth) continue;
    double offset =
        dip_offset(row[f - 1], row[f], row[f + 1], baseline, sigma_eff);
    double freq = scan.probe_frequencies_ghz[f] + offset * freq_step;
    double snr = depth / sigma_eff;
    dips.push_back({freq, depth, freq_step / std::sqrt(std::max(snr, 1.0))});
  }
  return dips;
}

struct OpenTrace {
  TraceData data;
  long last_step;
};

}  // namespace

double TraceData::min_frequency() const {
  double best = points.empty() ? 0.0 : points[0].frequency_ghz;
  for (const TracePoint& p : points) best = std::min(best, p.frequency_ghz);
  return best;
}

std::vector<TraceData> extract_traces(const SpectroscopyScan& scan,
                                      const ExtractionOptions& options) {
  if (scan.steps() < 2 || scan.freq_count() < 3)
    throw ConfigError("extract_traces: scan needs >= 2 steps and >= 3 frequencies");
  if (!(options.min_depth > 0))
    throw ConfigError("extract_traces: min_depth must be positive");

  std::vector<OpenTrace> open;
  std::vector<TraceData> closed;

  auto retire = [&](OpenTrace& t) {
    if (static_cast<int>(t.data.points.size()) >= options.min_points)
      closed.push_back(std::move(t.data));
  };

  const double f_lo = scan.probe_frequencies_ghz.front();
  const double f_hi = scan.probe_frequencies_ghz.back();
  const double freq_step =
      scan.probe_frequencies_ghz[1] - scan.probe_frequencies_ghz[0];

  // Crossing traces separate by their local slopes, so candidates are
  // matched against a short linear extrapolation instead of the bare last
  // point. A trace extrapolated past a window edge goes dormant (NaN):
  // letting it camp at the edge would capture the next defect that drifts
  // in. Its re-entry starts a fresh trace and the fragments are pooled
  // after fitting.
  auto predict = [&](const OpenTrace& t, long step) {
    const std::vector<TracePoint>& pts = t.data.points;
    const TracePoint& last = pts.back();
    double pred = last.frequency_ghz;
    if (pts.size() >= 2) {
      const TracePoint& prev = pts[pts.size() - 2];
      long gap = last.step - prev.step;
      if (gap >= 1 && gap <= 3) {
        double slope = (last.frequency_ghz - prev.frequency_ghz) / gap;
        pred += slope * static_cast<double>(step - last.step);
      }
    }
    if (pred < f_lo - 2.0 * freq_step || pred > f_hi + 2.0 * freq_step)
      return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(pred, f_lo, f_hi);
  };

  for (long step = 0; step < scan.steps(); ++step) {
    std::vector<Candidate> dips = find_dips(scan, step, options);

    std::vector<double> preds(open.size());
    for (std::size_t t = 0; t < open.size(); ++t)
      preds[t] = predict(open[t], step);

    // Where two traces cross, their dips blend into one minimum whose center
    // is a weighted mix of both. A candidate expected by two traces at close
    // range is such a blend: drop it and let the traces coast through the
    // crossing on their gap allowance.
    const double ambiguous = 2.0 * freq_step;
    std::vector<uint8_t> blended(dips.size(), 0);
    for (std::size_t c = 0; c < dips.size(); ++c) {
      int claims = 0;
      for (double pred : preds)
        if (std::abs(dips[c].frequency_ghz - pred) <= ambiguous) ++claims;
      if (claims >= 2) blended[c] = 1;
    }

    // All admissible (trace, candidate) pairs, best jumps first. Ties pick
    // the lower frequency, then the older trace, keeping linking
    // deterministic.
    struct Pair {
      double jump;
      double freq;
      std::size_t trace;
      std::size_t cand;
    };
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < open.size(); ++t) {
      for (std::size_t c = 0; c < dips.size(); ++c) {
        if (blended[c]) continue;
        double jump = std::abs(dips[c].frequency_ghz - preds[t]);
        if (jump <= options.max_jump_ghz)
          pairs.push_back({jump, dips[c].frequency_ghz, t, c});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.jump != b.jump) return a.jump < b.jump;
      if (a.freq != b.freq) return a.freq < b.freq;
      return a.trace < b.trace;
    });

    std::vector<uint8_t> trace_used(open.size(), 0);
    std::vector<uint8_t> cand_used(dips.size(), 0);
    for (const Pair& p : pairs) {
      if (trace_used[p.trace] || cand_used[p.cand]) continue;
      trace_used[p.trace] = 1;
      cand_used[p.cand] = 1;
      const Candidate& c = dips[p.cand];
      open[p.trace].data.points.push_back(
          {step, c.frequency_ghz, c.depth, c.sigma_ghz});
      open[p.trace].last_step = step;
    }

    for (std::size_t c = 0; c < dips.size(); ++c) {
      if (cand_used[c] || blended[c]) continue;
      OpenTrace t;
      t.data.points.push_back(
          {step, dips[c].frequency_ghz, dips[c].depth, dips[c].sigma_ghz});
      t.last_step = step;
      open.push_back(std::move(t));
    }

    // Retire traces that have gone quiet. A trace that misses a step while
    // parked against a window edge has almost certainly slid out: the edge
    // bin can never be a local minimum, so an exiting dip stops producing
    // candidates while another defect can drift in under the stale
    // prediction. Closing immediately hands any re-entry to a fresh
    // fragment; pooling after the fit reunites false exits.
    const double edge_zone = 2.0 * freq_step;
    for (std::size_t t = open.size(); t-- > 0;) {
      bool missed = open[t].last_step != step;
      double last_freq = open[t].data.points.back().frequency_ghz;
      bool at_edge =
          last_freq <= f_lo + edge_zone || last_freq >= f_hi - edge_zone;
      if ((missed && at_edge) ||
          step - open[t].last_step > options.max_gap_steps) {
        retire(open[t]);
        open.erase(open.begin() + t);
      }
    }
  }
  for (OpenTrace& t : open) retire(t);

  // Stable output order: by first step, then first frequency.
  std::sort(closed.begin(), closed.end(),
            [](const TraceData& a, const TraceData& b) {
              if (a.points.front().step != b.points.front().step)
                return a.points.front().step < b.points.front().step;
              return a.points.front().frequency_ghz <
                     b.points.front().frequency_ghz;
            });
  for (std::size_t i = 0; i < closed.size(); ++i)
    closed[i].trace_index = static_cast<int>(i);
  return closed;
}

TraceData trace_from_labels(const SpectroscopyScan& scan,
                            const std::vector<std::pair<long, double>>& anchors,
                            int snap_pixels, const ExtractionOptions& options) {
  if (anchors.empty())
    throw ConfigError("trace_from_labels: no anchor points supplied");
  const std::size_t nf = scan.freq_count();
  double freq_step =
      scan.probe_frequencies_ghz[1] - scan.probe_frequencies_ghz[0];
  double sigma_eff = std::max(scan.noise_sigma, options.sigma_floor);

  TraceData trace;
  for (const auto& [step, freq] : anchors) {
    if (step < 0 || step >= scan.steps())
      throw ConfigError("trace_from_labels: anchor step out of range");
    const double* row = &scan.population[static_cast<std::size_t>(step) * nf];
    double baseline = row_median(row, nf);

    long center = std::lround((freq - scan.probe_frequencies_ghz[0]) / freq_step);
    center = std::clamp(center, 1L, static_cast<long>(nf) - 2);
    long best = -1;
    for (long f = std::max(1L, center - snap_pixels);
         f <= std::min(static_cast<long>(nf) - 2, center + snap_pixels); ++f) {
      if (row[f] < row[f - 1] && row[f] <= row[f + 1] &&
          (best < 0 || row[f] < row[best]))
        best = f;
    }
    if (best < 0) best = center;  // no local minimum nearby: take the pixel

    double offset =
        dip_offset(row[best - 1], row[best], row[best + 1], baseline, sigma_eff);
    double depth = std::max(baseline - row[best], 0.0);
    double snr = depth / sigma_eff;
    trace.points.push_back({step,
                            scan.probe_frequencies_ghz[best] + offset * freq_step,
                            depth, freq_step / std::sqrt(std::max(snr, 1.0))});
  }
  std::sort(trace.points.begin(), trace.points.end(),
            [](const TracePoint& a, const TracePoint& b) { return a.step < b.step; });
  trace.points.erase(std::unique(trace.points.begin(), trace.points.end(),
                                 [](const TracePoint& a, const TracePoint& b) {
                                   return a.step == b.step;
                                 }),
                     trace.points.end());
  return trace;
}

}  // namespace tlsmap
