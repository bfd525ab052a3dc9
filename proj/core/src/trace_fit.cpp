#include "tlsmap/trace_fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlsmap/errors.hpp"

namespace tlsmap {
namespace {

using nlohmann::json;

// Dense Gaussian elimination with partial pivoting; fine at p <= 6.
bool solve_linear(std::vector<double> a, std::vector<double> b, int n,
                  std::vector<double>& x) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < 1e-300) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    double inv = 1.0 / a[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      double factor = a[r * n + col] * inv;
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
      b[r] -= factor * b[col];
    }
  }
  x.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double sum = b[r];
    for (int c = r + 1; c < n; ++c) sum -= a[r * n + c] * x[c];
    x[r] = sum / a[r * n + r];
  }
  return true;
}

bool invert_matrix(std::vector<double> a, int n, std::vector<double>& inv) {
  inv.assign(n * n, 0.0);
  for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < 1e-300) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a[col * n + c], a[pivot * n + c]);
        std::swap(inv[col * n + c], inv[pivot * n + c]);
      }
    }
    double scale = 1.0 / a[col * n + col];
    for (int c = 0; c < n; ++c) {
      a[col * n + c] *= scale;
      inv[col * n + c] *= scale;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double factor = a[r * n + col];
      if (factor == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        a[r * n + c] -= factor * a[col * n + c];
        inv[r * n + c] -= factor * inv[col * n + c];
      }
    }
  }
  return true;
}

// theta = [D, e0, g_1..g_m]; model f_i = hypot(D, e0 + sum g_k V_ik).
struct HyperbolaProblem {
  std::vector<double> y;       // GHz
  std::vector<double> sqrt_w;  // 1/sigma
  std::vector<std::vector<double>> volts;  // per point, per electrode
  int m = 0;

  std::size_t n() const { return y.size(); }
  int p() const { return m + 2; }

  double u_of(std::size_t i, const std::vector<double>& theta) const {
    double u = theta[1];
    const std::vector<double>& v = volts[i];
    for (int k = 0; k < m; ++k) u += theta[2 + k] * v[k];
    return u;
  }

  double chi2(const std::vector<double>& theta) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      double f = std::hypot(theta[0], u_of(i, theta));
      double r = sqrt_w[i] * (f - y[i]);
      sum += r * r;
    }
    return sum;
  }

  // Fills normal matrix A = J^T J and gradient g = J^T r at theta.
  void normal_equations(const std::vector<double>& theta,
                        std::vector<double>& a, std::vector<double>& g) const {
    int np = p();
    a.assign(np * np, 0.0);
    g.assign(np, 0.0);
    std::vector<double> row(np);
    for (std::size_t i = 0; i < n(); ++i) {
      double u = u_of(i, theta);
      double f = std::max(std::hypot(theta[0], u), 1e-12);
      double sw = sqrt_w[i];
      row[0] = sw * theta[0] / f;
      row[1] = sw * u / f;
      for (int k = 0; k < m; ++k) row[2 + k] = row[1] * volts[i][k];
      double r = sw * (f - y[i]);
      for (int a_i = 0; a_i < np; ++a_i) {
        g[a_i] += row[a_i] * r;
        for (int a_j = a_i; a_j < np; ++a_j)
          a[a_i * np + a_j] += row[a_i] * row[a_j];
      }
    }
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < i; ++j) a[i * np + j] = a[j * np + i];
  }
};

struct LmResult {
  std::vector<double> theta;
  double chi2 = std::numeric_limits<double>::infinity();
  bool converged = false;
};

LmResult levenberg_marquardt(const HyperbolaProblem& problem,
                             std::vector<double> theta,
                             const FitOptions& opt) {
  LmResult result;
  double c = problem.chi2(theta);
  if (!std::isfinite(c)) return result;
  double lambda = 1e-3;
  bool converged = false;

  std::vector<double> a, g, damped, delta;
  int np = problem.p();
  for (int iter = 0; iter < opt.max_iterations && !converged; ++iter) {
    problem.normal_equations(theta, a, g);
    bool stepped = false;
    while (lambda <= 1e12) {
      damped = a;
      for (int k = 0; k < np; ++k) {
        damped[k * np + k] += lambda * std::max(a[k * np + k], 1e-30);
      }
      std::vector<double> rhs(np);
      for (int k = 0; k < np; ++k) rhs[k] = -g[k];
      if (!solve_linear(damped, rhs, np, delta)) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> trial(theta);
      for (int k = 0; k < np; ++k) trial[k] += delta[k];
      double c_trial = problem.chi2(trial);
      if (std::isfinite(c_trial) && c_trial < c) {
        double improvement = (c - c_trial) / std::max(c, 1e-300);
        theta = std::move(trial);
        c = c_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        if (improvement < opt.tolerance) converged = true;
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // No downhill step available at any damping: local minimum.
      converged = true;
    }
  }
  result.theta = std::move(theta);
  result.chi2 = c;
  result.converged = converged;
  return result;
}

// Weighted linear regression of u on [1, V] for the starting point.
std::vector<double> linear_init(const HyperbolaProblem& problem,
                                const std::vector<double>& u_target) {
  int np = problem.m + 1;
  std::vector<double> a(np * np, 0.0), b(np, 0.0), row(np);
  for (std::size_t i = 0; i < problem.n(); ++i) {
    double w = problem.sqrt_w[i] * problem.sqrt_w[i];
    row[0] = 1.0;
    for (int k = 0; k < problem.m; ++k) row[1 + k] = problem.volts[i][k];
    for (int r = 0; r < np; ++r) {
      b[r] += w * row[r] * u_target[i];
      for (int c = 0; c < np; ++c) a[r * np + c] += w * row[r] * row[c];
    }
  }
  std::vector<double> beta;
  if (!solve_linear(a, b, np, beta)) beta.assign(np, 0.0);
  return beta;
}

}  // namespace

double TraceFit::zero_voltage_frequency() const {
  return std::hypot(delta_over_h, epsilon0_over_h);
}

std::optional<double> TraceFit::gamma_for(Conductor electrode) const {
  for (const GammaEstimate& g : gammas)
    if (g.electrode == electrode) return g.value;
  return std::nullopt;
}

TraceFit fit_hyperbola(const TraceData& trace, const VoltageSchedule& schedule,
                       const FitOptions& options) {
  const std::size_t n = trace.points.size();
  if (n < 5)
    throw NumericsError("fit_hyperbola: trace has fewer than 5 points");
  for (std::size_t i = 1; i < n; ++i)
    if (trace.points[i].step <= trace.points[i - 1].step)
      throw ConfigError("fit_hyperbola: trace steps must be strictly increasing");

  // Voltage rows for every electrode, then restrict to those that vary.
  const std::size_t n_elec = schedule.electrode_order.size();
  std::vector<std::vector<double>> all_volts(n);
  for (std::size_t i = 0; i < n; ++i)
    all_volts[i] = schedule.voltages_at(trace.points[i].step);

  std::vector<int> active;
  std::vector<Conductor> missing;
  for (std::size_t e = 0; e < n_elec; ++e) {
    double lo = all_volts[0][e], hi = lo;
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, all_volts[i][e]);
      hi = std::max(hi, all_volts[i][e]);
    }
    if (hi - lo > options.min_voltage_span)
      active.push_back(static_cast<int>(e));
    else
      missing.push_back(schedule.electrode_order[e]);
  }
  if (active.size() < 2) {
    std::string names;
    for (Conductor c : missing) names += " " + conductor_name(c);
    throw ConfigError(
        "fit_hyperbola: fewer than 2 electrodes with voltage coverage; "
        "missing:" + names);
  }

  HyperbolaProblem problem;
  problem.m = static_cast<int>(active.size());
  problem.y.resize(n);
  problem.sqrt_w.resize(n);
  problem.volts.assign(n, std::vector<double>(problem.m));
  for (std::size_t i = 0; i < n; ++i) {
    problem.y[i] = trace.points[i].frequency_ghz;
    double sigma = std::max(trace.points[i].sigma_ghz, options.sigma_floor_ghz);
    problem.sqrt_w[i] = 1.0 / sigma;
    for (int k = 0; k < problem.m; ++k)
      problem.volts[i][k] = all_volts[i][active[k]];
  }

  // Multi-start: branch-sign patterns x two tunneling-energy guesses.
  std::size_t i_min = 0;
  double min_y = problem.y[0];
  for (std::size_t i = 1; i < n; ++i)
    if (problem.y[i] < min_y) { min_y = problem.y[i]; i_min = i; }

  auto pattern_sign = [&](int pattern, std::size_t i) -> double {
    switch (pattern) {
      case 0: return i < i_min ? -1.0 : 1.0;  // crossing, rising
      case 1: return i < i_min ? 1.0 : -1.0;  // crossing, falling
      case 2: return 1.0;                     // one branch, positive
      default: return -1.0;                   // one branch, negative
    }
  };

  LmResult best;
  for (double delta0 : {0.999 * min_y, 0.6 * min_y}) {
    for (int pattern = 0; pattern < 4; ++pattern) {
      std::vector<double> u_target(n);
      for (std::size_t i = 0; i < n; ++i) {
        double mag = std::sqrt(
            std::max(problem.y[i] * problem.y[i] - delta0 * delta0, 0.0));
        u_target[i] = pattern_sign(pattern, i) * mag;
      }
      std::vector<double> beta = linear_init(problem, u_target);
      std::vector<double> theta(problem.p());
      theta[0] = delta0;
      for (int k = 0; k < problem.m + 1; ++k) theta[1 + k] = beta[k];
      LmResult run = levenberg_marquardt(problem, std::move(theta), options);
      if (run.chi2 < best.chi2) best = std::move(run);
    }
  }
  if (!std::isfinite(best.chi2))
    throw NumericsError("fit_hyperbola: all starts diverged");

  // Points far off the model are crossing debris from other defects: clip
  // and refit. The unit floor on the threshold keeps points within their own
  // uncertainty, however good the fit gets.
  for (int round = 0; round < 3; ++round) {
    double rms_w = std::sqrt(best.chi2 / problem.n());
    double thr = std::max(4.0 * rms_w, 1.0);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < problem.n(); ++i) {
      double f = std::hypot(best.theta[0], problem.u_of(i, best.theta));
      if (std::abs(problem.sqrt_w[i] * (f - problem.y[i])) <= thr)
        keep.push_back(i);
    }
    if (keep.size() == problem.n() || keep.size() < 5 ||
        keep.size() < problem.n() / 2)
      break;
    HyperbolaProblem clipped;
    clipped.m = problem.m;
    clipped.y.reserve(keep.size());
    clipped.sqrt_w.reserve(keep.size());
    clipped.volts.reserve(keep.size());
    for (std::size_t i : keep) {
      clipped.y.push_back(problem.y[i]);
      clipped.sqrt_w.push_back(problem.sqrt_w[i]);
      clipped.volts.push_back(problem.volts[i]);
    }
    LmResult refit = levenberg_marquardt(clipped, best.theta, options);
    if (!std::isfinite(refit.chi2)) break;
    problem = std::move(clipped);
    best = std::move(refit);
  }
  const std::size_t n_used = problem.n();

  std::vector<double>& theta = best.theta;
  theta[0] = std::abs(theta[0]);

  // Canonical sign: the strongest response factor is positive.
  int strongest = 0;
  for (int k = 1; k < problem.m; ++k)
    if (std::abs(theta[2 + k]) > std::abs(theta[2 + strongest])) strongest = k;
  if (theta[2 + strongest] < 0)
    for (int k = 0; k < problem.m + 1; ++k) theta[1 + k] = -theta[1 + k];

  // Covariance from the local quadratic model.
  int np = problem.p();
  std::vector<double> a, g, cov;
  problem.normal_equations(theta, a, g);
  double dof = static_cast<double>(n_used) - np;
  double chi2_red = dof > 0 ? best.chi2 / dof : 1.0;
  bool have_cov = invert_matrix(a, np, cov);

  TraceFit fit;
  fit.delta_over_h = theta[0];
  fit.epsilon0_over_h = theta[1];
  fit.missing = std::move(missing);
  fit.n_points = static_cast<long>(n_used);
  fit.chi2 = best.chi2;
  fit.converged = best.converged;
  fit.residual_rms_ghz = 0.0;
  {
    double sum = 0.0;
    for (std::size_t i = 0; i < n_used; ++i) {
      double f = std::hypot(theta[0], problem.u_of(i, theta));
      double d = f - problem.y[i];
      sum += d * d;
    }
    fit.residual_rms_ghz = std::sqrt(sum / n_used);
  }
  double u_lo = problem.u_of(0, theta), u_hi = u_lo;
  for (std::size_t i = 1; i < n_used; ++i) {
    double u = problem.u_of(i, theta);
    u_lo = std::min(u_lo, u);
    u_hi = std::max(u_hi, u);
  }
  fit.crossed_symmetry = u_lo < 0.0 && u_hi > 0.0;

  auto se_of = [&](int k) {
    if (!have_cov) return 0.0;
    return std::sqrt(std::max(chi2_red * cov[k * np + k], 0.0));
  };
  fit.delta_se = se_of(0);
  fit.epsilon0_se = se_of(1);
  for (int k = 0; k < problem.m; ++k) {
    fit.gammas.push_back({schedule.electrode_order[active[k]], theta[2 + k],
                          se_of(2 + k)});
  }
  if (have_cov) {
    for (int i = 0; i < np; ++i) {
      for (int j = i + 1; j < np; ++j) {
        double denom = std::sqrt(cov[i * np + i] * cov[j * np + j]);
        if (denom > 0)
          fit.max_abs_correlation = std::max(
              fit.max_abs_correlation, std::abs(cov[i * np + j] / denom));
      }
    }
  }
  fit.source_scan = trace.source_scan;
  fit.trace_index = trace.trace_index;
  return fit;
}

namespace {

const GammaEstimate* find_gamma(const TraceFit& fit, Conductor electrode) {
  for (const GammaEstimate& g : fit.gammas)
    if (g.electrode == electrode) return &g;
  return nullptr;
}

// Loose parameter agreement, up to a global (e0, gamma) sign flip; the
// pooled refit is the real arbiter, so false positives here are cheap.
bool fragment_candidates(const TraceFit& a, const TraceFit& b) {
  double dscale = std::max(std::abs(a.delta_over_h), std::abs(b.delta_over_h));
  double dtol = std::max(2e-3 * dscale, 5.0 * (a.delta_se + b.delta_se));
  if (std::abs(a.delta_over_h - b.delta_over_h) > dtol) return false;

  double gmax = 0.0;
  for (const GammaEstimate& g : a.gammas)
    gmax = std::max(gmax, std::abs(g.value));
  for (const GammaEstimate& g : b.gammas)
    gmax = std::max(gmax, std::abs(g.value));

  for (double sign : {1.0, -1.0}) {
    double e0_tol = std::max({0.05 * std::max(std::abs(a.epsilon0_over_h),
                                              std::abs(b.epsilon0_over_h)),
                              5.0 * (a.epsilon0_se + b.epsilon0_se), 5e-3});
    bool ok =
        std::abs(a.epsilon0_over_h - sign * b.epsilon0_over_h) <= e0_tol;
    int shared = 0;
    for (const GammaEstimate& ga : a.gammas) {
      if (!ok) break;
      const GammaEstimate* gb = find_gamma(b, ga.electrode);
      if (!gb) continue;
      ++shared;
      double gtol = std::max(0.15 * gmax, 8.0 * (ga.se + gb->se));
      if (std::abs(ga.value - sign * gb->value) > gtol) ok = false;
    }
    if (ok && shared >= 1) return true;
  }
  return false;
}

TraceData pool_points(const TraceData& a, const TraceData& b) {
  TraceData pooled;
  pooled.source_scan = a.source_scan;
  pooled.trace_index = a.trace_index;
  pooled.points = a.points;
  pooled.points.insert(pooled.points.end(), b.points.begin(), b.points.end());
  std::sort(pooled.points.begin(), pooled.points.end(),
            [](const TracePoint& x, const TracePoint& y) {
              if (x.step != y.step) return x.step < y.step;
              return x.depth > y.depth;  // step collision: keep the deeper dip
            });
  pooled.points.erase(
      std::unique(pooled.points.begin(), pooled.points.end(),
                  [](const TracePoint& x, const TracePoint& y) {
                    return x.step == y.step;
                  }),
      pooled.points.end());
  return pooled;
}

}  // namespace

FragmentPool merge_trace_fragments(std::vector<TraceData> traces,
                                   std::vector<TraceFit> fits,
                                   const VoltageSchedule& schedule,
                                   const FitOptions& options,
                                   double max_residual_ghz) {
  if (traces.size() != fits.size())
    throw ConfigError(
        "merge_trace_fragments: traces and fits differ in length");
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < fits.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < fits.size() && !changed; ++j) {
        if (fits[i].source_scan != fits[j].source_scan) continue;
        if (!fragment_candidates(fits[i], fits[j])) continue;
        TraceData pooled = pool_points(traces[i], traces[j]);
        TraceFit refit;
        try {
          refit = fit_hyperbola(pooled, schedule, options);
        } catch (const Error&) {
          continue;
        }
        if (!refit.converged || refit.residual_rms_ghz > max_residual_ghz)
          continue;
        traces[i] = std::move(pooled);
        fits[i] = std::move(refit);
        traces.erase(traces.begin() + j);
        fits.erase(fits.begin() + j);
        changed = true;
      }
    }
  }
  return {std::move(traces), std::move(fits)};
}

std::vector<TraceFit> dedup_fits(const std::vector<TraceFit>& fits,
                                 double rel_tol) {
  auto similar = [rel_tol](const TraceFit& a, const TraceFit& b) {
    double dscale = std::max(std::abs(a.delta_over_h), std::abs(b.delta_over_h));
    if (std::abs(a.delta_over_h - b.delta_over_h) > rel_tol * dscale)
      return false;
    int shared = 0;
    for (const GammaEstimate& ga : a.gammas) {
      auto gb = b.gamma_for(ga.electrode);
      if (!gb) continue;
      ++shared;
      double scale = std::max({std::abs(ga.value), std::abs(*gb), 1e-6});
      if (std::abs(ga.value - *gb) > rel_tol * scale) return false;
    }
    return shared >= 1;
  };

  std::vector<TraceFit> out;
  for (const TraceFit& fit : fits) {
    bool merged = false;
    for (TraceFit& kept : out) {
      if (!similar(fit, kept)) continue;
      if (fit.residual_rms_ghz < kept.residual_rms_ghz) kept = fit;
      merged = true;
      break;
    }
    if (!merged) out.push_back(fit);
  }
  return out;
}

namespace {

json trace_to_json(const TraceData& trace) {
  json points = json::array();
  for (const TracePoint& p : trace.points)
    points.push_back(
        json::array({p.step, p.frequency_ghz, p.depth, p.sigma_ghz}));
  return json{{"trace_index", trace.trace_index},
              {"source_scan", trace.source_scan},
              {"points", std::move(points)}};
}

TraceData trace_from_json(const json& j) {
  TraceData trace;
  trace.trace_index = j.at("trace_index").get<int>();
  trace.source_scan = j.at("source_scan").get<std::string>();
  for (const json& p : j.at("points"))
    trace.points.push_back({p.at(0).get<long>(), p.at(1).get<double>(),
                            p.at(2).get<double>(), p.at(3).get<double>()});
  return trace;
}

json fit_to_json(const TraceFit& fit) {
  json gammas = json::array();
  for (const GammaEstimate& g : fit.gammas)
    gammas.push_back({{"electrode", conductor_name(g.electrode)},
                      {"value_ghz_per_v", g.value},
                      {"se_ghz_per_v", g.se}});
  json missing = json::array();
  for (Conductor c : fit.missing) missing.push_back(conductor_name(c));
  return json{{"trace_index", fit.trace_index},
              {"source_scan", fit.source_scan},
              {"delta_over_h_ghz", fit.delta_over_h},
              {"delta_se_ghz", fit.delta_se},
              {"epsilon0_over_h_ghz", fit.epsilon0_over_h},
              {"epsilon0_se_ghz", fit.epsilon0_se},
              {"gammas", std::move(gammas)},
              {"missing_electrodes", std::move(missing)},
              {"residual_rms_ghz", fit.residual_rms_ghz},
              {"chi2", fit.chi2},
              {"n_points", fit.n_points},
              {"converged", fit.converged},
              {"crossed_symmetry", fit.crossed_symmetry},
              {"max_abs_correlation", fit.max_abs_correlation}};
}

TraceFit fit_from_json(const json& j) {
  TraceFit fit;
  fit.trace_index = j.at("trace_index").get<int>();
  fit.source_scan = j.at("source_scan").get<std::string>();
  fit.delta_over_h = j.at("delta_over_h_ghz").get<double>();
  fit.delta_se = j.at("delta_se_ghz").get<double>();
  fit.epsilon0_over_h = j.at("epsilon0_over_h_ghz").get<double>();
  fit.epsilon0_se = j.at("epsilon0_se_ghz").get<double>();
  for (const json& g : j.at("gammas"))
    fit.gammas.push_back(
        {conductor_from_name(g.at("electrode").get<std::string>()),
         g.at("value_ghz_per_v").get<double>(),
         g.at("se_ghz_per_v").get<double>()});
  for (const json& c : j.at("missing_electrodes"))
    fit.missing.push_back(conductor_from_name(c.get<std::string>()));
  fit.residual_rms_ghz = j.at("residual_rms_ghz").get<double>();
  fit.chi2 = j.at("chi2").get<double>();
  fit.n_points = j.at("n_points").get<long>();
  fit.converged = j.at("converged").get<bool>();
  fit.crossed_symmetry = j.at("crossed_symmetry").get<bool>();
  fit.max_abs_correlation = j.at("max_abs_correlation").get<double>();
  return fit;
}

template <typename T, typename ToJson>
void save_jsonl(const std::vector<T>& items, const std::string& path,
                ToJson to_json_fn, const char* what) {
  std::ofstream out(path);
  if (!out) throw IoError(std::string("cannot write ") + what + " file: " + path);
  for (const T& item : items) out << to_json_fn(item).dump() << '\n';
  if (!out) throw IoError(std::string("write failed for ") + what + ": " + path);
}

template <typename T, typename FromJson>
std::vector<T> load_jsonl(const std::string& path, FromJson from_json_fn,
                          const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " file: " + path);
  std::vector<T> items;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      items.push_back(from_json_fn(json::parse(line)));
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed ") + what + " record at " + path +
                    ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return items;
}

}  // namespace

void save_traces_jsonl(const std::vector<TraceData>& traces,
                       const std::string& path) {
  save_jsonl(traces, path, trace_to_json, "trace");
}

std::vector<TraceData> load_traces_jsonl(const std::string& path) {
  return load_jsonl<TraceData>(path, trace_from_json, "trace");
}

void save_fits_jsonl(const std::vector<TraceFit>& fits,
                     const std::string& path) {
  save_jsonl(fits, path, fit_to_json, "fit");
}

std::vector<TraceFit> load_fits_jsonl(const std::string& path) {
  return load_jsonl<TraceFit>(path, fit_from_json, "fit");
}

}  // namespace tlsmap
