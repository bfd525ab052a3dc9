#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlsmap/config.hpp"
#include "tlsmap/geometry.hpp"
#include "tlsmap/localization.hpp"

namespace tlsmap {

inline constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline uint64_t fnv1a64(const void* data, std::size_t n,
                        uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

uint64_t fnv1a64_string(const std::string& s);
uint64_t fnv1a64_file(const std::string& path);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineReport {
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
  uint64_t config_hash = 0;
  uint64_t manifest_hash = 0;
};

// One localization outcome for a (fit, detection threshold) pair.
struct LocationRecord {
  int fit_index = -1;
  double e_min = 0.0;           // V/m
  bool ok = false;              // false: residual map had no valid cell
  Point position;
  int ix = 0, iy = 0;
  double sigma_min = 0.0;
  RegionLabel region = RegionLabel::Gap;
  bool tie = false;
  long valid_cells = 0;
  long uncertainty_cells = 0;
  long pairs_used = 0;
};

void save_locations_jsonl(const std::vector<LocationRecord>& records,
                          const std::string& path);
std::vector<LocationRecord> load_locations_jsonl(const std::string& path);

// Each stage reads its inputs from files in `out` written by earlier stages
// (the fields stage reads the layout referenced by the config) and writes
// its own artifacts there. Returned strings are human-readable warnings.
std::vector<std::string> stage_fields(const RunConfig& config,
                                      const std::string& out);
std::vector<std::string> stage_synthesize(const RunConfig& config,
                                          const std::string& out);
std::vector<std::string> stage_simulate(const RunConfig& config,
                                        const std::string& out);
std::vector<std::string> stage_fit(const RunConfig& config,
                                   const std::string& out);
std::vector<std::string> stage_localize(const RunConfig& config,
                                        const std::string& out);
std::vector<std::string> stage_analyze(const RunConfig& config,
                                       const std::string& out);

// All stages in order, then manifest.json: an FNV-1a hash per artifact and a
// combined hash over (sorted file hashes, config, seed). Timings are listed
// for information but excluded from the combined hash.
PipelineReport run_pipeline(const RunConfig& config, const std::string& out);

// Recomputed combined hash for an existing run directory.
uint64_t manifest_hash_of_directory(const RunConfig& config,
                                    const std::string& out);

}  // namespace tlsmap
