#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tlsmap {

enum class Conductor : uint8_t {
  Vacuum = 0,
  Ground,
  Island,
  ElectrodeAlpha,
  ElectrodeBeta,
  ElectrodeGamma,
  ElectrodeDelta,
};

// Numeric order doubles as the tie-break priority when a point is equidistant
// from several conductors (lower wins).
enum class RegionLabel : uint8_t {
  Island = 0,
  GroundPlane,
  SquidLeads,
  Electrode,
  Gap,
};

inline constexpr std::array<Conductor, 4> kElectrodes = {
    Conductor::ElectrodeAlpha, Conductor::ElectrodeBeta,
    Conductor::ElectrodeGamma, Conductor::ElectrodeDelta};

inline constexpr bool is_electrode(Conductor c) {
  return c == Conductor::ElectrodeAlpha || c == Conductor::ElectrodeBeta ||
         c == Conductor::ElectrodeGamma || c == Conductor::ElectrodeDelta;
}

std::string conductor_name(Conductor c);
Conductor conductor_from_name(const std::string& name);
std::string region_name(RegionLabel r);
RegionLabel region_from_name(const std::string& name);

struct Point {
  double x = 0.0;  // um
  double y = 0.0;  // um
};

struct Domain {
  double x_min = 0.0, x_max = 0.0;  // um
  double y_min = 0.0, y_max = 0.0;  // um

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(Point p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

struct Polygon {
  std::vector<Point> vertices;  // simple, implicitly closed
  Conductor conductor = Conductor::Vacuum;
  RegionLabel region = RegionLabel::Gap;
};

struct CircuitLayout {
  Domain domain;
  double spacing_hint = 0.5;  // um, suggested solver spacing
  std::vector<Polygon> polygons;
};

// Uniform cell grid covering the layout domain. labels[iy*nx + ix] holds the
// conductor whose polygon contains the cell center, or Vacuum.
struct ConductorGrid {
  double spacing = 0.0;  // um
  int nx = 0, ny = 0;
  double x_min = 0.0, y_min = 0.0;  // um, domain corner
  std::vector<Conductor> labels;

  int index(int ix, int iy) const { return iy * nx + ix; }
  Conductor at(int ix, int iy) const { return labels[index(ix, iy)]; }
  Point cell_center(int ix, int iy) const {
    return {x_min + (ix + 0.5) * spacing, y_min + (iy + 0.5) * spacing};
  }
  // Cell whose extent contains p (clamped to the grid).
  int cell_ix(double x) const;
  int cell_iy(double y) const;
  std::size_t cell_count() const { return labels.size(); }
};

// Even-odd rule; points exactly on an edge may land on either side, callers
// that care use distance_to_polygon instead.
bool point_in_polygon(const std::vector<Point>& vertices, Point p);

// 0 when p is inside, otherwise the distance to the nearest boundary segment.
double distance_to_polygon(const std::vector<Point>& vertices, Point p);

// Throws ConfigError naming the offending polygon when an invariant fails:
// fewer than 3 vertices, vertex outside the domain, self-intersection, or
// interior overlap between polygons of distinct conductors.
void validate_layout(const CircuitLayout& layout);

CircuitLayout load_layout(const std::string& path);
void save_layout(const CircuitLayout& layout, const std::string& path);

// Center-inside-polygon rasterization. spacing must divide both domain
// extents to within 1e-6 relative tolerance.
ConductorGrid rasterize(const CircuitLayout& layout, double spacing);

// Region of the nearest conductor polygon within snap_radius_um; Gap when no
// conductor is that close. Ties (within 1e-9 um) resolve by RegionLabel
// numeric order. Throws ConfigError when the point is outside the domain.
RegionLabel classify_region(const CircuitLayout& layout, Point p,
                            double snap_radius_um = 3.0);

// classify_region evaluated at every cell center, row-major.
std::vector<RegionLabel> rasterize_regions(const CircuitLayout& layout,
                                           const ConductorGrid& grid,
                                           double snap_radius_um = 3.0);

// Parameters of the bundled reference layout: a rectangular island (qubit
// pad) whose south coast carries the active gap structure while the other
// faces see only a wide moat to the grounded domain edge, keeping the bath
// there below the detection floor. A shallow grounded block row runs under
// the south face: under the SQUID strip it forms the junction channel (the
// tightest gap and the field maximum), under the bare face a plain channel
// one tier wider, and past both island corners it extends into open-topped
// ledges whose corner-fringe fields fill the lower tiers. The row is broken
// by off-center feed openings and mouths, so every channel is fed from the
// bath at two or three offset points; sub-micron gaps would screen the
// electrodes out entirely, and single-mouth channels would lock every drive
// field to one entry mode and erase the ratio variation along the channel.
// The four gate electrodes sit in a row in the open bath south of the
// blocks: with no corridor between electrode and mouth the drive fields
// fall off algebraically rather than exponentially, so all four stay usable
// in every detectable cell and their ratios vary in both axes. SQUID metal
// (strip, junction blocks, west ledge) spans the field tiers, so
// SQUID-labeled cells hold a roughly constant minority of the detectable
// energy at every threshold. Defaults reproduce data/reference_layout.json.
struct ReferenceLayoutOptions {
  double domain_size = 100.0;    // um, square domain
  double island_x0 = 36.0;       // um, island body extents
  double island_x1 = 64.0;
  double island_y0 = 52.0;
  double island_y1 = 66.0;
  double strip_x0 = 40.0;        // um, SQUID strip footprint on the south face
  double strip_x1 = 47.0;
  double strip_depth = 0.5;      // um, SQUID strip protrusion from the face
  double gap_junction = 2.5;     // um, strip face to junction blocks
  double gap_hot = 3.0;          // um, bare south face to plain blocks
  double block_depth = 1.5;      // um, row thickness (shallow: feed openings
                                 // must pass the drive fields)
  double electrode_size = 6.0;   // um, square side
  double electrode_y0 = 22.0;    // um, bottom edge of the electrode row
};

CircuitLayout make_reference_layout(
    const ReferenceLayoutOptions& opt = ReferenceLayoutOptions{});

}  // namespace tlsmap
