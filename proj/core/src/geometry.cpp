#include "tlsmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlsmap/errors.hpp"

namespace tlsmap {

// Distance from p to the polygon outline, ignoring containment.
double distance_to_polygon_boundary(const std::vector<Point>& vertices, Point p);

namespace {

using nlohmann::json;

constexpr double kTieTolUm = 1e-9;

struct NamePair {
  Conductor conductor;
  const char* name;
};
constexpr NamePair kConductorNames[] = {
    {Conductor::Vacuum, "vacuum"},
    {Conductor::Ground, "ground"},
    {Conductor::Island, "island"},
    {Conductor::ElectrodeAlpha, "electrode_alpha"},
    {Conductor::ElectrodeBeta, "electrode_beta"},
    {Conductor::ElectrodeGamma, "electrode_gamma"},
    {Conductor::ElectrodeDelta, "electrode_delta"},
};

struct RegionNamePair {
  RegionLabel region;
  const char* name;
};
constexpr RegionNamePair kRegionNames[] = {
    {RegionLabel::Island, "island"},
    {RegionLabel::GroundPlane, "ground_plane"},
    {RegionLabel::SquidLeads, "squid_leads"},
    {RegionLabel::Electrode, "electrode"},
    {RegionLabel::Gap, "gap"},
};

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Strict interior crossing of segments ab and cd.
bool segments_cross(Point a, Point b, Point c, Point d) {
  double d1 = cross(c, d, a);
  double d2 = cross(c, d, b);
  double d3 = cross(a, b, c);
  double d4 = cross(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double segment_distance(Point a, Point b, Point p) {
  double vx = b.x - a.x, vy = b.y - a.y;
  double wx = p.x - a.x, wy = p.y - a.y;
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  double dx = p.x - (a.x + t * vx);
  double dy = p.y - (a.y + t * vy);
  return std::hypot(dx, dy);
}

std::string polygon_tag(const CircuitLayout& layout, std::size_t idx) {
  std::ostringstream os;
  os << "polygon #" << idx << " (" << conductor_name(layout.polygons[idx].conductor)
     << "/" << region_name(layout.polygons[idx].region) << ")";
  return os.str();
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
  const auto& va = a.vertices;
  const auto& vb = b.vertices;
  for (std::size_t i = 0; i < va.size(); ++i) {
    Point a0 = va[i], a1 = va[(i + 1) % va.size()];
    for (std::size_t j = 0; j < vb.size(); ++j) {
      if (segments_cross(a0, a1, vb[j], vb[(j + 1) % vb.size()])) return true;
    }
  }
  // No edge crossings: containment is the only remaining overlap mode.
  // Touching boundaries are allowed, so require a strictly interior vertex.
  auto strictly_inside = [](const std::vector<Point>& poly, Point p) {
    return point_in_polygon(poly, p) && distance_to_polygon_boundary(poly, p) > kTieTolUm;
  };
  for (Point p : va)
    if (strictly_inside(vb, p)) return true;
  for (Point p : vb)
    if (strictly_inside(va, p)) return true;
  return false;
}

json point_list_to_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (Point p : pts) arr.push_back(json::array({p.x, p.y}));
  return arr;
}

}  // namespace

std::string conductor_name(Conductor c) {
  for (const auto& e : kConductorNames)
    if (e.conductor == c) return e.name;
  throw ConfigError("unknown conductor id");
}

Conductor conductor_from_name(const std::string& name) {
  for (const auto& e : kConductorNames)
    if (name == e.name) return e.conductor;
  throw ConfigError("unknown conductor name: '" + name + "'");
}

std::string region_name(RegionLabel r) {
  for (const auto& e : kRegionNames)
    if (e.region == r) return e.name;
  throw ConfigError("unknown region label");
}

RegionLabel region_from_name(const std::string& name) {
  for (const auto& e : kRegionNames)
    if (name == e.name) return e.region;
  throw ConfigError("unknown region name: '" + name + "'");
}

int ConductorGrid::cell_ix(double x) const {
  int i = static_cast<int>(std::floor((x - x_min) / spacing));
  return std::clamp(i, 0, nx - 1);
}

int ConductorGrid::cell_iy(double y) const {
  int i = static_cast<int>(std::floor((y - y_min) / spacing));
  return std::clamp(i, 0, ny - 1);
}

bool point_in_polygon(const std::vector<Point>& vertices, Point p) {
  bool inside = false;
  std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& vi = vertices[i];
    const Point& vj = vertices[j];
    bool straddles = (vi.y > p.y) != (vj.y > p.y);
    if (straddles &&
        p.x < (vj.x - vi.x) * (p.y - vi.y) / (vj.y - vi.y) + vi.x) {
      inside = !inside;
    }
  }
  return inside;
}

double distance_to_polygon_boundary(const std::vector<Point>& vertices, Point p) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    best = std::min(best, segment_distance(vertices[j], vertices[i], p));
  }
  return best;
}

double distance_to_polygon(const std::vector<Point>& vertices, Point p) {
  if (point_in_polygon(vertices, p)) return 0.0;
  return distance_to_polygon_boundary(vertices, p);
}

void validate_layout(const CircuitLayout& layout) {
  const Domain& dom = layout.domain;
  if (!(dom.width() > 0.0) || !(dom.height() > 0.0))
    throw ConfigError("layout domain has non-positive extent");
  if (!(layout.spacing_hint > 0.0))
    throw ConfigError("layout spacing_hint must be positive");

  for (std::size_t idx = 0; idx < layout.polygons.size(); ++idx) {
    const Polygon& poly = layout.polygons[idx];
    const auto& v = poly.vertices;
    if (v.size() < 3)
      throw ConfigError(polygon_tag(layout, idx) + " has fewer than 3 vertices");
    if (poly.conductor == Conductor::Vacuum)
      throw ConfigError(polygon_tag(layout, idx) + " labeled as vacuum");
    if (poly.region == RegionLabel::Gap)
      throw ConfigError(polygon_tag(layout, idx) + " labeled as gap");
    for (Point p : v) {
      if (!dom.contains(p)) {
        std::ostringstream os;
        os << polygon_tag(layout, idx) << " has vertex (" << p.x << ", " << p.y
           << ") outside the domain";
        throw ConfigError(os.str());
      }
    }
    // Simplicity: no two non-adjacent edges may cross.
    std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
        if (adjacent) continue;
        if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
          throw ConfigError(polygon_tag(layout, idx) + " is self-intersecting");
      }
    }
  }

  for (std::size_t i = 0; i < layout.polygons.size(); ++i) {
    for (std::size_t j = i + 1; j < layout.polygons.size(); ++j) {
      const Polygon& a = layout.polygons[i];
      const Polygon& b = layout.polygons[j];
      if (a.conductor == b.conductor) continue;
      if (polygons_overlap(a, b))
        throw ConfigError(polygon_tag(layout, i) + " overlaps " +
                          polygon_tag(layout, j));
    }
  }
}

CircuitLayout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("malformed layout file " + path + ": " + e.what());
  }

  CircuitLayout layout;
  try {
    int version = doc.at("schema_version").get<int>();
    if (version != 1) {
      throw ConfigError("layout file " + path + ": unsupported schema_version " +
                        std::to_string(version));
    }
    const json& dom = doc.at("domain");
    layout.domain = {dom.at("x_min_um").get<double>(), dom.at("x_max_um").get<double>(),
                     dom.at("y_min_um").get<double>(), dom.at("y_max_um").get<double>()};
    layout.spacing_hint = doc.value("spacing_hint_um", 0.5);
    for (const json& jp : doc.at("polygons")) {
      Polygon poly;
      poly.conductor = conductor_from_name(jp.at("conductor").get<std::string>());
      poly.region = region_from_name(jp.at("region").get<std::string>());
      for (const json& jv : jp.at("vertices_um")) {
        poly.vertices.push_back({jv.at(0).get<double>(), jv.at(1).get<double>()});
      }
      layout.polygons.push_back(std::move(poly));
    }
  } catch (const json::exception& e) {
    throw ConfigError("layout file " + path + " is missing required fields: " +
                      e.what());
  }
  validate_layout(layout);
  return layout;
}

void save_layout(const CircuitLayout& layout, const std::string& path) {
  json doc;
  doc["schema_version"] = 1;
  doc["domain"] = {{"x_min_um", layout.domain.x_min},
                   {"x_max_um", layout.domain.x_max},
                   {"y_min_um", layout.domain.y_min},
                   {"y_max_um", layout.domain.y_max}};
  doc["spacing_hint_um"] = layout.spacing_hint;
  json polys = json::array();
  for (const Polygon& poly : layout.polygons) {
    polys.push_back({{"conductor", conductor_name(poly.conductor)},
                     {"region", region_name(poly.region)},
                     {"vertices_um", point_list_to_json(poly.vertices)}});
  }
  doc["polygons"] = std::move(polys);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write layout file: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for layout file: " + path);
}

ConductorGrid rasterize(const CircuitLayout& layout, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("rasterize: spacing must be positive");
  const Domain& dom = layout.domain;
  double fx = dom.width() / spacing;
  double fy = dom.height() / spacing;
  double rx = std::abs(fx - std::round(fx)) / std::max(fx, 1.0);
  double ry = std::abs(fy - std::round(fy)) / std::max(fy, 1.0);
  if (rx > 1e-6 || ry > 1e-6) {
    std::ostringstream os;
    os << "rasterize: spacing " << spacing << " um does not divide the domain ("
       << dom.width() << " x " << dom.height() << " um)";
    throw ConfigError(os.str());
  }

  ConductorGrid grid;
  grid.spacing = spacing;
  grid.nx = static_cast<int>(std::round(fx));
  grid.ny = static_cast<int>(std::round(fy));
  grid.x_min = dom.x_min;
  grid.y_min = dom.y_min;
  grid.labels.assign(static_cast<std::size_t>(grid.nx) * grid.ny,
                     Conductor::Vacuum);

  for (const Polygon& poly : layout.polygons) {
    // Restrict the scan to the polygon's bounding box.
    double bx0 = poly.vertices[0].x, bx1 = bx0;
    double by0 = poly.vertices[0].y, by1 = by0;
    for (Point p : poly.vertices) {
      bx0 = std::min(bx0, p.x);
      bx1 = std::max(bx1, p.x);
      by0 = std::min(by0, p.y);
      by1 = std::max(by1, p.y);
    }
    int ix0 = grid.cell_ix(bx0), ix1 = grid.cell_ix(bx1);
    int iy0 = grid.cell_iy(by0), iy1 = grid.cell_iy(by1);
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        if (point_in_polygon(poly.vertices, grid.cell_center(ix, iy)))
          grid.labels[grid.index(ix, iy)] = poly.conductor;
      }
    }
  }
  return grid;
}

RegionLabel classify_region(const CircuitLayout& layout, Point p,
                            double snap_radius_um) {
  if (!layout.domain.contains(p)) {
    std::ostringstream os;
    os << "classify_region: point (" << p.x << ", " << p.y
       << ") outside the layout domain";
    throw ConfigError(os.str());
  }
  RegionLabel best = RegionLabel::Gap;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const Polygon& poly : layout.polygons) {
    double d = distance_to_polygon(poly.vertices, p);
    if (d > snap_radius_um) continue;
    if (d < best_dist - kTieTolUm ||
        (std::abs(d - best_dist) <= kTieTolUm &&
         static_cast<int>(poly.region) < static_cast<int>(best))) {
      best = poly.region;
      best_dist = d;
    }
  }
  return best;
}

std::vector<RegionLabel> rasterize_regions(const CircuitLayout& layout,
                                           const ConductorGrid& grid,
                                           double snap_radius_um) {
  std::vector<RegionLabel> regions(grid.cell_count(), RegionLabel::Gap);
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      regions[grid.index(ix, iy)] =
          classify_region(layout, grid.cell_center(ix, iy), snap_radius_um);
    }
  }
  return regions;
}

CircuitLayout make_reference_layout(const ReferenceLayoutOptions& opt) {
  CircuitLayout layout;
  double d = opt.domain_size;
  layout.domain = {0.0, d, 0.0, d};
  layout.spacing_hint = 0.5;

  auto rect = [](double x0, double x1, double y0, double y1, Conductor c,
                 RegionLabel r) {
    Polygon poly;
    poly.vertices = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    poly.conductor = c;
    poly.region = r;
    return poly;
  };

  // Island body. The domain edge is the ground return, so the north, west
  // and east faces see only a wide moat and the bath there stays below the
  // detection floor.
  layout.polygons.push_back(rect(opt.island_x0, opt.island_x1, opt.island_y0,
                                 opt.island_y1, Conductor::Island,
                                 RegionLabel::Island));

  // SQUID strip on the south face. The junction channel width is measured
  // from the strip face, making it the tightest gap and the field maximum.
  double strip_y0 = opt.island_y0 - opt.strip_depth;
  layout.polygons.push_back(rect(opt.strip_x0, opt.strip_x1, strip_y0,
                                 opt.island_y0, Conductor::Island,
                                 RegionLabel::SquidLeads));

  // South block row: one shallow grounded row whose top sets the junction
  // gap under the strip and the plain gap under the bare face. Off-center
  // feed openings and the mouths between segments feed every channel from
  // the bath at two or three offset points, keeping all four gate fields
  // above the usability floor deep in the channels and making their ratios
  // vary along the channel axis instead of locking to one entry mode. The
  // ledges past the island corners are open on top; their corner-fringe
  // cells fill the lower field tiers.
  double row_top = strip_y0 - opt.gap_junction;
  double row_bot = row_top - opt.block_depth;
  const struct {
    double x0, x1;
    RegionLabel region;
  } row[] = {
      {31.0, 34.5, RegionLabel::SquidLeads},   // west ledge
      {37.0, 40.5, RegionLabel::SquidLeads},   // junction west
      {43.0, 48.5, RegionLabel::SquidLeads},   // junction east
      {52.5, 56.0, RegionLabel::GroundPlane},  // plain west
      {58.5, 63.0, RegionLabel::GroundPlane},  // plain east
      {66.0, 69.5, RegionLabel::GroundPlane},  // east ledge
  };
  for (const auto& seg : row) {
    layout.polygons.push_back(
        rect(seg.x0, seg.x1, row_bot, row_top, Conductor::Ground, seg.region));
  }

  // Gate electrodes: two below the row in the open bath and two beside the
  // ledges at row height. With no corridor between electrode and mouth the
  // drive fields fall off algebraically, so all four stay usable in every
  // detectable cell. The side pair enters the channels sideways through the
  // end mouths while the bottom pair enters from below through the feeds;
  // mixing entry modes with different weights per electrode is what makes
  // the ratio signature vary along the channels, not just across them.
  double es = opt.electrode_size;
  double ey0 = opt.electrode_y0;
  const struct {
    double x0, y0;
    Conductor c;
  } gates[] = {
      {12.0, 42.0, Conductor::ElectrodeAlpha},  // west moat, row height
      {38.0, ey0, Conductor::ElectrodeBeta},    // under the junction channel
      {56.0, ey0, Conductor::ElectrodeGamma},   // under the plain channel
      {82.0, 42.0, Conductor::ElectrodeDelta},  // east moat, row height
  };
  for (const auto& g : gates) {
    layout.polygons.push_back(
        rect(g.x0, g.x0 + es, g.y0, g.y0 + es, g.c, RegionLabel::Electrode));
  }
  validate_layout(layout);
  return layout;
}

}  // namespace tlsmap
