#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "tlsmap/errors.hpp"
#include "tlsmap/fields.hpp"

namespace tlsmap {
namespace {

constexpr const char* kMagic = "tlsmap-field-map";
constexpr const char* kVersion = "v1";

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Reads one "key value" header line, enforcing the expected key.
std::string header_value(std::istream& in, const std::string& path,
                         const std::string& key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key)
    throw IoError("field-map file " + path + ": expected header line '" + key +
                  " <value>'");
  return v;
}

double parse_double(const std::string& s, const std::string& path,
                    const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw IoError("field-map file " + path + ": bad numeric value for " + what);
  return v;
}

}  // namespace

void save_field_map(const FieldMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write field-map file: " + path);
  out << kMagic << ' ' << kVersion << '\n';
  out << "source " << map.source << '\n';
  out << "spacing_um " << format_g17(map.meta.spacing) << '\n';
  out << "nx " << map.meta.nx << '\n';
  out << "ny " << map.meta.ny << '\n';
  out << "x_min_um " << format_g17(map.meta.x_min) << '\n';
  out << "y_min_um " << format_g17(map.meta.y_min) << '\n';
  out << "unit " << (map.source == "qubit" ? "V_per_m" : "V_per_m_per_V") << '\n';
  out << "data\n";
  for (std::size_t k = 0; k < map.ex.size(); ++k)
    out << format_g17(map.ex[k]) << ' ' << format_g17(map.ey[k]) << '\n';
  if (!out) throw IoError("write failed for field-map file: " + path);
}

void save_scalar_map(const ScalarMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scalar-map file: " + path);
  out << "tlsmap-scalar-map " << kVersion << '\n';
  out << "quantity " << (map.quantity.empty() ? "scalar" : map.quantity) << '\n';
  out << "spacing_um " << format_g17(map.meta.spacing) << '\n';
  out << "nx " << map.meta.nx << '\n';
  out << "ny " << map.meta.ny << '\n';
  out << "x_min_um " << format_g17(map.meta.x_min) << '\n';
  out << "y_min_um " << format_g17(map.meta.y_min) << '\n';
  out << "data\n";
  for (std::size_t k = 0; k < map.values.size(); ++k) {
    int defined = map.defined.empty() ? 1 : (map.defined[k] != 0 ? 1 : 0);
    out << format_g17(map.values[k]) << ' ' << defined << '\n';
  }
  if (!out) throw IoError("write failed for scalar-map file: " + path);
}

ScalarMap load_scalar_map(const std::string& path, const ConductorGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scalar-map file: " + path);

  std::string magic, version;
  if (!(in >> magic >> version) || magic != "tlsmap-scalar-map" ||
      version != kVersion)
    throw IoError("scalar-map file " + path + ": unrecognized header");

  ScalarMap map;
  map.quantity = header_value(in, path, "quantity");
  double spacing = parse_double(header_value(in, path, "spacing_um"), path,
                                "spacing_um");
  long nx = std::stol(header_value(in, path, "nx"));
  long ny = std::stol(header_value(in, path, "ny"));
  double x_min = parse_double(header_value(in, path, "x_min_um"), path,
                              "x_min_um");
  double y_min = parse_double(header_value(in, path, "y_min_um"), path,
                              "y_min_um");
  std::string data_marker;
  if (!(in >> data_marker) || data_marker != "data")
    throw IoError("scalar-map file " + path + ": missing data section");

  GridMeta expected = grid_meta(grid);
  if (spacing != expected.spacing || nx != expected.nx || ny != expected.ny ||
      x_min != expected.x_min || y_min != expected.y_min)
    throw IoError("scalar-map file " + path + ": grid mismatch");

  map.meta = expected;
  std::size_t n = map.meta.cell_count();
  map.values.resize(n);
  map.defined.resize(n);
  std::string rest((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const char* cur = rest.c_str();
  for (std::size_t k = 0; k < n; ++k) {
    char* end = nullptr;
    double v = std::strtod(cur, &end);
    if (end == cur)
      throw IoError("scalar-map file " + path + ": truncated data");
    cur = end;
    long d = std::strtol(cur, &end, 10);
    if (end == cur || (d != 0 && d != 1))
      throw IoError("scalar-map file " + path + ": bad defined flag");
    cur = end;
    if (d != 0 && !std::isfinite(v))
      throw IoError("scalar-map file " + path + ": non-finite defined value");
    map.values[k] = v;
    map.defined[k] = static_cast<uint8_t>(d);
  }
  return map;
}

FieldMap load_field_map(const std::string& path, const ConductorGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field-map file: " + path);

  std::string magic, version;
  if (!(in >> magic >> version) || magic != kMagic || version != kVersion)
    throw IoError("field-map file " + path + ": unrecognized header");

  FieldMap map;
  map.source = header_value(in, path, "source");
  double spacing = parse_double(header_value(in, path, "spacing_um"), path,
                                "spacing_um");
  long nx = std::stol(header_value(in, path, "nx"));
  long ny = std::stol(header_value(in, path, "ny"));
  double x_min = parse_double(header_value(in, path, "x_min_um"), path,
                              "x_min_um");
  double y_min = parse_double(header_value(in, path, "y_min_um"), path,
                              "y_min_um");
  header_value(in, path, "unit");
  std::string data_marker;
  if (!(in >> data_marker) || data_marker != "data")
    throw IoError("field-map file " + path + ": missing data section");

  GridMeta expected = grid_meta(grid);
  if (spacing != expected.spacing || nx != expected.nx || ny != expected.ny ||
      x_min != expected.x_min || y_min != expected.y_min) {
    std::ostringstream os;
    os << "field-map file " << path << ": grid mismatch (file " << nx << "x"
       << ny << " @ " << spacing << " um origin (" << x_min << ", " << y_min
       << "), expected " << expected.nx << "x" << expected.ny << " @ "
       << expected.spacing << " um origin (" << expected.x_min << ", "
       << expected.y_min << "))";
    throw IoError(os.str());
  }

  map.meta = expected;
  std::size_t n = map.meta.cell_count();
  map.ex.resize(n);
  map.ey.resize(n);
  map.conductor_mask.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    map.conductor_mask[k] = grid.labels[k] != Conductor::Vacuum ? 1 : 0;

  // Slurp the remainder and walk it with strtod so that "nan"/"inf" tokens
  // are parsed (and then rejected) instead of silently failing the stream.
  std::string rest((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const char* cur = rest.c_str();
  for (std::size_t k = 0; k < n; ++k) {
    for (double* slot : {&map.ex[k], &map.ey[k]}) {
      char* end = nullptr;
      double v = std::strtod(cur, &end);
      if (end == cur) {
        std::ostringstream os;
        os << "field-map file " << path << ": truncated data at cell ("
           << (k % map.meta.nx) << ", " << (k / map.meta.nx) << ")";
        throw IoError(os.str());
      }
      cur = end;
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "field-map file " << path << ": non-finite value at cell ("
           << (k % map.meta.nx) << ", " << (k / map.meta.nx) << ")";
        throw IoError(os.str());
      }
      *slot = v;
    }
  }
  return map;
}

}  // namespace tlsmap
