#include "bat/geometry.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "bat/error.hpp"

namespace bat {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec3 polar(double radius, double azimuth_deg) {
  return {radius * std::cos(azimuth_deg * kDeg), radius * std::sin(azimuth_deg * kDeg), 0.0};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace

void ArrayGeometry::validate() const {
  if (positions.size() < 2) throw std::invalid_argument("ArrayGeometry: need at least two microphones");
  for (const auto& p : positions)
    for (double v : p)
      if (!std::isfinite(v)) throw std::invalid_argument("ArrayGeometry: non-finite position");
  if (reference_index < 0 || reference_index >= size())
    throw std::invalid_argument("ArrayGeometry: reference_index out of range");
}

std::vector<int> ArrayGeometry::non_reference() const {
  std::vector<int> out;
  for (int m = 0; m < size(); ++m)
    if (m != reference_index) out.push_back(m);
  return out;
}

Vec3 ArrayGeometry::centroid() const {
  Vec3 c{0.0, 0.0, 0.0};
  for (const auto& p : positions)
    for (int k = 0; k < 3; ++k) c[k] += p[k];
  for (double& v : c) v /= static_cast<double>(positions.size());
  return c;
}

ArrayGeometry builtin_geometry(std::string_view name) {
  ArrayGeometry g;
  g.name = std::string(name);
  if (name == "G1") {
    // Center mic (reference) plus four on a 4 cm circle.
    g.positions = {{0.0, 0.0, 0.0}, polar(0.04, 0), polar(0.04, 90), polar(0.04, 180), polar(0.04, 270)};
    g.reference_index = 0;
  } else if (name == "G2") {
    // Uniform linear array, 3 cm pitch, reference at one end.
    for (int m = 0; m < 5; ++m) g.positions.push_back({-0.06 + 0.03 * m, 0.0, 0.0});
    g.reference_index = 0;
  } else if (name == "G3") {
    // Center (reference) plus the corners of a 6 cm x 4 cm rectangle.
    g.positions = {{0.0, 0.0, 0.0}, {0.03, 0.02, 0.0}, {-0.03, 0.02, 0.0}, {-0.03, -0.02, 0.0}, {0.03, -0.02, 0.0}};
    g.reference_index = 0;
  } else if (name == "G4") {
    // Triangle with 4 cm circumradius, reference at the first vertex.
    g.positions = {polar(0.04, 0), polar(0.04, 120), polar(0.04, 240)};
    g.reference_index = 0;
  } else {
    throw ConfigError("unknown geometry '" + std::string(name) + "' (expected G1, G2, G3 or G4)");
  }
  return g;
}

ArrayGeometry load_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open geometry file " + path);
  nlohmann::json j;
  try {
    in >> j;
    ArrayGeometry g;
    g.name = j.at("name").get<std::string>();
    g.reference_index = j.at("reference_index").get<int>();
    for (const auto& p : j.at("positions_m")) {
      if (p.size() != 3) throw ConfigError("geometry positions must be [x, y, z]");
      g.positions.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    g.validate();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid geometry file " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("invalid geometry file " + path + ": " + e.what());
  }
}

void save_geometry(const ArrayGeometry& geom, const std::string& path) {
  nlohmann::json j;
  j["name"] = geom.name;
  j["reference_index"] = geom.reference_index;
  j["positions_m"] = nlohmann::json::array();
  for (const auto& p : geom.positions) j["positions_m"].push_back({p[0], p[1], p[2]});
  std::ofstream out(path);
  if (!out) throw DataError("cannot write geometry file " + path);
  out << j.dump(2) << '\n';
}

DirectionGrid::DirectionGrid(int count) {
  if (count < 1) throw std::invalid_argument("DirectionGrid: need at least one direction");
  azimuths_deg_.resize(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) azimuths_deg_[j] = 360.0 * j / count;
}

Vec3 DirectionGrid::look(int j) const { return look_vector(azimuths_deg_.at(static_cast<std::size_t>(j))); }

int DirectionGrid::nearest(double azimuth_deg) const {
  double a = std::fmod(azimuth_deg, 360.0);
  if (a < 0) a += 360.0;
  const int j = static_cast<int>(std::lround(a / spacing_deg()));
  return j % size();
}

int DirectionGrid::find(double azimuth_deg, double tol_deg) const {
  const int j = nearest(azimuth_deg);
  double a = std::fmod(azimuth_deg, 360.0);
  if (a < 0) a += 360.0;
  double diff = std::abs(a - azimuths_deg_[j]);
  diff = std::min(diff, 360.0 - diff);
  return diff <= tol_deg ? j : -1;
}

Vec3 look_vector(double azimuth_deg) { return polar(1.0, azimuth_deg); }

Eigen::VectorXcd steering_vector_full(const ArrayGeometry& geom, const Vec3& look, double freq_hz,
                                      double c) {
  const double n = norm(look);
  if (!(n > 0.0)) throw std::invalid_argument("steering_vector: zero-norm look vector");
  if (freq_hz < 0.0) throw std::invalid_argument("steering_vector: negative frequency");
  if (!(c > 0.0)) throw std::invalid_argument("steering_vector: speed of sound must be positive");
  const Vec3 kappa{look[0] / n, look[1] / n, look[2] / n};
  const double k = 2.0 * std::numbers::pi * freq_hz / c;
  const Vec3& ref = geom.positions.at(static_cast<std::size_t>(geom.reference_index));
  Eigen::VectorXcd a(geom.size());
  for (int m = 0; m < geom.size(); ++m) {
    const Vec3& p = geom.positions[static_cast<std::size_t>(m)];
    const Vec3 d{p[0] - ref[0], p[1] - ref[1], p[2] - ref[2]};
    a(m) = m == geom.reference_index ? std::complex<double>(1.0, 0.0) : std::polar(1.0, k * dot(kappa, d));
  }
  return a;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const Vec3& look, double freq_hz,
                                 double c) {
  const Eigen::VectorXcd full = steering_vector_full(geom, look, freq_hz, c);
  const auto others = geom.non_reference();
  Eigen::VectorXcd a(static_cast<Eigen::Index>(others.size()));
  for (std::size_t i = 0; i < others.size(); ++i) a(static_cast<Eigen::Index>(i)) = full(others[i]);
  return a;
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geom, const DirectionGrid& grid, double freq_hz,
                                 double c) {
  Eigen::MatrixXcd A(geom.size() - 1, grid.size());
  for (int j = 0; j < grid.size(); ++j) A.col(j) = steering_vector(geom, grid.look(j), freq_hz, c);
  return A;
}

}  // namespace bat
