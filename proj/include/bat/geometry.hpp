#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bat {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfSound = 343.0;

/// Microphone positions (meters) with one designated reference microphone.
struct ArrayGeometry {
  std::string name;
  std::vector<Vec3> positions;
  int reference_index = 0;

  int size() const { return static_cast<int>(positions.size()); }
  /// Throws std::invalid_argument unless M >= 2, positions are finite and the
  /// reference index is valid.
  void validate() const;
  /// Mic indices other than the reference, in ascending order. This is the
  /// channel order of every (M - 1)-length relative quantity.
  std::vector<int> non_reference() const;
  Vec3 centroid() const;
};

/// G1 (training array) and the three unseen test arrays G2-G4.
ArrayGeometry builtin_geometry(std::string_view name);

ArrayGeometry load_geometry(const std::string& path);
void save_geometry(const ArrayGeometry& geom, const std::string& path);

/// J azimuths equally spaced on the horizontal plane, starting at 0 degrees.
class DirectionGrid {
 public:
  explicit DirectionGrid(int count = 72);

  int size() const { return static_cast<int>(azimuths_deg_.size()); }
  double azimuth_deg(int j) const { return azimuths_deg_[j]; }
  const std::vector<double>& azimuths_deg() const { return azimuths_deg_; }
  double spacing_deg() const { return 360.0 / size(); }
  Vec3 look(int j) const;
  /// Index of the grid direction nearest to `azimuth_deg` (wrapping at 360).
  int nearest(double azimuth_deg) const;
  /// Index of an exact grid azimuth, or -1.
  int find(double azimuth_deg, double tol_deg = 1e-6) const;

 private:
  std::vector<double> azimuths_deg_;
};

/// Unit look vector on the horizontal plane (0 deg = +x, 90 deg = +y).
Vec3 look_vector(double azimuth_deg);

/// Free-field plane-wave RTF of every non-reference mic relative to the
/// reference: entry m is exp(+i 2 pi f / c * kappa . (p_m - p_ref)).
Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const Vec3& look,
                                 double freq_hz, double c = kSpeedOfSound);

/// Same as steering_vector but with all M mics; the reference entry is 1.
Eigen::VectorXcd steering_vector_full(const ArrayGeometry& geom, const Vec3& look,
                                      double freq_hz, double c = kSpeedOfSound);

/// (M - 1) x J matrix whose columns are the steering vectors of the grid.
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geom, const DirectionGrid& grid,
                                 double freq_hz, double c = kSpeedOfSound);

}  // namespace bat
