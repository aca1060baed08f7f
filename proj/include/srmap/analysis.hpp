#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "srmap/matrix.hpp"
#include "srmap/sr_core.hpp"

namespace srmap {

struct Embedding2D {
  std::vector<std::array<double, 2>> coords;
  std::vector<int> labels;  // empty when the items are unlabelled
  std::array<double, 2> axis_eigenvalues{0.0, 0.0};
  // Share of the positive spectrum of the centred Gram matrix kept by the two axes.
  double captured_fraction = 0.0;
};

/// -1/2 J D^2 J for the squared Euclidean distances between the rows of `points`.
Matrix double_centered_gram(const Matrix& points);

/// Torgerson scaling of the rows of `points` onto two axes. Axes whose
/// eigenvalue is not positive are left at zero.
Embedding2D classical_mds(const Matrix& points, std::span<const int> labels = {});

/// Per-item silhouette over 2D Euclidean distances; singletons score 0.
std::vector<double> silhouette_values(const Embedding2D& embedding);
double silhouette(const Embedding2D& embedding);

struct ErrorReport {
  std::vector<double> row_tv;
  std::vector<bool> excluded;
  double mean_tv = 0.0;
  double max_tv = 0.0;
  double frobenius_relative = 0.0;
  std::size_t included_rows = 0;

  std::string to_json() const;
};

/// Total variation per included row plus the relative Frobenius error of the
/// included rows. An empty mask includes every row.
ErrorReport matrix_error(const Matrix& predicted, const Matrix& truth, const std::vector<bool>& excluded = {});

/// Zero-mean autocorrelation over every lag with any overlap, normalized to 1
/// at zero lag. Output is (2R-1) x (2C-1) with zero lag in the centre. Masked
/// cells are treated as zero after centring.
Matrix autocorrelogram(const Matrix& field, const std::vector<bool>& mask = {});

struct Peak {
  double row_offset = 0.0;  // relative to zero lag; plateau centroid
  double col_offset = 0.0;
  double value = 0.0;
};

/// Strict 8-neighbourhood maxima; equal-valued connected plateaus count once.
std::vector<Peak> local_maxima(const Matrix& field);
std::vector<Peak> autocorrelation_peaks(const Matrix& field, const std::vector<bool>& mask = {});
std::size_t autocorrelation_peak_count(const EigenMap& map);

/// Rank correlation with average ranks for ties.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace srmap
