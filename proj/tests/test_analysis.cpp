#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "srmap/analysis.hpp"
#include "srmap/environments.hpp"
#include "srmap/error.hpp"
#include "srmap/sr_core.hpp"

using namespace srmap;

namespace {

double dist2d(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

double dist(const Matrix& m, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) s += (m(i, c) - m(j, c)) * (m(i, c) - m(j, c));
  return std::sqrt(s);
}

Matrix cosine_field(std::size_t n, double period) {
  Matrix f(n, n);
  const double w = 2 * std::numbers::pi / period;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) f(r, c) = std::cos(w * r) + std::cos(w * c);
  return f;
}

Embedding2D labelled(std::vector<std::array<double, 2>> coords, std::vector<int> labels) {
  Embedding2D e;
  e.coords = std::move(coords);
  e.labels = std::move(labels);
  return e;
}

}  // namespace

TEST(Mds, TwoPoints) {
  Matrix p(2, 3);
  p(1, 0) = 4.0;
  auto e = classical_mds(p);
  EXPECT_NEAR(std::abs(e.coords[0][0]), 2.0, 1e-12);
  EXPECT_NEAR(e.coords[0][0], -e.coords[1][0], 1e-12);
  EXPECT_EQ(e.coords[0][1], 0.0);
}

TEST(Mds, PlanarPointsKeepDistances) {
  std::mt19937 gen(3);
  std::normal_distribution<double> g;
  Matrix p(15, 5);
  for (std::size_t i = 0; i < 15; ++i) {
    double a = g(gen), b = g(gen);
    // Points on the plane spanned by (1,1,0,0,1) and (0,1,-1,2,0).
    p(i, 0) = a;
    p(i, 1) = a + b;
    p(i, 2) = -b;
    p(i, 3) = 2 * b;
    p(i, 4) = a;
  }
  auto e = classical_mds(p);
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t j = 0; j < i; ++j) EXPECT_NEAR(dist2d(e.coords[i], e.coords[j]), dist(p, i, j), 1e-8);
  EXPECT_NEAR(e.captured_fraction, 1.0, 1e-9);
  double cx = 0, cy = 0;
  for (auto c : e.coords) cx += c[0], cy += c[1];
  EXPECT_NEAR(cx, 0.0, 1e-9);
  EXPECT_NEAR(cy, 0.0, 1e-9);
  EXPECT_GE(e.axis_eigenvalues[0], e.axis_eigenvalues[1]);
}

TEST(Mds, Equilateral) {
  Matrix p = Matrix::identity(3);
  for (std::size_t i = 0; i < 9; ++i) p.data()[i] /= std::sqrt(2.0);
  auto e = classical_mds(p);
  EXPECT_NEAR(dist2d(e.coords[0], e.coords[1]), 1.0, 1e-8);
  EXPECT_NEAR(dist2d(e.coords[0], e.coords[2]), 1.0, 1e-8);
  EXPECT_NEAR(dist2d(e.coords[1], e.coords[2]), 1.0, 1e-8);
}

TEST(Mds, GramIsDoubleCentred) {
  auto tp = ground_truth_tp(build_language_space(LexiconSpec::defaults())).probs;
  auto b = double_centered_gram(tp);
  for (std::size_t i = 0; i < b.rows(); ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < b.cols(); ++j) row += b(i, j), col += b(j, i);
    EXPECT_NEAR(row, 0.0, 1e-9);
    EXPECT_NEAR(col, 0.0, 1e-9);
  }
}

TEST(Mds, Errors) {
  try {
    classical_mds(Matrix(1, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
  }
  Matrix bad(2, 2);
  bad(0, 0) = NAN;
  EXPECT_THROW(classical_mds(bad), Error);
}

TEST(Silhouette, SeparatedClusters) {
  auto e = labelled({{0, 0}, {0.1, 0}, {0, 0.1}, {10, 0}, {10.1, 0}, {10, 0.1}}, {0, 0, 0, 1, 1, 1});
  EXPECT_GT(silhouette(e), 0.9);
}

TEST(Silhouette, MatchesDirectFormula) {
  auto e = labelled({{0, 0}, {1, 0}, {3, 0}, {4, 1}, {0, 5}}, {0, 0, 1, 1, 2});
  auto s = silhouette_values(e);
  // point 0: a = 1, b = min(mean(3, sqrt 17), 5)
  const double b0 = std::min((3.0 + std::sqrt(17.0)) / 2.0, 5.0);
  EXPECT_NEAR(s[0], (b0 - 1.0) / std::max(1.0, b0), 1e-12);
  EXPECT_EQ(s[4], 0.0);  // singleton
}

TEST(Silhouette, DegenerateAndSymmetry) {
  auto same = labelled({{1, 1}, {1, 1}, {1, 1}, {1, 1}}, {0, 0, 1, 1});
  EXPECT_EQ(silhouette(same), 0.0);

  auto a = labelled({{0, 0}, {1, 0}, {5, 5}, {6, 5}}, {0, 0, 1, 1});
  auto b = labelled({{1, 0}, {0, 0}, {6, 5}, {5, 5}}, {0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(silhouette(a), silhouette(b));

  try {
    silhouette(labelled({{0, 0}, {1, 0}}, {3, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedClustering);
  }
}

TEST(Silhouette, GroundTruthLanguageTp) {
  auto lang = build_language_space(LexiconSpec::defaults());
  auto e = classical_mds(ground_truth_tp(lang).probs, lang.labels);
  EXPECT_GT(silhouette(e), 0.5);
  for (double s : silhouette_values(e)) EXPECT_GE(s, 0.0);
  for (auto c : e.coords) EXPECT_TRUE(std::isfinite(c[0]) && std::isfinite(c[1]));
}

TEST(MatrixError, Basics) {
  Matrix a(2, 2), b(2, 2);
  a(0, 0) = a(0, 1) = 0.5;
  b(0, 0) = 1.0;
  a(1, 1) = b(1, 1) = 1.0;
  auto r = matrix_error(a, b);
  EXPECT_DOUBLE_EQ(r.row_tv[0], 0.5);
  EXPECT_DOUBLE_EQ(r.row_tv[1], 0.0);
  EXPECT_DOUBLE_EQ(r.mean_tv, 0.25);
  EXPECT_DOUBLE_EQ(r.max_tv, 0.5);

  auto same = matrix_error(b, b);
  EXPECT_EQ(same.mean_tv, 0.0);
  EXPECT_EQ(same.frobenius_relative, 0.0);

  auto masked = matrix_error(a, b, {true, false});
  EXPECT_EQ(masked.included_rows, 1u);
  EXPECT_EQ(masked.mean_tv, 0.0);
  EXPECT_THROW(matrix_error(a, Matrix(3, 2)), Error);
  EXPECT_THROW(matrix_error(a, b, {true}), Error);
}

TEST(MatrixError, ReferenceImplementation) {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 20;
  Matrix p(n, n), q(n, n);
  for (Matrix* m : {&p, &q})
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += (*m)(r, c) = u(gen);
      for (std::size_t c = 0; c < n; ++c) (*m)(r, c) /= s;
    }
  std::vector<bool> excluded(n, false);
  excluded[3] = excluded[17] = true;
  auto r = matrix_error(p, q, excluded);

  double tv_sum = 0.0, diff2 = 0.0, truth2 = 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    if (excluded[row]) continue;
    double tv = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      tv += std::abs(p(row, c) - q(row, c));
      diff2 += (p(row, c) - q(row, c)) * (p(row, c) - q(row, c));
      truth2 += q(row, c) * q(row, c);
    }
    tv_sum += 0.5 * tv;
    EXPECT_NEAR(r.row_tv[row], 0.5 * tv, 1e-12);
    EXPECT_LE(r.row_tv[row], 1.0);
  }
  EXPECT_NEAR(r.mean_tv, tv_sum / (n - 2), 1e-12);
  EXPECT_NEAR(r.frobenius_relative, std::sqrt(diff2 / truth2), 1e-12);
}

TEST(Autocorrelation, ShapeAndCentre) {
  auto ac = autocorrelogram(cosine_field(10, 5));
  EXPECT_EQ(ac.rows(), 19u);
  EXPECT_EQ(ac.cols(), 19u);
  EXPECT_DOUBLE_EQ(ac(9, 9), 1.0);
  for (std::size_t i = 0; i < ac.rows() * ac.cols(); ++i) EXPECT_LE(ac.data()[i], 1.0 + 1e-12);
}

TEST(Autocorrelation, ConstantMapHasOnePeak) {
  EigenMap m;
  m.values = Matrix(10, 10, 0.3);
  EXPECT_EQ(autocorrelation_peak_count(m), 1u);
}

TEST(Autocorrelation, PeakSpacingMatchesPeriod) {
  auto peaks = autocorrelation_peaks(cosine_field(10, 5));
  double nearest = INFINITY;
  for (const auto& p : peaks) {
    double r = std::hypot(p.row_offset, p.col_offset);
    if (r > 0.5) nearest = std::min(nearest, r);
  }
  EXPECT_NEAR(nearest, 5.0, 1.0);
}

TEST(Autocorrelation, HigherFrequencyMorePeaks) {
  EXPECT_GT(autocorrelation_peaks(cosine_field(10, 5)).size(), autocorrelation_peaks(cosine_field(10, 10)).size());
  EXPECT_THROW(autocorrelation_peaks(Matrix(2, 2, 1.0)), Error);
}

TEST(Autocorrelation, PlateauCountedOnce) {
  Matrix f(5, 5);
  f(2, 1) = f(2, 2) = 3.0;
  auto peaks = local_maxima(f);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_DOUBLE_EQ(peaks[0].col_offset, -0.5);
  EXPECT_DOUBLE_EQ(peaks[0].row_offset, 0.0);
}

TEST(Autocorrelation, RoomEigenmapMeshTrend) {
  auto room = build_grid_room(10, 10);
  auto maps = sr_eigenmaps(successor_matrix(ground_truth_tp(room), {0.9, 10}), room, 20);
  std::vector<double> rank, count;
  for (std::size_t k = 1; k < 20; ++k) {
    rank.push_back(static_cast<double>(k + 1));
    count.push_back(static_cast<double>(autocorrelation_peak_count(maps.maps[k])));
  }
  EXPECT_GT(spearman_correlation(rank, count), 0.5);
}

TEST(Spearman, Basics) {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> up = {2, 4, 9, 10, 30}, down = {5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman_correlation(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman_correlation(x, down), -1.0);
  // Ties get average ranks: y ranks {1.5, 1.5, 3, 4, 5}.
  std::vector<double> tied = {1, 1, 2, 3, 4};
  EXPECT_NEAR(spearman_correlation(x, tied), 9.5 / std::sqrt(10.0 * 9.5), 1e-12);
  EXPECT_THROW(spearman_correlation(x, std::vector<double>{1, 2}), Error);
}
