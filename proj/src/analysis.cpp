#include "srmap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "srmap/error.hpp"

namespace srmap {

Matrix double_centered_gram(const Matrix& points) {
  const std::size_t n = points.rows();
  Matrix d2(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < points.cols(); ++k) {
        const double d = points(i, k) - points(j, k);
        sum += d * d;
      }
      d2(i, j) = d2(j, i) = sum;
    }
  }
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_mean[i] += d2(i, j);
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  // D^2 is symmetric, so column means equal row means.
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = -0.5 * (d2(i, j) - row_mean[i] - row_mean[j] + grand);
  return b;
}

Embedding2D classical_mds(const Matrix& points, std::span<const int> labels) {
  if (points.rows() < 2) throw Error(ErrorKind::Input, "MDS needs at least two points");
  for (double v : points.data())
    if (!std::isfinite(v)) throw Error(ErrorKind::Input, "MDS input has non-finite coordinates");
  if (!labels.empty() && labels.size() != points.rows())
    throw Error(ErrorKind::Input, "label count does not match the number of points");

  const auto eig = jacobi_eigen(symmetric_part(double_centered_gram(points)));
  Embedding2D out;
  out.labels.assign(labels.begin(), labels.end());
  out.coords.assign(points.rows(), {0.0, 0.0});

  double positive = 0.0;
  for (double l : eig.eigenvalues) positive += std::max(0.0, l);
  const double floor = 1e-12 * std::max(1.0, std::abs(eig.eigenvalues.front()));
  double kept = 0.0;
  for (std::size_t axis = 0; axis < 2 && axis < eig.eigenvalues.size(); ++axis) {
    const double l = eig.eigenvalues[axis];
    out.axis_eigenvalues[axis] = l;
    if (l <= floor) continue;
    kept += l;
    const double scale = std::sqrt(l);
    for (std::size_t i = 0; i < points.rows(); ++i) out.coords[i][axis] = scale * eig.eigenvectors(i, axis);
  }
  out.captured_fraction = positive > 0.0 ? kept / positive : 0.0;
  return out;
}

namespace {
constexpr double kCoincidentTolerance = 1e-9;
}

std::vector<double> silhouette_values(const Embedding2D& e) {
  const std::size_t n = e.coords.size();
  if (e.labels.size() != n) throw Error(ErrorKind::UndefinedClustering, "silhouette needs one label per point");
  std::map<int, std::size_t> sizes;
  for (int l : e.labels) ++sizes[l];
  if (sizes.size() < 2) throw Error(ErrorKind::UndefinedClustering, "silhouette needs at least two labels");

  Matrix dist(n, n);
  double longest = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      dist(i, j) = dist(j, i) = std::hypot(e.coords[i][0] - e.coords[j][0], e.coords[i][1] - e.coords[j][1]);
      longest = std::max(longest, dist(i, j));
    }
  // Points that coincide up to round-off are treated as coincident.
  const double floor = kCoincidentTolerance * longest;
  for (std::size_t i = 0; i < n * n; ++i)
    if (dist.data()[i] <= floor) dist.data()[i] = 0.0;

  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[e.labels[i]] == 1) continue;
    std::map<int, double> dist_sum;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist_sum[e.labels[j]] += dist(i, j);
    const double a = dist_sum[e.labels[i]] / static_cast<double>(sizes[e.labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, sum] : dist_sum)
      if (label != e.labels[i]) b = std::min(b, sum / static_cast<double>(sizes[label]));
    const double denom = std::max(a, b);
    out[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return out;
}

double silhouette(const Embedding2D& embedding) {
  const auto values = silhouette_values(embedding);
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::string ErrorReport::to_json() const {
  nlohmann::json doc;
  doc["mean_tv"] = mean_tv;
  doc["max_tv"] = max_tv;
  doc["frobenius_relative"] = frobenius_relative;
  doc["included_rows"] = included_rows;
  doc["row_tv"] = row_tv;
  std::vector<std::size_t> skipped;
  for (std::size_t i = 0; i < excluded.size(); ++i)
    if (excluded[i]) skipped.push_back(i);
  doc["excluded_rows"] = skipped;
  return doc.dump(2);
}

ErrorReport matrix_error(const Matrix& predicted, const Matrix& truth, const std::vector<bool>& excluded) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw Error(ErrorKind::Shape, "predicted and reference matrices differ in shape");
  if (!excluded.empty() && excluded.size() != truth.rows())
    throw Error(ErrorKind::Shape, "row mask length does not match the matrix");

  ErrorReport report;
  report.excluded = excluded.empty() ? std::vector<bool>(truth.rows(), false) : excluded;
  report.row_tv.assign(truth.rows(), 0.0);
  double diff2 = 0.0;
  double ref2 = 0.0;
  double tv_sum = 0.0;
  for (std::size_t r = 0; r < truth.rows(); ++r) {
    if (report.excluded[r]) continue;
    double abs_sum = 0.0;
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      const double d = predicted(r, c) - truth(r, c);
      abs_sum += std::abs(d);
      diff2 += d * d;
      ref2 += truth(r, c) * truth(r, c);
    }
    report.row_tv[r] = 0.5 * abs_sum;
    report.max_tv = std::max(report.max_tv, report.row_tv[r]);
    tv_sum += report.row_tv[r];
    ++report.included_rows;
  }
  if (report.included_rows) report.mean_tv = tv_sum / static_cast<double>(report.included_rows);
  if (ref2 > 0.0)
    report.frobenius_relative = std::sqrt(diff2 / ref2);
  else
    report.frobenius_relative = diff2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return report;
}

Matrix autocorrelogram(const Matrix& field, const std::vector<bool>& mask) {
  const std::size_t rows = field.rows();
  const std::size_t cols = field.cols();
  const auto masked = [&](std::size_t r, std::size_t c) { return !mask.empty() && mask[r * cols + c]; };

  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (!masked(r, c)) {
        mean += field(r, c);
        ++count;
      }
  if (count) mean /= static_cast<double>(count);
  Matrix centred(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) centred(r, c) = masked(r, c) ? 0.0 : field(r, c) - mean;

  const long R = static_cast<long>(rows);
  const long C = static_cast<long>(cols);
  Matrix out(2 * rows - 1, 2 * cols - 1);
  for (long dy = -(R - 1); dy < R; ++dy) {
    for (long dx = -(C - 1); dx < C; ++dx) {
      double sum = 0.0;
      for (long r = std::max(0L, dy); r < R + std::min(0L, dy); ++r)
        for (long c = std::max(0L, dx); c < C + std::min(0L, dx); ++c)
          sum += centred(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) *
                 centred(static_cast<std::size_t>(r - dy), static_cast<std::size_t>(c - dx));
      out(static_cast<std::size_t>(dy + R - 1), static_cast<std::size_t>(dx + C - 1)) = sum;
    }
  }
  const double zero_lag = out(rows - 1, cols - 1);
  if (zero_lag <= 1e-300) return Matrix(out.rows(), out.cols(), 0.0);
  for (double& v : out.data()) v /= zero_lag;
  return out;
}

std::vector<Peak> local_maxima(const Matrix& f) {
  constexpr double kTie = 1e-12;
  const long R = static_cast<long>(f.rows());
  const long C = static_cast<long>(f.cols());
  const auto at = [&](long r, long c) { return f(static_cast<std::size_t>(r), static_cast<std::size_t>(c)); };
  std::vector<int> seen(f.rows() * f.cols(), 0);
  std::vector<Peak> peaks;

  for (long r0 = 0; r0 < R; ++r0) {
    for (long c0 = 0; c0 < C; ++c0) {
      if (seen[static_cast<std::size_t>(r0 * C + c0)]) continue;
      // Flood the plateau of cells equal to (r0, c0).
      const double level = at(r0, c0);
      std::vector<std::pair<long, long>> plateau{{r0, c0}};
      seen[static_cast<std::size_t>(r0 * C + c0)] = 1;
      bool is_peak = true;
      for (std::size_t k = 0; k < plateau.size(); ++k) {
        const auto [r, c] = plateau[k];
        for (long dr = -1; dr <= 1; ++dr) {
          for (long dc = -1; dc <= 1; ++dc) {
            if (!dr && !dc) continue;
            const long rr = r + dr;
            const long cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= R || cc >= C) continue;
            const double v = at(rr, cc);
            if (std::abs(v - level) <= kTie) {
              auto& mark = seen[static_cast<std::size_t>(rr * C + cc)];
              if (!mark) {
                mark = 1;
                plateau.emplace_back(rr, cc);
              }
            } else if (v > level) {
              is_peak = false;
            }
          }
        }
      }
      if (!is_peak) continue;
      Peak p{0.0, 0.0, level};
      for (const auto& [r, c] : plateau) {
        p.row_offset += static_cast<double>(r);
        p.col_offset += static_cast<double>(c);
      }
      p.row_offset = p.row_offset / static_cast<double>(plateau.size()) - static_cast<double>(R / 2);
      p.col_offset = p.col_offset / static_cast<double>(plateau.size()) - static_cast<double>(C / 2);
      peaks.push_back(p);
    }
  }
  return peaks;
}

std::vector<Peak> autocorrelation_peaks(const Matrix& field, const std::vector<bool>& mask) {
  if (field.rows() < 3 || field.cols() < 3) throw Error(ErrorKind::Input, "autocorrelation needs a map of at least 3x3");
  return local_maxima(autocorrelogram(field, mask));
}

std::size_t autocorrelation_peak_count(const EigenMap& map) {
  const auto peaks = autocorrelation_peaks(map.values, map.wall_mask);
  // A flat map gives a flat correlogram: one plateau, the central peak.
  return std::max<std::size_t>(1, peaks.size());
}

namespace {
std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::Input, "rank correlation needs two equal-length series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace srmap
