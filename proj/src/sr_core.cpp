#include "srmap/sr_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srmap/error.hpp"

namespace srmap {

void SRConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorKind::Config, "gamma must lie in [0, 1]");
  if (!horizon && gamma >= 1.0) throw Error(ErrorKind::Config, "gamma = 1 needs a finite horizon");
}

SuccessorMatrix successor_matrix(const Matrix& tp, const SRConfig& config) {
  config.validate();
  if (!tp.square()) throw Error(ErrorKind::Shape, "transition matrix must be square");
  const std::size_t n = tp.rows();
  SuccessorMatrix sr{Matrix::identity(n), config};
  if (config.gamma == 0.0 || (config.horizon && *config.horizon == 0)) return sr;

  // Infinite horizon: stop once the next term is below double resolution.
  constexpr std::size_t kMaxTerms = 1'000'000;
  const std::size_t last = config.horizon ? *config.horizon : kMaxTerms;
  Matrix power = Matrix::identity(n);
  double coef = 1.0;
  for (std::size_t t = 1; t <= last; ++t) {
    power = power * tp;
    coef *= config.gamma;
    auto m = sr.entries.data();
    auto p = power.data();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += coef * p[i];
    if (!config.horizon && coef * max_abs(power) < 1e-17 * max_abs(sr.entries)) break;
  }
  return sr;
}

std::vector<double> value_function(const SuccessorMatrix& sr, std::span<const double> rewards) {
  const Matrix& m = sr.entries;
  if (!rewards.empty() && rewards.size() != m.cols())
    throw Error(ErrorKind::Shape, "reward vector has " + std::to_string(rewards.size()) + " entries, SR has " +
                                      std::to_string(m.cols()) + " columns");
  std::vector<double> v(m.rows(), 0.0);
  for (std::size_t s = 0; s < m.rows(); ++s) {
    double acc = 0.0;
    const auto row = m.row(s);
    for (std::size_t t = 0; t < row.size(); ++t) acc += row[t] * (rewards.empty() ? 1.0 : rewards[t]);
    v[s] = acc;
  }
  return v;
}

Matrix symmetric_part(const Matrix& a, double* residual) {
  if (!a.square()) throw Error(ErrorKind::Shape, "symmetrization needs a square matrix");
  Matrix sym(a.rows(), a.cols());
  double skew = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      sym(i, j) = 0.5 * (a(i, j) + a(j, i));
      const double d = 0.5 * (a(i, j) - a(j, i));
      skew += d * d;
    }
  }
  if (residual) *residual = std::sqrt(skew);
  return sym;
}

SpectralDecomposition jacobi_eigen(const Matrix& input, const JacobiOptions& options) {
  if (!input.square()) throw Error(ErrorKind::Shape, "eigendecomposition needs a square matrix");
  const std::size_t n = input.rows();
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(input(i, j) - input(j, i)));
  if (asym >= 1e-9) throw Error(ErrorKind::Symmetry, "matrix is not symmetric (max |a - a^T| = " +
                                                          format_double(asym) + "); symmetrize first");

  Matrix a = symmetric_part(input);
  Matrix v = Matrix::identity(n);
  SpectralDecomposition out;

  const auto max_off_diagonal = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
  };

  while (out.sweeps < options.max_sweeps && max_off_diagonal() >= options.tol) {
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation that zeroes a(p,q), with the smaller of the two angles.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (std::isinf(theta * theta)) t = 0.5 / std::abs(theta);
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double g = a(r, p);
          const double h = a(r, q);
          a(r, p) = a(p, r) = g - s * (h + g * tau);
          a(r, q) = a(q, r) = h + s * (g - h * tau);
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double g = v(r, p);
          const double h = v(r, q);
          v(r, p) = g - s * (h + g * tau);
          v(r, q) = h + s * (g - h * tau);
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    double sum = 0.0;
    std::size_t first_big = n;
    for (std::size_t r = 0; r < n; ++r) {
      sum += v(r, src);
      if (first_big == n && std::abs(v(r, src)) > 1e-8) first_big = r;
    }
    bool flip = sum < -1e-12;
    if (std::abs(sum) <= 1e-12 && first_big < n) flip = v(first_big, src) < 0.0;
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = flip ? -v(r, src) : v(r, src);
  }
  return out;
}

EigenMapSet sr_eigenmaps(const SuccessorMatrix& sr, const StateSpace& space, std::size_t k,
                         const JacobiOptions& options) {
  if (!space.grid_shape)
    throw Error(ErrorKind::UnsupportedReshape, std::string(to_string(space.kind)) + " space has no grid shape");
  if (sr.entries.rows() != space.n_states || !sr.entries.square())
    throw Error(ErrorKind::Shape, "SR size does not match the state space");
  const auto states = space.valid_states();
  if (k > states.size())
    throw Error(ErrorKind::Config, "requested " + std::to_string(k) + " eigenmaps but only " +
                                       std::to_string(states.size()) + " valid states exist");

  Matrix restricted(states.size(), states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = 0; j < states.size(); ++j) restricted(i, j) = sr.entries(states[i], states[j]);

  EigenMapSet out;
  const Matrix sym = symmetric_part(restricted, &out.symmetrization_residual);
  const auto eig = jacobi_eigen(sym, options);
  out.eigenvalues = eig.eigenvalues;

  const GridShape g = *space.grid_shape;
  std::vector<bool> walls(space.n_states);
  for (StateId s = 0; s < space.n_states; ++s) walls[s] = !space.valid[s];
  for (std::size_t rank = 0; rank < k; ++rank) {
    EigenMap map{Matrix(g.rows, g.cols), walls, eig.eigenvalues[rank], rank};
    for (std::size_t i = 0; i < states.size(); ++i)
      map.values(states[i] / g.cols, states[i] % g.cols) = eig.eigenvectors(i, rank);
    out.maps.push_back(std::move(map));
  }
  return out;
}

}  // namespace srmap
