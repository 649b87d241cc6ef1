#include "latnet/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "latnet/errors.hpp"
#include "latnet/kernels.hpp"
#include "latnet/rng.hpp"

namespace latnet {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues descending with matching eigenvector columns. Used directly
// for small problems and for the Rayleigh-Ritz step of the iterative path.
void jacobi_eigh(Matrix A, std::vector<double>& evals, Matrix& evecs) {
  const std::size_t m = A.rows();
  evecs = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i) evecs(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) off += A(p, q) * A(p, q);
    }
    double diag = 0.0;
    for (std::size_t p = 0; p < m; ++p) diag += A(p, p) * A(p, p);
    if (off <= 1e-28 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = 0.5 * (A(q, q) - A(p, p)) / apq;
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < m; ++i) {
          const double aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - s * aiq;
          A(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < m; ++i) {
          const double api = A(p, i), aqi = A(q, i);
          A(p, i) = c * api - s * aqi;
          A(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < m; ++i) {
          const double vip = evecs(i, p), viq = evecs(i, q);
          evecs(i, p) = c * vip - s * viq;
          evecs(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return A(a, a) > A(b, b); });
  evals.resize(m);
  Matrix sorted(m, m);
  for (std::size_t c = 0; c < m; ++c) {
    evals[c] = A(order[c], order[c]);
    for (std::size_t r = 0; r < m; ++r) sorted(r, c) = evecs(r, order[c]);
  }
  evecs = std::move(sorted);
}

// Modified Gram-Schmidt with one re-orthogonalization pass; zero columns are
// replaced by deterministic noise so the block keeps full rank.
void orthonormalize(Matrix& Q, Rng& rng) {
  const std::size_t m = Q.rows();
  const std::size_t b = Q.cols();
  std::vector<double> col(m);
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t i = 0; i < m; ++i) col[i] = Q(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += Q(i, k) * col[i];
        for (std::size_t i = 0; i < m; ++i) col[i] -= proj * Q(i, k);
      }
    }
    double norm = std::sqrt(kern::sumsq(col));
    if (norm <= 1e-300) {
      for (std::size_t i = 0; i < m; ++i) col[i] = rng.normal();
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += Q(i, k) * col[i];
        for (std::size_t i = 0; i < m; ++i) col[i] -= proj * Q(i, k);
      }
      norm = std::sqrt(kern::sumsq(col));
    }
    for (std::size_t i = 0; i < m; ++i) Q(i, j) = col[i] / norm;
  }
}

}  // namespace

Matrix pca_reduce(const Matrix& features, int k) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 2 || d == 0) throw input_error("pca: need at least two rows and one column");
  if (k < 1 || static_cast<std::size_t>(k) > std::min(n, d)) {
    throw input_error("pca: k must lie in [1, min(n, d)]");
  }

  // Column-centered copy, stored by rows and by columns.
  Matrix Xc = features;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += Xc(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) Xc(i, j) -= mean;
  }

  const bool cov_side = d <= n;  // eigenproblem dimension
  const std::size_t m = cov_side ? d : n;

  // y = Xc' (Xc q) on the covariance side, y = Xc (Xc' q) on the Gram side.
  std::vector<double> mid(cov_side ? n : d);
  auto apply = [&](const double* q, double* y) {
    if (cov_side) {
      for (std::size_t i = 0; i < n; ++i) mid[i] = kern::active().dot(Xc.row(i).data(), q, d);
      std::fill(y, y + d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        kern::active().axpy(mid[i], Xc.row(i).data(), y, d);
      }
    } else {
      std::fill(mid.begin(), mid.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        kern::active().axpy(q[i], Xc.row(i).data(), mid.data(), d);
      }
      for (std::size_t i = 0; i < n; ++i) y[i] = kern::active().dot(Xc.row(i).data(), mid.data(), d);
    }
  };

  std::vector<double> evals;
  Matrix basis;  // m x (at least k), eigenvectors of the posed problem

  if (m <= 128) {
    Matrix M(m, m);
    std::vector<double> e(m, 0.0), y(m);
    for (std::size_t j = 0; j < m; ++j) {
      e[j] = 1.0;
      apply(e.data(), y.data());
      e[j] = 0.0;
      for (std::size_t i = 0; i < m; ++i) M(i, j) = y[i];
    }
    // symmetrize away accumulation noise
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double v = 0.5 * (M(i, j) + M(j, i));
        M(i, j) = v;
        M(j, i) = v;
      }
    }
    jacobi_eigh(std::move(M), evals, basis);
  } else {
    const std::size_t b = std::min(m, static_cast<std::size_t>(k) + 8);
    Rng rng(0x5CA1AB1EULL);
    Matrix Q(m, b);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < b; ++j) Q(i, j) = rng.normal();
    }
    orthonormalize(Q, rng);
    std::vector<double> qcol(m), ycol(m);
    std::vector<double> prev(k, -1.0);
    Matrix Z(m, b);
    for (int iter = 0; iter < 1000; ++iter) {
      for (std::size_t j = 0; j < b; ++j) {
        for (std::size_t i = 0; i < m; ++i) qcol[i] = Q(i, j);
        apply(qcol.data(), ycol.data());
        for (std::size_t i = 0; i < m; ++i) Z(i, j) = ycol[i];
      }
      Matrix T(b, b);  // Ritz block: Z'Z relates to M Q via the orthonormal Q
      // Compute via fresh orthonormal basis of Z, then Rayleigh quotient.
      orthonormalize(Z, rng);
      Matrix MZ(m, b);
      for (std::size_t j = 0; j < b; ++j) {
        for (std::size_t i = 0; i < m; ++i) qcol[i] = Z(i, j);
        apply(qcol.data(), ycol.data());
        for (std::size_t i = 0; i < m; ++i) MZ(i, j) = ycol[i];
      }
      for (std::size_t a = 0; a < b; ++a) {
        for (std::size_t c = a; c < b; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i) acc += Z(i, a) * MZ(i, c);
          T(a, c) = acc;
          T(c, a) = acc;
        }
      }
      std::vector<double> theta;
      Matrix W;
      jacobi_eigh(std::move(T), theta, W);
      Matrix Qn(m, b);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < b; ++c) acc += Z(i, c) * W(c, j);
          Qn(i, j) = acc;
        }
      }
      Q = std::move(Qn);
      double drift = 0.0;
      const double scale = std::max(std::fabs(theta[0]), 1e-300);
      for (int j = 0; j < k; ++j) drift = std::max(drift, std::fabs(theta[j] - prev[j]) / scale);
      for (int j = 0; j < k; ++j) prev[j] = theta[j];
      evals = theta;
      if (drift < 1e-13 && iter > 2) break;
    }
    basis = std::move(Q);
  }

  if (!(evals[0] > 0.0) || evals[static_cast<std::size_t>(k) - 1] <= evals[0] * 1e-12) {
    throw input_error("pca: k exceeds the numerical rank of the centered data");
  }

  // Loadings in feature space.
  Matrix V(d, static_cast<std::size_t>(k));
  if (cov_side) {
    for (int j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < d; ++i) V(i, j) = basis(i, j);
    }
  } else {
    for (int j = 0; j < k; ++j) {
      std::vector<double> v(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) kern::active().axpy(basis(i, j), Xc.row(i).data(), v.data(), d);
      const double norm = std::sqrt(kern::sumsq(v));
      for (std::size_t i = 0; i < d; ++i) V(i, j) = v[i] / norm;
    }
  }

  // Deterministic orientation: the largest-magnitude loading is positive.
  for (int j = 0; j < k; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (std::fabs(V(i, j)) > best) {
        best = std::fabs(V(i, j));
        arg = i;
      }
    }
    if (V(arg, j) < 0.0) {
      for (std::size_t i = 0; i < d; ++i) V(i, j) = -V(i, j);
    }
  }

  Matrix scores(n, static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += Xc(i, c) * V(c, j);
      scores(i, j) = acc;
    }
  }
  return scores;
}

}  // namespace latnet
