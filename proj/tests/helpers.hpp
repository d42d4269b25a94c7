#pragma once

// Independent reference computations used by the unit tests. Nothing here
// calls into the closed forms under test.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcdm/pcdm.hpp"

namespace testing_helpers {

// Upper 0.1% points of the chi-square distribution,
// scipy.stats.chi2.ppf(0.999, df).
inline double chi2_crit_999(int df) {
  static const std::map<int, double> table = {
      {2, 13.815510557964274}, {9, 27.877164871256568}, {14, 36.12327368039813}};
  return table.at(df);
}

inline double chi_square(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

// Minimizes a convex 1-D function: coarse grid to bracket, then ternary search.
inline double minimize_1d(const std::function<double(double)>& phi, double lo, double hi, int grid = 20001) {
  double best_t = lo, best = phi(lo);
  const double step = (hi - lo) / (grid - 1);
  for (int i = 1; i < grid; ++i) {
    const double t = lo + step * i;
    const double val = phi(t);
    if (val < best) {
      best = val;
      best_t = t;
    }
  }
  double a = std::max(lo, best_t - step), b = std::min(hi, best_t + step);
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (phi(m1) <= phi(m2))
      b = m2;
    else
      a = m1;
  }
  return 0.5 * (a + b);
}

// argmin_t g t + (c/2) t^2 + psi(x + t) by direct search.
inline double prox_oracle(const pcdm::Regularizer& reg, double g, double x, double c) {
  auto phi = [&](double t) {
    const double psi = reg.value(x + t);
    return std::isinf(psi) ? 1e300 : g * t + 0.5 * c * t * t + psi;
  };
  const double radius = 4.0 * (std::abs(g) / c + std::abs(x) + reg.lambda / c + 1.0);
  return minimize_1d(phi, -radius, radius);
}

inline std::vector<double> finite_difference_gradient(const pcdm::CompositeProblem& p, std::vector<double> x,
                                                      double step = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double keep = x[j];
    x[j] = keep + step;
    const double fp = pcdm::smooth_value(p, x);
    x[j] = keep - step;
    const double fm = pcdm::smooth_value(p, x);
    x[j] = keep;
    g[j] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline Eigen::MatrixXd dense(const pcdm::SparseMatrix& A) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(A.cols()));
  for (const auto& t : A.triplets()) M(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
  return M;
}

inline double lambda_max_gram(const pcdm::SparseMatrix& A) {
  const Eigen::MatrixXd M = dense(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M.transpose() * M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 1e-300, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(b[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return diff / scale;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Per-test scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pcdm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline pcdm::SparseMatrix dense_to_sparse(const std::vector<std::vector<double>>& rows) {
  std::vector<pcdm::Triplet> t;
  const std::size_t cols = rows.empty() ? 0 : rows[0].size();
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (rows[r][c] != 0.0) t.push_back({r, c, rows[r][c]});
  return pcdm::SparseMatrix(rows.size(), cols, std::move(t));
}

// Random lasso-type least squares with every column nonzero.
inline pcdm::CompositeProblem random_least_squares(std::size_t m, std::size_t n, double density, std::uint64_t seed,
                                                   pcdm::Regularizer reg) {
  pcdm::Rng rng(seed);
  auto A = pcdm::theory::random_sparse(m, n, density, rng);
  std::vector<double> b(m);
  for (double& e : b) e = rng.normal();
  return pcdm::make_least_squares(std::move(A), std::move(b), reg);
}

}  // namespace testing_helpers
