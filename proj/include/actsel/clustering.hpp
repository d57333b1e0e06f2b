#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "actsel/errors.hpp"
#include "actsel/rng.hpp"

namespace actsel {

struct Clustering {
  Eigen::MatrixXd centers;               // K x d
  std::vector<std::size_t> assignments;  // size N, assignments[i] in [0, K)
  double inertia = 0.0;                  // sum of squared distances to assigned centers
  int iterations_run = 0;
  std::vector<double> inertia_trace;     // inertia after each Lloyd assignment
  bool degenerate = false;               // all points identical with K > 1

  Eigen::Index k() const { return centers.rows(); }
};

// Euclidean distances from x to every center. Entry j is ||x - c_j||.
inline Eigen::VectorXd distances_to_centers(const Eigen::VectorXd& x,
                                            const Eigen::MatrixXd& centers) {
  if (x.size() != centers.cols())
    throw DimMismatch(0, static_cast<std::size_t>(x.size()),
                      static_cast<std::size_t>(centers.cols()));
  Eigen::VectorXd d(centers.rows());
  for (Eigen::Index j = 0; j < centers.rows(); ++j)
    d(j) = (x - centers.row(j).transpose()).norm();
  return d;
}

namespace detail {

// Nearest center per point, ties to the lowest index. Returns inertia.
inline double assign_points(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centers,
                            std::vector<std::size_t>& assignments) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = centers.rows();
  assignments.resize(static_cast<std::size_t>(n));
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_j = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double d2 = (X.row(i) - centers.row(j)).squaredNorm();
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    assignments[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best_j);
    inertia += best;
  }
  return inertia;
}

// k-means++ seeding: first center uniform, then proportional to the
// squared distance from the nearest chosen center. Falls back to a
// uniform draw when all residual distances are zero (duplicate points).
inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& X, Eigen::Index k, Rng& rng) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd centers(k, X.cols());
  centers.row(0) = X.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n))));

  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d2(i) = (X.row(i) - centers.row(0)).squaredNorm();

  for (Eigen::Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
    } else {
      const double r = rng.uniform_real() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2(i);
        if (cum > r) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = X.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (X.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

}  // namespace detail

// Lloyd's algorithm from k-means++ initialization. Stops when the relative
// inertia improvement drops below tol or after max_iter iterations. Empty
// clusters are re-seeded to the point farthest from its assigned center
// (only stealing from clusters with more than one member). Fully
// deterministic for a given (X, K, seed, max_iter, tol).
inline Clustering kmeans(const Eigen::MatrixXd& X, std::size_t K, std::uint64_t seed,
                         int max_iter = 100, double tol = 1e-6) {
  const Eigen::Index n = X.rows();
  if (K < 1) throw ValidationError("K must be at least 1");
  if (static_cast<Eigen::Index>(K) > n) throw KExceedsN(K, static_cast<std::size_t>(n));
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (tol <= 0.0) throw ConfigError("tol must be positive");
  const Eigen::Index k = static_cast<Eigen::Index>(K);

  Clustering result;

  // Identical points cannot support K > 1 distinct centers; return K
  // copies of the point with the degenerate flag set.
  bool all_identical = true;
  for (Eigen::Index i = 1; i < n && all_identical; ++i)
    all_identical = (X.row(i).array() == X.row(0).array()).all();
  if (all_identical) {
    result.centers = X.row(0).replicate(k, 1);
    result.assignments.assign(static_cast<std::size_t>(n), 0);
    result.inertia = 0.0;
    result.iterations_run = 1;
    result.inertia_trace = {0.0};
    result.degenerate = (K > 1);
    return result;
  }

  Rng rng(seed);
  Eigen::MatrixXd centers = detail::kmeanspp_init(X, k, rng);
  std::vector<std::size_t> assignments;
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= max_iter; ++it) {
    if (it > 1) {
      // Update step: each non-empty cluster moves to its members' mean.
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
      std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t j = assignments[static_cast<std::size_t>(i)];
        sums.row(static_cast<Eigen::Index>(j)) += X.row(i);
        ++counts[j];
      }
      for (Eigen::Index j = 0; j < k; ++j) {
        if (counts[static_cast<std::size_t>(j)] > 0)
          centers.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      }
    }

    double inertia = detail::assign_points(X, centers, assignments);

    // Re-seed empty clusters to the farthest point whose cluster keeps
    // at least one member.
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t a : assignments) ++counts[a];
    bool reseeded = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      double worst = -1.0;
      Eigen::Index worst_i = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t owner = assignments[static_cast<std::size_t>(i)];
        if (counts[owner] < 2) continue;
        const double d2 =
            (X.row(i) - centers.row(static_cast<Eigen::Index>(owner))).squaredNorm();
        if (d2 > worst) {
          worst = d2;
          worst_i = i;
        }
      }
      if (worst_i < 0) continue;  // nothing safe to steal
      --counts[assignments[static_cast<std::size_t>(worst_i)]];
      centers.row(j) = X.row(worst_i);
      assignments[static_cast<std::size_t>(worst_i)] = static_cast<std::size_t>(j);
      ++counts[static_cast<std::size_t>(j)];
      reseeded = true;
    }
    if (reseeded) inertia = detail::assign_points(X, centers, assignments);

    result.inertia_trace.push_back(inertia);
    result.iterations_run = it;

    const bool converged =
        (inertia == 0.0) ||
        (prev_inertia != std::numeric_limits<double>::infinity() &&
         prev_inertia - inertia < tol * prev_inertia);
    prev_inertia = inertia;
    if (converged) break;
  }

  result.centers = std::move(centers);
  result.assignments = std::move(assignments);
  result.inertia = result.inertia_trace.back();
  return result;
}

}  // namespace actsel
