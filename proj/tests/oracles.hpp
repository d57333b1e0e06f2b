#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Independent reference implementations used to check the library. These
// deliberately recompute everything from scratch with direct formulas and
// never call into actsel's incremental code paths.

namespace oracle {

// Softmax over negated Euclidean distances, plain loops.
inline std::vector<double> cluster_distribution(const Eigen::VectorXd& x,
                                                const Eigen::MatrixXd& centers) {
  const int k = static_cast<int>(centers.rows());
  std::vector<double> d(k);
  for (int j = 0; j < k; ++j) d[j] = (x - centers.row(j).transpose()).norm();
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) mx = std::max(mx, -d[j]);
  std::vector<double> p(k);
  double z = 0.0;
  for (int j = 0; j < k; ++j) {
    p[j] = std::exp(-d[j] - mx);
    z += p[j];
  }
  for (int j = 0; j < k; ++j) p[j] /= z;
  return p;
}

inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

inline double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  double klp = 0.0, klq = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double m = 0.5 * (p[j] + q[j]);
    if (p[j] > 0.0) klp += p[j] * std::log(p[j] / m);
    if (q[j] > 0.0) klq += q[j] * std::log(q[j] / m);
  }
  return 0.5 * (klp + klq);
}

// Greedy JS selection, recomputed exhaustively at every step: the mean of
// the selected distributions is rebuilt from scratch and every remaining
// candidate rescored.
inline std::vector<std::size_t> greedy_js(const Eigen::MatrixXd& X,
                                          const Eigen::MatrixXd& centers,
                                          std::size_t budget, double lambda) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  std::vector<std::vector<double>> dist(n);
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = cluster_distribution(X.row(static_cast<Eigen::Index>(i)).transpose(), centers);

  std::vector<bool> taken(n, false);
  std::vector<std::size_t> picks;
  for (std::size_t t = 0; t < budget; ++t) {
    std::vector<double> mean(dist[0].size(), 0.0);
    for (std::size_t s : picks)
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += dist[s][j];
    if (!picks.empty())
      for (double& m : mean) m /= static_cast<double>(picks.size());

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double score = entropy(dist[i]);
      if (!picks.empty()) score += lambda * js_divergence(dist[i], mean);
      if (score > best) {
        best = score;
        best_i = i;
      }
    }
    taken[best_i] = true;
    picks.push_back(best_i);
  }
  return picks;
}

// Greedy Fisher selection with the covariance inverse recomputed by
// direct matrix inversion at every step.
inline std::vector<std::size_t> greedy_fisher(const Eigen::MatrixXd& X, std::size_t budget) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);  // I + sum x x^T
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> picks;
  for (std::size_t t = 0; t < budget; ++t) {
    const Eigen::MatrixXd lambda = sigma.fullPivLu().inverse();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(i)).transpose();
      const double gain = std::log(1.0 + x.dot(lambda * x));
      if (gain > best) {
        best = gain;
        best_i = i;
      }
    }
    taken[best_i] = true;
    picks.push_back(best_i);
    const Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(best_i)).transpose();
    sigma += x * x.transpose();
  }
  return picks;
}

// Direct inverse of I + sum of x x^T for the Sherman-Morrison check.
inline Eigen::MatrixXd direct_design_inverse(const std::vector<Eigen::VectorXd>& xs,
                                             Eigen::Index d) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
  for (const auto& x : xs) sigma += x * x.transpose();
  return sigma.fullPivLu().inverse();
}

// Brute-force DCG/IDCG with term-by-term recomputation over plain lists
// of pre-normalized titles.
inline double ndcg(const std::vector<std::string>& ranked,
                   const std::vector<std::string>& gt, int k) {
  std::vector<std::string> gtset;
  for (const auto& g : gt)
    if (std::find(gtset.begin(), gtset.end(), g) == gtset.end()) gtset.push_back(g);
  std::vector<std::string> used;
  double dcg = 0.0;
  const std::size_t top = std::min<std::size_t>(k, ranked.size());
  for (std::size_t r = 0; r < top; ++r) {
    const bool in_gt = std::find(gtset.begin(), gtset.end(), ranked[r]) != gtset.end();
    const bool fresh = std::find(used.begin(), used.end(), ranked[r]) == used.end();
    if (in_gt && fresh) {
      dcg += 1.0 / (std::log(static_cast<double>(r) + 2.0) / std::log(2.0));
      used.push_back(ranked[r]);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(gtset.size(), static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < ideal; ++r)
    idcg += 1.0 / (std::log(static_cast<double>(r) + 2.0) / std::log(2.0));
  return dcg / idcg;
}

inline double recall(const std::vector<std::string>& ranked,
                     const std::vector<std::string>& gt, int k) {
  std::vector<std::string> gtset;
  for (const auto& g : gt)
    if (std::find(gtset.begin(), gtset.end(), g) == gtset.end()) gtset.push_back(g);
  std::vector<std::string> hit;
  const std::size_t top = std::min<std::size_t>(k, ranked.size());
  for (std::size_t r = 0; r < top; ++r) {
    const bool in_gt = std::find(gtset.begin(), gtset.end(), ranked[r]) != gtset.end();
    const bool fresh = std::find(hit.begin(), hit.end(), ranked[r]) == hit.end();
    if (in_gt && fresh) hit.push_back(ranked[r]);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(gtset.size());
}

}  // namespace oracle
