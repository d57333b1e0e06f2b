#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "actsel/clustering.hpp"
#include "actsel/errors.hpp"
#include "actsel/rng.hpp"

namespace actsel {

// The three scoring kernels. Fused strategies (metadata_*, user_*) run the
// same kernels on a fused embedding matrix, so the kernel is all the
// selector needs to know.
enum class SelectionKernel { RandomUniform, Js, Fisher };

enum class AuxSignal { None, Metadata, User };

// Strategy names as accepted by the CLI.
struct Strategy {
  std::string name;
  SelectionKernel kernel;
  AuxSignal aux;
};

inline const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> strategies = {
      {"random_uniform", SelectionKernel::RandomUniform, AuxSignal::None},
      {"js", SelectionKernel::Js, AuxSignal::None},
      {"fisher", SelectionKernel::Fisher, AuxSignal::None},
      {"metadata_js", SelectionKernel::Js, AuxSignal::Metadata},
      {"metadata_fisher", SelectionKernel::Fisher, AuxSignal::Metadata},
      {"user_js", SelectionKernel::Js, AuxSignal::User},
      {"user_fisher", SelectionKernel::Fisher, AuxSignal::User},
  };
  return strategies;
}

inline const Strategy& strategy_from_name(const std::string& name) {
  for (const auto& s : all_strategies())
    if (s.name == name) return s;
  std::string known;
  for (const auto& s : all_strategies()) {
    if (!known.empty()) known += ", ";
    known += s.name;
  }
  throw ConfigError("unknown strategy \"" + name + "\" (known: " + known + ")");
}

// Soft cluster membership: softmax over negated Euclidean distances to the
// centers, p_j = exp(-d_j) / sum_k exp(-d_k). Computed with max
// subtraction so extreme distances cannot overflow.
inline Eigen::VectorXd cluster_distribution(const Eigen::VectorXd& x,
                                            const Eigen::MatrixXd& centers) {
  const Eigen::VectorXd logits = -distances_to_centers(x, centers);
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  return p;
}

// One distribution row per sample.
inline Eigen::MatrixXd cluster_distributions(const Eigen::MatrixXd& X,
                                             const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd out(X.rows(), centers.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out.row(i) = cluster_distribution(X.row(i).transpose(), centers).transpose();
  return out;
}

// Shannon entropy H(p) = -sum_j p_j ln p_j, with 0 ln 0 := 0.
inline double entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double v = p(j);
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

inline constexpr double kLogClamp = 1e-12;

// Jensen-Shannon divergence with natural log:
// JS(p||q) = (KL(p||m) + KL(q||m)) / 2, m = (p+q)/2. Symmetric and
// bounded by ln 2. Probabilities are clamped at 1e-12 inside the logs.
inline double js_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size())
    throw LengthMismatch(static_cast<std::size_t>(p.size()),
                         static_cast<std::size_t>(q.size()));
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double m = 0.5 * (p(j) + q(j));
    const double log_m = std::log(std::max(m, kLogClamp));
    if (p(j) > 0.0) kl_p += p(j) * (std::log(std::max(p(j), kLogClamp)) - log_m);
    if (q(j) > 0.0) kl_q += q(j) * (std::log(std::max(q(j), kLogClamp)) - log_m);
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

// State for the JS selector: per-sample cluster distributions, the picked
// indices, and the running mean distribution of the picked set.
struct JsState {
  Eigen::MatrixXd distributions;   // N x K
  Eigen::VectorXd entropies;       // N, cached H(p_i)
  Eigen::VectorXd mean_selected;   // K, mean of distributions over selected
  std::vector<std::size_t> selected;
  double lambda = 1.0;

  // Full recomputation of the running mean every this many picks bounds
  // floating-point drift on long runs.
  static constexpr std::size_t kRecomputeEvery = 256;

  JsState(const Eigen::MatrixXd& X, const Clustering& clustering, double lambda_weight)
      : distributions(cluster_distributions(X, clustering.centers)),
        entropies(distributions.rows()),
        mean_selected(Eigen::VectorXd::Zero(distributions.cols())),
        lambda(lambda_weight) {
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
    for (Eigen::Index i = 0; i < distributions.rows(); ++i)
      entropies(i) = entropy(distributions.row(i).transpose());
  }

  void append(std::size_t index) {
    selected.push_back(index);
    const std::size_t m = selected.size();
    if (m % kRecomputeEvery == 0) {
      mean_selected.setZero();
      for (std::size_t s : selected)
        mean_selected += distributions.row(static_cast<Eigen::Index>(s)).transpose();
      mean_selected /= static_cast<double>(m);
    } else {
      const Eigen::VectorXd p = distributions.row(static_cast<Eigen::Index>(index)).transpose();
      mean_selected += (p - mean_selected) / static_cast<double>(m);
    }
  }
};

// State for the Fisher selector: the inverse design covariance
// Lambda_t = (I + sum over selected of x x^T)^{-1}, kept symmetric
// positive definite by rank-one updates.
struct FisherState {
  Eigen::MatrixXd lambda_inv;  // d x d
  std::vector<std::size_t> selected;

  explicit FisherState(Eigen::Index dim)
      : lambda_inv(Eigen::MatrixXd::Identity(dim, dim)) {}
};

// Fisher information gain of adding x: ln(1 + x^T Lambda x).
inline double fisher_gain(const Eigen::VectorXd& x, const FisherState& state) {
  if (x.size() != state.lambda_inv.rows())
    throw DimMismatch(0, static_cast<std::size_t>(x.size()),
                      static_cast<std::size_t>(state.lambda_inv.rows()));
  return std::log1p(x.dot(state.lambda_inv * x));
}

// Rank-one Sherman-Morrison update after selecting x:
// Lambda' = Lambda - (Lambda x)(Lambda x)^T / (1 + x^T Lambda x),
// equivalently Lambda' = (Lambda^{-1} + x x^T)^{-1}.
inline void sherman_morrison_update(FisherState& state, const Eigen::VectorXd& x) {
  if (x.size() != state.lambda_inv.rows())
    throw DimMismatch(0, static_cast<std::size_t>(x.size()),
                      static_cast<std::size_t>(state.lambda_inv.rows()));
  const Eigen::VectorXd u = state.lambda_inv * x;
  const double denom = 1.0 + x.dot(u);
  state.lambda_inv.noalias() -= (u * u.transpose()) / denom;
}

// One greedy pick with its score breakdown. Fields are present only when
// the kernel produces them.
struct SelectionStep {
  std::size_t index = 0;
  std::optional<double> score;        // H + lambda*JS, or the Fisher gain
  std::optional<double> entropy;      // JS kernel
  std::optional<double> js;           // JS kernel, absent on the first pick
  std::optional<double> fisher_gain;  // Fisher kernel
};

// Incremental greedy selection over a fixed candidate pool. Threads the
// kernel state across picks; each call to next() removes the winner from
// the pool. Ties always resolve to the lowest index.
class SelectionSession {
 public:
  SelectionSession(SelectionKernel kernel, const Eigen::MatrixXd& X,
                   const Clustering* clustering, double lambda, std::uint64_t seed)
      : kernel_(kernel),
        X_(X),
        in_pool_(static_cast<std::size_t>(X.rows()), true),
        remaining_(static_cast<std::size_t>(X.rows())),
        rng_(seed) {
    switch (kernel_) {
      case SelectionKernel::Js:
        if (clustering == nullptr)
          throw ValidationError("JS selection requires a clustering");
        js_.emplace(X, *clustering, lambda);
        break;
      case SelectionKernel::Fisher:
        fisher_.emplace(X.cols());
        break;
      case SelectionKernel::RandomUniform:
        break;
    }
  }

  std::size_t remaining_count() const { return remaining_; }

  const std::vector<std::size_t>& selected() const { return selected_; }

  // Swap in new cluster distributions (after re-clustering); the mean over
  // the already selected set is recomputed against the new distributions.
  void set_clustering(const Clustering& clustering) {
    if (!js_) throw ValidationError("set_clustering only applies to the JS kernel");
    const double lambda = js_->lambda;
    const std::vector<std::size_t> picked = js_->selected;
    js_.emplace(X_, clustering, lambda);
    for (std::size_t s : picked) js_->append(s);
  }

  SelectionStep next() {
    if (remaining_ == 0) throw EmptyRemaining();
    SelectionStep step;
    switch (kernel_) {
      case SelectionKernel::Js:
        step = next_js();
        break;
      case SelectionKernel::Fisher:
        step = next_fisher();
        break;
      case SelectionKernel::RandomUniform:
        step = next_random();
        break;
    }
    in_pool_[step.index] = false;
    --remaining_;
    selected_.push_back(step.index);
    return step;
  }

  std::vector<SelectionStep> take(std::size_t budget) {
    if (budget > remaining_) throw BudgetExceedsPool(budget, remaining_);
    std::vector<SelectionStep> steps;
    steps.reserve(budget);
    for (std::size_t i = 0; i < budget; ++i) steps.push_back(next());
    return steps;
  }

 private:
  SelectionStep next_js() {
    JsState& st = *js_;
    const bool first = st.selected.empty();
    SelectionStep best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < in_pool_.size(); ++i) {
      if (!in_pool_[i]) continue;
      const double h = st.entropies(static_cast<Eigen::Index>(i));
      double score = h;
      std::optional<double> js_term;
      if (!first) {
        const double js = js_divergence(
            st.distributions.row(static_cast<Eigen::Index>(i)).transpose(),
            st.mean_selected);
        js_term = js;
        score = h + st.lambda * js;
      }
      if (score > best_score) {
        best_score = score;
        best = SelectionStep{i, score, h, js_term, std::nullopt};
      }
    }
    st.append(best.index);
    return best;
  }

  SelectionStep next_fisher() {
    FisherState& st = *fisher_;
    SelectionStep best;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < in_pool_.size(); ++i) {
      if (!in_pool_[i]) continue;
      const double gain =
          fisher_gain(X_.row(static_cast<Eigen::Index>(i)).transpose(), st);
      if (gain > best_gain) {
        best_gain = gain;
        best = SelectionStep{i, gain, std::nullopt, std::nullopt, gain};
      }
    }
    sherman_morrison_update(st, X_.row(static_cast<Eigen::Index>(best.index)).transpose());
    st.selected.push_back(best.index);
    return best;
  }

  SelectionStep next_random() {
    std::size_t nth = rng_.uniform_index(remaining_);
    for (std::size_t i = 0; i < in_pool_.size(); ++i) {
      if (!in_pool_[i]) continue;
      if (nth == 0) return SelectionStep{i, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
      --nth;
    }
    throw EmptyRemaining();  // unreachable while remaining_ is accurate
  }

  SelectionKernel kernel_;
  Eigen::MatrixXd X_;
  std::vector<bool> in_pool_;
  std::size_t remaining_;
  std::vector<std::size_t> selected_;
  Rng rng_;
  std::optional<JsState> js_;
  std::optional<FisherState> fisher_;
};

// Selects exactly `budget` distinct indices in pick order.
inline std::vector<SelectionStep> select_batch(SelectionKernel kernel,
                                               const Eigen::MatrixXd& X,
                                               const Clustering* clustering,
                                               std::size_t budget, double lambda,
                                               std::uint64_t seed) {
  SelectionSession session(kernel, X, clustering, lambda, seed);
  return session.take(budget);
}

}  // namespace actsel
