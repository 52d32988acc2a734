#pragma once

// Logistic regression by Newton/IRLS with Wald inference.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "formscope/model.hpp"

namespace formscope {

struct Coefficient {
  std::string name;
  double beta = 0;
  double std_error = 0;
  double odds_ratio = 0;
  double z = 0;
  double p_value = 0;
  double ci_low = 0;   // on the odds-ratio scale
  double ci_high = 0;
};

struct RegressionFit {
  std::vector<Coefficient> coefficients;  // intercept first
  std::size_t observations = 0;
  double log_likelihood = 0;
  double null_log_likelihood = 0;
  double pseudo_r2 = 0;  // McFadden
  int iterations = 0;
  double gradient_max_norm = 0;
  bool converged = false;
  std::string diagnostic;  // why the fit did not converge, if it did not
};

struct LogisticOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double separation_bound = 15.0;
};

// `features` holds one row per observation without an intercept column; an
// intercept is prepended. Zero feature columns fit the intercept alone.
// Throws Error when the outcome is not 0/1, has one class only, or the
// shapes disagree.
RegressionFit fit_logistic(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& outcome,
                           const std::vector<std::string>& feature_names,
                           const LogisticOptions& options = {});

// Bernoulli log-likelihood and its gradient for a design matrix that
// already contains the intercept column.
double logistic_log_likelihood(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& outcome,
                               const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& outcome,
                                  const Eigen::VectorXd& beta);

enum class RegressionModel { kMeta, kGoogle };

struct RegressionDataset {
  RegressionModel model = RegressionModel::kMeta;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;
  Eigen::VectorXd outcome;
};

// Meta model: sites with a Meta pixel; outcome Meta FDC; features has
// Google tag, Google FDC, health, finance.
// Google model: sites with a Google tag; outcome Google FDC; features has
// Meta pixel, health, finance. Meta FDC is left out of the Google model
// because it is strongly correlated with having a Meta pixel.
RegressionDataset build_dataset(std::span<const SiteVerdict> verdicts,
                                RegressionModel model);

// Pearson correlation between having a Meta pixel and Meta FDC over the
// Google model's population; reported as the reason for the dropped
// feature. NaN when either indicator is constant.
double dropped_feature_correlation(std::span<const SiteVerdict> verdicts);

}  // namespace formscope
