#include "formscope/regression.hpp"

#include <cmath>
#include <limits>

#include "formscope/stats.hpp"

namespace formscope {
namespace {

// log(1 + e^x) without overflow.
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double logistic_log_likelihood(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& outcome,
                               const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = design * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += outcome[i] * eta[i] - softplus(eta[i]);
  }
  return ll;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& outcome,
                                  const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd residual(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    residual[i] = outcome[i] - sigmoid(eta[i]);
  }
  return design.transpose() * residual;
}

RegressionFit fit_logistic(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& outcome,
                           const std::vector<std::string>& feature_names,
                           const LogisticOptions& options) {
  const Eigen::Index n = outcome.size();
  if (features.rows() != n) {
    throw Error("fit_logistic: feature rows do not match outcome length");
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols()) {
    throw Error("fit_logistic: one name per feature column is required");
  }
  double positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (outcome[i] != 0.0 && outcome[i] != 1.0) {
      throw Error("fit_logistic: outcome must be 0/1");
    }
    positives += outcome[i];
  }
  if (positives == 0 || positives == static_cast<double>(n)) {
    throw Error("fit_logistic: outcome has a single class");
  }

  const Eigen::Index k = features.cols() + 1;
  Eigen::MatrixXd design(n, k);
  design.col(0).setOnes();
  design.rightCols(k - 1) = features;

  RegressionFit fit;
  fit.observations = static_cast<std::size_t>(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd information(k, k);

  auto information_at = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd eta = design * b;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = sigmoid(eta[i]);
      w[i] = p * (1 - p);
    }
    return Eigen::MatrixXd(design.transpose() * w.asDiagonal() * design);
  };

  for (fit.iterations = 0;; ++fit.iterations) {
    Eigen::VectorXd gradient = logistic_gradient(design, outcome, beta);
    fit.gradient_max_norm = gradient.cwiseAbs().maxCoeff();
    if (fit.gradient_max_norm < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= options.max_iterations) {
      fit.diagnostic = "no convergence after " +
                       std::to_string(options.max_iterations) + " iterations";
      break;
    }
    information = information_at(beta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff()) {
      fit.diagnostic = "information matrix is singular (a feature is constant "
                       "or collinear)";
      break;
    }
    beta += ldlt.solve(gradient);
    if (beta.cwiseAbs().maxCoeff() > options.separation_bound) {
      fit.diagnostic =
          "coefficient diverged past " +
          std::to_string(static_cast<int>(options.separation_bound)) +
          "; the outcome is (quasi-)completely separated by a feature";
      ++fit.iterations;
      fit.gradient_max_norm =
          logistic_gradient(design, outcome, beta).cwiseAbs().maxCoeff();
      break;
    }
  }

  information = information_at(beta);
  Eigen::MatrixXd covariance =
      information.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  fit.log_likelihood = logistic_log_likelihood(design, outcome, beta);
  double rate = positives / static_cast<double>(n);
  fit.null_log_likelihood =
      static_cast<double>(n) * (rate * std::log(rate) + (1 - rate) * std::log1p(-rate));
  fit.pseudo_r2 = 1.0 - fit.log_likelihood / fit.null_log_likelihood;

  for (Eigen::Index j = 0; j < k; ++j) {
    Coefficient c;
    c.name = j == 0 ? "intercept" : feature_names[static_cast<std::size_t>(j - 1)];
    c.beta = beta[j];
    c.std_error = std::sqrt(std::max(0.0, covariance(j, j)));
    c.odds_ratio = std::exp(c.beta);
    c.z = c.std_error > 0 ? c.beta / c.std_error
                          : std::numeric_limits<double>::quiet_NaN();
    c.p_value = std::erfc(std::abs(c.z) / std::sqrt(2.0));
    c.ci_low = std::exp(c.beta - kZ95 * c.std_error);
    c.ci_high = std::exp(c.beta + kZ95 * c.std_error);
    fit.coefficients.push_back(std::move(c));
  }
  return fit;
}

RegressionDataset build_dataset(std::span<const SiteVerdict> verdicts,
                                RegressionModel model) {
  RegressionDataset data;
  data.model = model;
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (const auto& v : verdicts) {
    double health = v.site.vertical.kind() == Vertical::Kind::kHealth;
    double finance = v.site.vertical.kind() == Vertical::Kind::kFinance;
    if (model == RegressionModel::kMeta) {
      if (!v.meta.installed) continue;
      rows.push_back({double(v.google.installed),
                      double(v.google.installed && v.google.fdc), health, finance});
      y.push_back(v.meta.fdc);
    } else {
      if (!v.google.installed) continue;
      rows.push_back({double(v.meta.installed), health, finance});
      y.push_back(v.google.fdc);
    }
  }
  if (model == RegressionModel::kMeta) {
    data.feature_names = {"has_google_tag", "google_fdc", "is_health",
                          "is_finance"};
  } else {
    data.feature_names = {"has_meta_pixel", "is_health", "is_finance"};
  }
  const auto cols = static_cast<Eigen::Index>(data.feature_names.size());
  data.features.resize(static_cast<Eigen::Index>(rows.size()), cols);
  data.outcome.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      data.features(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
    data.outcome[static_cast<Eigen::Index>(i)] = y[i];
  }
  return data;
}

double dropped_feature_correlation(std::span<const SiteVerdict> verdicts) {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (const auto& v : verdicts) {
    if (!v.google.installed) continue;
    double x = v.meta.installed;
    double y = v.meta.installed && v.meta.fdc;
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  double cov = n * sxy - sx * sy;
  double vx = n * sxx - sx * sx;
  double vy = n * syy - sy * sy;
  if (vx <= 0 || vy <= 0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(vx * vy);
}

}  // namespace formscope
