#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "tabfe/errors.h"
#include "tabfe/learners.h"

namespace tabfe {

namespace {

double ParamOr(const nlohmann::json& p, const char* name, double fallback) {
  return p.contains(name) ? p.at(name).get<double>() : fallback;
}

struct Standardized {
  Eigen::MatrixXd z;  // n x (d + 1), last column is the intercept
  std::vector<double> mean;
  std::vector<double> scale;
  bool imputed = false;
};

Standardized Prepare(const Matrix& x) {
  const size_t n = x.rows();
  const size_t d = x.cols();
  Standardized s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  s.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
  for (size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double v = x(i, j);
      if (std::isnan(v)) {
        v = 0.0;
        s.imputed = true;
      } else if (!std::isfinite(v)) {
        Fail(ErrorCode::kNonFiniteInput, "infinite feature value in column " + std::to_string(j));
      }
      s.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      sum += v;
    }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double c = s.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - mean;
      var += c * c;
    }
    const double sd = n ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    s.mean[j] = mean;
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
    for (size_t i = 0; i < n; ++i) {
      auto& v = s.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      v = (v - mean) / s.scale[j];
    }
  }
  s.z.col(static_cast<Eigen::Index>(d)).setOnes();
  return s;
}

// Maps standardized-space coefficients (d weights + intercept) back to raw
// feature space.
void Unstandardize(const Standardized& s, const Eigen::VectorXd& theta,
                   std::span<double> weights, double& bias) {
  const size_t d = s.mean.size();
  bias = theta(static_cast<Eigen::Index>(d));
  for (size_t j = 0; j < d; ++j) {
    weights[j] = theta(static_cast<Eigen::Index>(j)) / s.scale[j];
    bias -= weights[j] * s.mean[j];
  }
}

// Softmax probabilities with class 0 as reference; eta is n x (k-1).
Eigen::MatrixXd SoftmaxWithReference(const Eigen::MatrixXd& eta) {
  const auto n = eta.rows();
  const auto k1 = eta.cols();
  Eigen::MatrixXd p(n, k1 + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = 0.0;
    for (Eigen::Index c = 0; c < k1; ++c) mx = std::max(mx, eta(i, c));
    double denom = std::exp(-mx);
    p(i, 0) = denom;
    for (Eigen::Index c = 0; c < k1; ++c) {
      p(i, c + 1) = std::exp(eta(i, c) - mx);
      denom += p(i, c + 1);
    }
    p.row(i) /= denom;
  }
  return p;
}

double Softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

FittedLearner FitLinear(const Matrix& x, std::span<const double> y,
                        const TargetSpec& target, const LearnerConfig& cfg) {
  ValidateLearnerParams(cfg);
  if (x.rows() != y.size()) {
    Fail(ErrorCode::kLengthMismatch, "X rows vs y length");
  }
  for (double v : y) {
    if (!std::isfinite(v)) Fail(ErrorCode::kNonFiniteInput, "non-finite target");
  }
  const double lambda = ParamOr(cfg.params, "lambda", 1.0);
  const int max_iter = static_cast<int>(ParamOr(cfg.params, "max_iter", 1000));
  const double tol = ParamOr(cfg.params, "tol", 1e-8);

  const size_t n = x.rows();
  const size_t d = x.cols();
  const auto dd = static_cast<Eigen::Index>(d + 1);
  Standardized s = Prepare(x);

  FittedLearner m;
  m.kind = LearnerKind::kLinear;
  m.task = target.task;
  m.n_features = d;
  m.n_outputs = target.num_outputs();
  if (s.imputed) m.warnings.push_back("missing inputs imputed with 0");

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(dd, lambda);
  penalty(dd - 1) = 0.0;

  if (target.task == Task::kRegression) {
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd h = s.z.transpose() * s.z;
    h.diagonal() += penalty;
    h(dd - 1, dd - 1) += 1e-12;
    Eigen::VectorXd theta = h.ldlt().solve(s.z.transpose() * yv);
    m.weights = Matrix(1, d);
    m.bias.assign(1, 0.0);
    Unstandardize(s, theta, m.weights.row(0), m.bias[0]);
    m.iterations = 1;
    return m;
  }

  // Newton's method on the penalized negative log-likelihood. Parameters are
  // stacked per non-reference class: theta[c * (d+1) + j].
  const int k1 = target.task == Task::kBinary ? 1 : target.n_classes - 1;
  if (k1 < 1) Fail(ErrorCode::kWrongTask, "classification needs at least 2 classes");
  const Eigen::Index p_dim = static_cast<Eigen::Index>(k1) * dd;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p_dim);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k1);
  for (size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(y[i]);
    if (target.task == Task::kBinary) {
      onehot(static_cast<Eigen::Index>(i), 0) = y[i];
    } else if (c > 0) {
      onehot(static_cast<Eigen::Index>(i), c - 1) = 1.0;
    }
  }

  auto eta_of = [&](const Eigen::VectorXd& th) {
    Eigen::MatrixXd eta(static_cast<Eigen::Index>(n), k1);
    for (int c = 0; c < k1; ++c) eta.col(c) = s.z * th.segment(c * dd, dd);
    return eta;
  };
  auto objective = [&](const Eigen::VectorXd& th) {
    const Eigen::MatrixXd eta = eta_of(th);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
      if (k1 == 1) {
        loss += Softplus(eta(i, 0)) - onehot(i, 0) * eta(i, 0);
      } else {
        double mx = 0.0;
        for (int c = 0; c < k1; ++c) mx = std::max(mx, eta(i, c));
        double denom = std::exp(-mx);
        for (int c = 0; c < k1; ++c) denom += std::exp(eta(i, c) - mx);
        loss += mx + std::log(denom);
        for (int c = 0; c < k1; ++c) loss -= onehot(i, c) * eta(i, c);
      }
    }
    for (int c = 0; c < k1; ++c) {
      loss += 0.5 * (penalty.array() * th.segment(c * dd, dd).array().square()).sum();
    }
    return loss;
  };

  double f = objective(theta);
  double grad0_norm = -1.0;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const Eigen::MatrixXd eta = eta_of(theta);
    Eigen::MatrixXd prob(static_cast<Eigen::Index>(n), k1);
    if (k1 == 1) {
      prob = eta.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
    } else {
      prob = SoftmaxWithReference(eta).rightCols(k1);
    }
    const Eigen::MatrixXd resid = prob - onehot;
    Eigen::VectorXd grad(p_dim);
    for (int c = 0; c < k1; ++c) {
      grad.segment(c * dd, dd) =
          s.z.transpose() * resid.col(c) +
          (penalty.array() * theta.segment(c * dd, dd).array()).matrix();
    }
    const double gnorm = grad.norm();
    if (grad0_norm < 0) grad0_norm = std::max(1.0, gnorm);
    m.train_loss.push_back(f / static_cast<double>(n));
    if (gnorm <= tol * grad0_norm) break;

    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p_dim, p_dim);
    for (int a = 0; a < k1; ++a) {
      for (int b = a; b < k1; ++b) {
        Eigen::VectorXd w(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < w.size(); ++i) {
          w(i) = prob(i, a) * ((a == b ? 1.0 : 0.0) - prob(i, b));
        }
        Eigen::MatrixXd block = s.z.transpose() * w.asDiagonal() * s.z;
        hess.block(a * dd, b * dd, dd, dd) = block;
        if (a != b) hess.block(b * dd, a * dd, dd, dd) = block.transpose();
      }
      hess.block(a * dd, a * dd, dd, dd).diagonal() += penalty;
      hess(a * dd + dd - 1, a * dd + dd - 1) += 1e-10;
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls) {
      const Eigen::VectorXd cand = theta - t * step;
      const double fc = objective(cand);
      if (fc <= f - 1e-4 * t * grad.dot(step)) {
        theta = cand;
        f = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  m.iterations = iter;
  m.weights = Matrix(static_cast<size_t>(m.n_outputs), d);
  m.bias.assign(static_cast<size_t>(m.n_outputs), 0.0);
  for (int c = 0; c < k1; ++c) {
    const size_t out = k1 == 1 ? 0 : static_cast<size_t>(c + 1);
    Unstandardize(s, theta.segment(c * dd, dd), m.weights.row(out), m.bias[out]);
  }
  return m;
}

}  // namespace tabfe
