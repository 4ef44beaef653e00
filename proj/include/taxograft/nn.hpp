#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "taxograft/error.hpp"
#include "taxograft/rng.hpp"

namespace taxograft::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using RowVectorXd = RowVector<double>;

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<Scalar> v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

using ParameterXd = Parameter<double>;

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::ShapeMismatch, what);
}

// Xavier/Glorot uniform in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
template <typename Scalar = double>
Matrix<Scalar> xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const Scalar bound = std::sqrt(Scalar(6) / static_cast<Scalar>(rows + cols));
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    m.data()[k] = (Scalar(2) * static_cast<Scalar>(uniform01(rng)) - Scalar(1)) * bound;
  }
  return m;
}

// y = x W + B, B broadcast over rows.
template <typename Scalar>
Matrix<Scalar> affine(const Matrix<Scalar>& x, const Parameter<Scalar>& W, const Parameter<Scalar>& B) {
  require_shape(x.cols() == W.value.rows(), "affine: x cols " + std::to_string(x.cols()) + " != W rows " +
                                                std::to_string(W.value.rows()));
  require_shape(B.value.rows() == 1 && B.value.cols() == W.value.cols(), "affine: bias must be 1 x out");
  Matrix<Scalar> y = x * W.value;
  y.rowwise() += B.value.row(0);
  return y;
}

// Accumulates dW += x^T dy and dB += colsum(dy); returns dx = dy W^T.
template <typename Scalar>
Matrix<Scalar> affine_backward(const Matrix<Scalar>& x, Parameter<Scalar>& W, Parameter<Scalar>& B,
                               const Matrix<Scalar>& dy) {
  require_shape(dy.rows() == x.rows() && dy.cols() == W.value.cols(), "affine_backward: dy shape");
  W.grad.noalias() += x.transpose() * dy;
  B.grad.row(0) += dy.colwise().sum();
  return dy * W.value.transpose();
}

template <typename Scalar>
Matrix<Scalar> relu(const Matrix<Scalar>& x) {
  return x.cwiseMax(Scalar(0));
}

// Gradient through relu given the pre-activation x.
template <typename Scalar>
Matrix<Scalar> relu_backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dy) {
  return (x.array() > Scalar(0)).select(dy, Scalar(0));
}

template <typename Scalar>
Matrix<Scalar> sigmoid(const Matrix<Scalar>& x) {
  return x.unaryExpr([](Scalar v) {
    if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  });
}

// Gradient through sigmoid given its output y.
template <typename Scalar>
Matrix<Scalar> sigmoid_backward(const Matrix<Scalar>& y, const Matrix<Scalar>& dy) {
  return (dy.array() * y.array() * (Scalar(1) - y.array())).matrix();
}

template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& x) {
  Matrix<Scalar> y = x;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const Scalar m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

// Gradient through a row softmax given its output y: dx = y * (dy - <dy, y>).
template <typename Scalar>
Matrix<Scalar> softmax_rows_backward(const Matrix<Scalar>& y, const Matrix<Scalar>& dy) {
  Matrix<Scalar> dx(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const Scalar dot = y.row(r).dot(dy.row(r));
    dx.row(r) = (y.row(r).array() * (dy.row(r).array() - dot)).matrix();
  }
  return dx;
}

template <typename Scalar>
struct LossGrad {
  Scalar loss = 0;
  Matrix<Scalar> grad;
};

// Mean binary cross-entropy; predictions are clamped to [eps, 1 - eps] and the
// gradient is taken with respect to the unclamped prediction (zero where the
// clamp is active).
template <typename Scalar>
LossGrad<Scalar> bce_loss(const Matrix<Scalar>& pred, const Matrix<Scalar>& target, Scalar eps = Scalar(1e-12)) {
  require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(), "bce_loss: shape mismatch");
  LossGrad<Scalar> out;
  out.grad = Matrix<Scalar>::Zero(pred.rows(), pred.cols());
  const auto n = static_cast<Scalar>(pred.size());
  if (pred.size() == 0) return out;
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    const Scalar raw = pred.data()[k];
    const Scalar p = std::clamp(raw, eps, Scalar(1) - eps);
    const Scalar t = target.data()[k];
    out.loss -= t * std::log(p) + (Scalar(1) - t) * std::log(Scalar(1) - p);
    if (raw > eps && raw < Scalar(1) - eps) {
      out.grad.data()[k] = (-t / p + (Scalar(1) - t) / (Scalar(1) - p)) / n;
    }
  }
  out.loss /= n;
  return out;
}

template <typename Scalar>
struct OptimState {
  Scalar learning_rate = Scalar(0.05);
  Scalar momentum = Scalar(0);
  Scalar weight_decay = Scalar(0);  // L2 coefficient added to every gradient
  std::map<std::string, Matrix<Scalar>> velocity;
  std::int64_t step = 0;
};

using OptimStateXd = OptimState<double>;

// Gradient descent with optional heavy-ball momentum and L2 decay; grads are
// zeroed after.
template <typename Scalar>
void opt_step(std::span<Parameter<Scalar>* const> params, OptimState<Scalar>& state) {
  for (Parameter<Scalar>* p : params) {
    if (state.weight_decay != Scalar(0)) p->grad += state.weight_decay * p->value;
    if (state.momentum != Scalar(0)) {
      auto [it, inserted] = state.velocity.try_emplace(p->name, Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      Matrix<Scalar>& v = it->second;
      require_shape(v.rows() == p->value.rows() && v.cols() == p->value.cols(),
                    "optimizer state shape mismatch for " + p->name);
      v = state.momentum * v + p->grad;
      p->value -= state.learning_rate * v;
    } else {
      p->value -= state.learning_rate * p->grad;
    }
    p->zero_grad();
  }
  ++state.step;
}

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::string worst_parameter;
  bool passed = false;
};

// Compares analytic gradients with central differences. `loss` must recompute
// the loss from the current parameter values and accumulate gradients into
// each Parameter::grad. At most `max_coords` coordinates per parameter are
// probed (chosen with a fixed seed). Relative error per coordinate is
// |a - n| / max(|a|, |n|, floor).
template <typename Scalar>
GradCheckReport grad_check(const std::function<Scalar()>& loss, std::span<Parameter<Scalar>* const> params,
                           Scalar h = Scalar(1e-5), Scalar tol = Scalar(1e-4), std::size_t max_coords = 50,
                           Scalar floor = Scalar(1e-8), std::uint64_t seed = 0) {
  auto checked_loss = [&]() {
    const Scalar v = loss();
    if (!std::isfinite(static_cast<double>(v))) throw Error(ErrorKind::NonFiniteLoss, "loss is not finite");
    return v;
  };
  for (auto* p : params) p->zero_grad();
  checked_loss();
  std::vector<Matrix<Scalar>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  Rng rng = make_rng(seed, "grad_check");
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<Scalar>& p = *params[pi];
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(p.size()));
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = static_cast<Eigen::Index>(k);
    if (coords.size() > max_coords) {
      shuffle_in_place(coords, rng);
      coords.resize(max_coords);
    }
    for (Eigen::Index k : coords) {
      Scalar& x = p.value.data()[k];
      const Scalar saved = x;
      x = saved + h;
      const Scalar up = checked_loss();
      x = saved - h;
      const Scalar down = checked_loss();
      x = saved;
      const Scalar numeric = (up - down) / (Scalar(2) * h);
      const Scalar a = analytic[pi].data()[k];
      const double abs_err = std::abs(static_cast<double>(a - numeric));
      const double denom = std::max({std::abs(static_cast<double>(a)), std::abs(static_cast<double>(numeric)),
                                     static_cast<double>(floor)});
      const double rel = abs_err / denom;
      report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
      if (rel > report.max_relative_error || report.worst_parameter.empty()) {
        if (rel >= report.max_relative_error) report.worst_parameter = p.name;
        report.max_relative_error = std::max(report.max_relative_error, rel);
      }
      ++report.coordinates_checked;
    }
  }
  for (auto* p : params) p->zero_grad();
  report.passed = report.max_relative_error < static_cast<double>(tol);
  return report;
}

}  // namespace taxograft::nn
