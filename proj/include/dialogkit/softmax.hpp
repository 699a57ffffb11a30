// Copyright 2026 The Dialogkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace dialogkit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Temperature softmax p_i = exp(z_i / T) / sum_j exp(z_j / T), evaluated
/// with the maximum logit subtracted first.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(
    const Eigen::MatrixBase<Derived>& logits,
    typename Derived::Scalar temperature = 1) {
  using Scalar = typename Derived::Scalar;
  if (!(temperature > Scalar(0))) {
    throw std::invalid_argument("invalid temperature");
  }
  if (logits.size() == 0) return Vector<Scalar>();
  const Scalar max_logit = logits.maxCoeff();
  // Scalar exp: Eigen's packet exp clamps large negative inputs and
  // returns subnormals where the true value underflows to zero.
  Vector<Scalar> p = ((logits.array() - max_logit) / temperature)
                         .unaryExpr([](Scalar x) { return std::exp(x); })
                         .matrix();
  p /= p.sum();
  return p;
}

/// log-softmax counterpart of softmax(); exact zeros come back as -inf.
template <typename Derived>
Vector<typename Derived::Scalar> log_softmax(
    const Eigen::MatrixBase<Derived>& logits,
    typename Derived::Scalar temperature = 1) {
  using Scalar = typename Derived::Scalar;
  if (!(temperature > Scalar(0))) {
    throw std::invalid_argument("invalid temperature");
  }
  const Scalar max_logit = logits.maxCoeff();
  Vector<Scalar> shifted =
      ((logits.array() - max_logit) / temperature).matrix();
  const Scalar log_z = std::log(
      shifted.array().unaryExpr([](Scalar x) { return std::exp(x); }).sum());
  return (shifted.array() - log_z).matrix();
}

/// Shannon entropy in nats; zero-probability entries contribute nothing.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& probs) {
  using Scalar = typename Derived::Scalar;
  Scalar h = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const Scalar p = probs(i);
    if (p > Scalar(0)) h -= p * std::log(p);
  }
  return h;
}

/// First index of the maximum (ties go to the lower index).
template <typename Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace dialogkit
