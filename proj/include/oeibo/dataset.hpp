// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "oeibo/common.hpp"

namespace oeibo::gp {

/// Observed inputs (one row per point) and values, with the running
/// incumbent (element-wise minimum of the values).
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix inputs, Vector values) { set(std::move(inputs), std::move(values)); }

  void set(Matrix inputs, Vector values) {
    if (inputs.rows() != values.size()) {
      throw std::invalid_argument("dataset: inputs/values size mismatch");
    }
    inputs_ = std::move(inputs);
    values_ = std::move(values);
    refresh_incumbent();
  }

  void append(const Vector& x, double y) {
    if (size() > 0 && x.size() != dimension()) {
      throw std::invalid_argument("dataset: appended point has wrong dimension");
    }
    inputs_.conservativeResize(inputs_.rows() + 1, size() == 0 ? x.size() : dimension());
    inputs_.row(inputs_.rows() - 1) = x.transpose();
    values_.conservativeResize(values_.size() + 1);
    values_(values_.size() - 1) = y;
    refresh_incumbent();
  }

  Index size() const { return values_.size(); }
  Index dimension() const { return inputs_.cols(); }
  bool empty() const { return size() == 0; }

  const Matrix& inputs() const { return inputs_; }
  const Vector& values() const { return values_; }

  double incumbent() const {
    if (empty()) throw std::logic_error("dataset: incumbent of empty dataset");
    return incumbent_;
  }

 private:
  void refresh_incumbent() {
    if (values_.size() > 0) incumbent_ = values_.minCoeff();
  }

  Matrix inputs_;
  Vector values_;
  double incumbent_ = 0.0;
};

}  // namespace oeibo::gp
