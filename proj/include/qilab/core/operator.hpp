#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qilab/core/state.hpp"
#include "qilab/error.hpp"

namespace qilab {

/// Inclusive integer label range [lo, hi].
struct LabelWindow {
  int lo = 0;
  int hi = 0;

  constexpr bool contains(int label) const { return label >= lo && label <= hi; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(hi - lo + 1); }
  static constexpr LabelWindow symmetric(int half_width) { return {-half_width, half_width}; }
  constexpr bool operator==(const LabelWindow&) const = default;
};

/// Amplitude map <final | S | initial> over N systems, each restricted to a
/// finite label window. Implementations must be deterministic and carry
/// their documented truncation loss.
class ScatteringOperator {
public:
  virtual ~ScatteringOperator() = default;

  virtual std::size_t system_count() const = 0;
  virtual LabelWindow window(std::size_t system) const = 0;
  virtual complex amplitude(std::span<const int> initial, std::span<const int> final) const = 0;

  /// Upper bound on 1 - sum_final |amplitude|^2 for initial labels in the window.
  virtual double truncation_tolerance() const { return 1e-8; }
};

class IdentityOperator final : public ScatteringOperator {
public:
  explicit IdentityOperator(std::vector<LabelWindow> windows) : windows_(std::move(windows)) {}

  std::size_t system_count() const override { return windows_.size(); }
  LabelWindow window(std::size_t j) const override { return windows_.at(j); }
  complex amplitude(std::span<const int> in, std::span<const int> out) const override {
    for (std::size_t j = 0; j < in.size(); ++j)
      if (in[j] != out[j]) return {0.0, 0.0};
    return {1.0, 0.0};
  }
  double truncation_tolerance() const override { return 0.0; }

private:
  std::vector<LabelWindow> windows_;
};

/// Operator backed by a dense matrix over the full product basis.
///
/// Basis index is row-major over systems with system 0 most significant,
/// each system's label offset from its window's lower bound.
class DenseOperator final : public ScatteringOperator {
public:
  DenseOperator(std::vector<LabelWindow> windows, std::vector<complex> row_major, double tolerance = 1e-12)
      : windows_(std::move(windows)), matrix_(std::move(row_major)), tolerance_(tolerance) {
    dim_ = 1;
    for (const auto& w : windows_) dim_ *= w.size();
    if (matrix_.size() != dim_ * dim_)
      throw ValidationError("DenseOperator: matrix size does not match product of window sizes");
  }

  std::size_t system_count() const override { return windows_.size(); }
  LabelWindow window(std::size_t j) const override { return windows_.at(j); }
  std::size_t dimension() const { return dim_; }

  std::size_t flat_index(std::span<const int> labels) const {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < windows_.size(); ++j)
      idx = idx * windows_[j].size() + static_cast<std::size_t>(labels[j] - windows_[j].lo);
    return idx;
  }

  complex amplitude(std::span<const int> in, std::span<const int> out) const override {
    return matrix_[flat_index(out) * dim_ + flat_index(in)];
  }
  double truncation_tolerance() const override { return tolerance_; }

private:
  std::vector<LabelWindow> windows_;
  std::vector<complex> matrix_;
  std::size_t dim_ = 0;
  double tolerance_;
};

/// Wraps a callable amplitude(initial, final).
class FunctionOperator final : public ScatteringOperator {
public:
  using Fn = std::function<complex(std::span<const int>, std::span<const int>)>;

  FunctionOperator(std::vector<LabelWindow> windows, Fn fn, double tolerance)
      : windows_(std::move(windows)), fn_(std::move(fn)), tolerance_(tolerance) {}

  std::size_t system_count() const override { return windows_.size(); }
  LabelWindow window(std::size_t j) const override { return windows_.at(j); }
  complex amplitude(std::span<const int> in, std::span<const int> out) const override { return fn_(in, out); }
  double truncation_tolerance() const override { return tolerance_; }

private:
  std::vector<LabelWindow> windows_;
  Fn fn_;
  double tolerance_;
};

} // namespace qilab
