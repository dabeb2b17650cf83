#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace amdyn {

enum class TriKind {
  symmetric,  // q-like: (s,t) with s > t mirrors (t,s)
  causal,     // chi-like: (s,t) with s > t is a contract violation
};

/// Lower-triangular store of entries X^{st}, 1 <= s <= t <= t_max.
/// Indices are 1-based to match the time labels of the dynamics.
class TriMatrix {
 public:
  explicit TriMatrix(TriKind kind = TriKind::symmetric, int t_max = 0);

  TriKind kind() const { return kind_; }
  int t_max() const { return t_max_; }

  /// Appends time index t_max+1 with zero entries.
  void grow();
  void grow_to(int t_max);

  double operator()(int s, int t) const;
  double& at(int s, int t);

  /// Entries in row-major lower-triangular order: (1,1), (1,2), (2,2), (1,3), ...
  const std::vector<double>& row_major() const { return data_; }
  static TriMatrix from_row_major(TriKind kind, int t_max, std::vector<double> entries);

  /// Dense t_max x t_max view. Symmetric stores are mirrored; causal stores are
  /// upper triangular with element (s-1, t-1) = X^{st}.
  Eigen::MatrixXd dense() const;

  /// Copy restricted to indices 1..t.
  TriMatrix leading(int t) const;

  bool operator==(const TriMatrix& other) const = default;

 private:
  static std::size_t offset(int s, int t) {
    return static_cast<std::size_t>(t) * (t - 1) / 2 + (s - 1);
  }

  TriKind kind_;
  int t_max_;
  std::vector<double> data_;
};

}  // namespace amdyn
