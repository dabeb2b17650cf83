#include "amdyn/core/tri_matrix.hpp"

#include "amdyn/core/errors.hpp"

#include <string>
#include <utility>

namespace amdyn {

TriMatrix::TriMatrix(TriKind kind, int t_max) : kind_(kind), t_max_(0) {
  require(t_max >= 0, "TriMatrix: negative size");
  grow_to(t_max);
}

void TriMatrix::grow() {
  ++t_max_;
  data_.resize(offset(1, t_max_ + 1), 0.0);
}

void TriMatrix::grow_to(int t_max) {
  while (t_max_ < t_max) grow();
}

double TriMatrix::operator()(int s, int t) const {
  if (s > t) {
    require(kind_ == TriKind::symmetric,
            "TriMatrix: causal entry (" + std::to_string(s) + "," + std::to_string(t) +
                ") read with s > t");
    std::swap(s, t);
  }
  require(s >= 1 && t <= t_max_, "TriMatrix: index out of range");
  return data_[offset(s, t)];
}

double& TriMatrix::at(int s, int t) {
  require(s >= 1 && s <= t && t <= t_max_,
          "TriMatrix: writable entries need 1 <= s <= t <= t_max");
  return data_[offset(s, t)];
}

TriMatrix TriMatrix::from_row_major(TriKind kind, int t_max, std::vector<double> entries) {
  TriMatrix out(kind, t_max);
  require(entries.size() == out.data_.size(), "TriMatrix: row-major length mismatch");
  out.data_ = std::move(entries);
  return out;
}

Eigen::MatrixXd TriMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t_max_, t_max_);
  for (int t = 1; t <= t_max_; ++t) {
    for (int s = 1; s <= t; ++s) {
      const double v = data_[offset(s, t)];
      out(s - 1, t - 1) = v;
      if (kind_ == TriKind::symmetric) out(t - 1, s - 1) = v;
    }
  }
  return out;
}

TriMatrix TriMatrix::leading(int t) const {
  require(t >= 0 && t <= t_max_, "TriMatrix: leading size out of range");
  TriMatrix out(kind_, t);
  std::copy(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(out.data_.size()),
            out.data_.begin());
  return out;
}

}  // namespace amdyn
