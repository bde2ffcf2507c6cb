#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace shmm {

/// Cubic d x d x d tensor stored row-major (last index fastest), so the raw
/// storage order coincides with the flattening used throughout:
/// [(1,1,1), (1,1,2), ..., (1,1,d), (1,2,1), ..., (d,d,d)].
class Tensor3 {
 public:
  Tensor3() : dim_(0) {}

  explicit Tensor3(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {
    if (dim < 1) throw std::invalid_argument("Tensor3: dimension must be positive");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int i, int j, int k) { return data_[offset(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[offset(i, j, k)]; }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  /// Contraction over the last index: result(i,j) = sum_k T(i,j,k) a(k).
  Eigen::MatrixXd contract_last(const Eigen::VectorXd& a) const {
    if (a.size() != dim_) throw std::invalid_argument("Tensor3: contraction size mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_);
    const double* p = data_.data();
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) {
        double acc = 0.0;
        for (int k = 0; k < dim_; ++k) acc += p[(static_cast<std::size_t>(i) * dim_ + j) * dim_ + k] * a(k);
        out(i, j) = acc;
      }
    return out;
  }

  /// Rank-one update: T += scale * u (x) v (x) w, i.e. T(i,j,k) += scale*u_i*v_j*w_k.
  void add_outer(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& w,
                 double scale = 1.0) {
    double* p = data_.data();
    for (int i = 0; i < dim_; ++i) {
      const double ui = scale * u(i);
      for (int j = 0; j < dim_; ++j) {
        const double uv = ui * v(j);
        double* row = p + (static_cast<std::size_t>(i) * dim_ + j) * dim_;
        for (int k = 0; k < dim_; ++k) row[k] += uv * w(k);
      }
    }
  }

  Tensor3& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  Tensor3& operator+=(const Tensor3& other) {
    if (other.dim_ != dim_) throw std::invalid_argument("Tensor3: dimension mismatch");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
    return *this;
  }

  friend Tensor3 operator*(Tensor3 t, double s) { return t *= s; }
  friend Tensor3 operator*(double s, Tensor3 t) { return t *= s; }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

 private:
  std::size_t offset(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + k;
  }

  int dim_;
  std::vector<double> data_;
};

/// Outer product tensor u (x) v (x) w.
inline Tensor3 outer3(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const Eigen::VectorXd& w) {
  Tensor3 t(static_cast<int>(u.size()));
  t.add_outer(u, v, w);
  return t;
}

}  // namespace shmm
