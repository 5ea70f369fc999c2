#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace ubacf {

using Index = Eigen::Index;

/// Thrown when two operands disagree on shape.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown on non-finite iterates, degenerate parameters and similar.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {
template <typename T> struct is_complex : std::false_type {};
template <typename T> struct is_complex<std::complex<T>> : std::true_type {};

template <typename T> inline auto real_part(const T& v) {
  if constexpr (is_complex<T>::value)
    return v.real();
  else
    return v;
}
} // namespace detail

/// Multi-channel 2-D array: `channels()` planes of `rows() x cols()` values.
///
/// Each plane is an Eigen matrix, so per-channel work can use the usual
/// Eigen expressions through operator[].
template <typename Scalar_> class Tensor3 {
public:
  using Scalar = Scalar_;
  using RealScalar = typename Eigen::NumTraits<Scalar>::Real;
  using Channel = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tensor3() = default;

  Tensor3(Index rows, Index cols, Index channels) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1 || channels < 1)
      throw ShapeError("Tensor3: every dimension must be >= 1");
    planes_.assign(static_cast<std::size_t>(channels), Channel::Zero(rows, cols));
  }

  static Tensor3 Zero(Index rows, Index cols, Index channels) {
    return Tensor3(rows, cols, channels);
  }

  static Tensor3 Constant(Index rows, Index cols, Index channels, Scalar value) {
    Tensor3 t(rows, cols, channels);
    for (auto& p : t.planes_)
      p.setConstant(value);
    return t;
  }

  /// Entries drawn from N(0, 1); deterministic for a given engine state.
  template <typename Engine>
  static Tensor3 Random(Index rows, Index cols, Index channels, Engine& rng) {
    std::normal_distribution<RealScalar> normal(0, 1);
    Tensor3 t(rows, cols, channels);
    for (auto& p : t.planes_)
      for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) {
          if constexpr (detail::is_complex<Scalar>::value)
            p(r, c) = Scalar(normal(rng), normal(rng));
          else
            p(r, c) = normal(rng);
        }
    return t;
  }

  static Tensor3 FromChannel(const Channel& plane) {
    Tensor3 t(plane.rows(), plane.cols(), 1);
    t.planes_[0] = plane;
    return t;
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index channels() const { return static_cast<Index>(planes_.size()); }
  Index size() const { return rows_ * cols_ * channels(); }
  bool empty() const { return planes_.empty(); }

  Channel& operator[](Index l) { return planes_[static_cast<std::size_t>(l)]; }
  const Channel& operator[](Index l) const { return planes_[static_cast<std::size_t>(l)]; }

  Scalar& operator()(Index r, Index c, Index l) { return (*this)[l](r, c); }
  const Scalar& operator()(Index r, Index c, Index l) const { return (*this)[l](r, c); }

  bool sameShape(const Tensor3& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && channels() == o.channels();
  }

  std::string shapeString() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_ << "x" << channels();
    return os.str();
  }

  void setZero() {
    for (auto& p : planes_)
      p.setZero();
  }

  bool allFinite() const {
    for (const auto& p : planes_)
      if (!p.allFinite())
        return false;
    return true;
  }

  RealScalar squaredNorm() const {
    RealScalar s = 0;
    for (const auto& p : planes_)
      s += p.squaredNorm();
    return s;
  }

  RealScalar norm() const { return std::sqrt(squaredNorm()); }

  RealScalar maxAbs() const {
    RealScalar m = 0;
    for (const auto& p : planes_)
      m = std::max<RealScalar>(m, p.cwiseAbs().maxCoeff());
    return m;
  }

  /// Real inner product <this, o> (real part of sum conj(a) b for complex data).
  RealScalar dot(const Tensor3& o) const {
    requireSameShape(o, "dot");
    RealScalar s = 0;
    for (Index l = 0; l < channels(); ++l)
      s += detail::real_part((*this)[l].cwiseProduct(o[l].conjugate()).sum());
    return s;
  }

  /// Sum over channels as a single-channel tensor.
  Tensor3 channelSum() const {
    Tensor3 out(rows_, cols_, 1);
    for (const auto& p : planes_)
      out.planes_[0] += p;
    return out;
  }

  Tensor3& operator+=(const Tensor3& o) {
    requireSameShape(o, "operator+=");
    for (Index l = 0; l < channels(); ++l)
      (*this)[l] += o[l];
    return *this;
  }

  Tensor3& operator-=(const Tensor3& o) {
    requireSameShape(o, "operator-=");
    for (Index l = 0; l < channels(); ++l)
      (*this)[l] -= o[l];
    return *this;
  }

  Tensor3& operator*=(Scalar s) {
    for (auto& p : planes_)
      p *= s;
    return *this;
  }

  /// this += alpha * o
  Tensor3& axpy(Scalar alpha, const Tensor3& o) {
    requireSameShape(o, "axpy");
    for (Index l = 0; l < channels(); ++l)
      (*this)[l] += alpha * o[l];
    return *this;
  }

  Tensor3 cwiseProduct(const Tensor3& o) const {
    requireSameShape(o, "cwiseProduct");
    Tensor3 out(*this);
    for (Index l = 0; l < channels(); ++l)
      out[l] = out[l].cwiseProduct(o[l]);
    return out;
  }

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, Scalar s) { return a *= s; }
  friend Tensor3 operator*(Scalar s, Tensor3 a) { return a *= s; }
  friend Tensor3 operator-(Tensor3 a) { return a *= Scalar(-1); }

  friend bool operator==(const Tensor3& a, const Tensor3& b) {
    if (!a.sameShape(b))
      return false;
    for (Index l = 0; l < a.channels(); ++l)
      if (a[l] != b[l])
        return false;
    return true;
  }

  void requireSameShape(const Tensor3& o, const char* what) const {
    if (!sameShape(o))
      throw ShapeError(std::string(what) + ": shape " + shapeString() + " vs " +
                       o.shapeString());
  }

private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Channel> planes_;
};

using RealTensor3 = Tensor3<double>;
using ComplexSpectrum = Tensor3<std::complex<double>>;

/// Features z_t produced by the representor.
using FeatureMap = RealTensor3;

/// Squared distance between two tensors of equal shape.
template <typename Scalar>
typename Tensor3<Scalar>::RealScalar squaredDistance(const Tensor3<Scalar>& a,
                                                     const Tensor3<Scalar>& b) {
  a.requireSameShape(b, "squaredDistance");
  typename Tensor3<Scalar>::RealScalar s = 0;
  for (Index l = 0; l < a.channels(); ++l)
    s += (a[l] - b[l]).squaredNorm();
  return s;
}

} // namespace ubacf
