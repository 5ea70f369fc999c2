#include "ubacf/oracles.hpp"

#include <cmath>
#include <numbers>

namespace ubacf::oracle {

Eigen::VectorXd flatten(const RealTensor3& x) {
  Eigen::VectorXd v(x.size());
  Index at = 0;
  for (Index l = 0; l < x.channels(); ++l)
    for (Index r = 0; r < x.rows(); ++r)
      for (Index c = 0; c < x.cols(); ++c)
        v(at++) = x(r, c, l);
  return v;
}

RealTensor3 unflatten(const Eigen::VectorXd& v, Index rows, Index cols, Index channels) {
  RealTensor3 x(rows, cols, channels);
  Index at = 0;
  for (Index l = 0; l < channels; ++l)
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c)
        x(r, c, l) = v(at++);
  return x;
}

ComplexSpectrum naive_dft(const RealTensor3& x) {
  const Index m = x.rows();
  const Index n = x.cols();
  ComplexSpectrum out(m, n, x.channels());
  const double twoPi = 2.0 * std::numbers::pi;
  for (Index l = 0; l < x.channels(); ++l)
    for (Index u = 0; u < m; ++u)
      for (Index v = 0; v < n; ++v) {
        std::complex<double> s = 0;
        for (Index r = 0; r < m; ++r)
          for (Index c = 0; c < n; ++c) {
            const double phase = -twoPi * (double(u * r) / double(m) + double(v * c) / double(n));
            s += x(r, c, l) * std::complex<double>(std::cos(phase), std::sin(phase));
          }
        out(u, v, l) = s;
      }
  return out;
}

RealTensor3 spatial_correlate(const RealTensor3& z, const RealTensor3& f) {
  z.requireSameShape(f, "spatial_correlate");
  const Index m = z.rows();
  const Index n = z.cols();
  RealTensor3 r(m, n, 1);
  for (Index u = 0; u < m; ++u)
    for (Index v = 0; v < n; ++v) {
      double s = 0;
      for (Index l = 0; l < z.channels(); ++l)
        for (Index x = 0; x < m; ++x)
          for (Index y = 0; y < n; ++y)
            s += z((x + u) % m, (y + v) % n, l) * f(x, y, l);
      r(u, v, 0) = s;
    }
  return r;
}

Eigen::MatrixXd correlation_matrix(const RealTensor3& z) {
  const Index m = z.rows();
  const Index n = z.cols();
  const Index L = z.channels();
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(m * n, m * n * L);
  for (Index u = 0; u < m; ++u)
    for (Index v = 0; v < n; ++v)
      for (Index l = 0; l < L; ++l)
        for (Index x = 0; x < m; ++x)
          for (Index y = 0; y < n; ++y)
            Z(u * n + v, l * m * n + x * n + y) += z((x + u) % m, (y + v) % n, l);
  return Z;
}

Eigen::MatrixXd crop_matrix(const CropOperator& mask, Index channels) {
  const Index D = mask.cropRows() * mask.cropCols();
  const Index T = mask.fullRows * mask.fullCols;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(D * channels, T * channels);
  for (Index l = 0; l < channels; ++l)
    for (Index i = 0; i < mask.cropRows(); ++i)
      for (Index j = 0; j < mask.cropCols(); ++j) {
        const Index row = l * D + i * mask.cropCols() + j;
        const Index col = l * T + (mask.top + i) * mask.fullCols + (mask.left + j);
        M(row, col) = mask.weights(i, j);
      }
  return M;
}

RealTensor3 dense_h_solve(const FilterVars& vars, const StageParams& params) {
  const Index L = vars.f.channels();
  const Eigen::MatrixXd M = crop_matrix(params.mask, L);
  const Eigen::MatrixXd A =
      params.lambda * Eigen::MatrixXd::Identity(M.rows(), M.rows()) + params.rho * M * M.transpose();
  const Eigen::VectorXd b = params.rho * M * (flatten(vars.f) + flatten(vars.g));
  const Eigen::VectorXd h = A.fullPivLu().solve(b);
  return unflatten(h, params.mask.cropRows(), params.mask.cropCols(), L);
}

RealTensor3 dense_f_solve(const RealTensor3& z, const RealTensor3& y, const RealTensor3& h,
                          const RealTensor3& g, const StageParams& params) {
  const Index L = z.channels();
  const Eigen::MatrixXd Z = correlation_matrix(z);
  const Eigen::MatrixXd M = crop_matrix(params.mask, L);
  const Eigen::MatrixXd A =
      Z.transpose() * Z + params.rho * Eigen::MatrixXd::Identity(Z.cols(), Z.cols());
  const Eigen::VectorXd b =
      Z.transpose() * flatten(y) + params.rho * (M.transpose() * flatten(h) - flatten(g));
  return unflatten(A.ldlt().solve(b), z.rows(), z.cols(), L);
}

FilterVars kkt_solve(const RealTensor3& z, const RealTensor3& y, const StageParams& params) {
  const Index L = z.channels();
  const Eigen::MatrixXd Z = correlation_matrix(z);
  const Eigen::MatrixXd M = crop_matrix(params.mask, L);
  const Eigen::MatrixXd ZM = Z * M.transpose();
  const Eigen::MatrixXd A =
      ZM.transpose() * ZM + params.lambda * Eigen::MatrixXd::Identity(M.rows(), M.rows());
  const Eigen::VectorXd h = A.ldlt().solve(ZM.transpose() * flatten(y));
  FilterVars out;
  out.h = unflatten(h, params.mask.cropRows(), params.mask.cropCols(), L);
  out.f = unflatten(M.transpose() * h, z.rows(), z.cols(), L);
  out.g = RealTensor3(z.rows(), z.cols(), L);
  return out;
}

double naive_objective(const RealTensor3& z, const RealTensor3& y, const FilterVars& vars,
                       const StageParams& params) {
  const RealTensor3 r = spatial_correlate(z, vars.f);
  double data = 0;
  for (Index u = 0; u < y.rows(); ++u)
    for (Index v = 0; v < y.cols(); ++v) {
      const double d = y(u, v, 0) - r(u, v, 0);
      data += d * d;
    }
  double reg = 0;
  for (Index l = 0; l < vars.h.channels(); ++l)
    for (Index i = 0; i < vars.h.rows(); ++i)
      for (Index j = 0; j < vars.h.cols(); ++j)
        reg += vars.h(i, j, l) * vars.h(i, j, l);
  return 0.5 * data + 0.5 * params.lambda * reg;
}

RealTensor3 naive_conv(const RealTensor3& x, const std::vector<Eigen::MatrixXd>& kernels,
                       const Eigen::VectorXd& bias, Index outChannels) {
  const Index m = x.rows();
  const Index n = x.cols();
  const Index C = x.channels();
  RealTensor3 out(m, n, outChannels);
  for (Index o = 0; o < outChannels; ++o)
    for (Index r = 0; r < m; ++r)
      for (Index c = 0; c < n; ++c) {
        double s = bias(o);
        for (Index in = 0; in < C; ++in) {
          const Eigen::MatrixXd& k = kernels[static_cast<std::size_t>(o * C + in)];
          const Index half = k.rows() / 2;
          for (Index i = 0; i < k.rows(); ++i)
            for (Index j = 0; j < k.cols(); ++j) {
              const Index rr = r + i - half;
              const Index cc = c + j - half;
              if (rr >= 0 && rr < m && cc >= 0 && cc < n)
                s += k(i, j) * x(rr, cc, in);
            }
        }
        out(r, c, o) = s;
      }
  return out;
}

} // namespace ubacf::oracle
