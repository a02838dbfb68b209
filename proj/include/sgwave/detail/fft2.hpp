#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace sgwave::detail {

/// In-place 2-D DFT over both matrix axes. The inverse carries the 1/N factor.
inline void fft2(Eigen::MatrixXcd& m, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, out;

  in.resize(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) in[i] = m(i, j);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = out[i];
  }
  in.resize(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) in[j] = m(i, j);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = out[j];
  }
}

/// Angular wavenumbers in DFT order for n samples at spacing h.
inline Eigen::VectorXd wavenumbers(int n, double h) {
  Eigen::VectorXd k(n);
  const double dk = 2.0 * 3.14159265358979323846 / (n * h);
  for (int j = 0; j < n; ++j) k(j) = dk * (j < (n + 1) / 2 ? j : j - n);
  return k;
}

}  // namespace sgwave::detail
