#pragma once

#include <Eigen/Dense>

#include "sctl/grid.hpp"

namespace sctl {

// Forward DFT, X_k = sum_a x_a exp(-2*pi*i*a*k/n); unnormalized.
Eigen::VectorXcd fft(const Eigen::VectorXcd& x);

// Inverse DFT with the 1/n factor, so ifft(fft(x)) == x.
Eigen::VectorXcd ifft(const Eigen::VectorXcd& x);

// In-place transforms along each column / each row of a matrix.
void fft_cols(Eigen::MatrixXcd& m, bool inverse);
void fft_rows(Eigen::MatrixXcd& m, bool inverse);

}  // namespace sctl
