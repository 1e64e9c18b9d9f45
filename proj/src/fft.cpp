#include "sctl/fft.hpp"

#include <unsupported/Eigen/FFT>

namespace sctl {

namespace {

// kissfft plans are cheap but not free; cache one engine per thread.
Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft_engine;
    return fft_engine;
}

}  // namespace

Eigen::VectorXcd fft(const Eigen::VectorXcd& x) {
    Eigen::VectorXcd out(x.size());
    engine().fwd(out, x);
    return out;
}

Eigen::VectorXcd ifft(const Eigen::VectorXcd& x) {
    Eigen::VectorXcd out(x.size());
    engine().inv(out, x);
    return out;
}

void fft_cols(Eigen::MatrixXcd& m, bool inverse) {
    Eigen::VectorXcd in(m.rows()), out(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        in = m.col(j);
        if (inverse)
            engine().inv(out, in);
        else
            engine().fwd(out, in);
        m.col(j) = out;
    }
}

void fft_rows(Eigen::MatrixXcd& m, bool inverse) {
    Eigen::VectorXcd in(m.cols()), out(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        in = m.row(i).transpose();
        if (inverse)
            engine().inv(out, in);
        else
            engine().fwd(out, in);
        m.row(i) = out.transpose();
    }
}

}  // namespace sctl
