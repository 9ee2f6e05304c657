// SPDX-License-Identifier: Apache-2.0
//
// mimodet — MIMO detection and channel estimation workbench
// Copyright (C) 2026 the mimodet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mimodet/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mimodet {

void SystemConfig::validate(bool needs_pilots) const
{
    if (n_t < 1 || n_r < 1)
        throw std::invalid_argument("antenna counts must be >= 1");
    if (mod_order != 4 && mod_order != 16 && mod_order != 64)
        throw std::invalid_argument("mod_order must be one of {4, 16, 64}");
    if (rho < 0.0 || rho >= 1.0)
        throw std::invalid_argument("rho must lie in [0, 1)");
    if (layers < 1)
        throw std::invalid_argument("layers must be >= 1");
    if (turbo_iters < 1)
        throw std::invalid_argument("turbo_iters must be >= 1");
    if (needs_pilots) {
        if (n_p < n_t)
            throw std::invalid_argument("n_p must be >= n_t for full-rank pilot estimation");
        if (n_d < 0)
            throw std::invalid_argument("n_d must be >= 0");
    }
}

double snr_to_noise_variance(int n_t, int n_r, double snr_db)
{
    return static_cast<double>(n_t) / (static_cast<double>(n_r) * std::pow(10.0, snr_db / 10.0));
}

double snr_to_noise_variance(const SystemConfig &cfg)
{
    return snr_to_noise_variance(cfg.n_t, cfg.n_r, cfg.snr_db);
}

CMat gen_iid_rayleigh(int n_r, int n_t, Rng &rng)
{
    CMat h(n_r, n_t);
    const double var = 1.0 / static_cast<double>(n_r);
    for (int j = 0; j < n_t; ++j)
        for (int i = 0; i < n_r; ++i)
            h(i, j) = rng.cgaussian(var);
    return h;
}

Mat exp_correlation(int n, double rho)
{
    if (rho < 0.0 || rho >= 1.0)
        throw std::invalid_argument("rho must lie in [0, 1)");
    Mat r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r(i, j) = std::pow(rho, std::abs(i - j));
    return r;
}

Mat psd_sqrt(const Mat &a)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed in psd_sqrt");
    Vec lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

CMat gen_kronecker(int n_r, int n_t, double rho, Rng &rng)
{
    Mat rr_sqrt = psd_sqrt(exp_correlation(n_r, rho));
    Mat rt_sqrt = psd_sqrt(exp_correlation(n_t, rho));
    CMat g = gen_iid_rayleigh(n_r, n_t, rng);
    return rr_sqrt * g * rt_sqrt;
}

CMat draw_channel(int n_r, int n_t, double rho, ChannelKind kind, Rng &rng)
{
    switch (kind) {
    case ChannelKind::iid_rayleigh:
        return gen_iid_rayleigh(n_r, n_t, rng);
    case ChannelKind::kronecker:
        return gen_kronecker(n_r, n_t, rho, rng);
    case ChannelKind::awgn_identity:
        if (n_r != n_t)
            throw std::invalid_argument("awgn_identity channel requires n_r == n_t");
        return CMat::Identity(n_r, n_t);
    }
    throw std::logic_error("unknown ChannelKind");
}

Mat to_real_matrix(const CMat &h)
{
    const Eigen::Index m = h.rows(), n = h.cols();
    Mat out(2 * m, 2 * n);
    out.topLeftCorner(m, n) = h.real();
    out.topRightCorner(m, n) = -h.imag();
    out.bottomLeftCorner(m, n) = h.imag();
    out.bottomRightCorner(m, n) = h.real();
    return out;
}

Vec to_real_vector(const CVec &y)
{
    Vec out(2 * y.size());
    out.head(y.size()) = y.real();
    out.tail(y.size()) = y.imag();
    return out;
}

CVec to_complex_vector(const Vec &x)
{
    if (x.size() % 2 != 0)
        throw std::invalid_argument("real vector length must be even");
    const Eigen::Index n = x.size() / 2;
    CVec out(n);
    out.real() = x.head(n);
    out.imag() = x.tail(n);
    return out;
}

Mat real_noise_cov(const CMat &c)
{
    if (c.rows() != c.cols())
        throw std::invalid_argument("noise covariance must be square");
    const Eigen::Index n = c.rows();
    Mat out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = 0.5 * c.real();
    out.topRightCorner(n, n) = -0.5 * c.imag();
    out.bottomLeftCorner(n, n) = 0.5 * c.imag();
    out.bottomRightCorner(n, n) = 0.5 * c.real();
    return out;
}

Mat real_noise_cov_diag(const Vec &diag_complex)
{
    const Eigen::Index n = diag_complex.size();
    Vec d(2 * n);
    d.head(n) = 0.5 * diag_complex;
    d.tail(n) = 0.5 * diag_complex;
    return d.asDiagonal();
}

RealSystem complex_to_real(const CMat &h, const CVec &y, const CMat &noise_cov)
{
    if (y.size() != h.rows() || noise_cov.rows() != h.rows() || noise_cov.cols() != h.rows())
        throw std::invalid_argument("complex_to_real: dimension mismatch");
    RealSystem rs;
    rs.h_real = to_real_matrix(h);
    rs.y_real = to_real_vector(y);
    rs.noise_cov_real = real_noise_cov(noise_cov);
    rs.noise_var_per_dim = rs.noise_cov_real.diagonal().mean();
    return rs;
}

} // namespace mimodet
