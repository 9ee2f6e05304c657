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

#include "mimodet/chanest.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mimodet/model.hpp"

namespace mimodet {

namespace {

// True when r = c·I within rounding; the i.i.d. prior takes this form and
// unlocks the per-receive-antenna solve.
bool isotropic(const CMat &r, double &c)
{
    c = r(0, 0).real();
    const double tol = 1e-12 * std::max(std::abs(c), 1.0);
    for (Eigen::Index i = 0; i < r.rows(); ++i)
        for (Eigen::Index j = 0; j < r.cols(); ++j) {
            const cplx want = i == j ? cplx(c, 0.0) : cplx(0.0, 0.0);
            if (std::abs(r(i, j) - want) > tol)
                return false;
        }
    return true;
}

// LDLT with a single jitter-and-retry fallback for (near-)singular Gram
// matrices (σ² = 0 with rank-deficient pilots).
Eigen::LDLT<CMat> robust_ldlt(const CMat &g)
{
    Eigen::LDLT<CMat> ldlt(g);
    const Vec d = ldlt.vectorD().real();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (ldlt.info() == Eigen::Success && d.minCoeff() > 1e-13 * dmax)
        return ldlt;
    const double jitter = 1e-10 * std::max(g.real().trace() / static_cast<double>(g.rows()), 1e-300);
    std::fprintf(stderr, "mimodet: chanest: singular Gram matrix, retrying with jitter %.3g\n",
                 jitter);
    CMat gj = g;
    gj.diagonal().array() += jitter;
    Eigen::LDLT<CMat> retry(gj);
    if (retry.info() != Eigen::Success)
        throw std::runtime_error("chanest: Gram factorization failed even with jitter");
    return retry;
}

void check_prior(const CMat &r_hh)
{
    if (r_hh.rows() != r_hh.cols())
        throw std::invalid_argument("R_hh must be square");
    if ((r_hh - r_hh.adjoint()).cwiseAbs().maxCoeff() >
        1e-9 * std::max(r_hh.cwiseAbs().maxCoeff(), 1.0))
        throw std::invalid_argument("R_hh must be Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(r_hh, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(es.eigenvalues().maxCoeff(), 1.0))
        throw std::invalid_argument("R_hh must be PSD");
}

// Shared core: estimate from the stacked observation Y (N_r × N_c) against
// the stacked symbol matrix X (N_t × N_c) with per-column noise variances d
// (length N_c). Isotropic prior c·I.
ChannelEstimate estimate_isotropic(const CMat &y, const CMat &x, double c, const Vec &d)
{
    const int n_r = static_cast<int>(y.rows());
    const int n_t = static_cast<int>(x.rows());
    const Eigen::Index n_c = x.cols();

    // Per receive antenna i:  y_i = Xᵀ h_i + n_i,  Cov(h_i) = c·I,  Cov(n_i) = diag(d).
    CMat xt = x.transpose();                       // N_c × N_t
    CMat gram = c * (xt * xt.adjoint());           // c XᵀX* + diag(d)
    gram.diagonal() += d.cast<cplx>();
    auto ldlt = robust_ldlt(gram);

    CMat ginv_xt = ldlt.solve(xt);                 // G⁻¹ Xᵀ, N_c × N_t
    CMat row_gain = c * ginv_xt.transpose();       // c X* G⁻¹ conjugated below
    // ĥ_i = c X* G⁻¹ y_i  ⇒  row i of Ĥ = (c X* G⁻¹ y_i)ᵀ = y_iᵀ (G⁻¹)ᵀ Xᴴ... use conjugate form:
    CMat h_rows = (row_gain.conjugate() * y.transpose()).transpose(); // N_r × N_t

    CMat c_row = c * CMat::Identity(n_t, n_t) - c * row_gain.conjugate() * xt; // per-row error cov
    // Symmetrize against rounding.
    c_row = 0.5 * (c_row + c_row.adjoint());

    ChannelEstimate est;
    est.n_r = n_r;
    est.n_t = n_t;
    est.h_hat = CVec(n_r * n_t);
    for (int j = 0; j < n_t; ++j)
        est.h_hat.segment(j * n_r, n_r) = h_rows.col(j);
    est.err_cov = CMat::Zero(n_r * n_t, n_r * n_t);
    for (int j = 0; j < n_t; ++j)
        for (int jp = 0; jp < n_t; ++jp)
            for (int i = 0; i < n_r; ++i)
                est.err_cov(j * n_r + i, jp * n_r + i) = c_row(j, jp);
    est.per_entry_err_var = est.err_cov.diagonal().real().cwiseMax(0.0);
    (void)n_c;
    return est;
}

// Generic dense route: A = Xᵀ ⊗ I_{N_r}, arbitrary Hermitian PSD prior,
// block-diagonal noise covariance given densely.
ChannelEstimate estimate_dense(const CMat &y, const CMat &x, const CMat &r_hh, const CMat &r_nn)
{
    check_prior(r_hh);
    const int n_r = static_cast<int>(y.rows());
    const int n_t = static_cast<int>(x.rows());

    CMat a = kron(x.transpose(), CMat::Identity(n_r, n_r));
    CVec yv(y.size());
    for (Eigen::Index j = 0; j < y.cols(); ++j)
        yv.segment(j * n_r, n_r) = y.col(j);

    CMat g = a * r_hh * a.adjoint() + r_nn;
    auto ldlt = robust_ldlt(g);
    CMat ra = r_hh * a.adjoint();

    ChannelEstimate est;
    est.n_r = n_r;
    est.n_t = n_t;
    est.h_hat = ra * ldlt.solve(yv);
    est.err_cov = r_hh - ra * ldlt.solve(ra.adjoint());
    est.err_cov = 0.5 * (est.err_cov + est.err_cov.adjoint());
    est.per_entry_err_var = est.err_cov.diagonal().real().cwiseMax(0.0);
    return est;
}

} // namespace

CMat dft_pilots(int n_t, int n_p)
{
    if (n_t < 1 || n_p < n_t)
        throw std::invalid_argument("dft_pilots requires n_p >= n_t >= 1");
    CMat x(n_t, n_p);
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (int j = 0; j < n_t; ++j)
        for (int k = 0; k < n_p; ++k) {
            const double ang = -two_pi * static_cast<double>(j) * static_cast<double>(k) /
                               static_cast<double>(n_p);
            x(j, k) = {std::cos(ang), std::sin(ang)};
        }
    return x;
}

CMat ChannelEstimate::matrix() const
{
    return Eigen::Map<const CMat>(h_hat.data(), n_r, n_t);
}

CMat NoiseCov::dense() const
{
    const int n_d = static_cast<int>(data_block_var.size());
    const int dim = (n_p + n_d) * n_r;
    CMat out = CMat::Zero(dim, dim);
    out.topLeftCorner(n_p * n_r, n_p * n_r) =
        sigma2 * CMat::Identity(n_p * n_r, n_p * n_r);
    for (int n = 0; n < n_d; ++n) {
        const int off = (n_p + n) * n_r;
        out.block(off, off, n_r, n_r) = data_block_var[n] * CMat::Identity(n_r, n_r);
    }
    return out;
}

CMat default_channel_prior(int n_r, int n_t, double rho)
{
    if (rho == 0.0)
        return CMat::Identity(n_r * n_t, n_r * n_t) / static_cast<double>(n_r);
    CMat rt = exp_correlation(n_t, rho).cast<cplx>();
    CMat rr = exp_correlation(n_r, rho).cast<cplx>();
    return kron(rt, rr) / static_cast<double>(n_r);
}

ChannelEstimate lmmse_pilot_estimate(const CMat &y_p, const CMat &x_p, const CMat &r_hh,
                                     double sigma2)
{
    if (y_p.cols() != x_p.cols())
        throw std::invalid_argument("pilot observation/symbol column mismatch");
    if (r_hh.rows() != y_p.rows() * x_p.rows())
        throw std::invalid_argument("R_hh dimension must be N_r*N_t");
    if (sigma2 < 0.0)
        throw std::invalid_argument("sigma2 must be >= 0");

    double c = 0.0;
    if (isotropic(r_hh, c)) {
        Vec d = Vec::Constant(x_p.cols(), sigma2);
        return estimate_isotropic(y_p, x_p, c, d);
    }
    CMat r_nn = sigma2 * CMat::Identity(y_p.size(), y_p.size());
    return estimate_dense(y_p, x_p, r_hh, r_nn);
}

ChannelEstimate lmmse_data_aided_estimate(const CMat &y_p, const CMat &y_d, const CMat &x_p,
                                          const CMat &x_hat_d, const CMat &r_hh,
                                          const NoiseCov &r_nn)
{
    if (y_p.rows() != y_d.rows() || x_p.rows() != x_hat_d.rows())
        throw std::invalid_argument("pilot/data dimension mismatch");
    if (y_d.cols() != x_hat_d.cols() || y_p.cols() != x_p.cols())
        throw std::invalid_argument("observation/symbol column mismatch");
    if (r_nn.n_p != static_cast<int>(x_p.cols()) ||
        r_nn.data_block_var.size() != x_hat_d.cols() ||
        r_nn.n_r != static_cast<int>(y_p.rows()))
        throw std::invalid_argument("R_nn layout does not match the stacked observation");

    CMat x(x_p.rows(), x_p.cols() + x_hat_d.cols());
    x << x_p, x_hat_d;
    CMat y(y_p.rows(), y_p.cols() + y_d.cols());
    y << y_p, y_d;

    double c = 0.0;
    if (isotropic(r_hh, c)) {
        Vec d(x.cols());
        d.head(x_p.cols()).setConstant(r_nn.sigma2);
        d.tail(x_hat_d.cols()) = r_nn.data_block_var;
        return estimate_isotropic(y, x, c, d);
    }
    return estimate_dense(y, x, r_hh, r_nn.dense());
}

Vec detection_noise_cov(const ChannelEstimate &est, double sigma2)
{
    if (sigma2 < 0.0)
        throw std::invalid_argument("sigma2 must be >= 0");
    Vec v = Vec::Constant(est.n_r, sigma2);
    for (int j = 0; j < est.n_t; ++j)
        for (int i = 0; i < est.n_r; ++i)
            v[i] += est.per_entry_err_var[j * est.n_r + i];
    return v;
}

NoiseCov estimation_noise_cov(const Mat &posterior_vars, double sigma2, int n_p, int n_d,
                              int n_r)
{
    if (posterior_vars.cols() != n_d)
        throw std::invalid_argument("posterior_vars must have one column per data symbol");
    if ((posterior_vars.array() < 0.0).any())
        throw std::invalid_argument("posterior variances must be nonnegative");
    if (sigma2 < 0.0 || n_p < 0 || n_r < 1)
        throw std::invalid_argument("bad estimation_noise_cov arguments");

    NoiseCov r;
    r.sigma2 = sigma2;
    r.n_r = n_r;
    r.n_p = n_p;
    r.data_block_var = posterior_vars.colwise().sum().transpose() / static_cast<double>(n_r);
    r.data_block_var.array() += sigma2;
    return r;
}

} // namespace mimodet
