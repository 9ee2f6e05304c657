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

#include <doctest.h>

#include "mimodet/model.hpp"
#include "mimodet/modem.hpp"

using namespace mimodet;

TEST_SUITE_BEGIN("model");

TEST_CASE("noise variance realizes the requested SNR")
{
    SystemConfig cfg;
    cfg.n_t = 4;
    cfg.n_r = 4;

    cfg.snr_db = 0.0;
    CHECK(snr_to_noise_variance(cfg) == doctest::Approx(1.0).epsilon(1e-12));
    cfg.snr_db = 10.0;
    CHECK(snr_to_noise_variance(cfg) == doctest::Approx(0.1).epsilon(1e-12));
    cfg.snr_db = 1e9; // limit
    CHECK(snr_to_noise_variance(cfg) == 0.0);

    // Monte Carlo calibration: the ratio of average signal to average noise
    // power must match the requested SNR within 0.1 dB.
    const Constellation c = Constellation::make(4);
    Rng rng(42);
    cfg.snr_db = 10.0;
    const double sigma2 = snr_to_noise_variance(cfg);
    double sig = 0.0, noi = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const CMat h = gen_iid_rayleigh(4, 4, rng);
        const CVec x = modulate(random_bits(8, rng), c);
        CVec nvec(4);
        for (int k = 0; k < 4; ++k)
            nvec[k] = rng.cgaussian(sigma2);
        sig += (h * x).squaredNorm();
        noi += nvec.squaredNorm();
    }
    const double snr_est_db = 10.0 * std::log10(sig / noi);
    CHECK(snr_est_db == doctest::Approx(10.0).epsilon(0.01)); // 0.1 dB
}

TEST_CASE("iid Rayleigh draws are deterministic with correct moments")
{
    Rng a = Rng::substream(123, "channel", 5);
    Rng b = Rng::substream(123, "channel", 5);
    const CMat h1 = gen_iid_rayleigh(4, 4, a);
    const CMat h2 = gen_iid_rayleigh(4, 4, b);
    CHECK((h1 - h2).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(7);
    const int draws = 100000;
    double sum_re = 0.0, sum_im = 0.0, sum_sq = 0.0;
    const int n_r = 4, n_t = 4;
    for (int i = 0; i < draws / 100; ++i) {
        const CMat h = gen_iid_rayleigh(n_r, n_t, rng);
        sum_re += h.real().sum();
        sum_im += h.imag().sum();
        sum_sq += h.cwiseAbs2().sum();
    }
    const double n_entries = (draws / 100) * n_r * n_t;
    const double mean_sigma = std::sqrt(1.0 / (2.0 * n_r) / n_entries);
    CHECK(std::abs(sum_re / n_entries) < 3.0 * mean_sigma);
    CHECK(std::abs(sum_im / n_entries) < 3.0 * mean_sigma);
    CHECK(sum_sq / n_entries == doctest::Approx(1.0 / n_r).epsilon(0.02));
}

TEST_CASE("exponential correlation and its PSD square root")
{
    const Mat r = exp_correlation(3, 0.5);
    Mat want(3, 3);
    want << 1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0;
    CHECK((r - want).cwiseAbs().maxCoeff() == 0.0);

    for (double rho : {0.0, 0.3, 0.9, 0.99}) {
        const Mat rr = exp_correlation(6, rho);
        const Mat s = psd_sqrt(rr);
        CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((s * s - rr).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Mat> es(s);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }

    CHECK_THROWS_AS(exp_correlation(4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exp_correlation(4, -0.1), std::invalid_argument);
}

TEST_CASE("kronecker channel: rho=0 degenerates to iid, correct receive correlation")
{
    Rng a = Rng::substream(9, "channel", 0);
    Rng b = Rng::substream(9, "channel", 0);
    const CMat g = gen_iid_rayleigh(4, 4, a);
    const CMat hc = gen_kronecker(4, 4, 0.0, b);
    CHECK((g - hc).cwiseAbs().maxCoeff() == 0.0);

    // E[HHᴴ] = tr(R_T)/N_r · R_R for the Kronecker ensemble.
    Rng rng(11);
    const int n_r = 4, n_t = 4, draws = 100000;
    CMat acc = CMat::Zero(n_r, n_r);
    for (int i = 0; i < draws; ++i) {
        const CMat h = gen_kronecker(n_r, n_t, 0.5, rng);
        acc += h * h.adjoint();
    }
    acc /= static_cast<double>(draws);
    const Mat want = (static_cast<double>(n_t) / n_r) * exp_correlation(n_r, 0.5);
    for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < n_r; ++j)
            CHECK(std::abs(acc(i, j).real() - want(i, j)) < 0.05 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("real-equivalent transform is an isometry of the model")
{
    Rng rng(21);
    const Constellation c = Constellation::make(4);

    SUBCASE("algebraic identity and round trip")
    {
        for (int i = 0; i < 50; ++i) {
            const CMat h = gen_iid_rayleigh(3, 2, rng);
            const CVec x = modulate(random_bits(4, rng), c);
            CVec n(3);
            for (int k = 0; k < 3; ++k)
                n[k] = rng.cgaussian(0.3);
            const CVec y = h * x + n;
            const RealSystem rs = complex_to_real(h, y, 0.3 * CMat::Identity(3, 3));
            const Vec lhs = rs.y_real;
            const Vec rhs = rs.h_real * to_real_vector(x) + to_real_vector(n);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((to_complex_vector(to_real_vector(y)) - y).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    SUBCASE("white noise halving")
    {
        const CMat h = gen_iid_rayleigh(4, 4, rng);
        const CVec y = CVec::Zero(4);
        const RealSystem rs = complex_to_real(h, y, 0.2 * CMat::Identity(4, 4));
        CHECK((rs.noise_cov_real - 0.1 * Mat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(rs.noise_var_per_dim == doctest::Approx(0.1));
    }

    SUBCASE("residual norms agree over 1000 instances")
    {
        for (int i = 0; i < 1000; ++i) {
            const CMat h = gen_iid_rayleigh(4, 4, rng);
            const CVec x = modulate(random_bits(8, rng), c);
            CVec n(4);
            for (int k = 0; k < 4; ++k)
                n[k] = rng.cgaussian(0.5);
            const CVec y = h * x + n;
            const RealSystem rs = complex_to_real(h, y, CMat::Identity(4, 4));
            const double cres = (y - h * x).norm();
            const double rres = (rs.y_real - rs.h_real * to_real_vector(x)).norm();
            CHECK(std::abs(cres - rres) < 1e-10);
        }
    }

    SUBCASE("dimension mismatch rejected")
    {
        const CMat h = gen_iid_rayleigh(3, 2, rng);
        CHECK_THROWS_AS(complex_to_real(h, CVec::Zero(2), CMat::Identity(3, 3)),
                        std::invalid_argument);
    }
}

TEST_CASE("config validation")
{
    SystemConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.rho = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.rho = 0.0;
    cfg.mod_order = 8;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.mod_order = 4;
    cfg.n_p = 2;
    cfg.n_t = 4;
    CHECK_THROWS_AS(cfg.validate(true), std::invalid_argument);
    CHECK_NOTHROW(cfg.validate(false));
}

TEST_SUITE_END();
