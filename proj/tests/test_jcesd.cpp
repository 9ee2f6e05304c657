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

#include "mimodet/jcesd.hpp"
#include "mimodet/modem.hpp"
#include "mimodet/rng.hpp"

using namespace mimodet;

namespace {

struct Slot {
    CMat h;
    CMat y_p;
    CMat y_d;
    CMat x_d;
    std::vector<std::uint8_t> bits;
};

Slot make_slot(const SystemConfig &cfg, const CMat &x_p, const Constellation &c, Rng &rng)
{
    Slot s;
    const double sigma2 = snr_to_noise_variance(cfg);
    s.h = cfg.rho > 0.0 ? gen_kronecker(cfg.n_r, cfg.n_t, cfg.rho, rng)
                        : gen_iid_rayleigh(cfg.n_r, cfg.n_t, rng);
    s.y_p = s.h * x_p;
    for (Eigen::Index j = 0; j < s.y_p.cols(); ++j)
        for (int i = 0; i < cfg.n_r; ++i)
            s.y_p(i, j) += rng.cgaussian(sigma2);
    s.x_d.resize(cfg.n_t, cfg.n_d);
    s.y_d.resize(cfg.n_r, cfg.n_d);
    for (int j = 0; j < cfg.n_d; ++j) {
        const auto b = random_bits(cfg.n_t * c.bits_per_symbol(), rng);
        s.bits.insert(s.bits.end(), b.begin(), b.end());
        s.x_d.col(j) = modulate(b, c);
        CVec noise(cfg.n_r);
        for (int i = 0; i < cfg.n_r; ++i)
            noise[i] = rng.cgaussian(sigma2);
        s.y_d.col(j) = s.h * s.x_d.col(j) + noise;
    }
    return s;
}

CVec vec_of(const CMat &h)
{
    CVec v(h.size());
    for (Eigen::Index j = 0; j < h.cols(); ++j)
        v.segment(j * h.rows(), h.rows()) = h.col(j);
    return v;
}

} // namespace

TEST_SUITE_BEGIN("jcesd");

TEST_CASE("one turbo iteration is the pilot-estimate -> detect composition")
{
    SystemConfig cfg;
    cfg.n_t = 4;
    cfg.n_r = 4;
    cfg.n_p = 4;
    cfg.n_d = 6;
    cfg.mod_order = 4;
    cfg.snr_db = 12.0;
    cfg.layers = 4;
    cfg.turbo_iters = 1;
    const Constellation c = Constellation::make(4);
    const CMat x_p = dft_pilots(cfg.n_t, cfg.n_p);
    Rng rng(3);

    for (int trial = 0; trial < 10; ++trial) {
        const Slot s = make_slot(cfg, x_p, c, rng);
        const JcesdResult res = jcesd_run(s.y_p, s.y_d, x_p, cfg,
                                          NetParams::defaults(cfg.layers),
                                          DetectorKind::oamp);

        REQUIRE(res.trajectory.size() == 1);
        CHECK_FALSE(res.trajectory[0].feedback_used);

        // Manual composition of the same pipeline.
        const double sigma2 = snr_to_noise_variance(cfg);
        const CMat r_hh = default_channel_prior(cfg.n_r, cfg.n_t, cfg.rho);
        const ChannelEstimate est = lmmse_pilot_estimate(s.y_p, x_p, r_hh, sigma2);
        const Vec v_est = detection_noise_cov(est, sigma2);
        const Mat h_real = to_real_matrix(est.matrix());
        const Mat cov = real_noise_cov_diag(v_est);
        for (int n = 0; n < cfg.n_d; ++n) {
            const DetectionResult d =
                oamp_detect(to_real_vector(CVec(s.y_d.col(n))), h_real, cov, cfg.layers, c);
            for (int j = 0; j < cfg.n_t; ++j)
                CHECK(res.x_hat_d(j, n) ==
                      c.points()[static_cast<std::size_t>(
                          d.hard_symbols[static_cast<std::size_t>(j)])]);
        }
        CHECK((res.trajectory[0].v_est - v_est).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("oracle feedback never hurts the channel estimate")
{
    SystemConfig cfg;
    cfg.n_t = 4;
    cfg.n_r = 4;
    cfg.n_p = 4;
    cfg.n_d = 8;
    cfg.mod_order = 4;
    cfg.snr_db = 10.0;
    const Constellation c = Constellation::make(4);
    const CMat x_p = dft_pilots(cfg.n_t, cfg.n_p);
    const CMat r_hh = default_channel_prior(cfg.n_r, cfg.n_t, 0.0);
    const double sigma2 = snr_to_noise_variance(cfg);
    Rng rng(5);

    double mse_pilot = 0.0, mse_oracle = 0.0;
    const int slots = 1000;
    for (int i = 0; i < slots; ++i) {
        const Slot s = make_slot(cfg, x_p, c, rng);
        const ChannelEstimate po = lmmse_pilot_estimate(s.y_p, x_p, r_hh, sigma2);
        const NoiseCov r_nn =
            estimation_noise_cov(Mat::Zero(cfg.n_t, cfg.n_d), sigma2, cfg.n_p, cfg.n_d,
                                 cfg.n_r);
        const ChannelEstimate da =
            lmmse_data_aided_estimate(s.y_p, s.y_d, x_p, s.x_d, r_hh, r_nn);
        mse_pilot += (po.h_hat - vec_of(s.h)).squaredNorm();
        mse_oracle += (da.h_hat - vec_of(s.h)).squaredNorm();
    }
    CHECK(mse_oracle < mse_pilot);
}

TEST_CASE("turbo loop bookkeeping over three iterations")
{
    SystemConfig cfg;
    cfg.n_t = 4;
    cfg.n_r = 4;
    cfg.n_p = 4;
    cfg.n_d = 8;
    cfg.mod_order = 16;
    cfg.snr_db = 18.0;
    cfg.layers = 4;
    cfg.turbo_iters = 3;
    const Constellation c = Constellation::make(16);
    const CMat x_p = dft_pilots(cfg.n_t, cfg.n_p);
    const double sigma2 = snr_to_noise_variance(cfg);
    Rng rng(7);

    double mse_l1 = 0.0, mse_l2 = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        const Slot s = make_slot(cfg, x_p, c, rng);
        const JcesdResult res = jcesd_run(s.y_p, s.y_d, x_p, cfg,
                                          NetParams::defaults(cfg.layers),
                                          DetectorKind::oamp);
        REQUIRE(res.trajectory.size() == 3);
        CHECK_FALSE(res.trajectory[0].feedback_used);
        CHECK(res.trajectory[1].feedback_used);
        CHECK(res.trajectory[2].feedback_used);
        for (const auto &ts : res.trajectory) {
            CHECK(ts.v_est.minCoeff() >= sigma2);
            if (ts.feedback_used) {
                CHECK(ts.r_nn.data_block_var.size() == cfg.n_d);
                CHECK(ts.r_nn.data_block_var.minCoeff() >= sigma2);
            }
        }
        mse_l1 += (res.trajectory[0].h_est.h_hat - vec_of(s.h)).squaredNorm();
        mse_l2 += (res.trajectory[1].h_est.h_hat - vec_of(s.h)).squaredNorm();
    }
    // Detected-data feedback refines the estimate on average at this SNR.
    CHECK(mse_l2 < mse_l1);
}

TEST_CASE("layer capture matches the turbo depth")
{
    SystemConfig cfg;
    cfg.n_t = 2;
    cfg.n_r = 2;
    cfg.n_p = 2;
    cfg.n_d = 3;
    cfg.mod_order = 4;
    cfg.snr_db = 10.0;
    cfg.layers = 2;
    cfg.turbo_iters = 2;
    const Constellation c = Constellation::make(4);
    const CMat x_p = dft_pilots(cfg.n_t, cfg.n_p);
    Rng rng(9);
    const Slot s = make_slot(cfg, x_p, c, rng);

    const JcesdResult res = jcesd_run(s.y_p, s.y_d, x_p, cfg, NetParams::defaults(2),
                                      DetectorKind::oampnet2, true);
    REQUIRE(res.layer_outputs.size() == 2);
    for (const auto &per_col : res.layer_outputs) {
        REQUIRE(per_col.size() == 3);
        for (const auto &layers : per_col) {
            REQUIRE(layers.size() == 2);
            for (const auto &x : layers)
                CHECK(x.size() == 4);
        }
    }

    CHECK_THROWS_AS(jcesd_run(s.y_p, s.y_d, x_p, cfg, NetParams::defaults(2),
                              DetectorKind::ml),
                    std::invalid_argument);
}

TEST_SUITE_END();
