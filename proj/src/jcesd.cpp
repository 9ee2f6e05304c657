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

#include "mimodet/jcesd.hpp"

#include <stdexcept>

namespace mimodet {

JcesdResult jcesd_run(const CMat &y_p, const CMat &y_d, const CMat &x_p,
                      const SystemConfig &cfg, const NetParams &params, DetectorKind detector,
                      bool capture_layers)
{
    cfg.validate(true);
    if (detector == DetectorKind::ml)
        throw std::invalid_argument("jcesd_run needs per-symbol posterior variances; "
                                    "ml provides none");
    if (y_p.cols() != cfg.n_p || y_d.cols() != cfg.n_d || x_p.rows() != cfg.n_t)
        throw std::invalid_argument("jcesd_run: slot dimensions do not match config");

    const int n_t = cfg.n_t, n_r = cfg.n_r, n_d = cfg.n_d;
    const double sigma2 = snr_to_noise_variance(cfg);
    const Constellation c = Constellation::make(cfg.mod_order);
    const CMat r_hh = default_channel_prior(n_r, n_t, cfg.rho);
    const int bpd = c.bits_per_dim();
    const int bits_per_col = n_t * 2 * bpd;

    JcesdResult out;
    out.trajectory.reserve(static_cast<std::size_t>(cfg.turbo_iters));
    if (capture_layers)
        out.layer_outputs.resize(static_cast<std::size_t>(cfg.turbo_iters));

    ChannelEstimate est = lmmse_pilot_estimate(y_p, x_p, r_hh, sigma2);
    CMat x_det = CMat::Zero(n_t, n_d);
    Mat post_var = Mat::Zero(n_t, n_d);

    for (int l = 1; l <= cfg.turbo_iters; ++l) {
        TurboState ts;
        ts.iter = l;
        ts.feedback_used = l >= 2;
        if (l >= 2) {
            ts.r_nn = estimation_noise_cov(post_var, sigma2, cfg.n_p, n_d, n_r);
            est = lmmse_data_aided_estimate(y_p, y_d, x_p, x_det, r_hh, ts.r_nn);
        }
        ts.v_est = detection_noise_cov(est, sigma2);

        const Mat h_real = to_real_matrix(est.matrix());
        const Mat noise_cov_real = real_noise_cov_diag(ts.v_est);

        if (capture_layers)
            out.layer_outputs[static_cast<std::size_t>(l - 1)].resize(
                static_cast<std::size_t>(n_d));
        if (l == cfg.turbo_iters)
            out.bits.assign(static_cast<std::size_t>(n_d) * bits_per_col, 0);

        for (int n = 0; n < n_d; ++n) {
            const Vec y_real = to_real_vector(y_d.col(n));
            DetectionResult res =
                run_detector(detector, y_real, h_real, noise_cov_real, cfg.layers,
                             detector == DetectorKind::oampnet2 ? &params : nullptr, c);
            for (int j = 0; j < n_t; ++j) {
                x_det(j, n) = c.points()[static_cast<std::size_t>(
                    res.hard_symbols[static_cast<std::size_t>(j)])];
                post_var(j, n) = res.posterior_vars[j] + res.posterior_vars[n_t + j];
            }
            if (capture_layers) {
                auto &per_col = out.layer_outputs[static_cast<std::size_t>(l - 1)]
                                                 [static_cast<std::size_t>(n)];
                per_col.reserve(res.trajectory.size());
                for (const auto &tr : res.trajectory)
                    per_col.push_back(tr.x_hat);
            }
            if (l == cfg.turbo_iters)
                for (int b = 0; b < bits_per_col; ++b)
                    out.bits[static_cast<std::size_t>(n * bits_per_col + b)] =
                        res.hard_bits[static_cast<std::size_t>(b)];
        }

        ts.h_est = est;
        ts.x_det = x_det;
        ts.post_var = post_var;
        out.trajectory.push_back(std::move(ts));
    }

    out.x_hat_d = x_det;
    return out;
}

} // namespace mimodet
