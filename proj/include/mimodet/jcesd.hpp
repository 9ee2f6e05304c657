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

#ifndef MIMODET_JCESD_HPP
#define MIMODET_JCESD_HPP

#include <cstdint>
#include <vector>

#include "mimodet/chanest.hpp"
#include "mimodet/detect.hpp"
#include "mimodet/model.hpp"

namespace mimodet {

/// Snapshot of one turbo iteration.
struct TurboState {
    int iter = 0;           // 1-based turbo index l
    ChannelEstimate h_est;
    CMat x_det;              // N_t × N_d hard-decided symbols
    Mat post_var;            // N_t × N_d per-complex-symbol error variances
    Vec v_est;               // detection-equivalent-noise diagonal (length N_r)
    NoiseCov r_nn;           // estimator-side covariance (iter ≥ 2 only)
    bool feedback_used = false;
};

struct JcesdResult {
    CMat x_hat_d;                        // final detected data matrix
    std::vector<std::uint8_t> bits;      // final bit decisions, column-major
    std::vector<TurboState> trajectory;  // length L
    // layer_outputs[l][col][t] = x̂_{t+1} of layer t, turbo iteration l;
    // only filled when capture_layers is set (training losses need it).
    std::vector<std::vector<std::vector<Vec>>> layer_outputs;
};

/// The turbo loop: pilot-only LMMSE → detect with V_est; from the second
/// iteration on, detected data re-enter the estimator as extra pilots with
/// R_nn built from the detector's posterior variances. One Ω (params) is
/// shared by every turbo iteration. All N_p + N_d columns of a slot share one
/// channel draw by construction of the inputs.
JcesdResult jcesd_run(const CMat &y_p, const CMat &y_d, const CMat &x_p,
                      const SystemConfig &cfg, const NetParams &params, DetectorKind detector,
                      bool capture_layers = false);

} // namespace mimodet

#endif
