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

#ifndef MIMODET_TRAIN_HPP
#define MIMODET_TRAIN_HPP

#include <functional>
#include <string>
#include <vector>

#include "mimodet/chanest.hpp"
#include "mimodet/detect.hpp"
#include "mimodet/model.hpp"
#include "mimodet/rng.hpp"

namespace mimodet {

enum class CsiMode { perfect, estimated };
enum class LossMode { final_layer, sum_layers };

/// One detection problem: y = H·x + n by construction (real-equivalent form).
/// In estimated-CSI mode, `h`/`noise_cov` hold the receiver-side quantities
/// (Ĥ and the equivalent-noise covariance from V_est) while `y` was produced
/// by the true channel, which is the mismatch the detector must absorb.
struct Sample {
    Vec x_true;
    Vec y;
    Mat h;
    Mat noise_cov;
    // Estimated mode extras (empty in perfect mode).
    CVec h_est;
    Vec v_est;
    Vec h_err_var;
};

/// One full slot for turbo (JCESD) training.
struct SlotSample {
    CMat y_p;        // N_r × N_p
    CMat y_d;        // N_r × N_d
    Mat x_real_cols; // 2N_t × N_d transmitted data, real-stacked per column
};

std::vector<Sample> gen_dataset(const SystemConfig &cfg, int n, Rng &rng, CsiMode mode);
std::vector<SlotSample> gen_slot_dataset(const SystemConfig &cfg, int n, Rng &rng);

/// Mean over the batch of ‖x − x̂_{T+1}‖² (final_layer) or of the sum over
/// every layer output (sum_layers).
double l2_loss(const std::vector<Sample> &batch, std::size_t first, std::size_t count,
               const NetParams &params, const Constellation &c, LossMode mode);
double l2_loss(const std::vector<Sample> &batch, const NetParams &params,
               const Constellation &c, LossMode mode);

/// JCESD variant: mean over all data vectors in the batch of the sum of
/// ‖x − x̂_t^{(l)}‖² over the L×T layer outputs.
double l2_loss_jcesd(const std::vector<SlotSample> &batch, std::size_t first,
                     std::size_t count, const CMat &x_p, const SystemConfig &cfg,
                     const NetParams &params, const Constellation &c);

Vec flatten(const NetParams &params);
NetParams unflatten(const Vec &v, const ParamsMeta &meta);

/// Central finite differences over the 4T scalars, h = fd_step·max(|ω|, 1).
/// The loss must be deterministic for a fixed batch; a non-finite probe is
/// retried once with h/10, then reported.
Vec fd_gradient(const std::function<double(const NetParams &)> &loss_fn,
                const NetParams &params, double fd_step);

struct TrainConfig {
    int epochs = 1000;
    int samples_per_epoch = 5000;
    int validation_size = 1000;   // 10000 in the high-SNR regime
    int batch_size = 100;
    double learning_rate = 1e-3;  // 1e-4 in the high-SNR regime and for JCESD
    double fd_step = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    CsiMode csi_mode = CsiMode::perfect;
    LossMode loss_mode = LossMode::final_layer;
    std::string log_path; // optional CSV: epoch,train_loss,val_loss,seconds
};

/// The published schedule for a given SNR (1000 epochs, 5000 samples/epoch).
TrainConfig paper_schedule(double snr_db);
/// Reduced schedule for interactive runs; batch size and learning rates kept.
TrainConfig desk_schedule(double snr_db, int epochs = 100, int samples_per_epoch = 2000);

struct TrainReport {
    std::vector<double> train_loss; // per epoch (starting at epoch 1)
    std::vector<double> val_loss;   // per epoch (starting at epoch 0 = initial params)
    NetParams best;
    double best_val = 0.0;
    int best_epoch = 0;
    double wall_time_s = 0.0;
    bool diverged = false;
};

/// Adam over the 4T scalars starting from Ω = (1,1,0,1) per layer. Fresh
/// training samples every epoch, fixed validation set, best-on-validation
/// selection with the initial parameters entered as the epoch-0 candidate.
TrainReport adam_train(const SystemConfig &cfg, const TrainConfig &tcfg, Rng &rng);

// --- parameter store ------------------------------------------------------

/// Versioned plain-text format: header `oampnet2-params v1`, one meta line,
/// then T lines `t gamma phi xi theta` (17 significant digits).
void save_params(const std::string &path, const NetParams &params);
NetParams load_params(const std::string &path);

/// Compare a parameter file's training context against the requested config.
/// Mismatches are allowed (robustness experiments) unless `strict`; a
/// layer-count mismatch against cfg.layers is always an error.
void check_params_meta(const NetParams &params, const SystemConfig &cfg, bool strict);

} // namespace mimodet

#endif
