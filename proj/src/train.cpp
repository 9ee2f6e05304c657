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

#include "mimodet/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mimodet/jcesd.hpp"

namespace mimodet {

std::vector<Sample> gen_dataset(const SystemConfig &cfg, int n, Rng &rng, CsiMode mode)
{
    cfg.validate(mode == CsiMode::estimated);
    if (n < 1)
        throw std::invalid_argument("dataset size must be >= 1");

    const Constellation c = Constellation::make(cfg.mod_order);
    const double sigma2 = snr_to_noise_variance(cfg);
    const ChannelKind kind = cfg.rho > 0.0 ? ChannelKind::kronecker : ChannelKind::iid_rayleigh;
    const Mat white_cov =
        (0.5 * sigma2) * Mat::Identity(2 * cfg.n_r, 2 * cfg.n_r);

    CMat x_p;
    CMat r_hh;
    if (mode == CsiMode::estimated) {
        x_p = dft_pilots(cfg.n_t, cfg.n_p);
        r_hh = default_channel_prior(cfg.n_r, cfg.n_t, cfg.rho);
    }

    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Sample s;
        const CMat h = draw_channel(cfg.n_r, cfg.n_t, cfg.rho, kind, rng);
        const auto bits = random_bits(cfg.n_t * c.bits_per_symbol(), rng);
        const CVec x = modulate(bits, c);
        CVec noise(cfg.n_r);
        for (int k = 0; k < cfg.n_r; ++k)
            noise[k] = rng.cgaussian(sigma2);
        const CVec y = h * x + noise;

        s.x_true = to_real_vector(x);
        s.y = to_real_vector(y);
        if (mode == CsiMode::perfect) {
            s.h = to_real_matrix(h);
            s.noise_cov = white_cov;
        } else {
            CMat y_pilot = h * x_p;
            for (int col = 0; col < cfg.n_p; ++col)
                for (int row = 0; row < cfg.n_r; ++row)
                    y_pilot(row, col) += rng.cgaussian(sigma2);
            const ChannelEstimate est = lmmse_pilot_estimate(y_pilot, x_p, r_hh, sigma2);
            s.h_est = est.h_hat;
            s.h_err_var = est.per_entry_err_var;
            s.v_est = detection_noise_cov(est, sigma2);
            s.h = to_real_matrix(est.matrix());
            s.noise_cov = real_noise_cov_diag(s.v_est);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SlotSample> gen_slot_dataset(const SystemConfig &cfg, int n, Rng &rng)
{
    cfg.validate(true);
    const Constellation c = Constellation::make(cfg.mod_order);
    const double sigma2 = snr_to_noise_variance(cfg);
    const ChannelKind kind = cfg.rho > 0.0 ? ChannelKind::kronecker : ChannelKind::iid_rayleigh;
    const CMat x_p = dft_pilots(cfg.n_t, cfg.n_p);

    std::vector<SlotSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SlotSample s;
        const CMat h = draw_channel(cfg.n_r, cfg.n_t, cfg.rho, kind, rng);
        s.y_p = h * x_p;
        for (Eigen::Index col = 0; col < s.y_p.cols(); ++col)
            for (int row = 0; row < cfg.n_r; ++row)
                s.y_p(row, col) += rng.cgaussian(sigma2);

        s.y_d.resize(cfg.n_r, cfg.n_d);
        s.x_real_cols.resize(2 * cfg.n_t, cfg.n_d);
        for (int col = 0; col < cfg.n_d; ++col) {
            const auto bits = random_bits(cfg.n_t * c.bits_per_symbol(), rng);
            const CVec x = modulate(bits, c);
            CVec noise(cfg.n_r);
            for (int k = 0; k < cfg.n_r; ++k)
                noise[k] = rng.cgaussian(sigma2);
            s.y_d.col(col) = h * x + noise;
            s.x_real_cols.col(col) = to_real_vector(x);
        }
        out.push_back(std::move(s));
    }
    return out;
}

double l2_loss(const std::vector<Sample> &batch, std::size_t first, std::size_t count,
               const NetParams &params, const Constellation &c, LossMode mode)
{
    if (count == 0 || first + count > batch.size())
        throw std::invalid_argument("l2_loss: empty or out-of-range batch");
    double total = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        const Sample &s = batch[i];
        const DetectionResult res = oampnet2_detect(s.y, s.h, s.noise_cov, params, c);
        if (mode == LossMode::final_layer) {
            total += (s.x_true - res.trajectory.back().x_hat).squaredNorm();
        } else {
            for (const auto &tr : res.trajectory)
                total += (s.x_true - tr.x_hat).squaredNorm();
        }
    }
    return total / static_cast<double>(count);
}

double l2_loss(const std::vector<Sample> &batch, const NetParams &params,
               const Constellation &c, LossMode mode)
{
    return l2_loss(batch, 0, batch.size(), params, c, mode);
}

double l2_loss_jcesd(const std::vector<SlotSample> &batch, std::size_t first,
                     std::size_t count, const CMat &x_p, const SystemConfig &cfg,
                     const NetParams &params, const Constellation &c)
{
    (void)c;
    if (count == 0 || first + count > batch.size())
        throw std::invalid_argument("l2_loss_jcesd: empty or out-of-range batch");
    double total = 0.0;
    long long vectors = 0;
    for (std::size_t i = first; i < first + count; ++i) {
        const SlotSample &s = batch[i];
        const JcesdResult res =
            jcesd_run(s.y_p, s.y_d, x_p, cfg, params, DetectorKind::oampnet2, true);
        for (std::size_t l = 0; l < res.layer_outputs.size(); ++l)
            for (int col = 0; col < cfg.n_d; ++col)
                for (const Vec &x_hat : res.layer_outputs[l][static_cast<std::size_t>(col)])
                    total += (s.x_real_cols.col(col) - x_hat).squaredNorm();
        vectors += cfg.n_d;
    }
    return total / static_cast<double>(vectors);
}

Vec flatten(const NetParams &params)
{
    Vec v(4 * params.depth());
    for (int t = 0; t < params.depth(); ++t) {
        const auto &lp = params.layers[static_cast<std::size_t>(t)];
        v[4 * t + 0] = lp.gamma;
        v[4 * t + 1] = lp.phi;
        v[4 * t + 2] = lp.xi;
        v[4 * t + 3] = lp.theta;
    }
    return v;
}

NetParams unflatten(const Vec &v, const ParamsMeta &meta)
{
    if (v.size() % 4 != 0 || v.size() == 0)
        throw std::invalid_argument("parameter vector length must be a positive multiple of 4");
    NetParams p;
    p.meta = meta;
    const int depth = static_cast<int>(v.size()) / 4;
    p.meta.layers = depth;
    p.layers.resize(static_cast<std::size_t>(depth));
    for (int t = 0; t < depth; ++t) {
        auto &lp = p.layers[static_cast<std::size_t>(t)];
        lp.gamma = v[4 * t + 0];
        lp.phi = v[4 * t + 1];
        lp.xi = v[4 * t + 2];
        lp.theta = v[4 * t + 3];
    }
    return p;
}

Vec fd_gradient(const std::function<double(const NetParams &)> &loss_fn,
                const NetParams &params, double fd_step)
{
    const Vec base = flatten(params);
    Vec grad(base.size());
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        double h = fd_step * std::max(std::abs(base[i]), 1.0);
        for (int attempt = 0;; ++attempt) {
            Vec up = base, dn = base;
            up[i] += h;
            dn[i] -= h;
            const double lu = loss_fn(unflatten(up, params.meta));
            const double ld = loss_fn(unflatten(dn, params.meta));
            if (std::isfinite(lu) && std::isfinite(ld)) {
                grad[i] = (lu - ld) / (2.0 * h);
                break;
            }
            if (attempt == 1)
                throw std::runtime_error("fd_gradient: non-finite loss at probe " +
                                         std::to_string(i));
            h /= 10.0;
        }
    }
    return grad;
}

TrainConfig paper_schedule(double snr_db)
{
    TrainConfig t;
    t.epochs = 1000;
    t.samples_per_epoch = 5000;
    t.batch_size = 100;
    if (snr_db >= 30.0) {
        t.validation_size = 10000;
        t.learning_rate = 1e-4;
    } else {
        t.validation_size = 1000;
        t.learning_rate = 1e-3;
    }
    return t;
}

TrainConfig desk_schedule(double snr_db, int epochs, int samples_per_epoch)
{
    TrainConfig t = paper_schedule(snr_db);
    t.epochs = epochs;
    t.samples_per_epoch = samples_per_epoch;
    t.validation_size = 1000;
    return t;
}

namespace {

ParamsMeta meta_from(const SystemConfig &cfg)
{
    ParamsMeta m;
    m.snr_db = cfg.snr_db;
    m.rho = cfg.rho;
    m.mod_order = cfg.mod_order;
    m.n_t = cfg.n_t;
    m.n_r = cfg.n_r;
    m.layers = cfg.layers;
    m.turbo_iters = cfg.turbo_iters;
    return m;
}

} // namespace

TrainReport adam_train(const SystemConfig &cfg, const TrainConfig &tcfg, Rng &rng)
{
    cfg.validate(tcfg.csi_mode == CsiMode::estimated);
    if (tcfg.epochs < 0 || tcfg.samples_per_epoch < tcfg.batch_size || tcfg.batch_size < 1 ||
        tcfg.validation_size < 1 || tcfg.learning_rate < 0.0 || tcfg.fd_step <= 0.0)
        throw std::invalid_argument("bad TrainConfig");
    const std::uint64_t train_seed = rng.next_u64();

    const auto t_start = std::chrono::steady_clock::now();
    const Constellation c = Constellation::make(cfg.mod_order);
    const bool jcesd_mode = tcfg.csi_mode == CsiMode::estimated &&
                            tcfg.loss_mode == LossMode::sum_layers;
    const CMat x_p = jcesd_mode ? dft_pilots(cfg.n_t, cfg.n_p) : CMat();

    // Fixed validation set; fresh training set every epoch.
    Rng val_rng = Rng::substream(train_seed, "train/val");
    std::vector<Sample> val_vec;
    std::vector<SlotSample> val_slots;
    if (jcesd_mode)
        val_slots = gen_slot_dataset(cfg, tcfg.validation_size, val_rng);
    else
        val_vec = gen_dataset(cfg, tcfg.validation_size, val_rng, tcfg.csi_mode);

    auto val_loss_of = [&](const NetParams &p) {
        return jcesd_mode
                   ? l2_loss_jcesd(val_slots, 0, val_slots.size(), x_p, cfg, p, c)
                   : l2_loss(val_vec, p, c, tcfg.loss_mode);
    };

    NetParams params = NetParams::defaults(cfg.layers);
    params.meta = meta_from(cfg);

    TrainReport report;
    report.best = params;
    report.best_val = val_loss_of(params);
    report.best_epoch = 0;
    report.val_loss.push_back(report.best_val);
    const double initial_val = report.best_val;

    std::FILE *log = nullptr;
    if (!tcfg.log_path.empty()) {
        log = std::fopen(tcfg.log_path.c_str(), "w");
        if (log == nullptr)
            throw std::runtime_error("cannot open training log " + tcfg.log_path);
        std::fprintf(log, "epoch,train_loss,val_loss,seconds\n");
        std::fprintf(log, "0,,%.*g,0.000\n", 17, initial_val);
    }

    Vec x = flatten(params);
    Vec m = Vec::Zero(x.size());
    Vec v = Vec::Zero(x.size());
    long long step = 0;
    int bad_epochs = 0;

    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        Rng epoch_rng = Rng::substream(train_seed, "train/epoch", static_cast<std::uint64_t>(epoch));
        std::vector<Sample> train_vec;
        std::vector<SlotSample> train_slots;
        if (jcesd_mode)
            train_slots = gen_slot_dataset(cfg, tcfg.samples_per_epoch, epoch_rng);
        else
            train_vec = gen_dataset(cfg, tcfg.samples_per_epoch, epoch_rng, tcfg.csi_mode);

        const int n_batches = tcfg.samples_per_epoch / tcfg.batch_size;
        double epoch_loss = 0.0;
        for (int b = 0; b < n_batches; ++b) {
            const std::size_t first = static_cast<std::size_t>(b) * tcfg.batch_size;
            auto batch_loss = [&](const NetParams &p) {
                return jcesd_mode
                           ? l2_loss_jcesd(train_slots, first, tcfg.batch_size, x_p, cfg, p, c)
                           : l2_loss(train_vec, first, tcfg.batch_size, p, c, tcfg.loss_mode);
            };

            const double base = batch_loss(params);
            if (b == 0 && batch_loss(params) != base)
                throw std::runtime_error("common-random-numbers violated: loss not "
                                         "deterministic for a fixed batch");
            epoch_loss += base;

            const Vec grad = fd_gradient(batch_loss, params, tcfg.fd_step);
            ++step;
            m = tcfg.beta1 * m + (1.0 - tcfg.beta1) * grad;
            v = tcfg.beta2 * v + (1.0 - tcfg.beta2) * grad.cwiseProduct(grad);
            const double mc = 1.0 - std::pow(tcfg.beta1, static_cast<double>(step));
            const double vc = 1.0 - std::pow(tcfg.beta2, static_cast<double>(step));
            x -= tcfg.learning_rate *
                 ((m / mc).array() / ((v / vc).array().sqrt() + tcfg.adam_eps)).matrix();
            params = unflatten(x, params.meta);
        }
        epoch_loss /= std::max(n_batches, 1);

        const double val = val_loss_of(params);
        report.train_loss.push_back(epoch_loss);
        report.val_loss.push_back(val);
        if (val < report.best_val) {
            report.best_val = val;
            report.best = params;
            report.best_epoch = epoch;
        }
        if (log != nullptr) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                    .count();
            std::fprintf(log, "%d,%.*g,%.*g,%.3f\n", epoch, 17, epoch_loss, 17, val, secs);
        }

        bad_epochs = val > 10.0 * initial_val ? bad_epochs + 1 : 0;
        if (bad_epochs >= 3) {
            report.diverged = true;
            break;
        }
    }

    if (log != nullptr)
        std::fclose(log);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

} // namespace mimodet
