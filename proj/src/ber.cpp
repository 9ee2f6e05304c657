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

#include "mimodet/ber.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include <json.hpp>

#include "mimodet/jcesd.hpp"
#include "mimodet/modem.hpp"

namespace mimodet {

std::pair<double, double> wilson_interval(long long errors, long long trials)
{
    if (trials <= 0)
        return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(center - half, 0.0), std::min(center + half, 1.0)};
}

namespace {

// Errors committed in one perfect-CSI slot: fresh channel, symbol vector and
// noise from the slot's own substream.
int eval_slot(const SystemConfig &cfg, double snr_db, DetectorKind detector,
              const NetParams *params, ChannelKind channel, const Constellation &c,
              const Mat &white_cov, std::uint64_t stream_index)
{
    Rng rng = Rng::substream(cfg.seed, "ber/slot", stream_index);
    const double sigma2 = snr_to_noise_variance(cfg.n_t, cfg.n_r, snr_db);
    const CMat h = draw_channel(cfg.n_r, cfg.n_t, cfg.rho, channel, rng);
    const auto bits = random_bits(cfg.n_t * c.bits_per_symbol(), rng);
    const CVec x = modulate(bits, c);
    CVec noise(cfg.n_r);
    for (int k = 0; k < cfg.n_r; ++k)
        noise[k] = rng.cgaussian(sigma2);
    const Vec y = to_real_vector(h * x + noise);
    const Mat h_real = to_real_matrix(h);

    const DetectionResult res =
        run_detector(detector, y, h_real, white_cov, cfg.layers, params, c);
    int errs = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        errs += bits[i] != res.hard_bits[i];
    return errs;
}

int eval_jcesd_slot(const SystemConfig &cfg, double snr_db, DetectorKind detector,
                    const NetParams *params, const Constellation &c, const CMat &x_p,
                    std::uint64_t stream_index)
{
    Rng rng = Rng::substream(cfg.seed, "jcesd/slot", stream_index);
    SystemConfig run_cfg = cfg;
    run_cfg.snr_db = snr_db;
    const double sigma2 = snr_to_noise_variance(run_cfg);
    const ChannelKind kind =
        cfg.rho > 0.0 ? ChannelKind::kronecker : ChannelKind::iid_rayleigh;
    const CMat h = draw_channel(cfg.n_r, cfg.n_t, cfg.rho, kind, rng);

    CMat y_p = h * x_p;
    for (Eigen::Index col = 0; col < y_p.cols(); ++col)
        for (int row = 0; row < cfg.n_r; ++row)
            y_p(row, col) += rng.cgaussian(sigma2);

    std::vector<std::uint8_t> bits(
        static_cast<std::size_t>(cfg.n_d * cfg.n_t * c.bits_per_symbol()));
    CMat y_d(cfg.n_r, cfg.n_d);
    const int bits_per_col = cfg.n_t * c.bits_per_symbol();
    for (int col = 0; col < cfg.n_d; ++col) {
        std::vector<std::uint8_t> col_bits = random_bits(bits_per_col, rng);
        std::copy(col_bits.begin(), col_bits.end(),
                  bits.begin() + static_cast<std::ptrdiff_t>(col) * bits_per_col);
        const CVec x = modulate(col_bits, c);
        CVec noise(cfg.n_r);
        for (int k = 0; k < cfg.n_r; ++k)
            noise[k] = rng.cgaussian(sigma2);
        y_d.col(col) = h * x + noise;
    }

    const NetParams fallback = NetParams::defaults(cfg.layers);
    const JcesdResult res = jcesd_run(y_p, y_d, x_p, run_cfg, params ? *params : fallback,
                                      detector, false);
    int errs = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        errs += bits[i] != res.bits[i];
    return errs;
}

// Round-based slot streaming: rounds have a fixed slot set, so the stop
// decision (taken between rounds) and the totals are independent of how many
// workers split a round.
template <typename SlotFn>
BerRow stream_slots(double snr_db, long long bits_per_slot, const StopRule &stop,
                    int n_threads, SlotFn slot_fn, std::vector<int> *slot_errors)
{
    const auto t0 = std::chrono::steady_clock::now();
    BerRow row;
    row.snr_db = snr_db;

    const long long slot_cap = stop.max_bits / bits_per_slot;
    long long next_slot = 0;
    long long round_size = 512;
    std::vector<int> round_errs;

    while (row.bit_errors < stop.min_errors && next_slot < slot_cap) {
        const long long n = std::min(round_size, slot_cap - next_slot);
        round_errs.assign(static_cast<std::size_t>(n), 0);

        if (n_threads <= 1) {
            for (long long i = 0; i < n; ++i)
                round_errs[static_cast<std::size_t>(i)] =
                    slot_fn(static_cast<std::uint64_t>(next_slot + i));
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(n_threads));
            for (int w = 0; w < n_threads; ++w)
                pool.emplace_back([&, w] {
                    for (long long i = w; i < n; i += n_threads)
                        round_errs[static_cast<std::size_t>(i)] =
                            slot_fn(static_cast<std::uint64_t>(next_slot + i));
                });
            for (auto &t : pool)
                t.join();
        }

        for (long long i = 0; i < n; ++i)
            row.bit_errors += round_errs[static_cast<std::size_t>(i)];
        row.bits_sent += n * bits_per_slot;
        next_slot += n;
        if (slot_errors != nullptr)
            slot_errors->insert(slot_errors->end(), round_errs.begin(), round_errs.end());
        round_size = std::min<long long>(round_size * 2, 1 << 16);
    }

    row.capped = row.bit_errors < stop.min_errors;
    row.ber = row.bits_sent > 0
                  ? static_cast<double>(row.bit_errors) / static_cast<double>(row.bits_sent)
                  : 0.0;
    std::tie(row.ci_low, row.ci_high) = wilson_interval(row.bit_errors, row.bits_sent);
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

int resolve_threads(int n_threads)
{
    if (n_threads > 0)
        return n_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace

BerReport run_ber(const SystemConfig &cfg, DetectorKind detector, const NetParams *params,
                  const std::vector<double> &snr_list, const StopRule &stop,
                  ChannelKind channel, int n_threads, std::vector<int> *slot_errors)
{
    cfg.validate();
    if (snr_list.empty())
        throw std::invalid_argument("empty SNR list");
    const Constellation c = Constellation::make(cfg.mod_order);
    const int threads = resolve_threads(n_threads);

    BerReport report;
    report.config = cfg;
    report.detector = detector_name(detector);
    report.channel = channel;
    if (params != nullptr)
        report.train_ctx = params->meta;

    const long long bits_per_slot = cfg.n_t * c.bits_per_symbol();
    for (std::size_t s = 0; s < snr_list.size(); ++s) {
        const double snr_db = snr_list[s];
        SystemConfig slot_cfg = cfg;
        slot_cfg.snr_db = snr_db;
        const double sigma2 = snr_to_noise_variance(slot_cfg);
        const Mat white_cov = (0.5 * sigma2) * Mat::Identity(2 * cfg.n_r, 2 * cfg.n_r);
        // Per-SNR slice of the slot index space keeps streams disjoint.
        const std::uint64_t base = static_cast<std::uint64_t>(s) << 40;
        report.rows.push_back(stream_slots(
            snr_db, bits_per_slot, stop, threads,
            [&](std::uint64_t slot) {
                return eval_slot(slot_cfg, snr_db, detector, params, channel, c, white_cov,
                                 base + slot);
            },
            slot_errors));
    }
    return report;
}

BerReport run_jcesd_ber(const SystemConfig &cfg, DetectorKind detector,
                        const NetParams *params, const std::vector<double> &snr_list,
                        const StopRule &stop, int n_threads)
{
    cfg.validate(true);
    if (snr_list.empty())
        throw std::invalid_argument("empty SNR list");
    const Constellation c = Constellation::make(cfg.mod_order);
    const CMat x_p = dft_pilots(cfg.n_t, cfg.n_p);
    const int threads = resolve_threads(n_threads);

    BerReport report;
    report.config = cfg;
    report.detector = detector_name(detector);
    report.jcesd = true;
    if (params != nullptr)
        report.train_ctx = params->meta;

    const long long bits_per_slot =
        static_cast<long long>(cfg.n_d) * cfg.n_t * c.bits_per_symbol();
    for (std::size_t s = 0; s < snr_list.size(); ++s) {
        const double snr_db = snr_list[s];
        const std::uint64_t base = static_cast<std::uint64_t>(s) << 40;
        report.rows.push_back(stream_slots(
            snr_db, bits_per_slot, stop, threads,
            [&](std::uint64_t slot) {
                return eval_jcesd_slot(cfg, snr_db, detector, params, c, x_p, base + slot);
            },
            nullptr));
    }
    return report;
}

void write_results_csv(const std::string &path, const BerReport &report)
{
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (f == nullptr)
        throw std::runtime_error("cannot open " + path + " for writing");
    std::fprintf(f, "detector,snr_db,bits_sent,bit_errors,ber,wilson_ci_low,wilson_ci_high,"
                    "wall_time_s,capped,params_id,train_snr_db,train_rho,train_M,train_nt,"
                    "train_nr,train_T,train_L\n");
    for (const auto &r : report.rows) {
        std::fprintf(f, "%s,%g,%lld,%lld,%.8e,%.8e,%.8e,%.3f,%d,%s", report.detector.c_str(),
                     r.snr_db, r.bits_sent, r.bit_errors, r.ber, r.ci_low, r.ci_high,
                     r.wall_time_s, r.capped ? 1 : 0, report.params_id.c_str());
        if (report.train_ctx.has_value()) {
            const auto &m = *report.train_ctx;
            std::fprintf(f, ",%g,%g,%d,%d,%d,%d,%d", m.snr_db, m.rho, m.mod_order, m.n_t,
                         m.n_r, m.layers, m.turbo_iters);
        } else {
            std::fprintf(f, ",,,,,,,");
        }
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

void write_manifest(const std::string &path, const BerReport &report, const StopRule &stop)
{
    nlohmann::json j;
    j["version"] = "mimodet 1.0.0";
    j["detector"] = report.detector;
    j["jcesd"] = report.jcesd;
    j["params_id"] = report.params_id;
    switch (report.channel) {
    case ChannelKind::iid_rayleigh: j["channel"] = "iid_rayleigh"; break;
    case ChannelKind::kronecker: j["channel"] = "kronecker"; break;
    case ChannelKind::awgn_identity: j["channel"] = "awgn_identity"; break;
    }
    const auto &c = report.config;
    j["config"] = {{"nt", c.n_t}, {"nr", c.n_r}, {"np", c.n_p}, {"nd", c.n_d},
                   {"mod", c.mod_order}, {"rho", c.rho}, {"layers", c.layers},
                   {"turbo_iters", c.turbo_iters}, {"seed", c.seed}};
    j["stop"] = {{"min_errors", stop.min_errors}, {"max_bits", stop.max_bits}};
    if (report.train_ctx.has_value()) {
        const auto &m = *report.train_ctx;
        j["train_context"] = {{"snr_db", m.snr_db}, {"rho", m.rho}, {"M", m.mod_order},
                              {"nt", m.n_t}, {"nr", m.n_r}, {"T", m.layers},
                              {"L", m.turbo_iters}};
    }
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (f == nullptr)
        throw std::runtime_error("cannot open " + path + " for writing");
    const std::string text = j.dump(2);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fprintf(f, "\n");
    std::fclose(f);
}

double snr_at_ber(const std::vector<BerRow> &rows, double target_ber)
{
    const double ly = std::log10(target_ber);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const auto &a = rows[i];
        const auto &b = rows[i + 1];
        if (a.ber <= 0.0 || b.ber <= 0.0)
            continue;
        const double la = std::log10(a.ber);
        const double lb = std::log10(b.ber);
        if ((la >= ly && lb <= ly) || (la <= ly && lb >= ly)) {
            if (la == lb)
                return a.snr_db;
            return a.snr_db + (ly - la) * (b.snr_db - a.snr_db) / (lb - la);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace mimodet
