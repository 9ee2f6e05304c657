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
//
// Command-line front end. Verbs:
//   train     fit OAMP-Net2 layer scalars for one configuration
//   ber       Monte Carlo BER over an SNR list (perfect CSI)
//   sweep     BER for several detectors on a shared grid
//   jcesd     BER through the turbo estimation/detection loop
//   mismatch  evaluate a trained parameter file out of context
//   selftest  quick invariant checks
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical abort.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mimodet/ber.hpp"
#include "mimodet/jcesd.hpp"
#include "mimodet/train.hpp"

namespace {

using namespace mimodet;

struct CommonOpts {
    SystemConfig cfg;
    std::vector<double> snr;
    std::string detector = "oamp";
    std::string params_path;
    std::string out_dir = ".";
    std::string channel = "rayleigh";
    long long min_errors = 10000;
    long long max_bits = 100000000;
    int threads = 0;
    bool trace = false;
};

void add_system_flags(CLI::App *app, CommonOpts &o)
{
    app->add_option("--nt", o.cfg.n_t, "transmit antennas");
    app->add_option("--nr", o.cfg.n_r, "receive antennas");
    app->add_option("--np", o.cfg.n_p, "pilot vectors per slot");
    app->add_option("--nd", o.cfg.n_d, "data vectors per slot");
    app->add_option("--mod", o.cfg.mod_order, "constellation size")
        ->check(CLI::IsMember({4, 16, 64}));
    app->add_option("--rho", o.cfg.rho, "exponential correlation coefficient");
    app->add_option("--layers", o.cfg.layers, "unfolding depth T");
    app->add_option("--turbo,-L", o.cfg.turbo_iters, "JCESD iterations L");
    app->add_option("--seed", o.cfg.seed, "master RNG seed");
    app->add_option("--out", o.out_dir, "output directory");
}

void add_ber_flags(CLI::App *app, CommonOpts &o)
{
    app->add_option("--snr", o.snr, "SNR grid in dB")->required()->delimiter(',');
    app->add_option("--detector", o.detector, "lmmse|oamp|oampnet2|ml")
        ->check(CLI::IsMember({"lmmse", "oamp", "oampnet2", "ml"}));
    app->add_option("--params", o.params_path, "parameter file for oampnet2");
    app->add_option("--min-errors", o.min_errors, "bit errors per SNR point");
    app->add_option("--max-bits", o.max_bits, "bit cap per SNR point");
    app->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    app->add_flag("--trace", o.trace, "dump trajectory.csv for the first slot");
}

ChannelKind channel_from(const std::string &name)
{
    if (name == "rayleigh")
        return ChannelKind::iid_rayleigh;
    if (name == "kronecker")
        return ChannelKind::kronecker;
    if (name == "awgn")
        return ChannelKind::awgn_identity;
    throw CLI::ValidationError("--channel", "unknown channel '" + name + "'");
}

ChannelKind effective_channel(const CommonOpts &o)
{
    if (o.channel == "rayleigh" && o.cfg.rho > 0.0)
        return ChannelKind::kronecker;
    return channel_from(o.channel);
}

void emit(const CommonOpts &o, const BerReport &report, const StopRule &stop)
{
    std::filesystem::create_directories(o.out_dir);
    write_results_csv(o.out_dir + "/results.csv", report);
    write_manifest(o.out_dir + "/manifest.json", report, stop);
    for (const auto &r : report.rows)
        std::printf("%-9s snr=%6.2f dB  bits=%-10lld errors=%-7lld ber=%.4e  "
                    "ci=[%.3e, %.3e]%s\n",
                    report.detector.c_str(), r.snr_db, r.bits_sent, r.bit_errors, r.ber,
                    r.ci_low, r.ci_high, r.capped ? "  (capped)" : "");
}

void dump_trace(const CommonOpts &o, ChannelKind kind)
{
    const Constellation c = Constellation::make(o.cfg.mod_order);
    SystemConfig cfg = o.cfg;
    cfg.snr_db = o.snr.front();
    Rng rng = Rng::substream(cfg.seed, "ber/slot", 0);
    const double sigma2 = snr_to_noise_variance(cfg);
    const CMat h = draw_channel(cfg.n_r, cfg.n_t, cfg.rho, kind, rng);
    const auto bits = random_bits(cfg.n_t * c.bits_per_symbol(), rng);
    CVec noise(cfg.n_r);
    for (int k = 0; k < cfg.n_r; ++k)
        noise[k] = rng.cgaussian(sigma2);
    const Vec y = to_real_vector(h * modulate(bits, c) + noise);
    const Mat white = (0.5 * sigma2) * Mat::Identity(2 * cfg.n_r, 2 * cfg.n_r);

    NetParams params = NetParams::defaults(cfg.layers);
    if (!o.params_path.empty())
        params = load_params(o.params_path);
    const DetectionResult res = run_detector(detector_from_name(o.detector), y,
                                             to_real_matrix(h), white, cfg.layers,
                                             &params, c);
    std::FILE *f = std::fopen((o.out_dir + "/trajectory.csv").c_str(), "w");
    if (f == nullptr)
        throw std::runtime_error("cannot open trajectory.csv");
    std::fprintf(f, "layer,v2,tau2");
    for (Eigen::Index i = 0; i < 2 * cfg.n_t; ++i)
        std::fprintf(f, ",x%ld", static_cast<long>(i));
    std::fprintf(f, "\n");
    for (std::size_t t = 0; t < res.trajectory.size(); ++t) {
        const auto &tr = res.trajectory[t];
        std::fprintf(f, "%zu,%.17g,%.17g", t + 1, tr.v2, tr.tau2);
        for (Eigen::Index i = 0; i < tr.x_hat.size(); ++i)
            std::fprintf(f, ",%.17g", tr.x_hat[i]);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

int cmd_train(CommonOpts &o, double snr, int epochs, int samples, int val_size, double lr,
              bool full_schedule, bool jcesd_loss, const std::string &params_out)
{
    o.cfg.snr_db = snr;
    o.cfg.validate(jcesd_loss);
    TrainConfig tcfg = full_schedule ? paper_schedule(snr) : desk_schedule(snr, epochs, samples);
    if (samples > 0)
        tcfg.samples_per_epoch = samples;
    if (epochs > 0)
        tcfg.epochs = epochs;
    if (val_size > 0)
        tcfg.validation_size = val_size;
    if (lr > 0.0)
        tcfg.learning_rate = lr;
    if (jcesd_loss) {
        tcfg.csi_mode = CsiMode::estimated;
        tcfg.loss_mode = LossMode::sum_layers;
        if (lr <= 0.0)
            tcfg.learning_rate = 1e-4;
    }
    std::filesystem::create_directories(o.out_dir);
    tcfg.log_path = o.out_dir + "/training_log.csv";

    Rng rng(o.cfg.seed);
    const TrainReport rep = adam_train(o.cfg, tcfg, rng);
    const std::string path = params_out.empty()
                                 ? o.out_dir + "/params.txt"
                                 : params_out;
    save_params(path, rep.best);
    std::printf("trained %d layers at snr=%g dB: val %.6g -> %.6g (best epoch %d, %.1f s)%s\n",
                o.cfg.layers, snr, rep.val_loss.front(), rep.best_val, rep.best_epoch,
                rep.wall_time_s, rep.diverged ? "  [diverged, best kept]" : "");
    std::printf("params written to %s\n", path.c_str());
    return 0;
}

int run_selftest();

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"mimodet — MIMO detection workbench"};
    app.require_subcommand(1);

    CommonOpts o;

    auto *ber_cmd = app.add_subcommand("ber", "Monte Carlo BER, perfect CSI");
    add_system_flags(ber_cmd, o);
    add_ber_flags(ber_cmd, o);
    ber_cmd->add_option("--channel", o.channel, "rayleigh|kronecker|awgn");

    auto *sweep_cmd = app.add_subcommand("sweep", "BER grid for several detectors");
    add_system_flags(sweep_cmd, o);
    add_ber_flags(sweep_cmd, o);
    sweep_cmd->add_option("--channel", o.channel, "rayleigh|kronecker|awgn");
    std::vector<std::string> sweep_detectors{"lmmse", "oamp"};
    sweep_cmd->add_option("--detectors", sweep_detectors, "detector list")->delimiter(',');

    auto *jcesd_cmd = app.add_subcommand("jcesd", "BER through the turbo loop");
    add_system_flags(jcesd_cmd, o);
    add_ber_flags(jcesd_cmd, o);

    auto *mis_cmd = app.add_subcommand("mismatch", "evaluate params out of context");
    add_system_flags(mis_cmd, o);
    add_ber_flags(mis_cmd, o);
    mis_cmd->add_option("--channel", o.channel, "rayleigh|kronecker|awgn");

    auto *train_cmd = app.add_subcommand("train", "fit layer scalars");
    add_system_flags(train_cmd, o);
    double train_snr = 10.0;
    int train_epochs = 0, train_samples = 0, train_val = 0;
    double train_lr = 0.0;
    bool full_schedule = false, jcesd_loss = false;
    std::string params_out;
    train_cmd->add_option("--snr", train_snr, "training SNR in dB")->required();
    train_cmd->add_option("--epochs", train_epochs, "epochs (0 = schedule default)");
    train_cmd->add_option("--samples", train_samples, "samples per epoch");
    train_cmd->add_option("--val-size", train_val, "validation set size");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_flag("--full-schedule", full_schedule,
                        "published schedule: 1000 epochs x 5000 samples");
    train_cmd->add_flag("--jcesd-loss", jcesd_loss,
                        "estimated CSI, summed loss over all LxT layers");
    train_cmd->add_option("--params-out", params_out, "parameter file path");

    auto *self_cmd = app.add_subcommand("selftest", "quick invariant checks");
    self_cmd->add_option("--seed", o.cfg.seed, "master RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        StopRule stop{o.min_errors, o.max_bits};

        if (app.got_subcommand(train_cmd))
            return cmd_train(o, train_snr, train_epochs, train_samples, train_val, train_lr,
                             full_schedule, jcesd_loss, params_out);

        if (app.got_subcommand(self_cmd))
            return run_selftest();

        NetParams params;
        bool have_params = false;
        if (!o.params_path.empty()) {
            params = load_params(o.params_path);
            have_params = true;
            SystemConfig check_cfg = o.cfg;
            check_cfg.snr_db = o.snr.front();
            check_params_meta(params, check_cfg, false);
            o.cfg.layers = params.depth();
        }

        if (app.got_subcommand(ber_cmd) || app.got_subcommand(mis_cmd)) {
            if (app.got_subcommand(mis_cmd) && !have_params) {
                std::fprintf(stderr, "mimodet: mismatch requires --params\n");
                return 2;
            }
            const ChannelKind kind = effective_channel(o);
            BerReport rep = run_ber(o.cfg, detector_from_name(o.detector),
                                    have_params ? &params : nullptr, o.snr, stop, kind,
                                    o.threads);
            rep.params_id = have_params ? o.params_path : "default";
            emit(o, rep, stop);
            if (o.trace)
                dump_trace(o, kind);
            return 0;
        }

        if (app.got_subcommand(sweep_cmd)) {
            std::filesystem::create_directories(o.out_dir);
            const ChannelKind kind = effective_channel(o);
            for (const auto &name : sweep_detectors) {
                BerReport rep = run_ber(o.cfg, detector_from_name(name),
                                        have_params && name == "oampnet2" ? &params : nullptr,
                                        o.snr, stop, kind, o.threads);
                rep.params_id = have_params && name == "oampnet2" ? o.params_path : "default";
                write_results_csv(o.out_dir + "/results_" + name + ".csv", rep);
                write_manifest(o.out_dir + "/manifest_" + name + ".json", rep, stop);
                for (const auto &r : rep.rows)
                    std::printf("%-9s snr=%6.2f dB  ber=%.4e%s\n", name.c_str(), r.snr_db,
                                r.ber, r.capped ? "  (capped)" : "");
            }
            return 0;
        }

        if (app.got_subcommand(jcesd_cmd)) {
            BerReport rep = run_jcesd_ber(o.cfg, detector_from_name(o.detector),
                                          have_params ? &params : nullptr, o.snr, stop,
                                          o.threads);
            rep.params_id = have_params ? o.params_path : "default";
            emit(o, rep, stop);
            return 0;
        }
    } catch (const NumericalError &e) {
        std::fprintf(stderr, "mimodet: numerical abort: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument &e) {
        std::fprintf(stderr, "mimodet: config error: %s\n", e.what());
        return 2;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "mimodet: error: %s\n", e.what());
        return 2;
    }
    return 0;
}

namespace {

int run_selftest()
{
    using namespace mimodet;
    int failures = 0;
    auto check = [&](bool ok, const char *name) {
        std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
        failures += ok ? 0 : 1;
    };

    // Real-equivalent isomorphism.
    {
        Rng rng(7);
        bool ok = true;
        for (int i = 0; i < 200 && ok; ++i) {
            const CMat h = gen_iid_rayleigh(4, 4, rng);
            CVec x(4), n(4);
            for (int k = 0; k < 4; ++k) {
                x[k] = rng.cgaussian(1.0);
                n[k] = rng.cgaussian(0.1);
            }
            const CVec y = h * x + n;
            const RealSystem rs = complex_to_real(h, y, 0.1 * CMat::Identity(4, 4));
            ok = std::abs((y - h * x).norm() -
                          (rs.y_real - rs.h_real * to_real_vector(x)).norm()) < 1e-10;
        }
        check(ok, "real-equivalent residual isomorphism");
    }

    // De-correlation of W.
    {
        Rng rng(8);
        bool ok = true;
        for (int i = 0; i < 100 && ok; ++i) {
            const Mat h = to_real_matrix(gen_iid_rayleigh(4, 4, rng));
            const Mat r = 0.05 * Mat::Identity(8, 8);
            const BuildW bw = build_w(h, 0.3 + rng.uniform(), r);
            ok = std::abs(8.0 - (bw.w * h).trace()) < 1e-9;
        }
        check(ok, "tr(I - W H) = 0 after scaling");
    }

    // OAMP-Net2 with default parameters reproduces OAMP.
    {
        Rng rng(9);
        const Constellation c = Constellation::make(4);
        bool ok = true;
        for (int i = 0; i < 50 && ok; ++i) {
            const CMat h = gen_iid_rayleigh(4, 4, rng);
            const auto bits = random_bits(8, rng);
            CVec n(4);
            for (int k = 0; k < 4; ++k)
                n[k] = rng.cgaussian(0.1);
            const Vec y = to_real_vector(h * modulate(bits, c) + n);
            const Mat hr = to_real_matrix(h);
            const Mat rc = 0.05 * Mat::Identity(8, 8);
            const auto a = oamp_detect(y, hr, rc, 4, c);
            const auto b = oampnet2_detect(y, hr, rc, NetParams::defaults(4), c);
            for (std::size_t t = 0; t < 4; ++t)
                ok = ok &&
                     (a.trajectory[t].x_hat - b.trajectory[t].x_hat).cwiseAbs().maxCoeff() <
                         1e-12;
        }
        check(ok, "OAMP-Net2(default) == OAMP trajectories");
    }

    // Denoiser moment identity against direct enumeration.
    {
        Rng rng(10);
        const Constellation c = Constellation::make(16);
        bool ok = true;
        for (int i = 0; i < 2000 && ok; ++i) {
            const double r = 3.0 * rng.gaussian();
            const double tau2 = 0.01 + 2.0 * rng.uniform();
            const SoftSymbol s = mmse_denoise(r, tau2, c);
            double z = 0, m1 = 0, m2 = 0;
            for (int k = 0; k < c.levels(); ++k) {
                const double a = c.amp(k);
                const double w = std::exp(-(r - a) * (r - a) / tau2) / c.levels();
                z += w;
                m1 += w * a;
                m2 += w * a * a;
            }
            ok = std::abs(s.mean - m1 / z) < 1e-10 &&
                 std::abs(s.var - (m2 / z - (m1 / z) * (m1 / z))) < 1e-10;
        }
        check(ok, "denoiser moment identity");
    }

    std::printf("%s\n", failures == 0 ? "selftest ok" : "selftest FAILED");
    return failures == 0 ? 0 : 1;
}

} // namespace
