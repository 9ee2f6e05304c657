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

#include "mimodet/detect.hpp"

#include <cmath>
#include <stdexcept>

namespace mimodet {

namespace {

Eigen::LDLT<Mat> robust_ldlt(const Mat &a)
{
    Eigen::LDLT<Mat> ldlt(a);
    const Vec d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (ldlt.info() == Eigen::Success && d.minCoeff() > 1e-13 * dmax)
        return ldlt;
    Mat aj = a;
    aj.diagonal().array() += 1e-12 * std::max(a.trace() / static_cast<double>(a.rows()), 1e-300);
    return Eigen::LDLT<Mat>(aj);
}

void check_finite(double v, int layer, const char *what)
{
    if (!std::isfinite(v))
        throw NumericalError(layer, what);
}

void check_finite(const Vec &v, int layer, const char *what)
{
    if (!v.allFinite())
        throw NumericalError(layer, what);
}

// Shared tail of every denoising step.
void apply_denoiser(DetectorState &st, const Constellation &c, double phi, double xi)
{
    const Eigen::Index n = st.r.size();
    st.post_mean.resize(n);
    st.per_symbol_var.resize(n);
    st.x_hat.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const SoftSymbol s = mmse_denoise(st.r[i], 2.0 * st.tau2, c);
        st.post_mean[i] = s.mean;
        st.per_symbol_var[i] = s.var;
        st.x_hat[i] = phi * (s.mean - xi * st.r[i]);
    }
}

// LLRs, bit decisions and symbol indices from the final (r, τ²).
void fill_soft_outputs(DetectionResult &res, const DetectorState &st, const Constellation &c)
{
    const int n_t = static_cast<int>(st.r.size()) / 2;
    const int bpd = c.bits_per_dim();
    res.posterior_means = st.post_mean;
    res.posterior_vars = st.per_symbol_var;
    res.llrs.resize(2 * n_t * bpd);
    res.hard_bits.resize(static_cast<std::size_t>(2 * n_t * bpd));
    res.hard_symbols.resize(static_cast<std::size_t>(n_t));

    double bit_llr[8];
    for (int j = 0; j < n_t; ++j) {
        std::uint32_t gray[2] = {0, 0};
        for (int half = 0; half < 2; ++half) {
            const int dim = half == 0 ? j : n_t + j; // I then Q
            llr(st.r[dim], 2.0 * st.tau2, c, bit_llr);
            for (int b = 0; b < bpd; ++b) {
                const int k = j * 2 * bpd + half * bpd + b;
                res.llrs[k] = bit_llr[b];
                const std::uint8_t bit = bit_llr[b] > 0.0 ? 1 : 0;
                res.hard_bits[static_cast<std::size_t>(k)] = bit;
                gray[half] = (gray[half] << 1) | bit;
            }
        }
        res.hard_symbols[static_cast<std::size_t>(j)] =
            c.level_from_gray(gray[0]) * c.levels() + c.level_from_gray(gray[1]);
    }
}

} // namespace

NetParams NetParams::defaults(int depth)
{
    if (depth < 1)
        throw std::invalid_argument("depth must be >= 1");
    NetParams p;
    p.layers.assign(static_cast<std::size_t>(depth), LayerParams{});
    p.meta.layers = depth;
    return p;
}

double estimate_error_variance(const Vec &y, const Mat &h, const Mat &noise_cov,
                               const Vec &x_hat)
{
    const double num = (y - h * x_hat).squaredNorm() - noise_cov.trace();
    const double den = h.squaredNorm(); // tr(HᵀH)
    return std::max(num / den, kVarFloor);
}

BuildW build_w(const Mat &h, double v2, const Mat &noise_cov)
{
    const Eigen::Index n2t = h.cols();
    Mat a = v2 * (h * h.transpose()) + noise_cov;
    Mat what_t = robust_ldlt(a).solve(h) * v2; // (A⁻¹H)·v², so Ŵ = what_tᵀ
    const double tr_wh = what_t.cwiseProduct(h).sum();
    if (tr_wh <= 1e-14)
        throw std::runtime_error("build_w: degenerate channel, tr(W·H) ~ 0");
    BuildW out;
    out.tr_what_h = tr_wh;
    out.w = (static_cast<double>(n2t) / tr_wh) * what_t.transpose();
    return out;
}

DetectorState oamp_step(const DetectorState &state, const Vec &y, const Mat &h, const Mat &w,
                        const Mat &noise_cov, const Constellation &c)
{
    const Eigen::Index n2t = h.cols();
    DetectorState st;
    const Vec z = y - h * state.x_hat;
    st.v2 = estimate_error_variance(y, h, noise_cov, state.x_hat);
    st.r = state.x_hat + w * z;
    Mat b = -w * h;
    b.diagonal().array() += 1.0;
    st.tau2 = std::max((b.squaredNorm() * st.v2 + (w * noise_cov).cwiseProduct(w).sum()) /
                           static_cast<double>(n2t),
                       kVarFloor);
    apply_denoiser(st, c, 1.0, 0.0);
    return st;
}

DetectorState oampnet2_step(const DetectorState &state, const Vec &y, const Mat &h,
                            const Mat &w, const Mat &noise_cov, const LayerParams &lp,
                            const Constellation &c)
{
    const Eigen::Index n2t = h.cols();
    DetectorState st;
    const Vec z = y - h * state.x_hat;
    st.v2 = estimate_error_variance(y, h, noise_cov, state.x_hat);
    st.r = state.x_hat + lp.gamma * (w * z);
    Mat ct = -lp.theta * (w * h);
    ct.diagonal().array() += 1.0;
    st.tau2 = std::max((ct.squaredNorm() * st.v2 +
                        lp.theta * lp.theta * (w * noise_cov).cwiseProduct(w).sum()) /
                           static_cast<double>(n2t),
                       kVarFloor);
    apply_denoiser(st, c, lp.phi, lp.xi);
    return st;
}

namespace {

template <typename StepFn>
DetectionResult iterate_layers(const Vec &y, const Mat &h, const Mat &noise_cov, int layers,
                               const Constellation &c, StepFn step)
{
    if (layers < 1)
        throw std::invalid_argument("layer count must be >= 1");
    if (y.size() != h.rows() || noise_cov.rows() != h.rows() || noise_cov.cols() != h.rows())
        throw std::invalid_argument("detector input dimension mismatch");

    DetectorState st;
    st.x_hat = Vec::Zero(h.cols());
    st.tau2 = 1.0;

    DetectionResult res;
    res.trajectory.reserve(static_cast<std::size_t>(layers));
    for (int t = 0; t < layers; ++t) {
        const double v2 = estimate_error_variance(y, h, noise_cov, st.x_hat);
        const BuildW bw = build_w(h, v2, noise_cov);
        st = step(st, bw.w, t);
        check_finite(st.v2, t + 1, "v2");
        check_finite(st.tau2, t + 1, "tau2");
        check_finite(st.r, t + 1, "r");
        check_finite(st.x_hat, t + 1, "x_hat");
        res.trajectory.push_back({st.x_hat, st.v2, st.tau2});
    }
    fill_soft_outputs(res, st, c);
    return res;
}

} // namespace

DetectionResult oamp_detect(const Vec &y, const Mat &h, const Mat &noise_cov, int layers,
                            const Constellation &c)
{
    return iterate_layers(y, h, noise_cov, layers, c,
                          [&](const DetectorState &st, const Mat &w, int) {
                              return oamp_step(st, y, h, w, noise_cov, c);
                          });
}

DetectionResult oampnet2_detect(const Vec &y, const Mat &h, const Mat &noise_cov,
                                const NetParams &params, const Constellation &c)
{
    if (params.depth() < 1)
        throw std::invalid_argument("NetParams must contain at least one layer");
    return iterate_layers(y, h, noise_cov, params.depth(), c,
                          [&](const DetectorState &st, const Mat &w, int t) {
                              return oampnet2_step(st, y, h, w, noise_cov,
                                                   params.layers[static_cast<std::size_t>(t)], c);
                          });
}

DetectionResult lmmse_detect(const Vec &y, const Mat &h, const Mat &noise_cov,
                             const Constellation &c)
{
    if (y.size() != h.rows())
        throw std::invalid_argument("detector input dimension mismatch");
    const double es = 0.5; // per-real-dimension symbol energy
    const int n_t = static_cast<int>(h.cols()) / 2;
    const int bpd = c.bits_per_dim();

    Mat a = es * (h * h.transpose()) + noise_cov;
    auto ldlt = robust_ldlt(a);
    Vec x_hat = es * (h.transpose() * ldlt.solve(y));
    Mat ainv_h = ldlt.solve(h);
    Vec err_var(h.cols());
    for (Eigen::Index i = 0; i < h.cols(); ++i)
        err_var[i] = std::max(es - es * es * h.col(i).dot(ainv_h.col(i)), kVarFloor);

    DetectionResult res;
    res.posterior_means = x_hat;
    res.posterior_vars = err_var;
    res.llrs.resize(2 * n_t * bpd);
    res.hard_bits.resize(static_cast<std::size_t>(2 * n_t * bpd));
    res.hard_symbols.resize(static_cast<std::size_t>(n_t));

    double bit_llr[8];
    std::uint8_t bits[8];
    for (int j = 0; j < n_t; ++j) {
        int level[2];
        for (int half = 0; half < 2; ++half) {
            const int dim = half == 0 ? j : n_t + j;
            level[half] = hard_decision(x_hat[dim], c);
            llr(x_hat[dim], 2.0 * err_var[dim], c, bit_llr);
            level_bits(c, level[half], bits);
            for (int b = 0; b < bpd; ++b) {
                const int k = j * 2 * bpd + half * bpd + b;
                res.llrs[k] = bit_llr[b];
                res.hard_bits[static_cast<std::size_t>(k)] = bits[b];
            }
        }
        res.hard_symbols[static_cast<std::size_t>(j)] = level[0] * c.levels() + level[1];
    }
    return res;
}

std::vector<int> ml_detect(const Vec &y, const Mat &h, const Constellation &c, int n_t)
{
    const int dims = 2 * n_t;
    if (h.cols() != dims || y.size() != h.rows())
        throw std::invalid_argument("ml_detect dimension mismatch");
    const int k = c.levels();
    double candidates = std::pow(static_cast<double>(c.order()), n_t);
    if (candidates > static_cast<double>(1 << 20))
        throw std::invalid_argument("ml_detect: enumeration too large (M^n_t > 2^20)");

    std::vector<int> digit(static_cast<std::size_t>(dims), 0);
    Vec s = Vec::Zero(y.size());
    for (int d = 0; d < dims; ++d)
        s += h.col(d) * c.amp(0);

    std::vector<int> best = digit;
    double best_cost = (y - s).squaredNorm();
    const auto total = static_cast<long long>(candidates);
    for (long long it = 1; it < total; ++it) {
        // Counting order over the index tuple = lexicographic candidate order.
        int d = dims - 1;
        while (digit[static_cast<std::size_t>(d)] == k - 1) {
            s -= h.col(d) * (c.amp(k - 1) - c.amp(0));
            digit[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        const int kd = ++digit[static_cast<std::size_t>(d)];
        s += h.col(d) * (c.amp(kd) - c.amp(kd - 1));
        const double cost = (y - s).squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            best = digit;
        }
    }

    std::vector<int> symbols(static_cast<std::size_t>(n_t));
    for (int j = 0; j < n_t; ++j)
        symbols[static_cast<std::size_t>(j)] =
            best[static_cast<std::size_t>(j)] * k + best[static_cast<std::size_t>(n_t + j)];
    return symbols;
}

const char *detector_name(DetectorKind kind)
{
    switch (kind) {
    case DetectorKind::lmmse: return "lmmse";
    case DetectorKind::oamp: return "oamp";
    case DetectorKind::oampnet2: return "oampnet2";
    case DetectorKind::ml: return "ml";
    }
    return "?";
}

DetectorKind detector_from_name(const std::string &name)
{
    if (name == "lmmse") return DetectorKind::lmmse;
    if (name == "oamp") return DetectorKind::oamp;
    if (name == "oampnet2") return DetectorKind::oampnet2;
    if (name == "ml") return DetectorKind::ml;
    throw std::invalid_argument("unknown detector '" + name + "'");
}

DetectionResult run_detector(DetectorKind kind, const Vec &y, const Mat &h,
                             const Mat &noise_cov, int layers, const NetParams *params,
                             const Constellation &c)
{
    switch (kind) {
    case DetectorKind::lmmse:
        return lmmse_detect(y, h, noise_cov, c);
    case DetectorKind::oamp:
        return oamp_detect(y, h, noise_cov, layers, c);
    case DetectorKind::oampnet2: {
        if (params == nullptr)
            return oampnet2_detect(y, h, noise_cov, NetParams::defaults(layers), c);
        return oampnet2_detect(y, h, noise_cov, *params, c);
    }
    case DetectorKind::ml: {
        const int n_t = static_cast<int>(h.cols()) / 2;
        DetectionResult res;
        res.hard_symbols = ml_detect(y, h, c, n_t);
        const int bpd = c.bits_per_dim();
        res.hard_bits.resize(static_cast<std::size_t>(n_t * 2 * bpd));
        std::uint8_t bits[8];
        for (int j = 0; j < n_t; ++j) {
            const int m = res.hard_symbols[static_cast<std::size_t>(j)];
            const int lv[2] = {m / c.levels(), m % c.levels()};
            for (int half = 0; half < 2; ++half) {
                level_bits(c, lv[half], bits);
                for (int b = 0; b < bpd; ++b)
                    res.hard_bits[static_cast<std::size_t>(j * 2 * bpd + half * bpd + b)] =
                        bits[b];
            }
        }
        return res;
    }
    }
    throw std::logic_error("unknown DetectorKind");
}

} // namespace mimodet
