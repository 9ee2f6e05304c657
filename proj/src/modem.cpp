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

#include "mimodet/modem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mimodet {

namespace {

constexpr int kMaxLevels = 8; // 64-QAM has 8 PAM levels per dimension

// Log-posterior over the PAM levels, up to a common constant.
void pam_log_posterior(double r, double tau2, const Constellation &c, double *lw)
{
    const auto &amp = c.pam_points();
    const auto &lp = c.pam_log_priors();
    for (int k = 0; k < c.levels(); ++k) {
        const double d = r - amp[static_cast<std::size_t>(k)];
        lw[k] = lp[static_cast<std::size_t>(k)] - d * d / tau2;
    }
}

double log_sum_exp(const double *v, const int *idx, int n, double shift)
{
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        s += std::exp(v[idx[i]] - shift);
    return std::log(s) + shift;
}

} // namespace

Constellation Constellation::make(int mod_order)
{
    if (mod_order != 4 && mod_order != 16 && mod_order != 64)
        throw std::invalid_argument("unsupported modulation order (use 4, 16 or 64)");

    Constellation c;
    c.m_ = mod_order;
    c.k_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(mod_order))));
    c.bits_per_dim_ = 0;
    for (int v = c.k_; v > 1; v >>= 1)
        ++c.bits_per_dim_;

    // Per-dimension average energy 1/2 makes the complex symbol unit energy.
    const int k = c.k_;
    const double scale = std::sqrt(3.0 / (2.0 * (mod_order - 1)));
    c.amp_.resize(static_cast<std::size_t>(k));
    c.gray_.resize(static_cast<std::size_t>(k));
    c.level_of_gray_.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        c.amp_[static_cast<std::size_t>(i)] = scale * (2 * i - k + 1);
        auto g = static_cast<std::uint32_t>(i ^ (i >> 1));
        c.gray_[static_cast<std::size_t>(i)] = g;
        c.level_of_gray_[g] = i;
    }
    c.prior_.assign(static_cast<std::size_t>(k), 1.0 / k);
    c.log_prior_.assign(static_cast<std::size_t>(k), -std::log(static_cast<double>(k)));

    c.points_.resize(static_cast<std::size_t>(mod_order));
    c.labels_.resize(static_cast<std::size_t>(mod_order));
    for (int ki = 0; ki < k; ++ki)
        for (int kq = 0; kq < k; ++kq) {
            const int m = ki * k + kq;
            c.points_[static_cast<std::size_t>(m)] = {c.amp_[static_cast<std::size_t>(ki)],
                                                      c.amp_[static_cast<std::size_t>(kq)]};
            c.labels_[static_cast<std::size_t>(m)] =
                (c.gray_[static_cast<std::size_t>(ki)] << c.bits_per_dim_) |
                c.gray_[static_cast<std::size_t>(kq)];
        }
    return c;
}

void Constellation::set_pam_priors(const std::vector<double> &priors)
{
    if (static_cast<int>(priors.size()) != k_)
        throw std::invalid_argument("prior count must equal the PAM level count");
    double sum = 0.0;
    for (double p : priors) {
        if (!(p >= 0.0))
            throw std::invalid_argument("priors must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("priors must sum to 1");
    prior_ = priors;
    log_prior_.resize(priors.size());
    for (std::size_t i = 0; i < priors.size(); ++i)
        log_prior_[i] = priors[i] > 0.0 ? std::log(priors[i])
                                        : -std::numeric_limits<double>::infinity();
}

double Constellation::prior(int m) const
{
    const int ki = m / k_, kq = m % k_;
    return prior_[static_cast<std::size_t>(ki)] * prior_[static_cast<std::size_t>(kq)];
}

Constellation make_constellation(int mod_order) { return Constellation::make(mod_order); }

SoftSymbol mmse_denoise(double r, double tau2, const Constellation &c)
{
    if (!(tau2 > 0.0))
        throw std::invalid_argument("mmse_denoise requires tau2 > 0");
    if (!std::isfinite(r)) {
        if (std::isnan(r))
            throw std::invalid_argument("mmse_denoise: NaN input");
        // Weights underflow entirely; hard-assign the nearest (extreme) level.
        const int k = r > 0.0 ? c.levels() - 1 : 0;
        return {c.amp(k), 0.0};
    }

    double lw[kMaxLevels];
    pam_log_posterior(r, tau2, c, lw);
    double mx = lw[0];
    for (int k = 1; k < c.levels(); ++k)
        mx = std::max(mx, lw[k]);

    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < c.levels(); ++k) {
        const double w = std::exp(lw[k] - mx);
        const double a = c.amp(k);
        z += w;
        m1 += w * a;
        m2 += w * a * a;
    }
    SoftSymbol s;
    s.mean = m1 / z;
    s.var = std::max(m2 / z - s.mean * s.mean, 0.0);
    return s;
}

void llr(double r, double tau2, const Constellation &c, double *out)
{
    if (!(tau2 > 0.0))
        throw std::invalid_argument("llr requires tau2 > 0");
    if (std::isnan(r))
        throw std::invalid_argument("llr: NaN input");

    double lw[kMaxLevels] = {};
    if (std::isfinite(r)) {
        pam_log_posterior(r, tau2, c, lw);
    } else {
        const int hard = r > 0.0 ? c.levels() - 1 : 0;
        for (int k = 0; k < c.levels(); ++k)
            lw[k] = k == hard ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    double mx = lw[0];
    for (int k = 1; k < c.levels(); ++k)
        mx = std::max(mx, lw[k]);

    for (int b = 0; b < c.bits_per_dim(); ++b) {
        const std::uint32_t mask = 1u << (c.bits_per_dim() - 1 - b);
        int ones[kMaxLevels], zeros[kMaxLevels];
        int n1 = 0, n0 = 0;
        for (int k = 0; k < c.levels(); ++k) {
            if (c.gray_label(k) & mask)
                ones[n1++] = k;
            else
                zeros[n0++] = k;
        }
        out[b] = log_sum_exp(lw, ones, n1, mx) - log_sum_exp(lw, zeros, n0, mx);
    }
}

std::vector<double> llr(double r, double tau2, const Constellation &c)
{
    std::vector<double> out(static_cast<std::size_t>(c.bits_per_dim()));
    llr(r, tau2, c, out.data());
    return out;
}

int hard_decision(double r, const Constellation &c)
{
    if (std::isnan(r))
        throw std::invalid_argument("hard_decision: NaN input");
    int best = 0;
    double best_d = std::abs(r - c.amp(0));
    for (int k = 1; k < c.levels(); ++k) {
        const double d = std::abs(r - c.amp(k));
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

CVec modulate(const std::vector<std::uint8_t> &bits, const Constellation &c)
{
    const int bps = c.bits_per_symbol();
    if (bits.size() % static_cast<std::size_t>(bps) != 0)
        throw std::invalid_argument("bit count must be a multiple of bits per symbol");
    const Eigen::Index n = static_cast<Eigen::Index>(bits.size()) / bps;
    CVec out(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        std::uint32_t gi = 0, gq = 0;
        for (int b = 0; b < c.bits_per_dim(); ++b)
            gi = (gi << 1) | bits[static_cast<std::size_t>(s * bps + b)];
        for (int b = 0; b < c.bits_per_dim(); ++b)
            gq = (gq << 1) | bits[static_cast<std::size_t>(s * bps + c.bits_per_dim() + b)];
        out[s] = {c.amp(c.level_from_gray(gi)), c.amp(c.level_from_gray(gq))};
    }
    return out;
}

void level_bits(const Constellation &c, int k, std::uint8_t *out)
{
    const std::uint32_t g = c.gray_label(k);
    for (int b = 0; b < c.bits_per_dim(); ++b)
        out[b] = static_cast<std::uint8_t>((g >> (c.bits_per_dim() - 1 - b)) & 1u);
}

std::vector<std::uint8_t> random_bits(int n, Rng &rng)
{
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (auto &b : bits)
        b = static_cast<std::uint8_t>(rng.bit());
    return bits;
}

} // namespace mimodet
