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

#ifndef MIMODET_MODEM_HPP
#define MIMODET_MODEM_HPP

#include <cstdint>
#include <vector>

#include "mimodet/common.hpp"
#include "mimodet/rng.hpp"

namespace mimodet {

/// Posterior mean and variance of one real dimension.
struct SoftSymbol {
    double mean = 0.0;
    double var = 0.0;
};

/// Square M-QAM with Gray labeling, scaled to unit average complex energy.
/// The symbol factorizes into two independent √M-PAM dimensions sharing the
/// same amplitude grid; per-dimension average energy is 1/2. Per-dimension
/// priors default to uniform 1/√M, so the complex-symbol prior is 1/M.
/// (The source material writes the prior weight as 1/√M per symbol; a prior
/// over M symbols must normalize, so 1/M per symbol is used here — the 1/√M
/// is exactly the per-PAM-dimension weight.)
class Constellation {
  public:
    static Constellation make(int mod_order);

    int order() const { return m_; }
    int levels() const { return k_; }
    int bits_per_dim() const { return bits_per_dim_; }
    int bits_per_symbol() const { return 2 * bits_per_dim_; }

    const std::vector<double> &pam_points() const { return amp_; }
    const std::vector<double> &pam_priors() const { return prior_; }
    const std::vector<double> &pam_log_priors() const { return log_prior_; }

    /// Soft-input hook: replace the per-dimension priors.
    void set_pam_priors(const std::vector<double> &priors);

    /// Gray code word of amplitude level k (levels are in ascending amplitude
    /// order; bit words are read MSB-first).
    std::uint32_t gray_label(int k) const { return gray_[static_cast<std::size_t>(k)]; }
    int level_from_gray(std::uint32_t g) const { return level_of_gray_[g]; }

    /// The M complex symbols; index m = k_I · √M + k_Q.
    const std::vector<cplx> &points() const { return points_; }
    /// Bit label of symbol m: I-dimension Gray word in the high bits_per_dim()
    /// bits, Q-dimension word in the low bits.
    std::uint32_t bit_label(int m) const { return labels_[static_cast<std::size_t>(m)]; }
    /// Prior of symbol m (product of the two per-dimension priors).
    double prior(int m) const;

    double amp(int k) const { return amp_[static_cast<std::size_t>(k)]; }

  private:
    int m_ = 0;
    int k_ = 0;
    int bits_per_dim_ = 0;
    std::vector<double> amp_;
    std::vector<double> prior_;
    std::vector<double> log_prior_;
    std::vector<std::uint32_t> gray_;
    std::vector<int> level_of_gray_;
    std::vector<cplx> points_;
    std::vector<std::uint32_t> labels_;
};

Constellation make_constellation(int mod_order);

/// Per-real-dimension posterior under the equivalent AWGN channel r = x + w.
/// `tau2` is the complex-equivalent error variance: the per-dimension noise
/// variance is tau2/2, so the weights are prior·exp(−(r−s)²/tau2), the
/// restriction of the circular Gaussian density to one real dimension.
/// Computed in the log domain with max subtraction.
SoftSymbol mmse_denoise(double r, double tau2, const Constellation &c);

/// Per-bit log-likelihood ratios for one real dimension, same posterior
/// weights as mmse_denoise, log(P[bit=1]/P[bit=0]), MSB first.
void llr(double r, double tau2, const Constellation &c, double *out);
std::vector<double> llr(double r, double tau2, const Constellation &c);

/// Nearest PAM level in Euclidean distance; midpoint ties go to the lower index.
int hard_decision(double r, const Constellation &c);

/// Map bits onto complex symbols; bit count must divide bits_per_symbol().
CVec modulate(const std::vector<std::uint8_t> &bits, const Constellation &c);

/// Recover the bit label of PAM level k, MSB first, into out[bits_per_dim()].
void level_bits(const Constellation &c, int k, std::uint8_t *out);

std::vector<std::uint8_t> random_bits(int n, Rng &rng);

} // namespace mimodet

#endif
