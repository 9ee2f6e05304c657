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

#ifndef MIMODET_MODEL_HPP
#define MIMODET_MODEL_HPP

#include <cstdint>

#include "mimodet/common.hpp"
#include "mimodet/rng.hpp"

namespace mimodet {

struct SystemConfig {
    int n_t = 4;            // transmit antennas
    int n_r = 4;            // receive antennas
    int n_p = 4;            // pilot vectors per slot
    int n_d = 12;           // data vectors per slot
    int mod_order = 4;      // constellation size M
    double snr_db = 10.0;
    double rho = 0.0;       // exponential correlation coefficient, 0 = i.i.d.
    int layers = 4;         // unfolding depth T
    int turbo_iters = 1;    // JCESD iterations L
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate(bool needs_pilots = false) const;
};

enum class ChannelKind {
    iid_rayleigh,
    kronecker,
    awgn_identity, // fixed H = I, for harness calibration against the scalar AWGN curve
};

/// Noise variance σ² of the complex AWGN that realizes the requested SNR,
/// SNR = E‖Hx‖²/E‖n‖², under unit-energy symbols and per-entry channel
/// variance 1/N_r:  σ² = N_t / (N_r · 10^(snr_db/10)).
double snr_to_noise_variance(const SystemConfig &cfg);
double snr_to_noise_variance(int n_t, int n_r, double snr_db);

/// N_r × N_t with i.i.d. CN(0, 1/N_r) entries.
CMat gen_iid_rayleigh(int n_r, int n_t, Rng &rng);

/// Exponential correlation matrix, entry (i,j) = rho^|i−j|.
Mat exp_correlation(int n, double rho);

/// Symmetric PSD square root (eigendecomposition, negative eigenvalues clamped to 0).
Mat psd_sqrt(const Mat &a);

/// Kronecker-correlated Rayleigh channel H = R_R^{1/2} G R_T^{1/2}.
CMat gen_kronecker(int n_r, int n_t, double rho, Rng &rng);

/// Dispatch on ChannelKind (rho only used by the Kronecker model).
CMat draw_channel(int n_r, int n_t, double rho, ChannelKind kind, Rng &rng);

/// Real-valued equivalent of one complex observation y = Hx + n with
/// circularly-symmetric noise of covariance `noise_cov`.
struct RealSystem {
    Mat h_real;              // 2N_r × 2N_t, [[Re H, −Im H], [Im H, Re H]]
    Vec y_real;              // [Re y; Im y]
    double noise_var_per_dim; // σ²/2 for white complex noise, else mean real-diagonal
    Mat noise_cov_real;      // 2N_r × 2N_r
};

Mat to_real_matrix(const CMat &h);
Vec to_real_vector(const CVec &y);
CVec to_complex_vector(const Vec &x);

/// Covariance of [Re n; Im n] for circular complex noise with covariance C:
/// ½·[[Re C, −Im C], [Im C, Re C]].
Mat real_noise_cov(const CMat &c);

/// Real covariance for a diagonal complex covariance given as a vector.
Mat real_noise_cov_diag(const Vec &diag_complex);

RealSystem complex_to_real(const CMat &h, const CVec &y, const CMat &noise_cov);

} // namespace mimodet

#endif
