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

#ifndef MIMODET_CHANEST_HPP
#define MIMODET_CHANEST_HPP

#include "mimodet/common.hpp"

namespace mimodet {

/// N_t × N_p pilot matrix: the first n_t rows of the n_p-point DFT matrix.
/// Unit-modulus entries, X_p X_pᴴ = n_p·I.
CMat dft_pilots(int n_t, int n_p);

/// LMMSE channel estimate of h = vec(H) together with the estimation-error
/// covariance R_Δh (Hermitian PSD) and its diagonal.
struct ChannelEstimate {
    int n_r = 0;
    int n_t = 0;
    CVec h_hat;           // N_r·N_t, column-major vec(H)
    CMat err_cov;         // N_r·N_t square
    Vec per_entry_err_var; // diagonal of err_cov

    CMat matrix() const; // reshape to N_r × N_t
};

/// Block-diagonal covariance of the equivalent noise on the stacked
/// pilot+data observation: σ²·I over the N_p·N_r pilot block, then one
/// isotropic v[n]·I_{N_r} block per detected-data column.
struct NoiseCov {
    double sigma2 = 0.0;
    int n_r = 0;
    int n_p = 0;
    Vec data_block_var; // length N_d

    CMat dense() const; // expanded form, for oracles and the generic solver
};

/// Channel prior covariance of vec(H): (1/N_r)·I for the i.i.d. model,
/// (R_T ⊗ R_R)/N_r for the exponential Kronecker model.
CMat default_channel_prior(int n_r, int n_t, double rho);

/// ĥ = R_hh A_pᴴ (A_p R_hh A_pᴴ + σ²I)⁻¹ y_p with A_p = X_pᵀ ⊗ I_{N_r};
/// also returns R_Δh = R_hh − R_hh A_pᴴ(...)⁻¹ A_p R_hh. When R_hh = c·I the
/// Kronecker structure reduces the solve to one shared N_p-sized system
/// applied per receive antenna.
ChannelEstimate lmmse_pilot_estimate(const CMat &y_p, const CMat &x_p, const CMat &r_hh,
                                     double sigma2);

/// Data-aided variant over the stacked X = (X_p, X̂_d) with noise covariance
/// R_nn from estimation_noise_cov.
ChannelEstimate lmmse_data_aided_estimate(const CMat &y_p, const CMat &y_d, const CMat &x_p,
                                          const CMat &x_hat_d, const CMat &r_hh,
                                          const NoiseCov &r_nn);

/// Diagonal of V_est (length N_r): i-th entry Σ_j σ²_{Δh(i,j)} + σ².
/// The equivalent detection noise n − ΔH·x has this covariance for
/// unit-energy symbols independent across antennas.
Vec detection_noise_cov(const ChannelEstimate &est, double sigma2);

/// R_nn for data-aided estimation. posterior_vars is N_t × N_d with the
/// per-complex-symbol detection-error variances σ²_{e(j,n)}; the data block
/// for column n is (Σ_j σ²_{e(j,n)}/N_r + σ²)·I_{N_r}. (The source text
/// prints I_{N_t} and drops its own 1/N_r factor; the noise lives in the
/// receive dimension and each h(i,j) carries variance 1/N_r, so this form is
/// the dimensionally consistent one and is what the Monte Carlo checks
/// validate.)
NoiseCov estimation_noise_cov(const Mat &posterior_vars, double sigma2, int n_p, int n_d,
                              int n_r);

} // namespace mimodet

#endif
