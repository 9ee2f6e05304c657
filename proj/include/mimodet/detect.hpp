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

#ifndef MIMODET_DETECT_HPP
#define MIMODET_DETECT_HPP

#include <cstdint>
#include <vector>

#include "mimodet/common.hpp"
#include "mimodet/modem.hpp"

namespace mimodet {

// All detectors run on the real-valued equivalent system: y (2N_r), H
// (2N_r × 2N_t), noise covariance R (2N_r square). v² and τ² are tracked as
// per-real-component error variances (the algorithm's N_t becomes 2·n_t
// here), so the denoiser is handed 2·τ², the complex-equivalent variance its
// Gaussian weights expect.

/// One layer's trainable scalars Ω_t = (γ, φ, ξ, θ). Defaults reproduce the
/// plain OAMP step.
struct LayerParams {
    double gamma = 1.0; // linear-estimator step size
    double phi = 1.0;   // denoiser output scale
    double xi = 0.0;    // divergence-correction weight
    double theta = 1.0; // variance-estimator scale
};

/// Training context a parameter set belongs to.
struct ParamsMeta {
    double snr_db = 0.0;
    double rho = 0.0;
    int mod_order = 4;
    int n_t = 0;
    int n_r = 0;
    int layers = 1;
    int turbo_iters = 1;
};

struct NetParams {
    std::vector<LayerParams> layers;
    ParamsMeta meta;

    static NetParams defaults(int depth);
    int depth() const { return static_cast<int>(layers.size()); }
};

struct DetectorState {
    Vec x_hat;          // current estimate x̂_t (2N_t)
    Vec r;              // linear-estimator output r_t
    double v2 = 0.0;    // error variance of x̂_t
    double tau2 = 1.0;  // error variance of r_t (τ₁ = 1 before the first layer)
    Vec post_mean;      // denoiser posterior means at the last layer
    Vec per_symbol_var; // denoiser posterior variances per real dimension
};

struct LayerTrace {
    Vec x_hat;
    double v2 = 0.0;
    double tau2 = 0.0;
};

struct DetectionResult {
    std::vector<std::uint8_t> hard_bits; // n_t·log2(M); symbol j = [I bits | Q bits]
    std::vector<int> hard_symbols;       // per complex antenna, index k_I·√M + k_Q
    Vec posterior_means;                 // per real dimension
    Vec posterior_vars;
    Vec llrs;                            // same layout as hard_bits
    std::vector<LayerTrace> trajectory;  // per layer, post-denoiser
};

/// v_t² = max( (‖y − Hx̂‖² − tr(R)) / tr(HᵀH), ε ) with ε = 5e-13.
double estimate_error_variance(const Vec &y, const Mat &h, const Mat &noise_cov,
                               const Vec &x_hat);

struct BuildW {
    Mat w;               // de-correlated matrix, tr(W·H) = 2n_t
    double tr_what_h;    // tr(Ŵ·H) before rescaling
};

/// Ŵ = v²·Hᵀ(v²·HHᵀ + R)⁻¹, W = (2n_t / tr(ŴH))·Ŵ. Throws on a degenerate
/// channel (tr(ŴH) ≤ 1e-14).
BuildW build_w(const Mat &h, double v2, const Mat &noise_cov);

/// One OAMP iteration (Algorithm-1 equations, no trainable scalars).
DetectorState oamp_step(const DetectorState &state, const Vec &y, const Mat &h, const Mat &w,
                        const Mat &noise_cov, const Constellation &c);

/// One OAMP-Net2 layer:
///   r = x̂ + γ·W(y − Hx̂)
///   τ² = max( tr(CCᵀ)·v²/(2n_t) + θ²·tr(WRWᵀ)/(2n_t), ε ),  C = I − θ·WH
///   x̂⁺ = φ·(E[x | r, τ] − ξ·r)
DetectorState oampnet2_step(const DetectorState &state, const Vec &y, const Mat &h,
                            const Mat &w, const Mat &noise_cov, const LayerParams &lp,
                            const Constellation &c);

DetectionResult oamp_detect(const Vec &y, const Mat &h, const Mat &noise_cov, int layers,
                            const Constellation &c);

DetectionResult oampnet2_detect(const Vec &y, const Mat &h, const Mat &noise_cov,
                                const NetParams &params, const Constellation &c);

/// x̂ = E_s·Hᵀ(E_s·HHᵀ + R)⁻¹y with E_s = 1/2 per real dimension; hard
/// decisions by nearest constellation point.
DetectionResult lmmse_detect(const Vec &y, const Mat &h, const Mat &noise_cov,
                             const Constellation &c);

/// Exhaustive minimum-distance search over all M^{n_t} candidates (guarded at
/// 2^20); ties go to the lexicographically smallest index vector. Returns one
/// symbol index per complex antenna.
std::vector<int> ml_detect(const Vec &y, const Mat &h, const Constellation &c, int n_t);

enum class DetectorKind { lmmse, oamp, oampnet2, ml };

const char *detector_name(DetectorKind kind);
DetectorKind detector_from_name(const std::string &name);

/// Uniform dispatch used by the harness and the turbo loop.
DetectionResult run_detector(DetectorKind kind, const Vec &y, const Mat &h,
                             const Mat &noise_cov, int layers, const NetParams *params,
                             const Constellation &c);

} // namespace mimodet

#endif
