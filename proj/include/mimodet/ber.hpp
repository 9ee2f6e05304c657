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

#ifndef MIMODET_BER_HPP
#define MIMODET_BER_HPP

#include <optional>
#include <string>
#include <vector>

#include "mimodet/detect.hpp"
#include "mimodet/model.hpp"

namespace mimodet {

/// Stream fresh slots per SNR until `min_errors` bit errors or the bit cap.
struct StopRule {
    long long min_errors = 10000;
    long long max_bits = 100000000; // 1e8 keeps high-SNR points bounded
};

struct BerRow {
    double snr_db = 0.0;
    long long bits_sent = 0;
    long long bit_errors = 0;
    double ber = 0.0;
    double ci_low = 0.0;   // Wilson 95%
    double ci_high = 0.0;
    double wall_time_s = 0.0;
    bool capped = false;   // stopped by max_bits instead of min_errors
};

struct BerReport {
    SystemConfig config;
    std::string detector;
    ChannelKind channel = ChannelKind::iid_rayleigh;
    bool jcesd = false;
    std::string params_id = "default"; // parameter file identity or "default"
    std::optional<ParamsMeta> train_ctx; // set when evaluating trained parameters
    std::vector<BerRow> rows;
};

/// Wilson score interval at 95% confidence.
std::pair<double, double> wilson_interval(long long errors, long long trials);

/// Perfect-CSI Monte Carlo BER: one fresh (H, x, n) triple per slot, per-slot
/// derived RNG substreams, deterministic under (seed, config) for any worker
/// count. `slot_errors`, when given, records each slot's error count (test
/// hook for exact accounting).
BerReport run_ber(const SystemConfig &cfg, DetectorKind detector, const NetParams *params,
                  const std::vector<double> &snr_list, const StopRule &stop,
                  ChannelKind channel = ChannelKind::iid_rayleigh, int n_threads = 0,
                  std::vector<int> *slot_errors = nullptr);

/// JCESD Monte Carlo BER: each slot carries N_p pilot and N_d data columns
/// over one channel draw; detection runs through the turbo loop.
BerReport run_jcesd_ber(const SystemConfig &cfg, DetectorKind detector,
                        const NetParams *params, const std::vector<double> &snr_list,
                        const StopRule &stop, int n_threads = 0);

void write_results_csv(const std::string &path, const BerReport &report);
void write_manifest(const std::string &path, const BerReport &report, const StopRule &stop);

/// SNR at which the log-linear interpolation of the curve crosses target_ber;
/// NaN when the curve does not bracket the target.
double snr_at_ber(const std::vector<BerRow> &rows, double target_ber);

} // namespace mimodet

#endif
