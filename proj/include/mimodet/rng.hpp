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

#ifndef MIMODET_RNG_HPP
#define MIMODET_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include "mimodet/common.hpp"

namespace mimodet {

/// Deterministic random stream. One experiment owns a master seed; every
/// consumer (channel draws, noise, payload bits, per-slot workers) derives its
/// own substream from the master seed, a purpose label and an index, so
/// streams stay independent and runs are reproducible regardless of worker
/// scheduling. Gaussians come from Box–Muller over mt19937_64 words, which is
/// bit-identical on every standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Substream keyed by (master, label, index).
    static Rng substream(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// One random bit.
    int bit() { return static_cast<int>(eng_() >> 63); }

    /// Standard normal.
    double gaussian();

    /// Circularly-symmetric complex Gaussian with total variance `var`.
    cplx cgaussian(double var);

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mimodet

#endif
