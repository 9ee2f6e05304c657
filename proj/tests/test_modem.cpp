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

#include <doctest.h>

#include <cmath>

#include "mimodet/modem.hpp"

using namespace mimodet;

namespace {

// Independent per-dimension posterior by plain enumeration (no log domain).
void enumerate_posterior(double r, double tau2, const Constellation &c, double &mean,
                         double &var, double *bit_p1 = nullptr)
{
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    const int bpd = c.bits_per_dim();
    if (bit_p1 != nullptr)
        for (int b = 0; b < bpd; ++b)
            bit_p1[b] = 0.0;
    for (int k = 0; k < c.levels(); ++k) {
        const double a = c.amp(k);
        const double w =
            c.pam_priors()[static_cast<std::size_t>(k)] * std::exp(-(r - a) * (r - a) / tau2);
        z += w;
        m1 += w * a;
        m2 += w * a * a;
        if (bit_p1 != nullptr)
            for (int b = 0; b < bpd; ++b)
                if (c.gray_label(k) >> (bpd - 1 - b) & 1u)
                    bit_p1[b] += w;
    }
    mean = m1 / z;
    var = m2 / z - mean * mean;
    if (bit_p1 != nullptr)
        for (int b = 0; b < bpd; ++b)
            bit_p1[b] /= z;
}

} // namespace

TEST_SUITE_BEGIN("modem");

TEST_CASE("constellation construction")
{
    SUBCASE("QPSK points and energy")
    {
        const Constellation c = Constellation::make(4);
        const double a = 1.0 / std::sqrt(2.0);
        CHECK(c.pam_points().size() == 2);
        CHECK(c.amp(0) == doctest::Approx(-a).epsilon(1e-14));
        CHECK(c.amp(1) == doctest::Approx(a).epsilon(1e-14));
        double e = 0.0;
        for (const auto &p : c.points())
            e += std::norm(p);
        CHECK(e / 4.0 == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("16-QAM PAM grid from the unit-energy constraint")
    {
        // Oracle: per-dimension levels ±c, ±3c with (c² + 9c²)/2 = 1/2 per
        // dimension, i.e. c = 1/sqrt(10).
        const double c0 = 1.0 / std::sqrt(10.0);
        const Constellation c = Constellation::make(16);
        REQUIRE(c.pam_points().size() == 4);
        CHECK(c.amp(0) == doctest::Approx(-3 * c0).epsilon(1e-14));
        CHECK(c.amp(1) == doctest::Approx(-c0).epsilon(1e-14));
        CHECK(c.amp(2) == doctest::Approx(c0).epsilon(1e-14));
        CHECK(c.amp(3) == doctest::Approx(3 * c0).epsilon(1e-14));
    }

    SUBCASE("priors normalize and energies are unit for every order")
    {
        for (int m : {4, 16, 64}) {
            const Constellation c = Constellation::make(m);
            double psum = 0.0, e = 0.0;
            for (int i = 0; i < m; ++i) {
                psum += c.prior(i);
                e += c.prior(i) * std::norm(c.points()[static_cast<std::size_t>(i)]);
            }
            CHECK(psum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("unsupported order rejected")
    {
        CHECK_THROWS_AS(Constellation::make(8), std::invalid_argument);
        CHECK_THROWS_AS(Constellation::make(2), std::invalid_argument);
    }

    SUBCASE("Gray adjacency: neighbors differ in exactly one bit")
    {
        for (int m : {4, 16, 64}) {
            const Constellation c = Constellation::make(m);
            for (int k = 0; k + 1 < c.levels(); ++k) {
                const std::uint32_t x = c.gray_label(k) ^ c.gray_label(k + 1);
                CHECK(x != 0);
                CHECK((x & (x - 1)) == 0); // power of two = single differing bit
            }
        }
    }
}

TEST_CASE("modulate")
{
    const Constellation c = Constellation::make(4);

    SUBCASE("all-zero bits map to the 00-labeled point")
    {
        const CVec s = modulate(std::vector<std::uint8_t>(8, 0), c);
        REQUIRE(s.size() == 4);
        int m00 = -1;
        for (int m = 0; m < 4; ++m)
            if (c.bit_label(m) == 0)
                m00 = m;
        REQUIRE(m00 >= 0);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(s[i] - c.points()[static_cast<std::size_t>(m00)]) == 0.0);
    }

    SUBCASE("round trip through noiseless hard decisions")
    {
        Rng rng(3);
        for (int m : {4, 16, 64}) {
            const Constellation cc = Constellation::make(m);
            const auto bits = random_bits(10 * cc.bits_per_symbol(), rng);
            const CVec x = modulate(bits, cc);
            std::vector<std::uint8_t> rec;
            std::uint8_t buf[8];
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                level_bits(cc, hard_decision(x[i].real(), cc), buf);
                rec.insert(rec.end(), buf, buf + cc.bits_per_dim());
                level_bits(cc, hard_decision(x[i].imag(), cc), buf);
                rec.insert(rec.end(), buf, buf + cc.bits_per_dim());
            }
            CHECK(rec == bits);
        }
    }

    SUBCASE("uniform bits give uniform symbols (3-sigma)")
    {
        Rng rng(4);
        const Constellation cc = Constellation::make(16);
        const int n = 10000;
        std::vector<int> count(16, 0);
        const CVec x = modulate(random_bits(n * cc.bits_per_symbol(), rng), cc);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            int best = 0;
            double bd = 1e300;
            for (int m = 0; m < 16; ++m) {
                const double d = std::abs(x[i] - cc.points()[static_cast<std::size_t>(m)]);
                if (d < bd) {
                    bd = d;
                    best = m;
                }
            }
            ++count[static_cast<std::size_t>(best)];
        }
        const double expect = n / 16.0;
        const double sigma = std::sqrt(n * (1.0 / 16.0) * (15.0 / 16.0));
        for (int m = 0; m < 16; ++m)
            CHECK(std::abs(count[static_cast<std::size_t>(m)] - expect) < 3.0 * sigma);
    }

    SUBCASE("length mismatch rejected")
    {
        CHECK_THROWS_AS(modulate(std::vector<std::uint8_t>(3, 0), c), std::invalid_argument);
    }
}

TEST_CASE("mmse denoiser")
{
    const Constellation qpsk = Constellation::make(4);

    SUBCASE("symmetry at r = 0")
    {
        CHECK(std::abs(mmse_denoise(0.0, 0.7, qpsk).mean) < 1e-12);
        CHECK(std::abs(mmse_denoise(0.0, 0.7, Constellation::make(64)).mean) < 1e-12);
    }

    SUBCASE("infinite-variance limit recovers the prior moments")
    {
        const SoftSymbol s = mmse_denoise(0.37, 1e14, Constellation::make(16));
        CHECK(std::abs(s.mean) < 1e-6);
        CHECK(s.var == doctest::Approx(0.5).epsilon(1e-4));
    }

    SUBCASE("QPSK closed form: a·tanh(2ra/tau2)")
    {
        const double a = 1.0 / std::sqrt(2.0);
        const SoftSymbol s = mmse_denoise(0.3, 0.5, qpsk);
        CHECK(s.mean == doctest::Approx(a * std::tanh(0.3 * std::sqrt(2.0) / 0.5))
                            .epsilon(1e-12));
        double mean = 0.0, var = 0.0;
        enumerate_posterior(0.3, 0.5, qpsk, mean, var);
        CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
        CHECK(s.var == doctest::Approx(var).epsilon(1e-12));
    }

    SUBCASE("moment identity against direct enumeration")
    {
        Rng rng(5);
        for (int m : {16, 64}) {
            const Constellation c = Constellation::make(m);
            for (int i = 0; i < 5000; ++i) {
                const double r = 3.0 * rng.gaussian();
                const double tau2 = 1e-3 + 3.0 * rng.uniform();
                const SoftSymbol s = mmse_denoise(r, tau2, c);
                double mean = 0.0, var = 0.0;
                enumerate_posterior(r, tau2, c, mean, var);
                CHECK(std::abs(s.mean - mean) < 1e-10);
                CHECK(std::abs(s.var - var) < 1e-10);
                CHECK(s.var >= 0.0);
                CHECK(s.var <= (c.amp(c.levels() - 1) - c.amp(0)) *
                                   (c.amp(c.levels() - 1) - c.amp(0)));
            }
        }
    }

    SUBCASE("mean is nondecreasing in r")
    {
        for (int m : {4, 16}) {
            const Constellation c = Constellation::make(m);
            double prev = -1e300;
            for (int i = 0; i <= 400; ++i) {
                const double r = -2.0 + i * 0.01;
                const double mean = mmse_denoise(r, 0.21, c).mean;
                CHECK(mean >= prev - 1e-12);
                prev = mean;
            }
        }
    }

    SUBCASE("non-finite input falls back to the nearest extreme with var 0")
    {
        const double inf = std::numeric_limits<double>::infinity();
        const SoftSymbol hi = mmse_denoise(inf, 0.5, qpsk);
        CHECK(hi.mean == qpsk.amp(1));
        CHECK(hi.var == 0.0);
        const SoftSymbol lo = mmse_denoise(-inf, 0.5, qpsk);
        CHECK(lo.mean == qpsk.amp(0));
        CHECK_THROWS_AS(mmse_denoise(std::nan(""), 0.5, qpsk), std::invalid_argument);
        CHECK_THROWS_AS(mmse_denoise(0.1, 0.0, qpsk), std::invalid_argument);
    }

    SUBCASE("soft-input priors steer the posterior")
    {
        Constellation c = Constellation::make(4);
        c.set_pam_priors({1.0, 0.0});
        const SoftSymbol s = mmse_denoise(5.0, 0.5, c);
        CHECK(s.mean == doctest::Approx(c.amp(0)).epsilon(1e-12));
        CHECK(s.var < 1e-12);
        CHECK_THROWS_AS(c.set_pam_priors({0.5, 0.4}), std::invalid_argument);
        CHECK_THROWS_AS(c.set_pam_priors({1.2, -0.2}), std::invalid_argument);
    }
}

TEST_CASE("llr")
{
    const Constellation qpsk = Constellation::make(4);

    SUBCASE("zero at the symmetry point, closed form elsewhere")
    {
        CHECK(std::abs(llr(0.0, 0.5, qpsk)[0]) < 1e-12);
        const double want = 2.0 * 0.3 * std::sqrt(2.0) / 0.5;
        CHECK(llr(0.3, 0.5, qpsk)[0] == doctest::Approx(want).epsilon(1e-12));
    }

    SUBCASE("sign-bit LLR grows monotonically toward +inf")
    {
        double prev = 0.0;
        for (int i = 1; i <= 60; ++i) {
            const double v = llr(0.05 * i, 0.05, qpsk)[0];
            CHECK(v > prev);
            prev = v;
        }
        CHECK(prev > 100.0);
    }

    SUBCASE("bit posteriors recombine from LLRs")
    {
        Rng rng(6);
        for (int m : {16, 64}) {
            const Constellation c = Constellation::make(m);
            for (int i = 0; i < 2000; ++i) {
                const double r = 2.5 * rng.gaussian();
                const double tau2 = 0.02 + 2.0 * rng.uniform();
                const auto l = llr(r, tau2, c);
                double mean = 0.0, var = 0.0, p1[8];
                enumerate_posterior(r, tau2, c, mean, var, p1);
                for (int b = 0; b < c.bits_per_dim(); ++b) {
                    const double sig = 1.0 / (1.0 + std::exp(-l[static_cast<std::size_t>(b)]));
                    CHECK(std::abs(sig - p1[b]) < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("hard decision")
{
    const Constellation c16 = Constellation::make(16);

    SUBCASE("exact points and midpoint tie rule")
    {
        for (int k = 0; k < 4; ++k)
            CHECK(hard_decision(c16.amp(k), c16) == k);
        CHECK(hard_decision(0.5 * (c16.amp(1) + c16.amp(2)), c16) == 1);
        CHECK(hard_decision(0.5 * (c16.amp(0) + c16.amp(1)), c16) == 0);
    }

    SUBCASE("agrees with the small-variance posterior argmax")
    {
        Rng rng(8);
        for (int i = 0; i < 1000; ++i) {
            const double r = 2.0 * rng.gaussian();
            const int hard = hard_decision(r, c16);
            // Enumerate weights at a tiny variance; the argmax must coincide
            // except exactly at midpoints, which the draw never hits.
            int best = 0;
            double bw = -1e300;
            for (int k = 0; k < 4; ++k) {
                const double a = c16.amp(k);
                const double lw = -(r - a) * (r - a) / 1e-9;
                if (lw > bw) {
                    bw = lw;
                    best = k;
                }
            }
            CHECK(hard == best);
        }
    }
}

TEST_SUITE_END();
