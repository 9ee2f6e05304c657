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

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mimodet/train.hpp"

namespace mimodet {

namespace {

[[noreturn]] void parse_error(const std::string &path, int line, const std::string &what)
{
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

} // namespace

void save_params(const std::string &path, const NetParams &params)
{
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (f == nullptr)
        throw std::runtime_error("cannot open " + path + " for writing");
    const auto &m = params.meta;
    std::fprintf(f, "oampnet2-params v1\n");
    std::fprintf(f, "snr_db=%.17g rho=%.17g M=%d nt=%d nr=%d T=%d L=%d\n", m.snr_db, m.rho,
                 m.mod_order, m.n_t, m.n_r, params.depth(), m.turbo_iters);
    for (int t = 0; t < params.depth(); ++t) {
        const auto &lp = params.layers[static_cast<std::size_t>(t)];
        std::fprintf(f, "%d %.17g %.17g %.17g %.17g\n", t + 1, lp.gamma, lp.phi, lp.xi,
                     lp.theta);
    }
    std::fclose(f);
}

NetParams load_params(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);

    std::string line;
    int lineno = 0;

    if (!std::getline(in, line))
        parse_error(path, 1, "empty file");
    ++lineno;
    if (line != "oampnet2-params v1")
        parse_error(path, lineno, "bad header or unsupported version: '" + line + "'");

    if (!std::getline(in, line))
        parse_error(path, 2, "missing meta line");
    ++lineno;
    NetParams p;
    int depth = 0;
    if (std::sscanf(line.c_str(), "snr_db=%lg rho=%lg M=%d nt=%d nr=%d T=%d L=%d",
                    &p.meta.snr_db, &p.meta.rho, &p.meta.mod_order, &p.meta.n_t, &p.meta.n_r,
                    &depth, &p.meta.turbo_iters) != 7)
        parse_error(path, lineno, "malformed meta line");
    if (depth < 1)
        parse_error(path, lineno, "layer count must be >= 1");
    p.meta.layers = depth;

    p.layers.resize(static_cast<std::size_t>(depth));
    for (int t = 0; t < depth; ++t) {
        if (!std::getline(in, line))
            parse_error(path, lineno + 1, "expected " + std::to_string(depth) +
                                              " layer lines, got " + std::to_string(t));
        ++lineno;
        auto &lp = p.layers[static_cast<std::size_t>(t)];
        int idx = 0;
        if (std::sscanf(line.c_str(), "%d %lg %lg %lg %lg", &idx, &lp.gamma, &lp.phi, &lp.xi,
                        &lp.theta) != 5)
            parse_error(path, lineno, "malformed layer line");
        if (idx != t + 1)
            parse_error(path, lineno, "layer index out of order");
    }
    return p;
}

void check_params_meta(const NetParams &params, const SystemConfig &cfg, bool strict)
{
    const auto &m = params.meta;
    if (params.depth() != cfg.layers)
        throw std::invalid_argument("parameter file has T=" + std::to_string(params.depth()) +
                                    " layers but the run requests T=" +
                                    std::to_string(cfg.layers) + "; layers are positional");

    std::ostringstream diff;
    if (m.snr_db != cfg.snr_db)
        diff << " snr_db(" << m.snr_db << "->" << cfg.snr_db << ")";
    if (m.rho != cfg.rho)
        diff << " rho(" << m.rho << "->" << cfg.rho << ")";
    if (m.mod_order != cfg.mod_order)
        diff << " M(" << m.mod_order << "->" << cfg.mod_order << ")";
    if (m.n_t != cfg.n_t || m.n_r != cfg.n_r)
        diff << " geometry(" << m.n_t << "x" << m.n_r << "->" << cfg.n_t << "x" << cfg.n_r
             << ")";
    const std::string d = diff.str();
    if (d.empty())
        return;
    if (strict)
        throw std::invalid_argument("parameter training context does not match the run:" + d);
    std::fprintf(stderr, "mimodet: warning: parameter context mismatch:%s\n", d.c_str());
}

} // namespace mimodet
