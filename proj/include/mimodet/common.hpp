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

#ifndef MIMODET_COMMON_HPP
#define MIMODET_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace mimodet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

// Floor applied to the error-variance estimates v² and τ².
inline constexpr double kVarFloor = 5e-13;

/// Thrown when a detector produces a non-finite intermediate quantity.
class NumericalError : public std::runtime_error {
  public:
    NumericalError(int layer, const std::string &quantity)
        : std::runtime_error("non-finite " + quantity + " at layer " + std::to_string(layer)),
          layer_(layer), quantity_(quantity) {}
    int layer() const { return layer_; }
    const std::string &quantity() const { return quantity_; }

  private:
    int layer_;
    std::string quantity_;
};

inline CMat kron(const CMat &a, const CMat &b)
{
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

} // namespace mimodet

#endif
