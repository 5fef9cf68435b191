// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace falcon {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Invalid dimensions, out-of-range arguments or inconsistent inputs.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Linear scale power from dBm (milliwatts).
inline double dbm_to_mw(double p_dbm) { return std::pow(10.0, p_dbm / 10.0); }

/// Signed slack of one named constraint; non-negative means satisfied.
struct Slack {
    std::string name;
    int index = -1;  // user index, -1 for global constraints
    double value = 0.0;
};

/// Most violated entry of a slack list (value is the minimum slack).
inline Slack worst_slack(const std::vector<Slack>& slacks) {
    Slack worst{"none", -1, std::numeric_limits<double>::infinity()};
    for (const auto& s : slacks)
        if (s.value < worst.value) worst = s;
    return worst;
}

}  // namespace falcon
