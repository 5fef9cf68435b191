// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"

namespace falcon {

/// Uniform grid lo, lo + h, ..., hi (points >= 2) or the single value lo.
struct GridAxis {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    int points = 2;

    double value(int i) const;
};

/// Where one beam parameter comes from.
struct ParamSource {
    enum class Kind { Fixed, Axis, Residual };
    Kind kind = Kind::Fixed;
    double value = 0.0;  // Fixed
    int axis = -1;       // Axis

    static ParamSource fixed(double v) { return {Kind::Fixed, v, -1}; }
    static ParamSource on_axis(int a) { return {Kind::Axis, 0.0, a}; }
    /// Power only: whatever the other beams leave of P_tx.
    static ParamSource residual() { return {Kind::Residual, 0.0, -1}; }
};

/**
 * One beam x = sqrt(p / ||F v||^2) v with v = e_1 (n_rf = 1) or
 * v = [cos phi, sin phi e^{j chi}] (n_rf = 2). p is the transmit power.
 */
struct BeamGrid {
    ParamSource power;
    ParamSource phi = ParamSource::fixed(0.0);
    ParamSource chi = ParamSource::fixed(0.0);
};

/**
 * Grid over precoder parameterizations. beams holds b_1..b_K then m.
 * At most one power may be Residual; points whose residual is negative are skipped.
 */
struct GridSpec {
    std::vector<GridAxis> axes;
    std::vector<BeamGrid> beams;
    std::string description;

    static constexpr std::uint64_t kMaxPoints = 100'000'000;

    std::uint64_t total_points() const;
    /// Throws ParameterError on a size-guard or shape violation.
    void validate(int k_users, int n_rf) const;

    /// K = 1, n_rf = 1: private power on an axis over [0, P], multicast takes the rest.
    static GridSpec scalar(double p_tx, int points);
    /**
     * K = 2, n_rf = 2 with (near-)orthogonal effective channels: b_k along e_k
     * with powers on two axes, multicast angle phi on a third, multicast power residual.
     */
    static GridSpec two_user_diagonal(double p_tx, int points);
};

struct OracleResult {
    bool feasible = false;
    double wsr = 0.0;
    std::vector<double> point;  // axis values of the best point
    std::vector<CVector> b_vecs;
    CVector m_vec;
    double c0 = 0.0;
    std::vector<double> c;
    std::uint64_t evaluated = 0;
    std::uint64_t feasible_points = 0;
};

/**
 * Exhaustive WSR maximization over the grid. For fixed beams the best split is
 * closed-form: C_0 = C0_th and R_min^(c) - C0_th goes to the largest weight
 * (lowest index on ties); the point is feasible iff R_min^(c) >= C0_th.
 * Ties between grid points resolve to the lexicographically smallest index.
 * grid_csv, when given, receives every evaluated point (single-threaded).
 */
OracleResult brute_force_wsr(const ChannelSet& channels, const AnalogPrecoder& analog,
                             const std::vector<double>& weights, double c0_min, double p_tx,
                             double sigma2, const GridSpec& grid, int threads = 1,
                             std::ostream* grid_csv = nullptr);

/// log2(1 + p_tx gain2 / sigma2) - c0_min; throws ParameterError when c0_min exceeds that capacity.
double scalar_optimum(double p_tx, double sigma2, double gain2, double c0_min);

}  // namespace falcon
