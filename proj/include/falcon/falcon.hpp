// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/rates.hpp"
#include "falcon/subproblem.hpp"

namespace falcon {

enum class SplitMode { RS, LDM };

std::string to_string(SplitMode mode);

struct FalconConfig {
    int max_iters = 60;
    double eps = 1e-4;             // stop when the objective increment drops below this
    double subproblem_tol = 1e-7;
    SplitMode mode = SplitMode::RS;

    void validate() const;
};

enum class RunStatus { Converged, IterationCap, Infeasible, NumericalFailure };

std::string to_string(RunStatus status);

/// Final precoders and rate accounting of one optimization run (FALCON or WMMSE).
struct RsSolution {
    std::string method = "falcon";
    AnalogPrecoder analog = identity_analog(1);
    std::vector<CVector> b_vecs;
    CVector m_vec;
    double c0 = 0.0;
    std::vector<double> c;
    std::vector<double> per_user_private_rate;
    std::vector<double> per_user_common_rate;
    double common_rate = 0.0;  // min_k per_user_common_rate
    std::vector<double> unicast_rate;
    double wsr = 0.0;
    std::vector<double> trace;
    int iterations_used = 0;
    RunStatus status = RunStatus::NumericalFailure;
    std::vector<double> rank_residuals;  // M first, then B_1..B_K
    double relaxation_gap = 0.0;         // |wsr - last relaxation objective|
    bool rank_one_violation = false;
    std::vector<Slack> slacks;
    std::vector<double> weights;

    // WMMSE tagging
    std::string init_method;
    double p_m0_fraction = 0.0;

    bool ok() const {
        return status == RunStatus::Converged || status == RunStatus::IterationCap;
    }
};

/// Algorithm initialization: alpha = beta = 1 for every user.
std::pair<std::vector<double>, std::vector<double>> init_parameters(int k_users);

/**
 * Step-wise FALCON driver. Each step solves the convex relaxation at the
 * current (alpha, beta), records its objective and contracts the parameters
 * with alpha_k = t_k / r_k and beta_k = q_k / z_k (noise-normalized t, q).
 */
class FalconIterator {
public:
    FalconIterator(const ChannelSet& channels, const AnalogPrecoder& analog,
                   const ProblemParams& problem, const FalconConfig& config);

    /// Solve once and update the parameters. Returns the subproblem status.
    SolveStatus step();

    const std::vector<double>& trace() const { return trace_; }
    /// Solution of the latest successful step.
    const SubproblemSolution& last() const { return *last_; }
    /// Parameters the latest successful step was solved with.
    const SubproblemParams& last_params() const { return last_params_; }
    /// Parameters the next step will use.
    const SubproblemParams& params() const { return params_; }
    bool has_solution() const { return last_.has_value(); }

private:
    FalconConfig config_;
    SubproblemParams params_;
    SubproblemParams last_params_;
    std::optional<SubproblemSolution> last_;
    std::vector<double> trace_;
};

RsSolution run_falcon(const ChannelSet& channels, const AnalogPrecoder& analog,
                      const std::vector<double>& weights, double c0_min, double p_tx,
                      double sigma2, const FalconConfig& config = {});

/// Rank-one extraction and vector-level rate accounting of a relaxation optimum.
RsSolution assemble_solution(const ChannelSet& channels, const AnalogPrecoder& analog,
                             const ProblemParams& problem, const SubproblemSolution& relaxed);

/**
 * Vector-level rate accounting shared by both optimizers. C_0 and C_k are
 * trimmed (C_k first, then C_0 down to the threshold) when their sum exceeds
 * the common rate the vectors actually support.
 */
void finalize_rates(RsSolution& sol, const ChannelSet& channels, const ProblemParams& problem);

}  // namespace falcon
