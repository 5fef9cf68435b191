// SPDX-License-Identifier: Apache-2.0
#include "falcon/falcon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace falcon {
namespace {

constexpr double kParamFloor = 1e-8;
constexpr double kParamCeil = 1e8;
constexpr double kRankViolation = 1e-3;

double clamp_param(double v) { return std::clamp(v, kParamFloor, kParamCeil); }

}  // namespace

std::string to_string(SplitMode mode) { return mode == SplitMode::RS ? "RS" : "LDM"; }

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::Converged: return "Converged";
        case RunStatus::IterationCap: return "IterationCap";
        case RunStatus::Infeasible: return "Infeasible";
        case RunStatus::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

void FalconConfig::validate() const {
    if (max_iters < 1) throw ParameterError("FalconConfig: max_iters must be >= 1");
    if (!(eps > 0.0)) throw ParameterError("FalconConfig: eps must be > 0");
    if (!(subproblem_tol > 0.0) || subproblem_tol > 1e-2)
        throw ParameterError("FalconConfig: subproblem_tol must be in (0, 1e-2]");
}

std::pair<std::vector<double>, std::vector<double>> init_parameters(int k_users) {
    if (k_users < 1) throw ParameterError("init_parameters: k_users must be >= 1");
    return {std::vector<double>(k_users, 1.0), std::vector<double>(k_users, 1.0)};
}

FalconIterator::FalconIterator(const ChannelSet& channels, const AnalogPrecoder& analog,
                               const ProblemParams& problem, const FalconConfig& config)
    : config_(config) {
    config_.validate();
    const int K = channels.k_users();
    if (static_cast<int>(problem.weights.size()) != K)
        throw ParameterError("run_falcon: one weight per user required");
    for (double w : problem.weights)
        if (!(w > 0.0)) throw ParameterError("run_falcon: weights must be > 0");
    if (analog.mode() != AnalogMode::FullyDigital && analog.n_rf() != K)
        throw ParameterError("run_falcon: hybrid precoders need n_rf = K");

    const EffectiveChannels eff = effective_channels(analog, channels);
    for (const auto& g : eff.g) params_.grams.push_back(g * g.adjoint());
    params_.fgram = eff.fgram;
    params_.sigma2 = problem.sigma2;
    params_.p_tx = problem.p_tx;
    params_.weights = problem.weights;
    params_.c0_min = problem.c0_min;
    std::tie(params_.alpha, params_.beta) = init_parameters(K);
    params_.ldm = config_.mode == SplitMode::LDM;
    params_.validate();
}

SolveStatus FalconIterator::step() {
    SubproblemSolution sol = solve_subproblem(params_, config_.subproblem_tol, last_);
    if (sol.status != SolveStatus::Optimal && last_)
        sol = solve_subproblem(params_, config_.subproblem_tol, std::nullopt);
    if (sol.status != SolveStatus::Optimal) return sol.status;

    // The previous optimum is feasible for the contracted problem with the same
    // objective value; keep it when the solver lands below it within its gap.
    if (last_ && sol.objective < last_->objective) sol = *last_;

    trace_.push_back(sol.objective);
    last_params_ = params_;
    const double s2 = params_.sigma2;
    for (int k = 0; k < params_.k_users(); ++k) {
        params_.alpha[k] = clamp_param(sol.t[k] / s2 / sol.r[k]);
        params_.beta[k] = clamp_param(sol.q[k] / s2 / sol.z[k]);
    }
    last_ = std::move(sol);
    return SolveStatus::Optimal;
}

RsSolution run_falcon(const ChannelSet& channels, const AnalogPrecoder& analog,
                      const std::vector<double>& weights, double c0_min, double p_tx,
                      double sigma2, const FalconConfig& config) {
    const ProblemParams problem{weights, c0_min, p_tx, sigma2};
    FalconIterator it(channels, analog, problem, config);

    RunStatus status = RunStatus::IterationCap;
    for (int i = 0; i < config.max_iters; ++i) {
        const SolveStatus s = it.step();
        if (s != SolveStatus::Optimal) {
            status = (i == 0 && s == SolveStatus::Infeasible) ? RunStatus::Infeasible
                                                                : RunStatus::NumericalFailure;
            break;
        }
        const auto& tr = it.trace();
        if (tr.size() >= 2 && tr.back() - tr[tr.size() - 2] < config.eps) {
            status = RunStatus::Converged;
            break;
        }
    }

    RsSolution out;
    if (it.has_solution()) {
        out = assemble_solution(channels, analog, problem, it.last());
    } else {
        out.analog = analog;
        out.weights = weights;
    }
    out.trace = it.trace();
    out.iterations_used = static_cast<int>(out.trace.size());
    out.status = status;
    if (it.has_solution()) out.relaxation_gap = std::abs(out.wsr - out.trace.back());
    return out;
}

void finalize_rates(RsSolution& sol, const ChannelSet& channels, const ProblemParams& problem) {
    auto report = evaluate_rates(channels, sol.analog, sol.b_vecs, sol.m_vec, sol.c0, sol.c, problem);
    const double total_c = std::accumulate(sol.c.begin(), sol.c.end(), 0.0);
    double excess = sol.c0 + total_c - report.common_rate_cap;
    if (excess > 0.0) {
        if (total_c > 0.0) {
            const double cut = std::min(excess, total_c);
            for (double& c : sol.c) c -= cut * c / total_c;
            excess -= cut;
        }
        if (excess > 0.0) sol.c0 = std::max(problem.c0_min, sol.c0 - excess);
        report = evaluate_rates(channels, sol.analog, sol.b_vecs, sol.m_vec, sol.c0, sol.c, problem);
    }
    sol.per_user_private_rate = report.rate_private;
    sol.per_user_common_rate = report.rate_common_per_user;
    sol.common_rate = report.common_rate_cap;
    sol.unicast_rate.clear();
    for (std::size_t k = 0; k < sol.c.size(); ++k)
        sol.unicast_rate.push_back(sol.c[k] + report.rate_private[k]);
    sol.wsr = report.wsr;
    sol.slacks = report.slacks;
    sol.weights = problem.weights;
}

RsSolution assemble_solution(const ChannelSet& channels, const AnalogPrecoder& analog,
                             const ProblemParams& problem, const SubproblemSolution& relaxed) {
    RsSolution sol;
    sol.analog = analog;
    const auto eff = effective_channels(analog, channels);
    std::vector<CMatrix> maps{eff.fgram};
    for (const auto& g : eff.g) maps.push_back(g * g.adjoint());
    auto [m, res_m] = extract_rank_one(reduce_rank(relaxed.m_mat, maps));
    sol.m_vec = std::move(m);
    sol.rank_residuals.push_back(res_m);
    for (const auto& b : relaxed.b_mats) {
        auto [v, res] = extract_rank_one(reduce_rank(b, maps));
        sol.b_vecs.push_back(std::move(v));
        sol.rank_residuals.push_back(res);
    }
    sol.rank_one_violation = res_m > kRankViolation;
    // interior-point iterates sit a hair inside the bounds
    sol.c0 = std::max(relaxed.c0, problem.c0_min);
    sol.c = relaxed.c;
    for (double& c : sol.c) c = std::max(c, 0.0);
    finalize_rates(sol, channels, problem);
    return sol;
}

}  // namespace falcon
