// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "falcon/barrier.hpp"
#include "falcon/types.hpp"

namespace falcon {

using SolveStatus = ipm::Status;

/**
 * One convex instance of the SDP relaxation with fixed AM-GM parameters:
 *
 *   max  sum_k mu_k (C_k + log2 r_k)
 *   s.t. (alpha_k/2) r_k^2 + (1/(2 alpha_k)) t_k^2 - t_k - Tr(G_k B_k) <= 0
 *        (beta_k/2)  z_k^2 + (1/(2 beta_k))  q_k^2 - q_k - Tr(G_k M)   <= 0
 *        sum_{j != k} Tr(G_k B_j) + sigma2 <= t_k
 *        sum_j Tr(G_k B_j) + sigma2 <= q_k
 *        C_0 + sum_j C_j <= log2 z_k
 *        Tr(F^H F M) + sum_k Tr(F^H F B_k) <= P_tx
 *        C_0 >= C0_th, C_k >= 0, r_k >= 1, z_k >= 1, B_k >= 0, M >= 0
 *
 * In the quadratic bounds t_k and q_k enter divided by sigma2, i.e. alpha and
 * beta are dimensionless parameters of the noise-normalized problem.
 */
struct SubproblemParams {
    std::vector<CMatrix> grams;   // G_k = g_k g_k^H, n_rf x n_rf
    CMatrix fgram;                // F^H F
    double sigma2 = 1.0;          // mW
    double p_tx = 1.0;            // mW
    std::vector<double> weights;
    double c0_min = 0.0;          // bps/Hz
    std::vector<double> alpha;
    std::vector<double> beta;
    bool ldm = false;             // pin C_k = 0

    int k_users() const { return static_cast<int>(grams.size()); }
    int n_rf() const { return static_cast<int>(fgram.rows()); }
    /// Throws ParameterError when an invariant is broken.
    void validate() const;
};

struct SubproblemSolution {
    std::vector<CMatrix> b_mats;
    CMatrix m_mat;
    double c0 = 0.0;
    std::vector<double> c;
    std::vector<double> r, t, z, q;
    double objective = 0.0;
    SolveStatus status = SolveStatus::NumericalFailure;
    double kkt_residual = 0.0;
    double phase1_value = 0.0;  // minimum max-violation (positive for Infeasible)
    int newton_steps = 0;
};

SubproblemSolution solve_subproblem(const SubproblemParams& params, double tol = 1e-7,
                                    const std::optional<SubproblemSolution>& warm = std::nullopt);

/// sum_k mu_k (C_k + log2 r_k) recomputed from the fields.
double subproblem_objective(const SubproblemSolution& sol, const std::vector<double>& weights);

struct SlackReport {
    std::vector<Slack> slacks;
    bool feasible = false;
};

/**
 * Signed slack of every constraint family, in physical units (mW for power
 * and interference rows, bps/Hz for rate rows, eigenvalues for PSD rows).
 * feasible compares each slack against -tol on its natural scale.
 */
SlackReport check_feasible(const SubproblemSolution& sol, const SubproblemParams& params,
                           double tol = 1e-6);

/// Principal eigenpair sqrt(l1) u1 with the largest entry made real non-negative, plus l2/l1.
std::pair<CVector, double> extract_rank_one(const CMatrix& h);

/**
 * Lower the rank of a PSD solution while keeping Tr(A_i X) for every A_i.
 * Interior-point methods return the relative interior of the optimal face,
 * which is rank > 1 whenever that face is (orthogonal effective channels, for
 * one). Steps along the null space of the trace maps until none is left.
 * Eigenvalues below rel_tol * lambda_max are carried along untouched.
 */
CMatrix reduce_rank(const CMatrix& x, const std::vector<CMatrix>& constraints, double rel_tol = 1e-7);

}  // namespace falcon
