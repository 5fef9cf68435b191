// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "falcon/types.hpp"

/**
 * Small dense primal log-barrier interior-point method.
 *
 * Solves   minimize f_0(x)  s.t.  f_i(x) <= 0,  X_b(x) > 0 (Hermitian PD blocks)
 * where every f is a SmoothFunction: affine + convex quadratic + separable
 * c*x_v^2 and -c*log(x_v) terms. That family covers both the SDP relaxation
 * solved by FALCON (log-rate objective, AM-GM quadratic bounds, log common-rate
 * constraint) and the convex QCQP of the WMMSE precoder step.
 *
 * Centering uses damped Newton with feasibility-preserving backtracking; the
 * barrier weight grows geometrically. A phase-I problem minimizing a shared
 * violation variable s supplies a strictly feasible start or an infeasibility
 * certificate.
 */
namespace falcon::ipm {

struct ScalarTerm {
    int var = 0;
    double coef = 0.0;
};

class SmoothFunction {
public:
    explicit SmoothFunction(int n_vars = 0) : linear(RVector::Zero(n_vars)) {}

    double constant = 0.0;
    RVector linear;
    RMatrix quadratic;                  // 0.5 x' Q x; empty when absent
    std::vector<ScalarTerm> squares;    // coef * x_v^2, coef >= 0
    std::vector<ScalarTerm> neg_logs;   // -coef * log(x_v), coef >= 0

    bool in_domain(const RVector& x) const;
    double value(const RVector& x) const;
    RVector gradient(const RVector& x) const;
    /// h += scale * Hessian(x)
    void add_hessian(const RVector& x, double scale, RMatrix& h) const;
};

/// Hermitian matrix stored as dim^2 reals starting at offset: diagonal, then (re, im) per upper pair.
struct HermitianBlock {
    int offset = 0;
    int dim = 1;
    int size() const { return dim * dim; }
};

CMatrix unpack_hermitian(const RVector& x, const HermitianBlock& block);
void pack_hermitian(const CMatrix& value, const HermitianBlock& block, RVector& x);
/// Coefficients c with Tr(A X) = c' x_block for Hermitian A.
RVector trace_functional(const CMatrix& a);

struct Problem {
    int n_vars = 0;
    SmoothFunction objective;
    std::vector<SmoothFunction> constraints;
    std::vector<HermitianBlock> blocks;

    /// Number of scalar barrier terms: constraints plus block dimensions.
    int barrier_degree() const;
};

enum class Status { Optimal, Infeasible, MaxIterations, NumericalFailure };

std::string to_string(Status status);

struct Options {
    double tol = 1e-7;                      // relative duality gap m/t / (1 + |f0|)
    double t0 = 1.0;
    double mu = 10.0;                       // barrier growth factor
    int max_outer = 40;
    int max_newton = 200;                   // per centering
    double infeasibility_threshold = 1e-7;  // phase-I optimum above this means Infeasible
    int retries = 2;
};

struct Result {
    Status status = Status::NumericalFailure;
    RVector x;
    double objective = 0.0;
    double gap = 0.0;             // m/t at the returned point
    double phase1_value = 0.0;    // best max-violation found (<= 0 when phase I was skipped)
    double relaxation = 0.0;      // uniform constraint shift used for marginally feasible problems
    int newton_steps = 0;
};

/**
 * Solve from x0. x0 must lie in the domain of every log term and make every
 * block positive definite; it need not satisfy the inequality constraints.
 */
Result solve(const Problem& problem, const RVector& x0, const Options& options = {});

/// Largest f_i(x0), -inf without constraints.
double max_violation(const Problem& problem, const RVector& x);

/// Minimum eigenvalue over all blocks.
double min_block_eigenvalue(const Problem& problem, const RVector& x);

}  // namespace falcon::ipm
