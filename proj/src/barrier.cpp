// SPDX-License-Identifier: Apache-2.0
#include "falcon/barrier.hpp"

#include <cmath>
#include <limits>
#include <functional>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace falcon::ipm {

// ---------------------------------------------------------------------------
// SmoothFunction

bool SmoothFunction::in_domain(const RVector& x) const {
    for (const auto& term : neg_logs)
        if (!(x[term.var] > 0.0)) return false;
    return true;
}

double SmoothFunction::value(const RVector& x) const {
    double v = constant + linear.dot(x);
    if (quadratic.size() > 0) v += 0.5 * x.dot(quadratic * x);
    for (const auto& term : squares) v += term.coef * x[term.var] * x[term.var];
    for (const auto& term : neg_logs) v -= term.coef * std::log(x[term.var]);
    return v;
}

RVector SmoothFunction::gradient(const RVector& x) const {
    RVector g = linear;
    if (quadratic.size() > 0) g.noalias() += quadratic * x;
    for (const auto& term : squares) g[term.var] += 2.0 * term.coef * x[term.var];
    for (const auto& term : neg_logs) g[term.var] -= term.coef / x[term.var];
    return g;
}

void SmoothFunction::add_hessian(const RVector& x, double scale, RMatrix& h) const {
    if (quadratic.size() > 0) h.noalias() += scale * quadratic;
    for (const auto& term : squares) h(term.var, term.var) += scale * 2.0 * term.coef;
    for (const auto& term : neg_logs)
        h(term.var, term.var) += scale * term.coef / (x[term.var] * x[term.var]);
}

// ---------------------------------------------------------------------------
// Hermitian parameterization

CMatrix unpack_hermitian(const RVector& x, const HermitianBlock& block) {
    const int d = block.dim;
    CMatrix m(d, d);
    int idx = block.offset;
    for (int a = 0; a < d; ++a) m(a, a) = x[idx++];
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            const cdouble v(x[idx], x[idx + 1]);
            idx += 2;
            m(a, b) = v;
            m(b, a) = std::conj(v);
        }
    }
    return m;
}

void pack_hermitian(const CMatrix& value, const HermitianBlock& block, RVector& x) {
    const int d = block.dim;
    int idx = block.offset;
    for (int a = 0; a < d; ++a) x[idx++] = value(a, a).real();
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            // average with the mirrored entry so slightly non-Hermitian input is projected
            const cdouble v = 0.5 * (value(a, b) + std::conj(value(b, a)));
            x[idx++] = v.real();
            x[idx++] = v.imag();
        }
    }
}

RVector trace_functional(const CMatrix& a) {
    const int d = static_cast<int>(a.rows());
    RVector c(d * d);
    int idx = 0;
    for (int i = 0; i < d; ++i) c[idx++] = a(i, i).real();
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            c[idx++] = 2.0 * a(i, j).real();
            c[idx++] = 2.0 * a(i, j).imag();
        }
    }
    return c;
}

int Problem::barrier_degree() const {
    int m = static_cast<int>(constraints.size());
    for (const auto& b : blocks) m += b.dim;
    return m;
}

std::string to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "Optimal";
        case Status::Infeasible: return "Infeasible";
        case Status::MaxIterations: return "MaxIterations";
        case Status::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

double max_violation(const Problem& problem, const RVector& x) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& f : problem.constraints) {
        if (!f.in_domain(x)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, f.value(x));
    }
    return worst;
}

double min_block_eigenvalue(const Problem& problem, const RVector& x) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : problem.blocks) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(unpack_hermitian(x, b), Eigen::EigenvaluesOnly);
        lo = std::min(lo, eig.eigenvalues().minCoeff());
    }
    return lo;
}

namespace {

// -log det of every block, nullopt when some block is not positive definite
std::optional<double> neg_log_det(const Problem& problem, const RVector& x) {
    double total = 0.0;
    for (const auto& b : problem.blocks) {
        Eigen::LLT<CMatrix> llt(unpack_hermitian(x, b));
        if (llt.info() != Eigen::Success) return std::nullopt;
        for (int i = 0; i < b.dim; ++i) {
            const double diag = llt.matrixLLT()(i, i).real();
            if (!(diag > 0.0)) return std::nullopt;
            total -= 2.0 * std::log(diag);
        }
    }
    return total;
}

// barrier objective t f0 - sum log(-f_i) - sum log det X_b
std::optional<double> barrier_value(const Problem& problem, double t, const RVector& x) {
    if (!x.allFinite() || !problem.objective.in_domain(x)) return std::nullopt;
    double phi = t * problem.objective.value(x);
    for (const auto& f : problem.constraints) {
        if (!f.in_domain(x)) return std::nullopt;
        const double v = f.value(x);
        if (!(v < 0.0)) return std::nullopt;
        phi -= std::log(-v);
    }
    const auto ld = neg_log_det(problem, x);
    if (!ld) return std::nullopt;
    return phi + *ld;
}

// derivatives of everything except the block log-det terms
void barrier_derivatives(const Problem& problem, double t, const RVector& x, RVector& g,
                         RMatrix& h) {
    const int n = problem.n_vars;
    g = t * problem.objective.gradient(x);
    h.setZero(n, n);
    problem.objective.add_hessian(x, t, h);
    for (const auto& f : problem.constraints) {
        const double v = f.value(x);
        const RVector gf = f.gradient(x);
        g.noalias() += gf / (-v);
        h.noalias() += (gf / v) * (gf / v).transpose();
        f.add_hessian(x, 1.0 / (-v), h);
    }
}

// Jacobi-scaled Cholesky solve of h dx = -g with one refinement step. The
// diagonal is regularized until the factorization yields a descent direction.
std::optional<RVector> newton_direction(const RMatrix& h, const RVector& g) {
    const int n = static_cast<int>(g.size());
    RVector scale(n);
    for (int i = 0; i < n; ++i) scale[i] = h(i, i) > 0.0 ? 1.0 / std::sqrt(h(i, i)) : 1.0;
    RMatrix hs = scale.asDiagonal() * h * scale.asDiagonal();
    const RVector rhs = -scale.cwiseProduct(g);
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        if (reg > 0.0) hs.diagonal().array() += reg;
        Eigen::LLT<RMatrix> llt(hs);
        if (llt.info() == Eigen::Success) {
            RVector y = llt.solve(rhs);
            y += llt.solve(rhs - hs * y);
            if (y.allFinite() && rhs.dot(y) > 0.0) return RVector(scale.cwiseProduct(y));
        }
        reg = reg == 0.0 ? 1e-12 : reg * 100.0;
    }
    return std::nullopt;
}

enum class CenterOutcome { Converged, Stopped, Failed };

struct Centering {
    CenterOutcome outcome = CenterOutcome::Failed;
    int steps = 0;
};

// Damped Newton on the barrier objective at weight t. stop_early is consulted
// after every accepted step.
struct NewtonStep {
    RVector dx;
    double decrement2 = 0.0;
};

// Newton step in congruence-scaled block coordinates X_b = L Y L^H, where
// X_b = L L^H at the iterate. The log-det Hessian there is the identity metric,
// so the system stays well conditioned as blocks approach rank one.
std::optional<NewtonStep> scaled_newton(const Problem& problem, double t, const RVector& x) {
    RVector g;
    RMatrix h;
    barrier_derivatives(problem, t, x, g, h);
    std::vector<RMatrix> maps;
    for (const auto& b : problem.blocks) {
        Eigen::LLT<CMatrix> llt(unpack_hermitian(x, b));
        if (llt.info() != Eigen::Success) return std::nullopt;
        const CMatrix l = llt.matrixL();
        const int s = b.size();
        const HermitianBlock local{0, b.dim};
        RMatrix map(s, s);
        RVector e(s), col(s);
        for (int j = 0; j < s; ++j) {
            e.setZero();
            e[j] = 1.0;
            pack_hermitian(l * unpack_hermitian(e, local) * l.adjoint(), local, col);
            map.col(j) = col;
        }
        g.segment(b.offset, s) = map.transpose() * g.segment(b.offset, s);
        h.middleRows(b.offset, s) = map.transpose() * h.middleRows(b.offset, s);
        h.middleCols(b.offset, s) = h.middleCols(b.offset, s) * map;
        for (int a = 0; a < b.dim; ++a) {
            g[b.offset + a] -= 1.0;
            h(b.offset + a, b.offset + a) += 1.0;
        }
        for (int j = b.dim; j < s; ++j) h(b.offset + j, b.offset + j) += 2.0;
        maps.push_back(std::move(map));
    }
    const auto dy = newton_direction(h, g);
    if (!dy) return std::nullopt;
    NewtonStep out{*dy, -g.dot(*dy)};
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const auto& b = problem.blocks[i];
        out.dx.segment(b.offset, b.size()) = maps[i] * dy->segment(b.offset, b.size());
    }
    return out;
}

Centering center(const Problem& problem, double t, RVector& x, int max_newton,
                 const std::function<bool(const RVector&)>& stop_early) {
    constexpr double kDecrementTol = 1e-5;  // on lambda^2 / 2
    constexpr double kArmijo = 0.25;
    Centering result;
    auto phi = barrier_value(problem, t, x);
    if (!phi) return result;
    double last_decrement2 = std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_newton; ++it) {
        const auto newton = scaled_newton(problem, t, x);
        if (!newton) return result;
        const RVector* dx = &newton->dx;
        const double decrement2 = newton->decrement2;
        const double slope = -decrement2;
        if (!std::isfinite(decrement2)) return result;
        if (decrement2 < 0.0) {
            // an indefinite-looking direction at rounding level means we are centered
            if (decrement2 > -1e-4) result.outcome = CenterOutcome::Converged;
            return result;
        }
        if (decrement2 / 2.0 <= kDecrementTol) {
            result.outcome = CenterOutcome::Converged;
            return result;
        }

        double step = 1.0;
        std::optional<double> trial;
        bool accepted = false;
        const double noise = 1e-13 * (1.0 + std::abs(*phi));
        for (int ls = 0; ls < 80; ++ls) {
            const RVector candidate = x + step * (*dx);
            trial = barrier_value(problem, t, candidate);
            if (trial && *trial <= *phi + kArmijo * step * slope + noise) {
                x = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++result.steps;
        if (!accepted) {
            // no descent left at machine precision: accept as centered when the decrement is small
            result.outcome =
                decrement2 < 1e-5 ? CenterOutcome::Converged : CenterOutcome::Failed;
            return result;
        }
        phi = trial;
        last_decrement2 = decrement2;
        if (stop_early && stop_early(x)) {
            result.outcome = CenterOutcome::Stopped;
            return result;
        }
    }
    result.outcome = last_decrement2 < 1e-4 ? CenterOutcome::Converged : CenterOutcome::Failed;
    return result;
}

Problem with_shift(const Problem& problem, double shift) {
    Problem shifted = problem;
    for (auto& f : shifted.constraints) f.constant -= shift;
    return shifted;
}

SmoothFunction extend(const SmoothFunction& f, int n) {
    SmoothFunction out(n);
    out.constant = f.constant;
    out.linear.head(f.linear.size()) = f.linear;
    if (f.quadratic.size() > 0) {
        out.quadratic = RMatrix::Zero(n, n);
        out.quadratic.topLeftCorner(f.quadratic.rows(), f.quadratic.cols()) = f.quadratic;
    }
    out.squares = f.squares;
    out.neg_logs = f.neg_logs;
    return out;
}

struct PhaseOne {
    enum class Outcome { Feasible, Infeasible, Marginal, Failed } outcome = Outcome::Failed;
    RVector x;
    double value = 0.0;
    int steps = 0;
};

PhaseOne phase_one(const Problem& problem, const RVector& x0, const Options& options,
                   double t0, double mu) {
    const int n = problem.n_vars;
    Problem aug;
    aug.n_vars = n + 1;
    aug.blocks = problem.blocks;
    aug.objective = SmoothFunction(n + 1);
    aug.objective.linear[n] = 1.0;
    for (const auto& f : problem.constraints) {
        auto fa = extend(f, n + 1);
        fa.linear[n] = -1.0;
        aug.constraints.push_back(std::move(fa));
    }

    PhaseOne out;
    RVector x(n + 1);
    x.head(n) = x0;
    x[n] = max_violation(problem, x0) + 1.0;
    if (!std::isfinite(x[n])) return out;

    const double m = aug.barrier_degree();
    const double thr = options.infeasibility_threshold;
    auto feasible = [n](const RVector& z) { return z[n] < 0.0; };
    // keep t * s comparable to the barrier degree so the first centering is short
    double t = t0 * std::min(1.0, m / std::abs(x[n]));
    for (int outer = 0; outer < options.max_outer; ++outer) {
        const auto c = center(aug, t, x, options.max_newton, feasible);
        out.steps += c.steps;
        out.value = x[n];
        out.x = x.head(n);
        if (c.outcome == CenterOutcome::Stopped || x[n] < 0.0) {
            out.outcome = PhaseOne::Outcome::Feasible;
            return out;
        }
        if (c.outcome == CenterOutcome::Failed) return out;
        const double gap = m / t;
        if (x[n] - gap > thr) {
            out.outcome = PhaseOne::Outcome::Infeasible;
            return out;
        }
        if (gap <= 0.1 * thr) {
            out.outcome = x[n] > thr ? PhaseOne::Outcome::Infeasible : PhaseOne::Outcome::Marginal;
            return out;
        }
        t *= mu;
    }
    return out;
}

Result phase_two(const Problem& problem, RVector x, const Options& options, double t0,
                 double mu) {
    Result res;
    const double m = problem.barrier_degree();
    double t = t0;
    RVector last_good = x;
    bool centered_once = false;
    for (int outer = 0; outer < options.max_outer; ++outer) {
        const auto c = center(problem, t, x, options.max_newton, nullptr);
        res.newton_steps += c.steps;
        if (c.outcome == CenterOutcome::Failed) {
            res.status = Status::NumericalFailure;
            res.x = centered_once ? last_good : x;
            res.objective = problem.objective.value(res.x);
            res.gap = m / (t / mu);
            return res;
        }
        centered_once = true;
        last_good = x;
        const double f0 = problem.objective.value(x);
        const double gap = m / t;
        if (gap <= options.tol * (1.0 + std::abs(f0))) {
            res.status = Status::Optimal;
            res.x = x;
            res.objective = f0;
            res.gap = gap;
            return res;
        }
        t *= mu;
    }
    res.status = Status::MaxIterations;
    res.x = x;
    res.objective = problem.objective.value(x);
    res.gap = m / (t / mu);
    return res;
}

}  // namespace

Result solve(const Problem& problem, const RVector& x0, const Options& options) {
    if (x0.size() != problem.n_vars) throw ParameterError("ipm::solve: x0 has wrong size");
    if (!problem.objective.in_domain(x0) || !neg_log_det(problem, x0))
        throw ParameterError("ipm::solve: x0 outside the barrier domain");

    Result res;
    int total_steps = 0;
    double t0 = options.t0;
    double mu = options.mu;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        RVector start = x0;
        double shift = 0.0;
        double phase1_value = max_violation(problem, x0);
        if (!(phase1_value < 0.0)) {
            const auto p1 = phase_one(problem, x0, options, t0, mu);
            total_steps += p1.steps;
            phase1_value = p1.value;
            if (p1.outcome == PhaseOne::Outcome::Infeasible) {
                res.status = Status::Infeasible;
                res.x = p1.x;
                res.phase1_value = p1.value;
                res.newton_steps = total_steps;
                return res;
            }
            if (p1.outcome == PhaseOne::Outcome::Failed) {
                res.status = Status::NumericalFailure;
                res.x = p1.x.size() ? p1.x : x0;
                res.phase1_value = p1.value;
                t0 *= 0.1;
                mu = std::sqrt(mu);
                continue;
            }
            start = p1.x;
            if (p1.outcome == PhaseOne::Outcome::Marginal)
                shift = std::max(p1.value, 0.0) + options.infeasibility_threshold;
        }
        const Problem& target = shift > 0.0 ? with_shift(problem, shift) : problem;
        res = phase_two(target, start, options, t0, mu);
        total_steps += res.newton_steps;
        res.newton_steps = total_steps;
        res.phase1_value = phase1_value;
        res.relaxation = shift;
        if (res.status == Status::Optimal) return res;
        t0 *= 0.1;
        mu = std::sqrt(mu);
    }
    return res;
}

}  // namespace falcon::ipm
