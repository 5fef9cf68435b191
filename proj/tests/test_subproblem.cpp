#include <doctest.h>

#include <cmath>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/subproblem.hpp"

using namespace falcon;

namespace {

SubproblemParams scalar_params(double alpha, double beta, double c0) {
    SubproblemParams p;
    p.grams = {CMatrix::Ones(1, 1)};
    p.fgram = CMatrix::Ones(1, 1);
    p.sigma2 = 1.0;
    p.p_tx = 100.0;
    p.weights = {1.0};
    p.c0_min = c0;
    p.alpha = {alpha};
    p.beta = {beta};
    return p;
}

// Scalar relaxation with sigma2 = 1, G = 1, full power: for a private power pb the
// best bounds decouple. r is maximal at t = max(alpha, 1), z at q = max(beta, pb + 1).
double scalar_relaxation_value(double pb, double alpha, double beta, double p, double c0) {
    const double t = std::max(alpha, 1.0);
    const double r2 = 2.0 * (pb + t - t * t / (2.0 * alpha)) / alpha;
    const double q = std::max(beta, pb + 1.0);
    const double z2 = 2.0 * ((p - pb) + q - q * q / (2.0 * beta)) / beta;
    if (r2 < 1.0 || z2 < 1.0) return -INFINITY;
    const double common = 0.5 * std::log2(z2);
    if (common < c0) return -INFINITY;
    return 0.5 * std::log2(r2) + (common - c0);
}

double scalar_grid_optimum(double alpha, double beta, double c0) {
    double best = -INFINITY;
    const int n = 200000;
    for (int i = 0; i <= n; ++i)
        best = std::max(best, scalar_relaxation_value(100.0 * i / n, alpha, beta, 100.0, c0));
    return best;
}

SubproblemParams random_params(std::uint64_t seed, int n_tx, int k, double c0) {
    const auto ch = gen_saleh_valenzuela(seed, n_tx, k);
    const auto eff = effective_channels(identity_analog(n_tx), ch);
    SubproblemParams p;
    for (const auto& g : eff.g) p.grams.push_back(g * g.adjoint());
    p.fgram = eff.fgram;
    p.sigma2 = 1000.0;
    p.p_tx = 100000.0;
    p.weights.assign(k, 1.0);
    p.c0_min = c0;
    p.alpha.assign(k, 1.0);
    p.beta.assign(k, 1.0);
    return p;
}

double slack_named(const SlackReport& r, const std::string& name, int index = -1) {
    for (const auto& s : r.slacks)
        if (s.name == name && (index < 0 || s.index == index)) return s.value;
    FAIL("missing slack " << name);
    return 0.0;
}

}  // namespace

TEST_CASE("scalar instance matches the one-dimensional grid") {
    for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{3.0, 0.5}, std::pair{0.2, 8.0}}) {
        const auto p = scalar_params(a, b, 1.0);
        const auto sol = solve_subproblem(p);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(sol.objective == doctest::Approx(scalar_grid_optimum(a, b, 1.0)).epsilon(1e-4));
        CHECK(check_feasible(sol, p).feasible);
    }
}

TEST_CASE("infeasible threshold") {
    // log2(101) < 7
    const auto sol = solve_subproblem(scalar_params(1.0, 1.0, 7.0));
    CHECK(sol.status == SolveStatus::Infeasible);
    CHECK(sol.phase1_value > 0.0);
}

TEST_CASE("ldm pins the common parts") {
    auto p = random_params(3, 4, 2, 1.5);
    p.ldm = true;
    const auto sol = solve_subproblem(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    for (double c : sol.c) CHECK(c == 0.0);

    p.ldm = false;
    const auto rs = solve_subproblem(p);
    REQUIRE(rs.status == SolveStatus::Optimal);
    CHECK(rs.objective >= sol.objective - 1e-6);
}

TEST_CASE("parameter validation") {
    auto p = scalar_params(1.0, 1.0, 1.0);
    p.alpha = {0.0};
    CHECK_THROWS_AS(solve_subproblem(p), ParameterError);
    p = scalar_params(1.0, 1.0, 1.0);
    p.sigma2 = 0.0;
    CHECK_THROWS_AS(solve_subproblem(p), ParameterError);
    p = scalar_params(1.0, 1.0, 1.0);
    p.weights = {1.0, 1.0};
    CHECK_THROWS_AS(solve_subproblem(p), ParameterError);
}

TEST_CASE("check_feasible on constructed points") {
    const auto p = random_params(5, 4, 2, 1.0);
    SubproblemSolution zero;
    zero.b_mats.assign(2, CMatrix::Zero(4, 4));
    zero.m_mat = CMatrix::Zero(4, 4);
    zero.c0 = p.c0_min;
    zero.c = {0.0, 0.0};
    zero.r = {1.0, 1.0};
    zero.z = {1.0, 1.0};
    zero.t = {1500.0, 2000.0};
    zero.q = {1000.0, 1000.0};
    const auto rep = check_feasible(zero, p);
    CHECK(slack_named(rep, "power") == doctest::Approx(p.p_tx));
    CHECK(slack_named(rep, "private_interference", 0) == doctest::Approx(1500.0 - p.sigma2));
    CHECK(slack_named(rep, "private_interference", 1) == doctest::Approx(2000.0 - p.sigma2));
    CHECK(slack_named(rep, "multicast_qos") == doctest::Approx(0.0));

    const auto sol = solve_subproblem(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const auto ok = check_feasible(sol, p);
    CHECK(ok.feasible);
    for (const auto& s : ok.slacks) CHECK(s.value >= -1e-6 * std::max(1.0, p.p_tx));

    auto big = sol;
    for (auto& b : big.b_mats) b *= 1.5;
    big.m_mat *= 1.5;
    const auto bad = check_feasible(big, p);
    CHECK(slack_named(bad, "power") < 0.0);
    CHECK_FALSE(bad.feasible);
}

TEST_CASE("extract_rank_one") {
    CVector x(3);
    x << cdouble(1.0, 2.0), cdouble(-3.0, 0.5), cdouble(0.0, 1.0);
    const auto [v, res] = extract_rank_one(x * x.adjoint());
    CHECK(res < 1e-14);
    // equal up to global phase
    CHECK(std::abs(std::abs(v.dot(x)) - x.squaredNorm()) < 1e-10);
    CHECK((v * v.adjoint() - x * x.adjoint()).norm() < 1e-10);
    // largest entry real non-negative
    CHECK(std::abs(v[1].imag()) < 1e-12);
    CHECK(v[1].real() > 0.0);

    const auto [z, zres] = extract_rank_one(CMatrix::Zero(2, 2));
    CHECK(z.norm() == 0.0);
    CHECK(zres == 0.0);

    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 1.0;
    const auto [dv, dres] = extract_rank_one(d);
    CHECK(std::abs(dv[0] - std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(dv[1]) < 1e-14);
    CHECK(dres == doctest::Approx(0.5));

    CMatrix nh = CMatrix::Zero(2, 2);
    nh(0, 1) = 1.0;
    CHECK_THROWS_AS(extract_rank_one(nh), ParameterError);
}

TEST_CASE("random instances: objective, AM-GM validity and rank") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const int k = 2 + static_cast<int>(seed % 2);
        const auto p = random_params(seed, 4, k, 1.5);
        const auto sol = solve_subproblem(p);
        if (sol.status == SolveStatus::Infeasible) continue;
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(std::abs(subproblem_objective(sol, p.weights) - sol.objective) <=
              1e-8 * std::max(1.0, std::abs(sol.objective)));
        const double s2 = p.sigma2;
        for (int u = 0; u < k; ++u) {
            const double gb = (p.grams[u] * sol.b_mats[u]).trace().real();
            const double gm = (p.grams[u] * sol.m_mat).trace().real();
            // r t - t <= Tr(G B) and z q - q <= Tr(G M), directly
            CHECK(sol.r[u] * sol.t[u] - sol.t[u] <= gb + 1e-6 * p.p_tx);
            CHECK(sol.z[u] * sol.q[u] - sol.q[u] <= gm + 1e-6 * p.p_tx);
            // AM-GM upper bound in normalized units
            const double tn = sol.t[u] / s2;
            CHECK(sol.r[u] * tn <= p.alpha[u] * sol.r[u] * sol.r[u] / 2.0 + tn * tn / (2.0 * p.alpha[u]) + 1e-12);
        }
        const auto [mv, mres] = extract_rank_one(sol.m_mat);
        CHECK(mres <= 1e-5);
        for (const auto& b : sol.b_mats) {
            const auto [bv, bres] = extract_rank_one(b);
            CHECK((bres <= 1e-5 || b.norm() <= 1e-8 * p.p_tx));
        }
    }
}

TEST_CASE("scale covariance") {
    for (std::uint64_t seed : {2u, 7u}) {
        const auto p = random_params(seed, 4, 2, 1.0);
        auto q = p;
        q.sigma2 *= 37.0;
        q.p_tx *= 37.0;
        const auto a = solve_subproblem(p);
        const auto b = solve_subproblem(q);
        REQUIRE(a.status == SolveStatus::Optimal);
        REQUIRE(b.status == SolveStatus::Optimal);
        CHECK(std::abs(a.objective - b.objective) <= 1e-6 * std::max(1.0, std::abs(a.objective)));
        CHECK((b.m_mat / 37.0 - a.m_mat).norm() <= 1e-3 * std::max(1.0, a.m_mat.norm()));
    }
}

TEST_CASE("warm start is advisory") {
    const auto p = random_params(11, 4, 2, 1.5);
    const auto cold = solve_subproblem(p);
    REQUIRE(cold.status == SolveStatus::Optimal);
    auto q = p;
    q.alpha = {1.3, 0.8};
    const auto other = solve_subproblem(q);
    REQUIRE(other.status == SolveStatus::Optimal);
    const auto warm = solve_subproblem(p, 1e-7, other);
    REQUIRE(warm.status == SolveStatus::Optimal);
    CHECK(std::abs(warm.objective - cold.objective) <= 1e-6 * (1.0 + std::abs(cold.objective)));
}

TEST_CASE("repeated analog columns") {
    // F = [f f]: only range(F^H F) matters, so the instance equals a one-column one
    const auto ch = gen_saleh_valenzuela(4, 4, 2);
    const PhaseShiftSet a(4, 2);
    CMatrix f1(4, 1);
    for (int n = 0; n < 4; ++n) f1(n, 0) = a[n % 4];
    CMatrix f2(4, 2);
    f2 << f1, f1;
    auto build = [&](const CMatrix& f) {
        SubproblemParams p;
        for (int k = 0; k < 2; ++k) {
            const CVector g = f.adjoint() * ch[k];
            p.grams.push_back(g * g.adjoint());
        }
        p.fgram = f.adjoint() * f;
        p.sigma2 = 1000.0;
        p.p_tx = 100000.0;
        p.weights = {1.0, 1.0};
        p.c0_min = 0.5;
        p.alpha = {1.0, 1.0};
        p.beta = {1.0, 1.0};
        return p;
    };
    const auto one = solve_subproblem(build(f1));
    const auto two = solve_subproblem(build(f2));
    REQUIRE(one.status == SolveStatus::Optimal);
    REQUIRE(two.status == SolveStatus::Optimal);
    CHECK(two.objective == doctest::Approx(one.objective).epsilon(1e-6));
    CHECK(check_feasible(two, build(f2)).feasible);
}

TEST_CASE("reduce_rank keeps the trace maps") {
    // orthogonal gains: diag(a, b) and the rank-one [sqrt a, sqrt b] serve both users equally
    std::vector<CMatrix> maps{CMatrix::Identity(2, 2), CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
    maps[1](0, 0) = 1.0;
    maps[2](1, 1) = 1.0;
    CMatrix x = CMatrix::Zero(2, 2);
    x(0, 0) = 3.0;
    x(1, 1) = 1.0;
    const CMatrix y = reduce_rank(x, maps);
    for (const auto& a : maps) CHECK(std::abs((a * y).trace().real() - (a * x).trace().real()) < 1e-12);
    CHECK(extract_rank_one(y).second < 1e-12);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(y, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);

    // random 4x4 rank-3 point, two maps: rank 1 is reachable (r^2 > m down to r = 1)
    const auto ch = gen_saleh_valenzuela(9, 4, 2);
    std::vector<CMatrix> gm{CMatrix::Identity(4, 4)};
    for (int k = 0; k < 2; ++k) gm.push_back(ch[k] * ch[k].adjoint());
    CMatrix l = CMatrix::Zero(4, 3);
    for (int i = 0; i < 3; ++i) l.col(i) = gen_saleh_valenzuela(20 + i, 4, 1)[0];
    const CMatrix z = l * l.adjoint();
    const CMatrix w = reduce_rank(z, gm);
    for (const auto& a : gm)
        CHECK(std::abs((a * w).trace().real() - (a * z).trace().real()) <= 1e-9 * (a * z).trace().real());
    CHECK(extract_rank_one(w).second < 1e-9);

    // already rank one and zero input pass through
    CHECK((reduce_rank(w, gm) - w).norm() <= 1e-9 * w.norm());
    CHECK(reduce_rank(CMatrix::Zero(3, 3), {CMatrix::Identity(3, 3)}).norm() == 0.0);
    CHECK_THROWS_AS(reduce_rank(x, {CMatrix::Identity(3, 3)}), ParameterError);
}
