#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/falcon.hpp"
#include "falcon/oracle.hpp"
#include "falcon/serialize.hpp"

using namespace falcon;
using std::numbers::pi;

namespace {

const double kP = 1e5;     // 50 dBm
const double kS2 = 1e3;    // 30 dBm

ChannelSet scalar_channel() { return ChannelSet(1, {CVector::Ones(1)}); }

bool monotone(const std::vector<double>& tr) {
    for (std::size_t i = 1; i < tr.size(); ++i)
        if (tr[i] < tr[i - 1] - 1e-8 * (1.0 + std::abs(tr[i - 1]))) return false;
    return true;
}

void check_solution_invariants(const RsSolution& s, double c0_min, double p_tx, bool ldm) {
    const double split = s.c0 + std::accumulate(s.c.begin(), s.c.end(), 0.0);
    CHECK(split <= s.common_rate + 1e-6);
    CHECK(s.c0 >= c0_min - 1e-9);
    double power = (s.analog.matrix() * s.m_vec).squaredNorm();
    for (const auto& b : s.b_vecs) power += (s.analog.matrix() * b).squaredNorm();
    CHECK(power <= p_tx * (1.0 + 1e-6));
    for (double c : s.c) {
        CHECK(c >= -1e-9);
        if (ldm) CHECK(c == 0.0);
    }
    double w = 0.0;
    for (std::size_t k = 0; k < s.c.size(); ++k) {
        CHECK(s.unicast_rate[k] == doctest::Approx(s.c[k] + s.per_user_private_rate[k]).epsilon(1e-12));
        w += s.weights[k] * s.unicast_rate[k];
    }
    CHECK(s.wsr == doctest::Approx(w).epsilon(1e-12));
}

}  // namespace

TEST_CASE("init_parameters") {
    for (int k : {1, 3, 6}) {
        const auto [a, b] = init_parameters(k);
        CHECK(a == std::vector<double>(k, 1.0));
        CHECK(b == std::vector<double>(k, 1.0));
    }
}

TEST_CASE("config validation") {
    FalconConfig c;
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = FalconConfig{};
    c.eps = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    CHECK_THROWS_AS(run_falcon(scalar_channel(), identity_analog(1), {0.0}, 1.0, 100.0, 1.0),
                    ParameterError);
}

TEST_CASE("scalar instance") {
    const auto s = run_falcon(scalar_channel(), identity_analog(1), {1.0}, 1.0, 100.0, 1.0);
    CHECK(s.ok());
    CHECK(s.wsr == doctest::Approx(std::log2(101.0) - 1.0).epsilon(1e-3 / 5.6582));
    CHECK(std::abs(s.wsr - (std::log2(101.0) - 1.0)) <= 1e-3);
    CHECK(monotone(s.trace));
    check_solution_invariants(s, 1.0, 100.0, false);
}

TEST_CASE("zero threshold gives point-to-point capacity") {
    for (std::uint64_t seed : {1u, 4u}) {
        const auto ch = gen_saleh_valenzuela(seed, 4, 1);
        const auto s = run_falcon(ch, identity_analog(4), {1.0}, 0.0, 100.0, 1.0);
        REQUIRE(s.ok());
        const double cap = std::log2(1.0 + 100.0 * ch[0].squaredNorm());
        // a 1-D power split grid gives the same value: one beam along h, all power
        double grid = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double pb = 100.0 * i / 1000.0, pm = 100.0 - pb;
            const double g = ch[0].squaredNorm();
            grid = std::max(grid, std::log2(1.0 + pb * g) + std::log2(1.0 + pm * g / (pb * g + 1.0)));
        }
        CHECK(std::abs(grid - cap) < 1e-9);
        CHECK(std::abs(s.wsr - cap) <= 1e-3);
    }
}

TEST_CASE("orthogonal two-user instance against the grid oracle") {
    const auto ramp = gen_two_user_phase_ramp(pi / 2.0);
    const PhaseShiftSet a(16, 2);
    const auto f = design_pb(ramp, a);
    const auto grid = GridSpec::two_user_diagonal(kP, 100);
    const auto oracle = brute_force_wsr(ramp, f, {1.0, 1.0}, 0.5, kP, kS2, grid, 1);
    REQUIRE(oracle.feasible);

    const auto fd = run_falcon(ramp, identity_analog(4), {1.0, 1.0}, 0.5, kP, kS2);
    const auto hy = run_falcon(ramp, f, {1.0, 1.0}, 0.5, kP, kS2);
    REQUIRE(fd.ok());
    REQUIRE(hy.ok());
    // the grid is a lower bound; 100 points per axis is within a few 1e-2 of it
    CHECK(fd.wsr >= oracle.wsr - 1e-4);
    CHECK(fd.wsr <= oracle.wsr + 3e-2);
    CHECK(std::abs(fd.wsr - hy.wsr) <= 1e-3);
}

TEST_CASE("eight antennas, four users: fixed-point properties") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto ch = gen_saleh_valenzuela(seed, 8, 4);
        const ProblemParams prob{{1.0, 1.0, 1.0, 1.0}, 1.5, kP, kS2};
        // run to the fixed point; the default eps stops while alpha is still ~1e-3 off
        FalconConfig cfg;
        cfg.eps = 1e-9;
        cfg.max_iters = 100;
        FalconIterator it(ch, identity_analog(8), prob, cfg);
        bool converged = false;
        int default_stop = 0;
        for (int i = 0; i < cfg.max_iters && !converged; ++i) {
            REQUIRE(it.step() == SolveStatus::Optimal);
            const auto& tr = it.trace();
            const double inc = tr.size() >= 2 ? tr.back() - tr[tr.size() - 2] : INFINITY;
            if (default_stop == 0 && inc < FalconConfig{}.eps) default_stop = i + 1;
            converged = inc < cfg.eps;
        }
        REQUIRE(converged);
        CHECK(default_stop <= 20);
        CHECK(monotone(it.trace()));

        const auto& sol = it.last();
        const auto& par = it.last_params();
        int binding = 0;
        for (int k = 1; k < 4; ++k)
            if (sol.z[k] < sol.z[binding]) binding = k;
        for (int k = 0; k < 4; ++k) {
            const double tn = sol.t[k] / kS2, qn = sol.q[k] / kS2;
            CHECK(std::abs(par.alpha[k] - tn / sol.r[k]) <= 1e-4 * par.alpha[k]);
            if (k == binding) CHECK(std::abs(par.beta[k] - qn / sol.z[k]) <= 1e-4 * par.beta[k]);
            double interference = kS2;
            for (int j = 0; j < 4; ++j)
                if (j != k) interference += (par.grams[k] * sol.b_mats[j]).trace().real();
            CHECK(std::abs(sol.t[k] - interference) <= 1e-5 * sol.t[k]);
        }
        double split = sol.c0;
        for (double c : sol.c) split += c;
        CHECK(std::abs(std::log2(sol.z[binding]) - split) <= 1e-5 * (1.0 + split));

        // one more iteration after convergence moves less than eps
        const double before = it.trace().back();
        REQUIRE(it.step() == SolveStatus::Optimal);
        CHECK(std::abs(it.trace().back() - before) < FalconConfig{}.eps);

        const auto s = run_falcon(ch, identity_analog(8), prob.weights, 1.5, kP, kS2);
        REQUIRE(s.status == RunStatus::Converged);
        CHECK(s.iterations_used == default_stop);
        check_solution_invariants(s, 1.5, kP, false);
        CHECK(s.rank_residuals.size() == 5u);
        CHECK(s.rank_residuals[0] <= 1e-5);
        for (const auto& sl : s.slacks) CHECK(sl.value >= -1e-6);
        if (*std::max_element(s.rank_residuals.begin(), s.rank_residuals.end()) <= 1e-5)
            CHECK(s.relaxation_gap <= 1e-4 * (1.0 + s.wsr));
    }
}

TEST_CASE("rate splitting dominates ldm") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto ch = gen_saleh_valenzuela(seed + 20, 4, 2);
        FalconConfig ldm;
        ldm.mode = SplitMode::LDM;
        const auto rs = run_falcon(ch, identity_analog(4), {1.0, 1.0}, 1.0, kP, kS2);
        const auto ld = run_falcon(ch, identity_analog(4), {1.0, 1.0}, 1.0, kP, kS2, ldm);
        REQUIRE(rs.ok());
        REQUIRE(ld.ok());
        CHECK(rs.wsr >= ld.wsr - 1e-4);
        check_solution_invariants(ld, 1.0, kP, true);
    }
}

TEST_CASE("channel phase invariance") {
    const auto ch = gen_saleh_valenzuela(8, 4, 2);
    const auto rot = ch.rotated({std::polar(1.0, 0.9), std::polar(1.0, -2.2)});
    const auto a = run_falcon(ch, identity_analog(4), {1.0, 2.0}, 1.0, kP, kS2);
    const auto b = run_falcon(rot, identity_analog(4), {1.0, 2.0}, 1.0, kP, kS2);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i)
        CHECK(std::abs(a.trace[i] - b.trace[i]) <= 1e-9 * (1.0 + std::abs(a.trace[i])));
}

TEST_CASE("infeasible threshold") {
    const auto s = run_falcon(scalar_channel(), identity_analog(1), {1.0}, 7.0, 100.0, 1.0);
    CHECK(s.status == RunStatus::Infeasible);
    CHECK(s.trace.empty());
    CHECK_FALSE(s.ok());
}

TEST_CASE("serialization") {
    const auto s = run_falcon(gen_saleh_valenzuela(2, 4, 2), identity_analog(4), {1.0, 1.0}, 1.0,
                              kP, kS2);
    const Json j = to_json(s);
    CHECK(j["trace"].size() == s.trace.size());
    CHECK(j["status"] == to_string(s.status));
    CHECK(j["wsr"].get<double>() == s.wsr);
    CHECK(j["b_vecs"].size() == 2u);

    std::ostringstream os;
    write_trace_csv(os, s.trace);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "iteration,wsr");
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto comma = line.find(',');
        CHECK(std::stoi(line.substr(0, comma)) == n);
        CHECK(std::stod(line.substr(comma + 1)) == s.trace[n - 1]);
    }
    CHECK(n == static_cast<int>(s.trace.size()));
}
