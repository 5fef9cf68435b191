#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/oracle.hpp"

using namespace falcon;
using std::numbers::pi;

namespace {

ChannelSet scalar_channel(double gain = 1.0) {
    return ChannelSet(1, {CVector::Constant(1, cdouble(gain, 0.0))});
}

}  // namespace

TEST_CASE("scalar_optimum") {
    CHECK(scalar_optimum(100.0, 1.0, 1.0, 1.0) == doctest::Approx(std::log2(101.0) - 1.0));
    CHECK(scalar_optimum(100.0, 1.0, 1.0, 1.0) == doctest::Approx(5.6582).epsilon(1e-4));
    CHECK(scalar_optimum(100.0, 1.0, 1.0, 0.0) == doctest::Approx(std::log2(101.0)));
    CHECK(scalar_optimum(1e5, 1e3, 4.0, 0.5) == doctest::Approx(std::log2(401.0) - 0.5));
    CHECK_THROWS_AS(scalar_optimum(100.0, 1.0, 0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(scalar_optimum(100.0, 1.0, 1.0, 7.0), ParameterError);
    CHECK_THROWS_AS(scalar_optimum(-1.0, 1.0, 1.0, 0.0), ParameterError);
}

TEST_CASE("scalar grid") {
    const auto grid = GridSpec::scalar(100.0, 1001);
    CHECK(grid.total_points() == 1001u);
    const auto r = brute_force_wsr(scalar_channel(), identity_analog(1), {1.0}, 1.0, 100.0, 1.0, grid);
    REQUIRE(r.feasible);
    CHECK(std::abs(r.wsr - (std::log2(101.0) - 1.0)) <= 1e-3);
    CHECK(r.c0 == 1.0);
    CHECK(r.evaluated == 1001u);
    // every split with C_1 >= 0 is optimal; the first feasible point wins the tie
    CHECK(r.feasible_points > 0u);
    // the reported beams carry the full budget
    CHECK((r.m_vec.squaredNorm() + r.b_vecs[0].squaredNorm()) == doctest::Approx(100.0));

    const auto z = brute_force_wsr(scalar_channel(2.0), identity_analog(1), {1.0}, 0.0, 100.0, 1.0, grid);
    CHECK(std::abs(z.wsr - std::log2(1.0 + 400.0)) <= 1e-9);
}

TEST_CASE("infeasible threshold leaves an empty feasible set") {
    const auto grid = GridSpec::scalar(100.0, 101);
    const auto r = brute_force_wsr(scalar_channel(), identity_analog(1), {1.0}, 7.0, 100.0, 1.0, grid);
    CHECK_FALSE(r.feasible);
    CHECK(r.feasible_points == 0u);
    CHECK(r.evaluated == 101u);
}

TEST_CASE("guards") {
    const auto grid = GridSpec::scalar(100.0, 11);
    CHECK_THROWS_AS(brute_force_wsr(gen_saleh_valenzuela(1, 4, 3), identity_analog(4), {1.0, 1.0, 1.0},
                                    0.0, 100.0, 1.0, grid),
                    ParameterError);
    CHECK_THROWS_AS(brute_force_wsr(gen_saleh_valenzuela(1, 3, 1), identity_analog(3), {1.0}, 0.0,
                                    100.0, 1.0, grid),
                    ParameterError);
    GridSpec huge = GridSpec::two_user_diagonal(100.0, 500);
    CHECK(huge.total_points() == 125000000u);
    CHECK_THROWS_AS(huge.validate(2, 2), ParameterError);
    GridSpec two_res = GridSpec::scalar(100.0, 11);
    two_res.beams[0].power = ParamSource::residual();
    two_res.beams[1].power = ParamSource::residual();
    CHECK_THROWS_AS(two_res.validate(1, 1), ParameterError);
    CHECK_THROWS_AS(brute_force_wsr(scalar_channel(), identity_analog(1), {1.0, 1.0}, 0.0, 100.0, 1.0, grid),
                    ParameterError);
}

TEST_CASE("grid axis values") {
    const GridAxis a{"p", 0.0, 10.0, 11};
    CHECK(a.value(0) == 0.0);
    CHECK(a.value(10) == 10.0);
    CHECK(a.value(3) == doctest::Approx(3.0));
    const GridAxis single{"x", 2.5, 9.0, 1};
    CHECK(single.value(0) == 2.5);
}

TEST_CASE("two-user grid: deterministic across threads, monotone under refinement") {
    const auto ramp = gen_two_user_phase_ramp(pi / 2.0);
    const auto f = design_pb(ramp, PhaseShiftSet(16, 2));
    const std::vector<double> w{1.0, 1.0};
    const auto g1 = GridSpec::two_user_diagonal(1e5, 41);
    const auto a = brute_force_wsr(ramp, f, w, 0.5, 1e5, 1e3, g1, 1);
    const auto b = brute_force_wsr(ramp, f, w, 0.5, 1e5, 1e3, g1, 4);
    REQUIRE(a.feasible);
    CHECK(a.wsr == b.wsr);
    CHECK(a.point == b.point);
    CHECK(a.feasible_points == b.feasible_points);

    // 81 points per axis contain the 41-point grid
    const auto g2 = GridSpec::two_user_diagonal(1e5, 81);
    const auto c = brute_force_wsr(ramp, f, w, 0.5, 1e5, 1e3, g2, 2);
    CHECK(c.wsr >= a.wsr);

    // unequal weights push rate to the heavier user
    const auto d = brute_force_wsr(ramp, f, {3.0, 1.0}, 0.5, 1e5, 1e3, g1, 2);
    REQUIRE(d.feasible);
    CHECK(d.c[0] >= d.c[1]);
}

TEST_CASE("grid csv") {
    const auto grid = GridSpec::scalar(100.0, 5);
    std::ostringstream os;
    brute_force_wsr(scalar_channel(), identity_analog(1), {1.0}, 1.0, 100.0, 1.0, grid, 4, &os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line.substr(line.size() - 4) == ",wsr");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 5);
}
