#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/serialize.hpp"

using namespace falcon;
using std::numbers::pi;

namespace {

// exhaustive entrywise argmax of Re{phi conj(h)}, lowest index on ties
int pb_reference(const PhaseShiftSet& a, cdouble h) {
    int best = 0;
    for (int l = 1; l < a.l_tx(); ++l)
        if ((a[l] * std::conj(h)).real() > (a[best] * std::conj(h)).real()) best = l;
    return best;
}

// sequential greedy codeword assignment by exhaustive search
std::vector<int> cb_reference(const ChannelSet& ch, const Codebook& book) {
    std::vector<int> picked;
    for (int k = 0; k < ch.k_users(); ++k) {
        int best = -1;
        double gain = -1.0;
        for (int c = 0; c < book.size(); ++c) {
            if (std::find(picked.begin(), picked.end(), c) != picked.end()) continue;
            cdouble s = 0.0;
            for (int n = 0; n < ch.n_tx(); ++n) s += std::conj(ch[k][n]) * book.codewords[c][n];
            if (std::norm(s) > gain) {
                gain = std::norm(s);
                best = c;
            }
        }
        picked.push_back(best);
    }
    return picked;
}

}  // namespace

TEST_CASE("phase shift alphabet") {
    const PhaseShiftSet a(8, 2);
    CHECK(a.l_tx() == 8);
    CHECK(a.delta() == doctest::Approx(std::sqrt(0.5)));
    double prev = -1.0;
    for (const auto& p : a.phases()) {
        CHECK(std::abs(std::abs(p) - a.delta()) < 1e-15);
        const double ang = std::fmod(std::arg(p) + 2.0 * pi, 2.0 * pi);
        CHECK(ang > prev - 1e-12);
        prev = ang;
    }
    CHECK(a.index_of(a[3]) == 3);
    CHECK(a.index_of(cdouble(5.0, 0.0)) == -1);
    CHECK_THROWS_AS(PhaseShiftSet(1, 2), ParameterError);
    CHECK_THROWS_AS(PhaseShiftSet(4, 0), ParameterError);
}

TEST_CASE("projection-based design") {
    SUBCASE("grid-aligned phases are reproduced") {
        const PhaseShiftSet a(16, 2);
        CVector h1(4), h2(4);
        for (int n = 0; n < 4; ++n) {
            h1[n] = std::polar(0.7 + n, 2.0 * pi * (3 * n) / 16.0);
            h2[n] = std::polar(1.3, 2.0 * pi * (5 + n) / 16.0);
        }
        const auto f = design_pb(ChannelSet(4, {h1, h2}), a);
        for (int n = 0; n < 4; ++n) {
            CHECK(std::abs(std::arg(f.matrix()(n, 0) * std::conj(h1[n]))) < 1e-12);
            CHECK(std::abs(std::arg(f.matrix()(n, 1) * std::conj(h2[n]))) < 1e-12);
        }
    }
    SUBCASE("all-ones channel") {
        const PhaseShiftSet a(16, 2);
        const auto f = design_pb(gen_two_user_phase_ramp(pi / 9.0), a);
        for (int n = 0; n < 4; ++n) CHECK(f.matrix()(n, 0) == a[0]);
    }
    SUBCASE("random channels match the exhaustive argmax") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto ch = gen_saleh_valenzuela(seed, 8, 3);
            const PhaseShiftSet a(8, 3);
            const auto f = design_pb(ch, a);
            CHECK(f.mode() == AnalogMode::PB);
            for (int k = 0; k < 3; ++k)
                for (int n = 0; n < 8; ++n) {
                    CHECK(a.index_of(f.matrix()(n, k)) == pb_reference(a, ch[k][n]));
                    for (const auto& phi : a.phases())
                        CHECK((f.matrix()(n, k) * std::conj(ch[k][n])).real() >=
                              (phi * std::conj(ch[k][n])).real() - 1e-15);
                }
        }
    }
    SUBCASE("zero entry picks phase index 0") {
        CVector h = CVector::Ones(2);
        h[1] = 0.0;
        const PhaseShiftSet a(4, 1);
        CHECK(design_pb(ChannelSet(2, {h}), a).matrix()(1, 0) == a[0]);
    }
}

TEST_CASE("codebook construction") {
    const PhaseShiftSet a(16, 4);
    const Codebook book = build_codebook(8, 128, a, 9);
    CHECK(book.size() == 128);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            if (i != j) CHECK(std::abs(book.codewords[i].dot(book.codewords[j])) < 1e-10);
    for (const auto& v : book.codewords)
        for (int n = 0; n < 8; ++n) CHECK(a.index_of(v[n]) >= 0);
    std::set<std::vector<int>> distinct;
    for (const auto& v : book.codewords) {
        std::vector<int> idx;
        for (int n = 0; n < 8; ++n) idx.push_back(a.index_of(v[n]));
        distinct.insert(idx);
    }
    CHECK(distinct.size() == 128u);

    const Codebook again = build_codebook(8, 128, a, 9);
    for (int c = 0; c < 128; ++c) CHECK(again.codewords[c] == book.codewords[c]);

    const PhaseShiftSet a4(16, 2);
    CHECK(build_codebook(4, 4, a4, 1).size() == 4);
    CHECK_THROWS_AS(build_codebook(8, 7, a, 1), ParameterError);
}

TEST_CASE("codebook-based design") {
    SUBCASE("aligned channels get their own DFT column") {
        const PhaseShiftSet a(16, 4);
        const Codebook book = build_codebook(4, 4, a, 1);
        std::vector<CVector> hs;
        for (int k : {2, 0, 3, 1}) hs.push_back(book.codewords[k] * 2.0);
        const auto f = design_cb(ChannelSet(4, hs), book, a);
        CHECK(f.matrix().col(0) == book.codewords[2]);
        CHECK(f.matrix().col(1) == book.codewords[0]);
        CHECK(f.matrix().col(2) == book.codewords[3]);
        CHECK(f.matrix().col(3) == book.codewords[1]);
    }
    SUBCASE("identical channels: best then second best") {
        const PhaseShiftSet a(16, 2);
        const auto base = gen_saleh_valenzuela(4, 8, 1);
        const ChannelSet ch(8, {base[0], base[0]});
        const Codebook book = build_codebook(8, 16, a, 3);
        const auto ref = cb_reference(ch, book);
        const auto f = design_cb(ch, book, a);
        CHECK(f.matrix().col(0) == book.codewords[ref[0]]);
        CHECK(f.matrix().col(1) == book.codewords[ref[1]]);
        CHECK(ref[0] != ref[1]);
    }
    SUBCASE("random instances match the sequential exhaustive oracle") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto ch = gen_saleh_valenzuela(seed, 8, 4);
            const PhaseShiftSet a(16, 4);
            const Codebook book = build_codebook(8, 16, a, seed + 100);
            const auto ref = cb_reference(ch, book);
            const auto f = design_cb(ch, book, a);
            for (int k = 0; k < 4; ++k) CHECK(f.matrix().col(k) == book.codewords[ref[k]]);
        }
    }
    SUBCASE("codebook smaller than K") {
        const PhaseShiftSet a(4, 4);
        CHECK_THROWS_AS(design_cb(gen_saleh_valenzuela(1, 2, 4), build_codebook(2, 2, a, 1), a),
                        ParameterError);
    }
}

TEST_CASE("identity and effective channels") {
    const auto id = identity_analog(4);
    CHECK(id.matrix().isIdentity(0.0));
    CHECK(id.n_rf() == 4);
    CHECK_FALSE(id.alphabet().has_value());
    CHECK(identity_analog(1).matrix()(0, 0) == cdouble(1.0, 0.0));

    const auto ch = gen_saleh_valenzuela(8, 4, 2);
    const auto eff = effective_channels(id, ch);
    for (int k = 0; k < 2; ++k) CHECK((eff.g[k] - ch[k]).norm() == 0.0);

    // PB on the phase ramp, recomputed with explicit sums
    const PhaseShiftSet a(16, 2);
    const auto ramp = gen_two_user_phase_ramp(pi / 9.0);
    const auto f = design_pb(ramp, a);
    const auto e = effective_channels(f, ramp);
    for (int k = 0; k < 2; ++k)
        for (int r = 0; r < 2; ++r) {
            cdouble s = 0.0;
            for (int n = 0; n < 4; ++n) s += std::conj(f.matrix()(n, r)) * ramp[k][n];
            CHECK(std::abs(e.g[k][r] - s) < 1e-12);
        }
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            cdouble s = 0.0;
            for (int n = 0; n < 4; ++n) s += std::conj(f.matrix()(n, r)) * f.matrix()(n, c);
            CHECK(std::abs(e.fgram(r, c) - s) < 1e-12);
        }

    // orthogonal columns of norm c give c^2 I
    const PhaseShiftSet a4(4, 2);
    const Codebook dft = build_codebook(4, 4, a4, 1);
    CMatrix m(4, 2);
    m.col(0) = dft.codewords[0];
    m.col(1) = dft.codewords[2];
    const AnalogPrecoder orth(m, AnalogMode::CB, a4);
    CHECK((orth.gram() - 2.0 * CMatrix::Identity(2, 2)).norm() < 1e-12);
    CHECK(orth.gram_condition() == doctest::Approx(1.0));

    CHECK_THROWS_AS(effective_channels(identity_analog(3), ch), ParameterError);
}

TEST_CASE("analog invariants") {
    CHECK_THROWS_AS(AnalogPrecoder(CMatrix::Ones(2, 2), AnalogMode::FullyDigital, std::nullopt),
                    ParameterError);
    const PhaseShiftSet a(4, 1);
    CHECK_THROWS_AS(AnalogPrecoder(CMatrix::Constant(2, 1, cdouble(0.3, 0.0)), AnalogMode::PB, a),
                    ParameterError);
    CHECK_THROWS_AS(AnalogPrecoder(CMatrix::Constant(2, 1, a[0]), AnalogMode::PB, std::nullopt),
                    ParameterError);

    // rank-deficient F^H F reports an infinite or huge condition number
    CMatrix same(4, 2);
    same.col(0) = CVector::Constant(4, a[0]);
    same.col(1) = CVector::Constant(4, a[0]);
    const PhaseShiftSet a1(4, 1);
    CHECK(AnalogPrecoder(same, AnalogMode::CB, a1).gram_condition() > 1e10);
}

TEST_CASE("analog json round trip") {
    const PhaseShiftSet a(8, 2);
    const auto f = design_pb(gen_saleh_valenzuela(2, 4, 2), a);
    const Json j = to_json(f);
    CHECK(j["mode"] == "pb");
    CHECK(j["l_tx"] == 8);
    const auto back = analog_from_json(j);
    CHECK(back.matrix() == f.matrix());
    CHECK(back.mode() == AnalogMode::PB);
    CHECK(analog_from_json(to_json(identity_analog(3))).matrix().isIdentity(0.0));
}
