// SPDX-License-Identifier: Apache-2.0
#include "falcon/analog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "falcon/rng.hpp"

namespace falcon {

PhaseShiftSet::PhaseShiftSet(int l_tx, int n_rf) {
    if (l_tx < 2) throw ParameterError("PhaseShiftSet: l_tx must be >= 2");
    if (n_rf < 1) throw ParameterError("PhaseShiftSet: n_rf must be >= 1");
    delta_ = std::sqrt(1.0 / n_rf);
    phases_.reserve(l_tx);
    for (int l = 0; l < l_tx; ++l)
        phases_.push_back(std::polar(delta_, 2.0 * std::numbers::pi * l / l_tx));
}

int PhaseShiftSet::index_of(const cdouble& value) const {
    for (int l = 0; l < l_tx(); ++l)
        if (phases_[l] == value) return l;
    return -1;
}

double PhaseShiftSet::distance(const cdouble& value) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : phases_) best = std::min(best, std::abs(p - value));
    return best;
}

std::string to_string(AnalogMode mode) {
    switch (mode) {
        case AnalogMode::FullyDigital: return "fully_digital";
        case AnalogMode::PB: return "pb";
        case AnalogMode::CB: return "cb";
    }
    return "unknown";
}

AnalogPrecoder::AnalogPrecoder(CMatrix matrix, AnalogMode mode,
                               std::optional<PhaseShiftSet> alphabet)
    : matrix_(std::move(matrix)), mode_(mode), alphabet_(std::move(alphabet)) {
    if (matrix_.rows() < 1 || matrix_.cols() < 1)
        throw ParameterError("AnalogPrecoder: empty matrix");
    if (mode_ == AnalogMode::FullyDigital) {
        if (matrix_.rows() != matrix_.cols() || !matrix_.isIdentity(0.0))
            throw ParameterError("AnalogPrecoder: fully-digital mode requires F = I");
        alphabet_.reset();
        return;
    }
    if (!alphabet_) throw ParameterError("AnalogPrecoder: hybrid mode requires an alphabet");
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i)
        for (Eigen::Index j = 0; j < matrix_.cols(); ++j)
            if (alphabet_->index_of(matrix_(i, j)) < 0)
                throw ParameterError("AnalogPrecoder: entry outside the phase-shift alphabet");
}

double AnalogPrecoder::gram_condition() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram(), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

AnalogPrecoder identity_analog(int n_tx) {
    if (n_tx < 1) throw ParameterError("identity_analog: n_tx must be >= 1");
    return AnalogPrecoder(CMatrix::Identity(n_tx, n_tx), AnalogMode::FullyDigital, std::nullopt);
}

AnalogPrecoder design_pb(const ChannelSet& channels, const PhaseShiftSet& alphabet) {
    const int n_tx = channels.n_tx();
    const int k_users = channels.k_users();
    CMatrix f(n_tx, k_users);
    for (int k = 0; k < k_users; ++k) {
        for (int n = 0; n < n_tx; ++n) {
            const cdouble h_conj = std::conj(channels[k][n]);
            // a zero entry makes every phase optimal; index 0 wins via strict comparison
            int best = 0;
            double best_val = (alphabet[0] * h_conj).real();
            for (int l = 1; l < alphabet.l_tx(); ++l) {
                const double val = (alphabet[l] * h_conj).real();
                if (val > best_val) {
                    best_val = val;
                    best = l;
                }
            }
            f(n, k) = alphabet[best];
        }
    }
    return AnalogPrecoder(std::move(f), AnalogMode::PB, alphabet);
}

AnalogPrecoder design_cb(const ChannelSet& channels, const Codebook& codebook,
                         const PhaseShiftSet& alphabet) {
    const int k_users = channels.k_users();
    if (codebook.size() < k_users)
        throw ParameterError("design_cb: codebook smaller than the number of users");
    for (const auto& v : codebook.codewords)
        if (v.size() != channels.n_tx())
            throw ParameterError("design_cb: codeword length differs from n_tx");

    std::vector<bool> used(codebook.size(), false);
    CMatrix f(channels.n_tx(), k_users);
    for (int k = 0; k < k_users; ++k) {
        int best = -1;
        double best_gain = -1.0;
        for (int c = 0; c < codebook.size(); ++c) {
            if (used[c]) continue;
            const double gain = std::norm(channels[k].dot(codebook.codewords[c]));
            if (gain > best_gain) {
                best_gain = gain;
                best = c;
            }
        }
        used[best] = true;
        f.col(k) = codebook.codewords[best];
    }
    return AnalogPrecoder(std::move(f), AnalogMode::CB, alphabet);
}

Codebook build_codebook(int n_tx, int size, const PhaseShiftSet& alphabet, std::uint64_t seed) {
    if (n_tx < 1) throw ParameterError("build_codebook: n_tx must be >= 1");
    if (size < n_tx) throw ParameterError("build_codebook: size must be >= n_tx");

    const int l_tx = alphabet.l_tx();
    const double distinct = std::pow(static_cast<double>(l_tx), n_tx);
    if (static_cast<double>(size) > distinct)
        throw ParameterError("build_codebook: more codewords requested than distinct vectors exist");
    auto snap = [&](double angle) {
        // nearest alphabet phase, lowest index on ties
        double turns = angle / (2.0 * std::numbers::pi) * l_tx;
        long idx = std::lround(turns);
        idx = ((idx % l_tx) + l_tx) % l_tx;
        return alphabet[static_cast<int>(idx)];
    };

    Codebook book;
    book.codewords.reserve(size);
    for (int i = 0; i < n_tx; ++i) {
        CVector v(n_tx);
        for (int n = 0; n < n_tx; ++n)
            v[n] = snap(-2.0 * std::numbers::pi * static_cast<double>(n) * i / n_tx);
        book.codewords.push_back(std::move(v));
    }

    Rng rng(seed);
    while (book.size() < size) {
        CVector v(n_tx);
        for (int n = 0; n < n_tx; ++n) v[n] = alphabet[static_cast<int>(rng.below(l_tx))];
        const bool duplicate = std::any_of(book.codewords.begin(), book.codewords.end(),
                                           [&](const CVector& w) { return w == v; });
        if (!duplicate) book.codewords.push_back(std::move(v));
    }
    return book;
}

EffectiveChannels effective_channels(const AnalogPrecoder& analog, const ChannelSet& channels) {
    if (analog.n_tx() != channels.n_tx())
        throw ParameterError("effective_channels: F rows differ from n_tx");
    EffectiveChannels out;
    out.g.reserve(channels.k_users());
    for (const auto& h : channels.channels()) out.g.push_back(analog.matrix().adjoint() * h);
    out.fgram = analog.gram();
    return out;
}

}  // namespace falcon
