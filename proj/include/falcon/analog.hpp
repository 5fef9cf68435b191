// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "falcon/channel.hpp"
#include "falcon/types.hpp"

namespace falcon {

/// Quantized constant-modulus phase shifts delta * e^{j 2 pi l / L}, l = 0..L-1.
class PhaseShiftSet {
public:
    PhaseShiftSet(int l_tx, int n_rf);

    int l_tx() const { return static_cast<int>(phases_.size()); }
    double delta() const { return delta_; }
    const std::vector<cdouble>& phases() const { return phases_; }
    const cdouble& operator[](int l) const { return phases_.at(l); }

    /// Index of an exact member, or -1.
    int index_of(const cdouble& value) const;
    /// Distance from value to the closest member.
    double distance(const cdouble& value) const;

private:
    double delta_;
    std::vector<cdouble> phases_;
};

enum class AnalogMode { FullyDigital, PB, CB };

std::string to_string(AnalogMode mode);

/// RF precoder F (n_tx x n_rf). Hybrid modes use n_rf = K and alphabet entries only.
class AnalogPrecoder {
public:
    AnalogPrecoder(CMatrix matrix, AnalogMode mode, std::optional<PhaseShiftSet> alphabet);

    const CMatrix& matrix() const { return matrix_; }
    AnalogMode mode() const { return mode_; }
    const std::optional<PhaseShiftSet>& alphabet() const { return alphabet_; }
    int n_tx() const { return static_cast<int>(matrix_.rows()); }
    int n_rf() const { return static_cast<int>(matrix_.cols()); }

    /// F^H F.
    CMatrix gram() const { return matrix_.adjoint() * matrix_; }
    /// Spectral condition number of F^H F (infinity when singular).
    double gram_condition() const;

private:
    CMatrix matrix_;
    AnalogMode mode_;
    std::optional<PhaseShiftSet> alphabet_;
};

struct Codebook {
    std::vector<CVector> codewords;
    int size() const { return static_cast<int>(codewords.size()); }
};

/// F = I (one RF chain per antenna).
AnalogPrecoder identity_analog(int n_tx);

/// Entrywise projection of each matched filter onto the alphabet.
AnalogPrecoder design_pb(const ChannelSet& channels, const PhaseShiftSet& alphabet);

/// Greedy per-user codeword selection without reuse.
AnalogPrecoder design_cb(const ChannelSet& channels, const Codebook& codebook,
                         const PhaseShiftSet& alphabet);

/**
 * n_tx DFT columns followed by size - n_tx codewords with i.i.d. uniform
 * alphabet phases. DFT entries are snapped to the alphabet, which is exact
 * whenever n_tx divides l_tx.
 */
Codebook build_codebook(int n_tx, int size, const PhaseShiftSet& alphabet, std::uint64_t seed);

struct EffectiveChannels {
    std::vector<CVector> g;  // g_k = F^H h_k
    CMatrix fgram;           // F^H F
};

EffectiveChannels effective_channels(const AnalogPrecoder& analog, const ChannelSet& channels);

}  // namespace falcon
