#pragma once

#include <cstdint>
#include <stdexcept>

namespace matic::qf {

// Two's-complement fixed-point layout: word_bits total (8..22), frac_bits
// fractional. A 16-bit Q2.14 word is {16, 14}.
struct QFormat {
    int word_bits = 16;
    int frac_bits = 14;

    bool valid() const {
        return word_bits >= 8 && word_bits <= 22 && frac_bits >= 0 && frac_bits < word_bits;
    }
    std::uint32_t bit_mask() const { return (1u << word_bits) - 1u; }
    std::int32_t min_int() const { return -(std::int32_t(1) << (word_bits - 1)); }
    std::int32_t max_int() const { return (std::int32_t(1) << (word_bits - 1)) - 1; }
    double lsb() const;
    double min_value() const;
    double max_value() const;

    bool operator==(const QFormat&) const = default;
};

struct QWord {
    std::uint32_t bits = 0; // pattern, word_bits wide
    QFormat fmt;

    bool operator==(const QWord&) const = default;
};

// quantize() output: the grid point plus the fractional error that the
// training update rule feeds back (eps_q = w - dequantize(qword), exactly;
// saturation is absorbed into eps_q).
struct QuantResult {
    QWord qword;
    double eps_q = 0.0;
};

// Round-to-nearest (ties away from zero) onto the fixed-point grid,
// saturating at the format bounds. Rejects non-finite input.
QuantResult quantize(double w, QFormat fmt);

// Exact real value of the two's-complement pattern scaled by 2^-frac_bits.
double dequantize(QWord q);

// Stuck-bit application: (bits & b_and) | b_or. Stuck-at-1 cells set bits in
// b_or, stuck-at-0 cells clear bits in b_and. Throws if b_or is wider than
// the word.
QWord apply_masks(QWord q, std::uint32_t b_or, std::uint32_t b_and);

// Identity masks for a format: (0, all-ones).
struct MaskPair {
    std::uint32_t b_or = 0;
    std::uint32_t b_and = 0xffffffffu;

    bool identity() const { return b_or == 0; }
    bool operator==(const MaskPair&) const = default;
};

inline MaskPair identity_masks(QFormat fmt) { return MaskPair{0u, fmt.bit_mask()}; }

} // namespace matic::qf
