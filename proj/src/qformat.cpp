#include "matic/qformat.hpp"

#include <cmath>

namespace matic::qf {

double QFormat::lsb() const { return std::ldexp(1.0, -frac_bits); }
double QFormat::min_value() const { return std::ldexp(double(min_int()), -frac_bits); }
double QFormat::max_value() const { return std::ldexp(double(max_int()), -frac_bits); }

QuantResult quantize(double w, QFormat fmt) {
    if (!fmt.valid()) throw std::invalid_argument("quantize: invalid QFormat");
    if (!std::isfinite(w)) throw std::invalid_argument("quantize: non-finite input");

    // Scaling by a power of two is exact in binary floating point, so the
    // rounding decision below is made on the true scaled value.
    double scaled = std::ldexp(w, fmt.frac_bits);
    double r = std::round(scaled); // ties away from zero
    if (r < double(fmt.min_int())) r = double(fmt.min_int());
    if (r > double(fmt.max_int())) r = double(fmt.max_int());

    QWord q;
    q.fmt = fmt;
    q.bits = std::uint32_t(std::int32_t(r)) & fmt.bit_mask();
    return QuantResult{q, w - dequantize(q)};
}

double dequantize(QWord q) {
    std::uint32_t sign_bit = 1u << (q.fmt.word_bits - 1);
    std::int64_t v = q.bits & q.fmt.bit_mask();
    if (v & sign_bit) v -= std::int64_t(1) << q.fmt.word_bits;
    return std::ldexp(double(v), -q.fmt.frac_bits);
}

QWord apply_masks(QWord q, std::uint32_t b_or, std::uint32_t b_and) {
    std::uint32_t width = q.fmt.bit_mask();
    // Bits of b_and above the word are ignored; a b_or bit outside the word
    // would force a bit that does not exist.
    if ((b_or & ~width) != 0)
        throw std::invalid_argument("apply_masks: mask width mismatch");
    QWord out = q;
    out.bits = ((q.bits & b_and) | b_or) & width;
    return out;
}

} // namespace matic::qf
