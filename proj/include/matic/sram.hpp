#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matic/qformat.hpp"
#include "matic/rng.hpp"

namespace matic::sram {

// Reference temperature for profiled vmin values.
inline constexpr double kRefTempC = 25.0;

struct BankGeometry {
    int n_banks = 8;
    int words_per_bank = 576; // 8 banks x 576 words x 16 bits = 9 KB
    int word_bits = 16;

    std::int64_t total_cells() const {
        return std::int64_t(n_banks) * words_per_bank * word_bits;
    }
    bool operator==(const BankGeometry&) const = default;
};

// Read-disturb voltage model for the bit-cell population. Two families:
//  - truncated normal over (0, 0.9): analytic, used by the property tests
//  - calibrated: inverse-CDF sampling of a piecewise-linear survival curve
//    pinned to the measured anchors (bit-errors onset at 0.53 V, 28%
//    failures at 0.50 V, total failure near 0.40 V)
struct VminDistribution {
    enum class Family { truncated_normal, calibrated };
    Family family = Family::calibrated;
    double mu = 0.45;
    double sigma = 0.025;
    // (voltage, survival) anchors, voltage ascending, survival strictly
    // decreasing; survival(v) = P(vmin > v) = expected fault rate at v
    std::vector<std::pair<double, double>> survival;

    static VminDistribution truncated_normal(double mu, double sigma);
    static VminDistribution calibrated_default();

    double sample(Rng& rng) const;
    // expected fault proportion at voltage v (reference temperature)
    double expected_fault_rate(double v) const;
};

// One voltage-scalable weight SRAM bank. Cell arrays are indexed
// word_addr * word_bits + bit_index.
struct SramBank {
    int bank_id = 0;
    int n_words = 0;
    int word_bits = 0;
    std::vector<double> vmin;         // V_min,read at kRefTempC
    std::vector<std::uint8_t> preferred;
    std::vector<std::uint8_t> stored;

    std::size_t cell_index(int word, int bit) const {
        return std::size_t(word) * word_bits + bit;
    }
};

struct SramPopulation {
    BankGeometry geom;
    double temp_coeff = 0.0003; // V per degC; vmin(T) = vmin + temp_coeff*(25 - T)
    std::uint64_t seed = 0;
    std::vector<SramBank> banks;

    double vmin_at(const SramBank& bank, std::size_t cell, double temp_c) const {
        return bank.vmin[cell] + temp_coeff * (kRefTempC - temp_c);
    }
};

// Deterministic population draw: preferred states i.i.d. uniform bits,
// vmin i.i.d. from dist, one derived stream per bank.
SramPopulation sample_population(const BankGeometry& geom, const VminDistribution& dist,
                                 double temp_coeff, std::uint64_t seed);

// Writes always succeed (write-assist assumed); only read disturbance is
// modeled.
void write_word(SramBank& bank, int word_addr, std::uint32_t bits);

// Destructive read: every cell storing its non-preferred state flips to the
// preferred state when voltage < vmin(T), and stays flipped. Returns the
// post-flip word.
std::uint32_t simulate_read(SramPopulation& pop, int bank_id, int word_addr,
                            double voltage, double temp_c);

struct FaultEntry {
    int bank_id = 0;
    int word_addr = 0;
    int bit_index = 0;
    std::uint8_t polarity = 0; // the read (preferred) value

    auto operator<=>(const FaultEntry&) const = default;
};

struct FaultMap {
    double voltage = 0.9;
    double temperature = kRefTempC;
    std::uint64_t seed = 0;
    BankGeometry geom;
    std::vector<FaultEntry> entries; // sorted, unique (bank, word, bit)

    bool operator==(const FaultMap&) const = default;
};

// Read-after-write / read-after-read probe of every word with a pattern and
// its complement, so each cell is exercised storing its non-preferred state.
// Mutates stored cell state like the real probe would.
FaultMap profile(SramPopulation& pop, double voltage, double temp_c);

// |profile entries| / total cells, on a scratch copy of the population.
double fault_rate(const SramPopulation& pop, double voltage, double temp_c);

// OR/AND masks for one word; words absent from the map yield identity masks.
qf::MaskPair compile_masks(const FaultMap& map, int bank_id, int word_addr);

// Stored-image bits pass through `write` when the word is written, then
// through `read` on every read: read over write collapses to a single mask
// pair.
qf::MaskPair compose_masks(const qf::MaskPair& write, const qf::MaskPair& read);

// Dense mask table for fast per-weight lookup during training.
struct CompiledMasks {
    BankGeometry geom;
    std::vector<std::vector<qf::MaskPair>> per_bank; // [bank][word]

    const qf::MaskPair& at(int bank_id, int word_addr) const {
        return per_bank[std::size_t(bank_id)][std::size_t(word_addr)];
    }

    static CompiledMasks identity(const BankGeometry& geom);
};

CompiledMasks compile_all(const FaultMap& map);

// Structured-text fault map file; load(save(m)) == m bit-exactly.
void save_fault_map(const FaultMap& map, const std::string& path);
FaultMap load_fault_map(const std::string& path);

} // namespace matic::sram
