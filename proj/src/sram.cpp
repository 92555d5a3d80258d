#include "matic/sram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace matic::sram {

VminDistribution VminDistribution::truncated_normal(double mu, double sigma) {
    VminDistribution d;
    d.family = Family::truncated_normal;
    d.mu = mu;
    d.sigma = sigma;
    return d;
}

VminDistribution VminDistribution::calibrated_default() {
    VminDistribution d;
    d.family = Family::calibrated;
    // Anchors: 28% cell failures at 0.50 V, first failures at 0.53 V, total
    // failure at ~0.40 V. Intermediate points shape the steep measured curve.
    d.survival = {
        {0.400, 1.0},
        {0.430, 0.92},
        {0.450, 0.78},
        {0.460, 0.62},
        {0.470, 0.50},
        {0.480, 0.40},
        {0.490, 0.335},
        {0.500, 0.28},
        {0.508, 0.17},
        {0.515, 0.07},
        {0.522, 0.012},
        {0.528, 0.0008},
        {0.530, 0.00002},
        {0.535, 0.0},
    };
    return d;
}

double VminDistribution::sample(Rng& rng) const {
    if (family == Family::truncated_normal) {
        if (sigma <= 0.0) throw std::invalid_argument("VminDistribution: sigma must be > 0");
        for (int i = 0; i < 1000; ++i) {
            double v = rng.normal(mu, sigma);
            if (v > 0.0 && v < 0.9) return v;
        }
        throw std::invalid_argument("VminDistribution: degenerate truncated normal");
    }
    // calibrated: invert the survival curve. u ~ U(0,1); vmin is the voltage
    // where survival crosses u, so P(vmin > V) equals the curve exactly.
    double u = rng.uniform();
    const auto& s = survival;
    if (u >= s.front().second) return s.front().first;
    for (std::size_t i = 1; i < s.size(); ++i) {
        double s0 = s[i - 1].second, s1 = s[i].second;
        if (u >= s1) {
            double t = (s0 - u) / (s0 - s1);
            return s[i - 1].first + t * (s[i].first - s[i - 1].first);
        }
    }
    return s.back().first;
}

double VminDistribution::expected_fault_rate(double v) const {
    if (family == Family::truncated_normal) {
        // survival of the untruncated normal, adequate for (0, 0.9) bodies
        return 0.5 * std::erfc((v - mu) / (sigma * std::sqrt(2.0)));
    }
    const auto& s = survival;
    if (v <= s.front().first) return 1.0;
    if (v >= s.back().first) return 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (v <= s[i].first) {
            double t = (v - s[i - 1].first) / (s[i].first - s[i - 1].first);
            return s[i - 1].second + t * (s[i].second - s[i - 1].second);
        }
    }
    return 0.0;
}

SramPopulation sample_population(const BankGeometry& geom, const VminDistribution& dist,
                                 double temp_coeff, std::uint64_t seed) {
    if (geom.n_banks < 1 || geom.words_per_bank < 1 || geom.word_bits < 1 || geom.word_bits > 32)
        throw std::invalid_argument("sample_population: bad geometry");
    if (dist.family == VminDistribution::Family::truncated_normal && dist.sigma <= 0.0)
        throw std::invalid_argument("sample_population: degenerate distribution");

    SramPopulation pop;
    pop.geom = geom;
    pop.temp_coeff = temp_coeff;
    pop.seed = seed;
    pop.banks.resize(std::size_t(geom.n_banks));
    Rng root(seed);
    for (int b = 0; b < geom.n_banks; ++b) {
        SramBank& bank = pop.banks[std::size_t(b)];
        bank.bank_id = b;
        bank.n_words = geom.words_per_bank;
        bank.word_bits = geom.word_bits;
        std::size_t cells = std::size_t(geom.words_per_bank) * geom.word_bits;
        bank.vmin.resize(cells);
        bank.preferred.resize(cells);
        bank.stored.resize(cells);
        Rng rng = root.derive("population", std::uint64_t(b));
        for (std::size_t c = 0; c < cells; ++c) {
            bank.preferred[c] = rng.bit() ? 1 : 0;
            bank.vmin[c] = dist.sample(rng);
            bank.stored[c] = bank.preferred[c];
        }
    }
    return pop;
}

void write_word(SramBank& bank, int word_addr, std::uint32_t bits) {
    if (word_addr < 0 || word_addr >= bank.n_words)
        throw std::out_of_range("write_word: address out of range");
    for (int i = 0; i < bank.word_bits; ++i)
        bank.stored[bank.cell_index(word_addr, i)] = (bits >> i) & 1u;
}

std::uint32_t simulate_read(SramPopulation& pop, int bank_id, int word_addr,
                            double voltage, double temp_c) {
    if (bank_id < 0 || bank_id >= int(pop.banks.size()))
        throw std::out_of_range("simulate_read: bank out of range");
    SramBank& bank = pop.banks[std::size_t(bank_id)];
    if (word_addr < 0 || word_addr >= bank.n_words)
        throw std::out_of_range("simulate_read: address out of range");
    std::uint32_t bits = 0;
    for (int i = 0; i < bank.word_bits; ++i) {
        std::size_t c = bank.cell_index(word_addr, i);
        if (bank.stored[c] != bank.preferred[c] && voltage < pop.vmin_at(bank, c, temp_c))
            bank.stored[c] = bank.preferred[c];
        bits |= std::uint32_t(bank.stored[c]) << i;
    }
    return bits;
}

FaultMap profile(SramPopulation& pop, double voltage, double temp_c) {
    FaultMap map;
    map.voltage = voltage;
    map.temperature = temp_c;
    map.seed = pop.seed;
    map.geom = pop.geom;
    std::uint32_t width = pop.geom.word_bits >= 32 ? 0xffffffffu : ((1u << pop.geom.word_bits) - 1u);
    std::uint32_t probe = 0xaaaaaaaau & width;

    std::vector<std::vector<FaultEntry>> per_bank(pop.banks.size());
    std::int64_t n_banks = std::int64_t(pop.banks.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < n_banks; ++b) {
        SramBank& bank = pop.banks[std::size_t(b)];
        auto& out = per_bank[std::size_t(b)];
        for (int w = 0; w < bank.n_words; ++w) {
            for (std::uint32_t pattern : {probe, ~probe & width}) {
                write_word(bank, w, pattern);
                std::uint32_t r1 = simulate_read(pop, int(b), w, voltage, temp_c);
                std::uint32_t r2 = simulate_read(pop, int(b), w, voltage, temp_c);
                (void)r1; // first failing read already settles the cell
                std::uint32_t diff = r2 ^ pattern;
                for (int i = 0; i < bank.word_bits; ++i) {
                    if ((diff >> i) & 1u)
                        out.push_back(FaultEntry{int(b), w, i, std::uint8_t((r2 >> i) & 1u)});
                }
            }
        }
    }
    for (auto& v : per_bank)
        map.entries.insert(map.entries.end(), v.begin(), v.end());
    std::sort(map.entries.begin(), map.entries.end());
    return map;
}

double fault_rate(const SramPopulation& pop, double voltage, double temp_c) {
    SramPopulation scratch = pop;
    FaultMap map = profile(scratch, voltage, temp_c);
    return double(map.entries.size()) / double(pop.geom.total_cells());
}

qf::MaskPair compile_masks(const FaultMap& map, int bank_id, int word_addr) {
    qf::MaskPair m;
    auto lo = std::lower_bound(map.entries.begin(), map.entries.end(),
                               FaultEntry{bank_id, word_addr, 0, 0});
    for (auto it = lo; it != map.entries.end() && it->bank_id == bank_id &&
                       it->word_addr == word_addr; ++it) {
        if (it->polarity)
            m.b_or |= 1u << it->bit_index;
        else
            m.b_and &= ~(1u << it->bit_index);
    }
    return m;
}

qf::MaskPair compose_masks(const qf::MaskPair& write, const qf::MaskPair& read) {
    // read(write(q)) = (((q & w_and) | w_or) & r_and) | r_or
    qf::MaskPair m;
    m.b_or = read.b_or | (read.b_and & write.b_or);
    m.b_and = read.b_and & write.b_and;
    return m;
}

CompiledMasks CompiledMasks::identity(const BankGeometry& geom) {
    CompiledMasks cm;
    cm.geom = geom;
    cm.per_bank.assign(std::size_t(geom.n_banks),
                       std::vector<qf::MaskPair>(std::size_t(geom.words_per_bank)));
    return cm;
}

CompiledMasks compile_all(const FaultMap& map) {
    CompiledMasks cm = CompiledMasks::identity(map.geom);
    for (const auto& e : map.entries) {
        qf::MaskPair& m = cm.per_bank[std::size_t(e.bank_id)][std::size_t(e.word_addr)];
        if (e.polarity) {
            if (((m.b_and >> e.bit_index) & 1u) == 0)
                throw std::invalid_argument("compile_all: bit listed with both polarities");
            m.b_or |= 1u << e.bit_index;
        } else {
            if ((m.b_or >> e.bit_index) & 1u)
                throw std::invalid_argument("compile_all: bit listed with both polarities");
            m.b_and &= ~(1u << e.bit_index);
        }
    }
    return cm;
}

void save_fault_map(const FaultMap& map, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_fault_map: cannot open " + path);
    char buf[128];
    std::snprintf(buf, sizeof buf, "# faultmap v1\n# voltage %.17g\n# temperature %.17g\n",
                  map.voltage, map.temperature);
    f << buf;
    f << "# seed " << map.seed << "\n";
    f << "# geometry " << map.geom.n_banks << ' ' << map.geom.words_per_bank << ' '
      << map.geom.word_bits << "\n";
    f << "bank word bit polarity\n";
    for (const auto& e : map.entries)
        f << e.bank_id << ' ' << e.word_addr << ' ' << e.bit_index << ' '
          << int(e.polarity) << '\n';
}

FaultMap load_fault_map(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_fault_map: cannot open " + path);
    FaultMap map;
    std::string line;
    if (!std::getline(f, line) || line != "# faultmap v1")
        throw std::runtime_error("load_fault_map: bad header in " + path);
    auto expect_field = [&](const char* name) -> std::string {
        if (!std::getline(f, line)) throw std::runtime_error("load_fault_map: truncated header");
        std::istringstream ss(line);
        std::string hash, key;
        ss >> hash >> key;
        if (hash != "#" || key != name)
            throw std::runtime_error(std::string("load_fault_map: expected ") + name);
        std::string rest;
        std::getline(ss, rest);
        return rest;
    };
    map.voltage = std::stod(expect_field("voltage"));
    map.temperature = std::stod(expect_field("temperature"));
    map.seed = std::stoull(expect_field("seed"));
    {
        std::istringstream gs(expect_field("geometry"));
        gs >> map.geom.n_banks >> map.geom.words_per_bank >> map.geom.word_bits;
    }
    if (!std::getline(f, line) || line != "bank word bit polarity")
        throw std::runtime_error("load_fault_map: missing column header");
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        FaultEntry e;
        int pol;
        if (!(ss >> e.bank_id >> e.word_addr >> e.bit_index >> pol))
            throw std::runtime_error("load_fault_map: bad record: " + line);
        e.polarity = std::uint8_t(pol);
        map.entries.push_back(e);
    }
    if (!std::is_sorted(map.entries.begin(), map.entries.end()))
        throw std::runtime_error("load_fault_map: entries not sorted");
    for (std::size_t i = 1; i < map.entries.size(); ++i) {
        const auto& a = map.entries[i - 1];
        const auto& b = map.entries[i];
        if (a.bank_id == b.bank_id && a.word_addr == b.word_addr && a.bit_index == b.bit_index)
            throw std::runtime_error("load_fault_map: duplicate cell record");
    }
    return map;
}

} // namespace matic::sram
