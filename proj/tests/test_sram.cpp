#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "matic/sram.hpp"

using namespace matic;
using sram::BankGeometry;
using sram::FaultMap;
using sram::SramPopulation;
using sram::VminDistribution;

namespace {

BankGeometry small_geom{4, 32, 8}; // 1024 cells, fast

SramPopulation make_pop(std::uint64_t seed, VminDistribution dist = VminDistribution::truncated_normal(0.45, 0.025)) {
    return sram::sample_population(small_geom, dist, 0.0003, seed);
}

// set-comparison oracle used by the monotonicity checks
std::set<std::tuple<int, int, int>> cell_set(const FaultMap& m) {
    std::set<std::tuple<int, int, int>> s;
    for (const auto& e : m.entries) s.insert({e.bank_id, e.word_addr, e.bit_index});
    return s;
}

} // namespace

TEST_CASE("population sampling is deterministic and sized per geometry") {
    BankGeometry geom{8, 144, 16};
    auto dist = VminDistribution::truncated_normal(0.45, 0.025);
    SramPopulation a = sram::sample_population(geom, dist, 0.0003, 42);
    SramPopulation b = sram::sample_population(geom, dist, 0.0003, 42);
    CHECK(geom.total_cells() == 18432);
    REQUIRE(a.banks.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(a.banks[std::size_t(i)].vmin == b.banks[std::size_t(i)].vmin);
        CHECK(a.banks[std::size_t(i)].preferred == b.banks[std::size_t(i)].preferred);
        CHECK(a.banks[std::size_t(i)].vmin.size() == 144 * 16);
    }
    SramPopulation c = sram::sample_population(geom, dist, 0.0003, 43);
    CHECK(c.banks[0].vmin != a.banks[0].vmin);
}

TEST_CASE("normal-tail oracle: fault proportion at 0.5 V matches 1 - Phi(2)") {
    BankGeometry geom{8, 144, 16}; // 18432 cells
    auto dist = VminDistribution::truncated_normal(0.45, 0.025);
    SramPopulation pop = sram::sample_population(geom, dist, 0.0003, 42);
    double rate = sram::fault_rate(pop, 0.5, sram::kRefTempC);
    double p = 0.5 * std::erfc(2.0 / std::sqrt(2.0)); // 0.02275
    double sigma3 = 3.0 * std::sqrt(p * (1 - p) / double(geom.total_cells()));
    CHECK(std::fabs(rate - p) <= sigma3);
}

TEST_CASE("paper-calibrated curve hits the published anchors") {
    BankGeometry geom{8, 576, 16}; // 73728 cells, the 9 KB default
    SramPopulation pop = sram::sample_population(geom, VminDistribution::calibrated_default(),
                                                 0.0003, 1);
    double at_050 = sram::fault_rate(pop, 0.50, sram::kRefTempC);
    double sigma3 = 3.0 * std::sqrt(0.28 * 0.72 / double(geom.total_cells()));
    CHECK(std::fabs(at_050 - 0.28) <= sigma3);
    CHECK(sram::fault_rate(pop, 0.53, sram::kRefTempC) <= 1e-4);
    CHECK(sram::fault_rate(pop, 0.90, sram::kRefTempC) == 0.0);
    CHECK(sram::fault_rate(pop, 0.40, sram::kRefTempC) == 1.0);
}

TEST_CASE("degenerate distribution is rejected") {
    CHECK_THROWS(sram::sample_population(small_geom,
                                         VminDistribution::truncated_normal(0.45, 0.0), 0.0003, 1));
}

TEST_CASE("read above every vmin returns the stored word unmodified") {
    SramPopulation pop = make_pop(3);
    for (int w = 0; w < small_geom.words_per_bank; ++w) {
        sram::write_word(pop.banks[0], w, 0x5au);
        CHECK(sram::simulate_read(pop, 0, w, 0.9, sram::kRefTempC) == 0x5au);
        CHECK(sram::simulate_read(pop, 0, w, 0.9, sram::kRefTempC) == 0x5au);
    }
}

TEST_CASE("a marginal cell flips to its preferred state and stays flipped") {
    SramPopulation pop = make_pop(4);
    auto& bank = pop.banks[0];
    std::size_t cell = bank.cell_index(5, 3);
    bank.preferred[cell] = 1;
    bank.vmin[cell] = 0.52;
    sram::write_word(bank, 5, 0x00u); // stores 0, the non-preferred state
    // every other cell in the word holds its preferred state and cannot flip
    std::uint32_t expect = 0;
    for (int i = 0; i < 8; ++i)
        if (i != 3) {
            bank.stored[bank.cell_index(5, i)] = bank.preferred[bank.cell_index(5, i)];
            expect |= std::uint32_t(bank.preferred[bank.cell_index(5, i)]) << i;
        }
    std::uint32_t r1 = sram::simulate_read(pop, 0, 5, 0.50, sram::kRefTempC);
    CHECK(((r1 >> 3) & 1u) == 1u);
    CHECK(sram::simulate_read(pop, 0, 5, 0.50, sram::kRefTempC) == r1);
    CHECK(sram::simulate_read(pop, 0, 5, 0.90, sram::kRefTempC) == r1); // sticky
    CHECK((r1 & ~(1u << 3)) == expect);
}

TEST_CASE("a cell already storing its preferred state never changes") {
    SramPopulation pop = make_pop(5);
    auto& bank = pop.banks[1];
    for (int w = 0; w < bank.n_words; ++w) {
        std::uint32_t pref = 0;
        for (int i = 0; i < 8; ++i)
            pref |= std::uint32_t(bank.preferred[bank.cell_index(w, i)]) << i;
        sram::write_word(bank, w, pref);
        CHECK(sram::simulate_read(pop, 1, w, 0.01, sram::kRefTempC) == pref);
    }
}

TEST_CASE("address out of range is rejected") {
    SramPopulation pop = make_pop(6);
    CHECK_THROWS_AS(sram::simulate_read(pop, 0, 999, 0.9, 25.0), std::out_of_range);
    CHECK_THROWS_AS(sram::simulate_read(pop, 99, 0, 0.9, 25.0), std::out_of_range);
    CHECK_THROWS_AS(sram::write_word(pop.banks[0], -1, 0), std::out_of_range);
}

TEST_CASE("profile above every vmin is empty, far below lists every cell") {
    SramPopulation pop = make_pop(7);
    SramPopulation copy = pop;
    CHECK(sram::profile(copy, 0.9, sram::kRefTempC).entries.empty());
    copy = pop;
    FaultMap all = sram::profile(copy, 0.01, sram::kRefTempC);
    CHECK(std::int64_t(all.entries.size()) == small_geom.total_cells());
    for (const auto& e : all.entries) {
        const auto& bank = pop.banks[std::size_t(e.bank_id)];
        CHECK(e.polarity == bank.preferred[bank.cell_index(e.word_addr, e.bit_index)]);
    }
}

TEST_CASE("fault sets grow as voltage drops and shrink as temperature rises") {
    SramPopulation pop = make_pop(8);
    SramPopulation c1 = pop, c2 = pop, c3 = pop, c4 = pop;
    auto low_v = cell_set(sram::profile(c1, 0.42, 25.0));
    auto high_v = cell_set(sram::profile(c2, 0.47, 25.0));
    CHECK(high_v.size() > 0);
    CHECK(std::includes(low_v.begin(), low_v.end(), high_v.begin(), high_v.end()));
    // temp_coeff > 0: hotter means lower vmin, fewer faults
    auto cold = cell_set(sram::profile(c3, 0.45, -15.0));
    auto hot = cell_set(sram::profile(c4, 0.45, 90.0));
    CHECK(std::includes(cold.begin(), cold.end(), hot.begin(), hot.end()));
    CHECK(cold.size() > hot.size());
}

TEST_CASE("profiling twice yields identical fault maps") {
    SramPopulation pop = make_pop(9);
    SramPopulation c1 = pop, c2 = pop;
    FaultMap a = sram::profile(c1, 0.45, 25.0);
    FaultMap b = sram::profile(c2, 0.45, 25.0);
    CHECK(a == b);
    // profiling the already-disturbed population again gives the same map
    FaultMap c = sram::profile(c1, 0.45, 25.0);
    CHECK(a == c);
}

TEST_CASE("fault_rate equals the empirical vmin CDF complement") {
    SramPopulation pop = make_pop(10);
    std::vector<double> all_vmin;
    for (const auto& bank : pop.banks)
        all_vmin.insert(all_vmin.end(), bank.vmin.begin(), bank.vmin.end());
    std::sort(all_vmin.begin(), all_vmin.end());
    for (double v : {0.40, 0.44, 0.46, 0.50}) {
        double rate = sram::fault_rate(pop, v, sram::kRefTempC);
        auto above = all_vmin.end() - std::upper_bound(all_vmin.begin(), all_vmin.end(), v);
        CHECK(rate == doctest::Approx(double(above) / double(all_vmin.size())).epsilon(1e-12));
    }
}

TEST_CASE("compiled masks replay the fault entries bit by bit") {
    SramPopulation pop = make_pop(11);
    SramPopulation copy = pop;
    FaultMap map = sram::profile(copy, 0.45, 25.0);
    REQUIRE(!map.entries.empty());
    sram::CompiledMasks cm = sram::compile_all(map);
    qf::QFormat fmt{8, 6};
    Rng rng(1);
    for (int bank = 0; bank < small_geom.n_banks; ++bank) {
        for (int w = 0; w < small_geom.words_per_bank; ++w) {
            qf::MaskPair mp = sram::compile_masks(map, bank, w);
            CHECK(mp == cm.at(bank, w));
            std::uint32_t bits = std::uint32_t(rng.next_u64() & 0xff);
            std::uint32_t masked = qf::apply_masks({bits, fmt}, mp.b_or, mp.b_and).bits;
            // brute-force replay of the entries for this word
            std::uint32_t expect = bits;
            for (const auto& e : map.entries) {
                if (e.bank_id != bank || e.word_addr != w) continue;
                if (e.polarity)
                    expect |= 1u << e.bit_index;
                else
                    expect &= ~(1u << e.bit_index);
            }
            CHECK(masked == expect);
        }
    }
}

TEST_CASE("empty map compiles to identity masks") {
    FaultMap empty;
    empty.geom = small_geom;
    qf::MaskPair mp = sram::compile_masks(empty, 0, 0);
    CHECK(mp.b_or == 0);
    CHECK(mp.b_and == 0xffffffffu);
    FaultMap one;
    one.geom = small_geom;
    one.entries.push_back({2, 7, 7, 1});
    CHECK(sram::compile_masks(one, 2, 7).b_or == 0x80u);
    CHECK(sram::compile_masks(one, 2, 6).b_or == 0u);
}

TEST_CASE("mask composition equals sequential application") {
    Rng rng(99);
    qf::QFormat fmt{8, 6};
    for (int i = 0; i < 20000; ++i) {
        qf::MaskPair w{std::uint32_t(rng.next_u64() & 0xff), std::uint32_t(rng.next_u64())};
        qf::MaskPair r{std::uint32_t(rng.next_u64() & 0xff), std::uint32_t(rng.next_u64())};
        std::uint32_t bits = std::uint32_t(rng.next_u64() & 0xff);
        auto seq = qf::apply_masks(qf::apply_masks({bits, fmt}, w.b_or, w.b_and), r.b_or, r.b_and);
        auto composed = sram::compose_masks(w, r);
        CHECK(qf::apply_masks({bits, fmt}, composed.b_or, composed.b_and) == seq);
    }
}

TEST_CASE("fault map file round trip is exact") {
    SramPopulation pop = make_pop(12);
    SramPopulation copy = pop;
    FaultMap map = sram::profile(copy, 0.451234567, 25.5);
    auto path = (std::filesystem::temp_directory_path() / "matic_fm_test.txt").string();
    sram::save_fault_map(map, path);
    FaultMap loaded = sram::load_fault_map(path);
    CHECK(loaded == map);
    std::filesystem::remove(path);
}

TEST_CASE("loading rejects duplicate or unsorted records") {
    auto path = (std::filesystem::temp_directory_path() / "matic_fm_bad.txt").string();
    {
        std::ofstream f(path);
        f << "# faultmap v1\n# voltage 0.5\n# temperature 25\n# seed 1\n";
        f << "# geometry 4 32 8\nbank word bit polarity\n";
        f << "0 1 2 1\n0 1 2 0\n";
    }
    CHECK_THROWS(sram::load_fault_map(path));
    std::filesystem::remove(path);
}
