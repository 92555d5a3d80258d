#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "matic/bench.hpp"
#include "matic/errors.hpp"
#include "matic/mat.hpp"

using namespace matic;
using bench::Dataset;
using bench::Metric;

TEST_CASE("fully extended arm reaches (2, 0)") {
    auto [x, y] = bench::forward_kinematics(0.0, 0.0);
    CHECK(x == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(y == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("inversek2j targets satisfy the forward-kinematics round trip") {
    Dataset ds = bench::gen_inversek2j(1000, 42);
    REQUIRE(ds.n() == 1000);
    for (int i = 0; i < ds.n(); ++i) {
        double t1 = ds.raw_target(i, 0);
        double t2 = ds.raw_target(i, 1);
        auto [x, y] = bench::forward_kinematics(t1, t2);
        double fx = ds.feat_lo[0] + ds.features(i)[0] * (ds.feat_hi[0] - ds.feat_lo[0]);
        double fy = ds.feat_lo[1] + ds.features(i)[1] * (ds.feat_hi[1] - ds.feat_lo[1]);
        CHECK(std::fabs(fx - x) < 1e-12);
        CHECK(std::fabs(fy - y) < 1e-12);
    }
}

TEST_CASE("generators are deterministic given (n, seed)") {
    CHECK(bench::gen_inversek2j(200, 7).x == bench::gen_inversek2j(200, 7).x);
    CHECK(bench::gen_bscholes(200, 7).y == bench::gen_bscholes(200, 7).y);
    CHECK(bench::synth_digits(200, 7).x == bench::synth_digits(200, 7).x);
    CHECK(bench::gen_facedet(200, 7).x == bench::gen_facedet(200, 7).x);
    CHECK(bench::gen_inversek2j(200, 8).x != bench::gen_inversek2j(200, 7).x);
}

namespace {

// independent Black-Scholes oracle, deliberately restated from first
// principles with erf rather than erfc
double bs_oracle(double s, double k, double r, double q, double vol, double t) {
    if (vol * std::sqrt(t) < 1e-12) {
        double v = s * std::exp(-q * t) - k * std::exp(-r * t);
        return v > 0 ? v : 0;
    }
    double d1 = (std::log(s / k) + (r - q + 0.5 * vol * vol) * t) / (vol * std::sqrt(t));
    double d2 = d1 - vol * std::sqrt(t);
    auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
    return s * std::exp(-q * t) * cdf(d1) - k * std::exp(-r * t) * cdf(d2);
}

} // namespace

TEST_CASE("zero volatility and zero rate collapse to intrinsic value") {
    CHECK(bench::bs_call_price(120.0, 100.0, 0.0, 0.0, 0.0, 1.0) == 20.0);
    CHECK(bench::bs_call_price(80.0, 100.0, 0.0, 0.0, 0.0, 1.0) == 0.0);
}

TEST_CASE("bscholes targets match the independent closed form to 1e-10") {
    Dataset ds = bench::gen_bscholes(500, 13);
    for (int i = 0; i < ds.n(); ++i) {
        double raw[6];
        for (int k = 0; k < 6; ++k)
            raw[k] = ds.feat_lo[std::size_t(k)] +
                     ds.features(i)[std::size_t(k)] * (ds.feat_hi[std::size_t(k)] - ds.feat_lo[std::size_t(k)]);
        double expect = bs_oracle(raw[0], raw[1], raw[2], raw[5], raw[3], raw[4]);
        CHECK(std::fabs(ds.raw_target(i, 0) - expect) < 1e-10);
    }
}

TEST_CASE("IDX parsing reads the standard byte layout") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "matic_idx_test";
    fs::create_directories(dir);
    {
        std::ofstream img(dir / "train-images-idx3-ubyte", std::ios::binary);
        auto be32 = [&](std::uint32_t v) {
            unsigned char b[4] = {(unsigned char)(v >> 24), (unsigned char)(v >> 16),
                                  (unsigned char)(v >> 8), (unsigned char)v};
            img.write((const char*)b, 4);
        };
        be32(0x00000803u);
        be32(2); // two images
        be32(28);
        be32(28);
        std::vector<unsigned char> zero(28 * 28, 0);
        img.write((const char*)zero.data(), 28 * 28);
        std::vector<unsigned char> full(28 * 28, 255);
        img.write((const char*)full.data(), 28 * 28);
    }
    {
        std::ofstream lbl(dir / "train-labels-idx1-ubyte", std::ios::binary);
        unsigned char hdr[8] = {0, 0, 8, 1, 0, 0, 0, 2};
        lbl.write((const char*)hdr, 8);
        unsigned char labels[2] = {3, 7};
        lbl.write((const char*)labels, 2);
    }
    Dataset ds = bench::load_mnist(dir.string());
    REQUIRE(ds.n() == 2);
    CHECK(ds.n_features == 100);
    // all-zero image downsamples to all-zero features
    for (int k = 0; k < 100; ++k) CHECK(ds.features(0)[std::size_t(k)] == 0.0);
    for (int k = 0; k < 100; ++k) CHECK(ds.features(1)[std::size_t(k)] == doctest::Approx(1.0));
    CHECK(ds.targets(0)[3] == 1.0);
    CHECK(ds.targets(1)[7] == 1.0);

    // corrupt magic is a clear diagnostic
    {
        std::ofstream img(dir / "train-images-idx3-ubyte", std::ios::binary);
        img << "garbage";
    }
    CHECK_THROWS_AS(bench::load_mnist(dir.string()), DataMissingError);
    CHECK_THROWS_AS(bench::load_mnist("/nonexistent/path"), DataMissingError);
    fs::remove_all(dir);
}

TEST_CASE("CBCL-style PGM corpus loads, resamples to 400 features, and labels by directory") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "matic_cbcl_test";
    fs::remove_all(dir);
    fs::create_directories(dir / "face");
    fs::create_directories(dir / "non-face");
    auto write_pgm = [](const fs::path& path, unsigned char fill) {
        std::ofstream f(path, std::ios::binary);
        f << "P5\n# test image\n19 19\n255\n";
        std::vector<unsigned char> pix(19 * 19, fill);
        f.write((const char*)pix.data(), 19 * 19);
    };
    write_pgm(dir / "face" / "a.pgm", 255);
    write_pgm(dir / "face" / "b.pgm", 128);
    write_pgm(dir / "non-face" / "c.pgm", 0);
    bench::Dataset ds = bench::load_cbcl(dir.string());
    REQUIRE(ds.n() == 3);
    CHECK(ds.n_features == 400);
    // constant images stay constant through resampling
    for (int k = 0; k < 400; ++k) CHECK(ds.features(0)[std::size_t(k)] == doctest::Approx(1.0));
    for (int k = 0; k < 400; ++k) CHECK(ds.features(2)[std::size_t(k)] == doctest::Approx(0.0));
    CHECK(ds.targets(0)[0] == 1.0);
    CHECK(ds.targets(1)[0] == 1.0);
    CHECK(ds.targets(2)[0] == 0.0);
    CHECK_THROWS_AS(bench::load_cbcl("/nonexistent/corpus"), DataMissingError);
    fs::remove_all(dir);
}

TEST_CASE("synthetic digit classes stay balanced through the split") {
    bench::BenchmarkSpec spec = bench::benchmark_spec("mnist");
    auto data = bench::make_benchmark_data(spec, 5);
    auto count_labels = [](const Dataset& ds) {
        std::vector<int> c(10, 0);
        for (int i = 0; i < ds.n(); ++i)
            for (int k = 0; k < 10; ++k)
                if (ds.targets(i)[std::size_t(k)] == 1.0) ++c[std::size_t(k)];
        return c;
    };
    auto train_c = count_labels(data.train);
    for (int k = 0; k < 10; ++k) {
        double frac = double(train_c[std::size_t(k)]) / data.train.n();
        CHECK(std::fabs(frac - 0.1) < 0.02);
    }
    CHECK(data.train.n() == 4000);
    CHECK(data.test.n() == 1000);
}

TEST_CASE("facedet generates 400 features and is easily separable by 400-8-1") {
    bench::BenchmarkSpec spec = bench::benchmark_spec("facedet");
    spec.train_samples = 700;
    spec.test_samples = 100;
    auto data = bench::make_benchmark_data(spec, 3);
    CHECK(data.train.n_features == 400);
    nn::Mlp net = bench::make_benchmark_net(spec);
    nn::init_weights(net, Rng(3).derive("init").derive("facedet"));
    mat::TrainConfig tc;
    tc.alpha = spec.alpha;
    tc.epochs = 10;
    tc.pretrain_epochs = 0;
    tc.loss = spec.loss;
    tc.seed = 3;
    tc.quantize = false;
    mat::WeightMapping dummy;
    auto r = mat::train(std::move(net), data.train, data.test, tc, mat::TrainMode::naive, dummy,
                        nullptr);
    CHECK(r.history.back().test_error < 0.05);
}

TEST_CASE("classification metric: perfect predictions and random baseline") {
    std::vector<double> t(100 * 10, 0.0);
    Rng rng(11);
    for (int i = 0; i < 100; ++i) t[std::size_t(i * 10) + rng.uniform_index(10)] = 1.0;
    CHECK(bench::metric_error(t, t, 100, 10, Metric::classification) == 0.0);

    // uniform-random outputs misclassify about 90%
    int n = 4000;
    std::vector<double> targ(std::size_t(n) * 10, 0.0), outs(std::size_t(n) * 10);
    for (int i = 0; i < n; ++i) targ[std::size_t(i * 10) + rng.uniform_index(10)] = 1.0;
    for (auto& v : outs) v = rng.uniform();
    double err = bench::metric_error(outs, targ, n, 10, Metric::classification);
    CHECK(std::fabs(err - 0.9) < 3.0 * std::sqrt(0.9 * 0.1 / n));
}

TEST_CASE("MSE of the constant-mean predictor equals the target variance") {
    Rng rng(13);
    int n = 5000;
    std::vector<double> targ(std::size_t(n), 0.0);
    double mean = 0.0;
    for (auto& v : targ) {
        v = rng.uniform(0.0, 1.0);
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : targ) var += (v - mean) * (v - mean);
    var /= n;
    std::vector<double> outs(std::size_t(n), mean);
    CHECK(bench::metric_error(outs, targ, n, 1, Metric::mse) == doctest::Approx(var).epsilon(1e-12));
}

TEST_CASE("metric rejects shape mismatches") {
    std::vector<double> a(10), b(12);
    CHECK_THROWS(bench::metric_error(a, b, 10, 1, Metric::mse));
}

TEST_CASE("AEI basics") {
    std::vector<double> flat{0.1, 0.1, 0.1};
    CHECK(bench::aei(flat, 0.1, Metric::classification) == 0.0);
    std::vector<double> pts{0.20, 0.30};
    CHECK(bench::aei(pts, 0.10, Metric::classification) == doctest::Approx(15.0).epsilon(1e-9));
    std::vector<double> mse{0.02, 0.04};
    CHECK(bench::aei(mse, 0.01, Metric::mse) == doctest::Approx(2.0).epsilon(1e-9));
    std::vector<double> above{0.15, 0.12, 0.30};
    CHECK(bench::aei(above, 0.1, Metric::classification) >= 0.0);
    CHECK_THROWS(bench::aei({}, 0.1, Metric::mse));
}

TEST_CASE("knee finding on synthetic curves") {
    // strictly flat curve: the most compact topology wins
    std::vector<double> xs{10, 20, 40, 80};
    std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    CHECK(bench::knee_index(xs, flat) == 0);

    // L-shaped curve: the corner point
    std::vector<double> lx{10, 20, 30, 100};
    std::vector<double> ly{1.0, 0.5, 0.05, 0.04};
    CHECK(bench::knee_index(lx, ly) == 2);

    // convex monotone-decreasing curve: an interior knee
    std::vector<double> cx, cy;
    for (int i = 0; i <= 10; ++i) {
        cx.push_back(10.0 * (i + 1));
        cy.push_back(1.0 / (i + 1));
    }
    std::size_t k = bench::knee_index(cx, cy);
    CHECK(k > 0);
    CHECK(k < cx.size() - 1);
}

TEST_CASE("topology sweep picks a knee and orders points by parameter count") {
    bench::BenchmarkSpec spec = bench::benchmark_spec("inversek2j");
    spec.train_samples = 300;
    spec.test_samples = 60;
    auto data = bench::make_benchmark_data(spec, 17);
    bench::TopoConfig tc;
    tc.alpha = 0.1;
    tc.epochs = 10;
    tc.seed = 17;
    auto curve = bench::topology_sweep(spec, data, {{2, 2, 2}, {2, 4, 2}, {2, 8, 2}, {2, 16, 2}},
                                       tc);
    REQUIRE(curve.points.size() == 4);
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].params > curve.points[i - 1].params);
    CHECK(curve.knee_index < curve.points.size());
}

TEST_CASE("splits are disjoint and exhaustive") {
    Dataset ds = bench::gen_bscholes(100, 3);
    auto split = bench::split_dataset(ds, 70);
    CHECK(split.train.n() == 70);
    CHECK(split.test.n() == 30);
    std::vector<double> rejoined = split.train.x;
    rejoined.insert(rejoined.end(), split.test.x.begin(), split.test.x.end());
    CHECK(rejoined == ds.x);
}

TEST_CASE("dataset text cache round trips bit-exactly") {
    Dataset ds = bench::gen_bscholes(50, 9);
    auto path = (std::filesystem::temp_directory_path() / "matic_ds_test.txt").string();
    bench::save_dataset(ds, path);
    Dataset loaded = bench::load_dataset(path);
    CHECK(loaded.x == ds.x);
    CHECK(loaded.y == ds.y);
    CHECK(loaded.feat_lo == ds.feat_lo);
    CHECK(loaded.targ_hi == ds.targ_hi);
    CHECK(loaded.metric == ds.metric);
    std::filesystem::remove(path);
}
