#include "matic/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "matic/errors.hpp"
#include "matic/mat.hpp"

namespace matic::bench {

const char* to_string(Metric m) { return m == Metric::classification ? "classification" : "mse"; }

TrainTestSplit split_dataset(const Dataset& ds, int n_train) {
    if (n_train < 0 || n_train > ds.n())
        throw std::invalid_argument("split_dataset: bad split point");
    TrainTestSplit s;
    auto copy_meta = [&](Dataset& d) {
        d.n_features = ds.n_features;
        d.n_outputs = ds.n_outputs;
        d.metric = ds.metric;
        d.feat_lo = ds.feat_lo;
        d.feat_hi = ds.feat_hi;
        d.targ_lo = ds.targ_lo;
        d.targ_hi = ds.targ_hi;
    };
    copy_meta(s.train);
    copy_meta(s.test);
    std::size_t fx = std::size_t(n_train) * ds.n_features;
    std::size_t fy = std::size_t(n_train) * ds.n_outputs;
    s.train.x.assign(ds.x.begin(), ds.x.begin() + fx);
    s.train.y.assign(ds.y.begin(), ds.y.begin() + fy);
    s.test.x.assign(ds.x.begin() + fx, ds.x.end());
    s.test.y.assign(ds.y.begin() + fy, ds.y.end());
    return s;
}

BenchmarkSpec benchmark_spec(const std::string& name) {
    BenchmarkSpec s;
    s.name = name;
    if (name == "mnist") {
        s.topology = {100, 32, 10};
        s.metric = Metric::classification;
        s.loss = nn::Loss::cross_entropy;
        s.train_samples = 4000;
        s.test_samples = 1000;
        s.alpha = 0.05;
        s.pretrain_epochs = 20;
        s.epochs = 15;
    } else if (name == "facedet") {
        s.topology = {400, 8, 1};
        s.metric = Metric::classification;
        s.loss = nn::Loss::mse;
        s.train_samples = 1750;
        s.test_samples = 250;
        s.alpha = 0.5;
        s.pretrain_epochs = 20;
        s.epochs = 15;
    } else if (name == "inversek2j") {
        s.topology = {2, 16, 2};
        s.metric = Metric::mse;
        s.loss = nn::Loss::mse;
        s.train_samples = 3500;
        s.test_samples = 500;
        s.alpha = 0.1;
        s.pretrain_epochs = 30;
        s.epochs = 20;
        s.frac_bits = 12;
    } else if (name == "bscholes") {
        s.topology = {6, 16, 1};
        s.metric = Metric::mse;
        s.loss = nn::Loss::mse;
        s.train_samples = 3500;
        s.test_samples = 500;
        s.alpha = 0.3;
        s.pretrain_epochs = 30;
        s.epochs = 20;
        s.frac_bits = 12;
    } else {
        throw ConfigError("unknown benchmark: " + name);
    }
    return s;
}

std::vector<std::string> benchmark_names() { return {"mnist", "facedet", "inversek2j", "bscholes"}; }

nn::Mlp make_benchmark_net(const BenchmarkSpec& spec) {
    // regression heads are linear so the error signal survives large fault
    // injections; the single-output classifier keeps a sigmoid + 0.5
    // threshold
    nn::Activation out_act = spec.metric == Metric::mse || spec.loss == nn::Loss::cross_entropy
                                 ? nn::Activation::linear
                                 : nn::Activation::sigmoid;
    return nn::make_mlp(spec.topology, nn::Activation::sigmoid, out_act);
}

// --- inversek2j ------------------------------------------------------------

std::pair<double, double> forward_kinematics(double theta1, double theta2) {
    return {std::cos(theta1) + std::cos(theta1 + theta2),
            std::sin(theta1) + std::sin(theta1 + theta2)};
}

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTheta2Lo = 0.2;

}

Dataset gen_inversek2j(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_inversek2j: n must be >= 1");
    Dataset ds;
    ds.n_features = 2;
    ds.n_outputs = 2;
    ds.metric = Metric::mse;
    ds.feat_lo = {-2.0, -2.0};
    ds.feat_hi = {2.0, 2.0};
    ds.targ_lo = {0.0, kTheta2Lo};
    ds.targ_hi = {kPi / 2.0, kPi - kTheta2Lo};
    ds.x.reserve(std::size_t(n) * 2);
    ds.y.reserve(std::size_t(n) * 2);
    Rng rng = Rng(seed).derive("dataset.inversek2j");
    for (int i = 0; i < n; ++i) {
        double t1 = rng.uniform(0.0, kPi / 2.0);
        double t2 = rng.uniform(kTheta2Lo, kPi - kTheta2Lo);
        auto [x, y] = forward_kinematics(t1, t2);
        ds.x.push_back((x + 2.0) / 4.0);
        ds.x.push_back((y + 2.0) / 4.0);
        ds.y.push_back(t1 / (kPi / 2.0));
        ds.y.push_back((t2 - kTheta2Lo) / (kPi - 2.0 * kTheta2Lo));
    }
    return ds;
}

// --- bscholes ----------------------------------------------------------------

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace

double bs_call_price(double spot, double strike, double rate, double dividend,
                     double volatility, double maturity) {
    double sq = volatility * std::sqrt(maturity);
    if (sq < 1e-12) {
        double fwd = spot * std::exp(-dividend * maturity) - strike * std::exp(-rate * maturity);
        return fwd > 0.0 ? fwd : 0.0;
    }
    double d1 = (std::log(spot / strike) + (rate - dividend + 0.5 * volatility * volatility) * maturity) / sq;
    double d2 = d1 - sq;
    return spot * std::exp(-dividend * maturity) * normal_cdf(d1) -
           strike * std::exp(-rate * maturity) * normal_cdf(d2);
}

Dataset gen_bscholes(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_bscholes: n must be >= 1");
    // input ranges: spot 20-140, strike 40-120, rate 0-0.08, vol 0.05-0.6,
    // maturity 0.1-2, dividend 0-0.05
    Dataset ds;
    ds.n_features = 6;
    ds.n_outputs = 1;
    ds.metric = Metric::mse;
    ds.feat_lo = {20.0, 40.0, 0.0, 0.05, 0.1, 0.0};
    ds.feat_hi = {140.0, 120.0, 0.08, 0.6, 2.0, 0.05};
    ds.x.reserve(std::size_t(n) * 6);
    std::vector<double> price(std::size_t(n), 0.0);
    Rng rng = Rng(seed).derive("dataset.bscholes");
    for (int i = 0; i < n; ++i) {
        double raw[6];
        for (int k = 0; k < 6; ++k) {
            double u = rng.uniform();
            raw[k] = ds.feat_lo[std::size_t(k)] +
                     u * (ds.feat_hi[std::size_t(k)] - ds.feat_lo[std::size_t(k)]);
            ds.x.push_back(u);
        }
        price[std::size_t(i)] = bs_call_price(raw[0], raw[1], raw[2], raw[5], raw[3], raw[4]);
    }
    double lo = *std::min_element(price.begin(), price.end());
    double hi = *std::max_element(price.begin(), price.end());
    if (hi - lo < 1e-9) hi = lo + 1.0;
    ds.targ_lo = {lo};
    ds.targ_hi = {hi};
    ds.y.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) ds.y[std::size_t(i)] = (price[std::size_t(i)] - lo) / (hi - lo);
    return ds;
}

// --- mnist -------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::istream& f, const std::string& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw DataMissingError("load_mnist: truncated IDX file " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

// bilinear resample at pixel centers, edges clamped
void resample_bilinear(const double* src, int in_side, double* dst, int out_side) {
    double scale = double(in_side) / out_side;
    for (int r = 0; r < out_side; ++r) {
        double v = (r + 0.5) * scale - 0.5;
        int v0 = int(std::floor(v));
        double fv = v - v0;
        int v1 = std::min(v0 + 1, in_side - 1);
        v0 = std::max(v0, 0);
        for (int c = 0; c < out_side; ++c) {
            double u = (c + 0.5) * scale - 0.5;
            int u0 = int(std::floor(u));
            double fu = u - u0;
            int u1 = std::min(u0 + 1, in_side - 1);
            u0 = std::max(u0, 0);
            dst[r * out_side + c] =
                (1 - fv) * ((1 - fu) * src[v0 * in_side + u0] + fu * src[v0 * in_side + u1]) +
                fv * ((1 - fu) * src[v1 * in_side + u0] + fu * src[v1 * in_side + u1]);
        }
    }
}

void downsample_28_to_10(const unsigned char* src, double* dst) {
    double gray[28 * 28];
    for (int i = 0; i < 28 * 28; ++i) gray[i] = src[i] / 255.0;
    resample_bilinear(gray, 28, dst, 10);
}

void classification_meta(Dataset& ds) {
    ds.feat_lo.assign(std::size_t(ds.n_features), 0.0);
    ds.feat_hi.assign(std::size_t(ds.n_features), 1.0);
    ds.targ_lo.assign(std::size_t(ds.n_outputs), 0.0);
    ds.targ_hi.assign(std::size_t(ds.n_outputs), 1.0);
}

} // namespace

Dataset load_mnist(const std::string& dir, int limit) {
    namespace fs = std::filesystem;
    std::string img_path = (fs::path(dir) / "train-images-idx3-ubyte").string();
    std::string lbl_path = (fs::path(dir) / "train-labels-idx1-ubyte").string();
    std::ifstream img(img_path, std::ios::binary);
    std::ifstream lbl(lbl_path, std::ios::binary);
    if (!img || !lbl)
        throw DataMissingError("load_mnist: IDX files not found under '" + dir +
                               "' (expected train-images-idx3-ubyte, train-labels-idx1-ubyte)");
    std::uint32_t img_magic = read_be32(img, img_path);
    if (img_magic != 0x00000803u)
        throw DataMissingError("load_mnist: bad image magic in " + img_path);
    std::uint32_t n_img = read_be32(img, img_path);
    std::uint32_t rows = read_be32(img, img_path);
    std::uint32_t cols = read_be32(img, img_path);
    if (rows != 28 || cols != 28)
        throw DataMissingError("load_mnist: expected 28x28 images in " + img_path);
    std::uint32_t lbl_magic = read_be32(lbl, lbl_path);
    if (lbl_magic != 0x00000801u)
        throw DataMissingError("load_mnist: bad label magic in " + lbl_path);
    std::uint32_t n_lbl = read_be32(lbl, lbl_path);
    if (n_img != n_lbl)
        throw DataMissingError("load_mnist: image/label count mismatch");

    std::uint32_t n = n_img;
    if (limit > 0 && std::uint32_t(limit) < n) n = std::uint32_t(limit);

    Dataset ds;
    ds.n_features = 100;
    ds.n_outputs = 10;
    ds.metric = Metric::classification;
    classification_meta(ds);
    ds.x.resize(std::size_t(n) * 100);
    ds.y.assign(std::size_t(n) * 10, 0.0);
    std::vector<unsigned char> buf(28 * 28);
    for (std::uint32_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), 28 * 28);
        int label = lbl.get();
        if (!img || label < 0 || label > 9)
            throw DataMissingError("load_mnist: truncated or corrupt IDX data");
        downsample_28_to_10(buf.data(), ds.x.data() + std::size_t(i) * 100);
        ds.y[std::size_t(i) * 10 + std::size_t(label)] = 1.0;
    }
    return ds;
}

namespace {

// shuffle dataset rows in place (Fisher-Yates over sample indices)
void shuffle_rows(Dataset& ds, Rng& rng) {
    int n = ds.n();
    for (int i = n - 1; i > 0; --i) {
        int j = int(rng.uniform_index(std::uint64_t(i) + 1));
        for (int k = 0; k < ds.n_features; ++k)
            std::swap(ds.x[std::size_t(i) * ds.n_features + std::size_t(k)],
                      ds.x[std::size_t(j) * ds.n_features + std::size_t(k)]);
        for (int k = 0; k < ds.n_outputs; ++k)
            std::swap(ds.y[std::size_t(i) * ds.n_outputs + std::size_t(k)],
                      ds.y[std::size_t(j) * ds.n_outputs + std::size_t(k)]);
    }
}

// coarse random grid bilinearly upsampled: cheap smooth random field
std::vector<double> smooth_field(int side, int coarse, Rng& rng) {
    std::vector<double> grid(std::size_t(coarse) * coarse);
    for (auto& v : grid) v = rng.uniform();
    std::vector<double> out(std::size_t(side) * side);
    double scale = double(coarse - 1) / (side - 1);
    for (int r = 0; r < side; ++r) {
        double v = r * scale;
        int v0 = std::min(int(v), coarse - 2);
        double fv = v - v0;
        for (int c = 0; c < side; ++c) {
            double u = c * scale;
            int u0 = std::min(int(u), coarse - 2);
            double fu = u - u0;
            out[std::size_t(r) * side + std::size_t(c)] =
                (1 - fv) * ((1 - fu) * grid[std::size_t(v0) * coarse + std::size_t(u0)] +
                            fu * grid[std::size_t(v0) * coarse + std::size_t(u0 + 1)]) +
                fv * ((1 - fu) * grid[std::size_t(v0 + 1) * coarse + std::size_t(u0)] +
                      fu * grid[std::size_t(v0 + 1) * coarse + std::size_t(u0 + 1)]);
        }
    }
    return out;
}

void jitter_shift(const std::vector<double>& src, std::vector<double>& dst, int side,
                  int dr, int dc) {
    std::fill(dst.begin(), dst.end(), 0.0);
    for (int r = 0; r < side; ++r) {
        int sr = r - dr;
        if (sr < 0 || sr >= side) continue;
        for (int c = 0; c < side; ++c) {
            int sc = c - dc;
            if (sc < 0 || sc >= side) continue;
            dst[std::size_t(r) * side + std::size_t(c)] = src[std::size_t(sr) * side + std::size_t(sc)];
        }
    }
}

} // namespace

Dataset synth_digits(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("synth_digits: n must be >= 1");
    Rng root = Rng(seed).derive("dataset.synth_digits");
    std::vector<std::vector<double>> protos;
    for (int c = 0; c < 10; ++c) {
        Rng prng = root.derive("proto", std::uint64_t(c));
        auto p = smooth_field(10, 4, prng);
        double lo = *std::min_element(p.begin(), p.end());
        double hi = *std::max_element(p.begin(), p.end());
        for (auto& v : p) v = (v - lo) / (hi - lo + 1e-12);
        protos.push_back(std::move(p));
    }
    Dataset ds;
    ds.n_features = 100;
    ds.n_outputs = 10;
    ds.metric = Metric::classification;
    classification_meta(ds);
    ds.x.resize(std::size_t(n) * 100);
    ds.y.assign(std::size_t(n) * 10, 0.0);
    Rng rng = root.derive("samples");
    std::vector<double> shifted(100);
    for (int i = 0; i < n; ++i) {
        int label = i % 10;
        int dr = int(rng.uniform_index(3)) - 1;
        int dc = int(rng.uniform_index(3)) - 1;
        jitter_shift(protos[std::size_t(label)], shifted, 10, dr, dc);
        double brightness = 0.75 + 0.5 * rng.uniform();
        double* out = ds.x.data() + std::size_t(i) * 100;
        for (int k = 0; k < 100; ++k) {
            double v = shifted[std::size_t(k)] * brightness + rng.normal(0.0, 0.12);
            out[k] = std::clamp(v, 0.0, 1.0);
        }
        ds.y[std::size_t(i) * 10 + std::size_t(label)] = 1.0;
    }
    Rng shuffle_rng = root.derive("shuffle");
    shuffle_rows(ds, shuffle_rng);
    return ds;
}

Dataset gen_facedet(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_facedet: n must be >= 1");
    constexpr int side = 20;
    // face template: bright oval, dark eye blobs, dark mouth bar
    std::vector<double> face(side * side, 0.2);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            double dr = (r - 10.0) / 8.5, dc = (c - 9.5) / 7.0;
            if (dr * dr + dc * dc <= 1.0) face[std::size_t(r) * side + std::size_t(c)] = 0.8;
        }
    }
    auto blob = [&](double cr, double cc, double rad, double val) {
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) {
                double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
                if (d2 <= rad * rad) face[std::size_t(r) * side + std::size_t(c)] = val;
            }
    };
    blob(7.0, 6.0, 1.8, 0.1);
    blob(7.0, 13.0, 1.8, 0.1);
    for (int r = 14; r <= 15; ++r)
        for (int c = 7; c <= 13; ++c) face[std::size_t(r) * side + std::size_t(c)] = 0.15;

    Dataset ds;
    ds.n_features = side * side;
    ds.n_outputs = 1;
    ds.metric = Metric::classification;
    classification_meta(ds);
    ds.x.resize(std::size_t(n) * ds.n_features);
    ds.y.resize(std::size_t(n));
    Rng root = Rng(seed).derive("dataset.facedet");
    Rng rng = root.derive("samples");
    std::vector<double> shifted(std::size_t(side) * side);
    for (int i = 0; i < n; ++i) {
        bool positive = (i % 2) == 0;
        double* out = ds.x.data() + std::size_t(i) * ds.n_features;
        double brightness = 0.8 + 0.4 * rng.uniform();
        if (positive) {
            int dr = int(rng.uniform_index(3)) - 1;
            int dc = int(rng.uniform_index(3)) - 1;
            jitter_shift(face, shifted, side, dr, dc);
            for (int k = 0; k < ds.n_features; ++k)
                out[k] = std::clamp(shifted[std::size_t(k)] * brightness + rng.normal(0.0, 0.1), 0.0, 1.0);
        } else {
            auto field = smooth_field(side, 5, rng);
            for (int k = 0; k < ds.n_features; ++k)
                out[k] = std::clamp(field[std::size_t(k)] * brightness + rng.normal(0.0, 0.1), 0.0, 1.0);
        }
        ds.y[std::size_t(i)] = positive ? 1.0 : 0.0;
    }
    Rng shuffle_rng = root.derive("shuffle");
    shuffle_rows(ds, shuffle_rng);
    return ds;
}


namespace {

// minimal PGM reader (P5 binary or P2 ascii), square grayscale
std::vector<double> read_pgm(const std::string& path, int& side) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataMissingError("load_cbcl: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5" && magic != "P2")
        throw DataMissingError("load_cbcl: not a PGM file: " + path);
    auto next_int = [&]() {
        int v;
        while (f >> std::ws && f.peek() == '#') {
            std::string comment;
            std::getline(f, comment);
        }
        if (!(f >> v)) throw DataMissingError("load_cbcl: bad PGM header in " + path);
        return v;
    };
    int w = next_int(), h = next_int(), maxval = next_int();
    if (w != h || maxval <= 0)
        throw DataMissingError("load_cbcl: expected square PGM in " + path);
    side = w;
    std::vector<double> img(std::size_t(w) * h);
    if (magic == "P5") {
        f.get(); // single whitespace after maxval
        std::vector<unsigned char> raw(std::size_t(w) * h);
        f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
        if (!f) throw DataMissingError("load_cbcl: truncated PGM " + path);
        for (std::size_t i = 0; i < raw.size(); ++i) img[i] = double(raw[i]) / maxval;
    } else {
        for (auto& v : img) {
            int pix;
            if (!(f >> pix)) throw DataMissingError("load_cbcl: truncated PGM " + path);
            v = double(pix) / maxval;
        }
    }
    return img;
}

void append_pgm_dir(const std::filesystem::path& dir, double label, Dataset& ds) {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".pgm") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        int side = 0;
        std::vector<double> img = read_pgm(file, side);
        std::vector<double> out(400);
        resample_bilinear(img.data(), side, out.data(), 20);
        ds.x.insert(ds.x.end(), out.begin(), out.end());
        ds.y.push_back(label);
    }
}

} // namespace

Dataset load_cbcl(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path root(dir);
    fs::path face = root / "face";
    fs::path nonface = root / "non-face";
    if (!fs::is_directory(face) && fs::is_directory(root / "train" / "face")) {
        face = root / "train" / "face";
        nonface = root / "train" / "non-face";
    }
    if (!fs::is_directory(face) || !fs::is_directory(nonface))
        throw DataMissingError("load_cbcl: expected face/ and non-face/ PGM directories under '" +
                               dir + "'");
    Dataset ds;
    ds.n_features = 400;
    ds.n_outputs = 1;
    ds.metric = Metric::classification;
    classification_meta(ds);
    append_pgm_dir(face, 1.0, ds);
    append_pgm_dir(nonface, 0.0, ds);
    if (ds.n() == 0) throw DataMissingError("load_cbcl: no PGM files found under '" + dir + "'");
    return ds;
}

TrainTestSplit make_benchmark_data(const BenchmarkSpec& spec, std::uint64_t seed,
                                   const std::string& mnist_dir, const std::string& cbcl_dir) {
    int total = spec.train_samples + spec.test_samples;
    Dataset ds;
    if (spec.name == "mnist") {
        if (!mnist_dir.empty()) {
            ds = load_mnist(mnist_dir, 0);
            Rng rng = Rng(seed).derive("dataset.mnist_shuffle");
            shuffle_rows(ds, rng);
            if (ds.n() > total) {
                ds.x.resize(std::size_t(total) * ds.n_features);
                ds.y.resize(std::size_t(total) * ds.n_outputs);
            }
        } else {
            ds = synth_digits(total, seed);
        }
    } else if (spec.name == "facedet") {
        if (!cbcl_dir.empty()) {
            ds = load_cbcl(cbcl_dir);
            Rng rng = Rng(seed).derive("dataset.cbcl_shuffle");
            shuffle_rows(ds, rng);
            if (ds.n() > total) {
                ds.x.resize(std::size_t(total) * ds.n_features);
                ds.y.resize(std::size_t(total) * ds.n_outputs);
            }
        } else {
            ds = gen_facedet(total, seed);
        }
    } else if (spec.name == "inversek2j") {
        ds = gen_inversek2j(total, seed);
    } else if (spec.name == "bscholes") {
        ds = gen_bscholes(total, seed);
    } else {
        throw ConfigError("unknown benchmark: " + spec.name);
    }
    int n_train = std::min(spec.train_samples, ds.n());
    return split_dataset(ds, n_train);
}

// --- metrics -------------------------------------------------------------

double metric_error(std::span<const double> outputs, std::span<const double> targets,
                    int n, int dim, Metric kind) {
    if (outputs.size() != targets.size() || outputs.size() != std::size_t(n) * dim)
        throw std::invalid_argument("metric_error: shape mismatch");
    if (n == 0) return 0.0;
    if (kind == Metric::mse) {
        double s = 0.0;
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            double d = outputs[i] - targets[i];
            s += d * d;
        }
        return s / double(outputs.size());
    }
    int wrong = 0;
    for (int i = 0; i < n; ++i) {
        const double* o = outputs.data() + std::size_t(i) * dim;
        const double* t = targets.data() + std::size_t(i) * dim;
        if (dim == 1) {
            if ((o[0] >= 0.5) != (t[0] >= 0.5)) ++wrong;
        } else {
            int oa = int(std::max_element(o, o + dim) - o);
            int ta = int(std::max_element(t, t + dim) - t);
            if (oa != ta) ++wrong;
        }
    }
    return double(wrong) / n;
}

double evaluate(const nn::Mlp& net, const Dataset& ds) {
    int n = ds.n();
    std::vector<double> outputs(std::size_t(n) * ds.n_outputs);
    std::int64_t nn_ = n;
#pragma omp parallel for schedule(static) if (n >= 64)
    for (std::int64_t i = 0; i < nn_; ++i) {
        auto out = nn::forward(net, ds.features(int(i)));
        std::copy(out.begin(), out.end(), outputs.begin() + std::size_t(i) * ds.n_outputs);
    }
    return metric_error(outputs, ds.y, n, ds.n_outputs, ds.metric);
}

double aei(std::span<const double> errors_by_voltage, double nominal_error, Metric kind) {
    if (errors_by_voltage.empty()) throw std::invalid_argument("aei: empty voltage grid");
    double s = 0.0;
    for (double e : errors_by_voltage) s += e - nominal_error;
    double mean_increase = s / double(errors_by_voltage.size());
    if (kind == Metric::classification) return mean_increase * 100.0; // percentage points
    if (nominal_error <= 1e-12) return mean_increase;
    return mean_increase / nominal_error;
}

// --- topology sweep ---------------------------------------------------------

std::size_t knee_index(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("knee_index: need >= 3 points");
    double x0 = xs.front(), y0 = ys.front();
    double xr = (xs.back() - x0) != 0.0 ? (xs.back() - x0) : 1.0;
    double ymin = *std::min_element(ys.begin(), ys.end());
    double ymax = *std::max_element(ys.begin(), ys.end());
    double yr = (ymax - ymin) != 0.0 ? (ymax - ymin) : 1.0;
    // chord from the first to the last point in normalized coordinates
    double cx = (xs.back() - x0) / xr;
    double cy = (ys.back() - y0) / yr;
    double clen = std::sqrt(cx * cx + cy * cy);
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double nx = (xs[i] - x0) / xr;
        double ny = (ys[i] - y0) / yr;
        double d = std::abs(nx * cy - ny * cx) / clen;
        if (d > best_d + 1e-12) {
            best_d = d;
            best = i;
        }
    }
    if (best_d < 1e-9) return 0; // flat curve: prefer the most compact point
    return best;
}

TopoCurve topology_sweep(const BenchmarkSpec& spec, const TrainTestSplit& data,
                         const std::vector<std::vector<int>>& candidates,
                         const TopoConfig& cfg) {
    if (candidates.size() < 3)
        throw std::invalid_argument("topology_sweep: need >= 3 candidates");
    TopoCurve curve;
    curve.points.resize(candidates.size());
    std::int64_t n = std::int64_t(candidates.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        BenchmarkSpec cand = spec;
        cand.topology = candidates[std::size_t(i)];
        nn::Mlp net = make_benchmark_net(cand);
        nn::init_weights(net, Rng(cfg.seed).derive("topo_init", std::uint64_t(i)));
        mat::TrainConfig tc;
        tc.alpha = cfg.alpha;
        tc.epochs = cfg.epochs;
        tc.pretrain_epochs = 0;
        tc.loss = cand.loss;
        tc.seed = cfg.seed + std::uint64_t(i) * 7919;
        tc.quantize = false;
        mat::WeightMapping dummy; // unused on the naive path
        auto r = mat::train(std::move(net), data.train, data.test, tc, mat::TrainMode::naive,
                            dummy, nullptr);
        TopoPoint p;
        p.topology = candidates[std::size_t(i)];
        p.params = r.net.weight_count();
        for (const auto& l : r.net.layers) p.params += l.b.size();
        p.test_error = r.history.back().test_error;
        curve.points[std::size_t(i)] = std::move(p);
    }
    std::sort(curve.points.begin(), curve.points.end(),
              [](const TopoPoint& a, const TopoPoint& b) { return a.params < b.params; });
    std::vector<double> xs, ys;
    for (const auto& p : curve.points) {
        xs.push_back(double(p.params));
        ys.push_back(p.test_error);
    }
    curve.knee_index = knee_index(xs, ys);
    return curve;
}

// --- dataset text cache -------------------------------------------------------

namespace {

void write_vec(std::ofstream& f, const char* tag, const std::vector<double>& v) {
    f << tag;
    char buf[48];
    for (double d : v) {
        std::snprintf(buf, sizeof buf, " %a", d);
        f << buf;
    }
    f << '\n';
}

std::vector<double> read_vec(std::ifstream& f, const char* tag, std::size_t expect) {
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("load_dataset: truncated file");
    std::istringstream ss(line);
    std::string t;
    ss >> t;
    if (t != tag) throw std::runtime_error(std::string("load_dataset: expected ") + tag);
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) v.push_back(std::strtod(tok.c_str(), nullptr));
    if (expect != std::size_t(-1) && v.size() != expect)
        throw std::runtime_error("load_dataset: element count mismatch");
    return v;
}

} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
    f << "dataset v1\n";
    f << "shape " << ds.n() << ' ' << ds.n_features << ' ' << ds.n_outputs << ' '
      << to_string(ds.metric) << '\n';
    write_vec(f, "feat_lo", ds.feat_lo);
    write_vec(f, "feat_hi", ds.feat_hi);
    write_vec(f, "targ_lo", ds.targ_lo);
    write_vec(f, "targ_hi", ds.targ_hi);
    write_vec(f, "x", ds.x);
    write_vec(f, "y", ds.y);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "dataset v1")
        throw std::runtime_error("load_dataset: bad header");
    if (!std::getline(f, line)) throw std::runtime_error("load_dataset: truncated file");
    std::istringstream ss(line);
    std::string tag, metric;
    int n;
    Dataset ds;
    ss >> tag >> n >> ds.n_features >> ds.n_outputs >> metric;
    if (tag != "shape") throw std::runtime_error("load_dataset: expected shape");
    ds.metric = metric == "classification" ? Metric::classification : Metric::mse;
    ds.feat_lo = read_vec(f, "feat_lo", std::size_t(ds.n_features));
    ds.feat_hi = read_vec(f, "feat_hi", std::size_t(ds.n_features));
    ds.targ_lo = read_vec(f, "targ_lo", std::size_t(ds.n_outputs));
    ds.targ_hi = read_vec(f, "targ_hi", std::size_t(ds.n_outputs));
    ds.x = read_vec(f, "x", std::size_t(n) * std::size_t(ds.n_features));
    ds.y = read_vec(f, "y", std::size_t(n) * std::size_t(ds.n_outputs));
    return ds;
}

} // namespace matic::bench
