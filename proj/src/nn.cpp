#include "matic/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "matic/kernels.hpp"

namespace matic::nn {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
        case Activation::afu_sigmoid: return "afu_sigmoid";
        case Activation::linear: return "linear";
    }
    return "?";
}

const char* to_string(Loss l) { return l == Loss::mse ? "mse" : "cross_entropy"; }

Activation activation_from_string(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "relu") return Activation::relu;
    if (s == "afu_sigmoid") return Activation::afu_sigmoid;
    if (s == "linear") return Activation::linear;
    throw std::invalid_argument("unknown activation: " + s);
}

Loss loss_from_string(const std::string& s) {
    if (s == "mse") return Loss::mse;
    if (s == "cross_entropy") return Loss::cross_entropy;
    throw std::invalid_argument("unknown loss: " + s);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

constexpr double kAfuLo = -8.0;
constexpr double kAfuHi = 8.0;

} // namespace

double afu_sigmoid(double x, int segments) {
    if (segments < 2) throw std::invalid_argument("afu_sigmoid: segments must be >= 2");
    if (x <= kAfuLo) return 0.0;
    if (x >= kAfuHi) return 1.0;
    if (x == 0.0) return 0.5; // exact by symmetry of the knot grid
    double width = (kAfuHi - kAfuLo) / segments;
    int i = int((x - kAfuLo) / width);
    if (i >= segments) i = segments - 1;
    double x0 = kAfuLo + i * width;
    double y0 = sigmoid(x0);
    double y1 = sigmoid(x0 + width);
    return y0 + (y1 - y0) * (x - x0) / width;
}

double afu_sigmoid_slope(double x, int segments) {
    if (segments < 2) throw std::invalid_argument("afu_sigmoid: segments must be >= 2");
    if (x <= kAfuLo || x >= kAfuHi) return 0.0;
    double width = (kAfuHi - kAfuLo) / segments;
    int i = int((x - kAfuLo) / width);
    if (i >= segments) i = segments - 1;
    double x0 = kAfuLo + i * width;
    return (sigmoid(x0 + width) - sigmoid(x0)) / width;
}

std::vector<int> Mlp::topology() const {
    std::vector<int> t;
    if (layers.empty()) return t;
    t.push_back(layers.front().in);
    for (const auto& l : layers) t.push_back(l.out);
    return t;
}

std::size_t Mlp::weight_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size();
    return n;
}

Mlp make_mlp(const std::vector<int>& topology, Activation hidden_act,
             Activation output_act, int afu_segments) {
    if (topology.size() < 2) throw std::invalid_argument("make_mlp: topology needs >= 2 layers");
    for (int w : topology)
        if (w < 1) throw std::invalid_argument("make_mlp: layer width must be positive");
    Mlp net;
    for (std::size_t i = 0; i + 1 < topology.size(); ++i) {
        Layer l;
        l.in = topology[i];
        l.out = topology[i + 1];
        l.act = (i + 2 == topology.size()) ? output_act : hidden_act;
        l.afu_segments = afu_segments;
        l.w.assign(std::size_t(l.in) * l.out, 0.0);
        l.b.assign(l.out, 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

void init_weights(Mlp& net, Rng rng) {
    for (auto& l : net.layers) {
        double r = std::sqrt(6.0 / double(l.in + l.out));
        for (auto& w : l.w) w = rng.uniform(-r, r);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
}

namespace {

double activate(double x, Activation a, int segments) {
    switch (a) {
        case Activation::sigmoid: return sigmoid(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::afu_sigmoid: return afu_sigmoid(x, segments);
        case Activation::linear: return x;
    }
    return x;
}

// derivative w.r.t. preactivation, using the cached post-activation where
// the closed form allows it
double activate_deriv(double pre, double post, Activation a, int segments) {
    switch (a) {
        case Activation::sigmoid: return post * (1.0 - post);
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::afu_sigmoid: return afu_sigmoid_slope(pre, segments);
        case Activation::linear: return 1.0;
    }
    return 1.0;
}

} // namespace

std::vector<double> forward(const Mlp& net, std::span<const double> x, ForwardCache* cache) {
    if (int(x.size()) != net.input_width())
        throw std::invalid_argument("forward: input width mismatch");
    std::vector<double> cur(x.begin(), x.end());
    if (cache) {
        cache->activations.assign(1, cur);
        cache->preacts.clear();
    }
    for (const auto& l : net.layers) {
        std::vector<double> pre(l.out);
        kernels::dense_affine(l.w, l.b, cur, pre, std::size_t(l.out), std::size_t(l.in));
        std::vector<double> post(l.out);
        for (int k = 0; k < l.out; ++k) post[k] = activate(pre[k], l.act, l.afu_segments);
        if (cache) {
            cache->preacts.push_back(std::move(pre));
            cache->activations.push_back(post);
        }
        cur = std::move(post);
    }
    return cur;
}

Gradients Gradients::zeros_like(const Mlp& net) {
    Gradients g;
    for (const auto& l : net.layers) {
        g.w.emplace_back(l.w.size(), 0.0);
        g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        kernels::axpy(scale, other.w[i], w[i]);
        kernels::axpy(scale, other.b[i], b[i]);
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double loss_value(std::span<const double> output, std::span<const double> target, Loss loss) {
    if (output.size() != target.size())
        throw std::invalid_argument("loss_value: shape mismatch");
    if (loss == Loss::mse) {
        double s = 0.0;
        for (std::size_t i = 0; i < output.size(); ++i) {
            double d = output[i] - target[i];
            s += d * d;
        }
        return 0.5 * s;
    }
    std::vector<double> p = softmax(output);
    double s = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i)
        if (target[i] != 0.0) s -= target[i] * std::log(std::max(p[i], 1e-300));
    return s;
}

Gradients backward(const Mlp& net, const ForwardCache& cache,
                   std::span<const double> target, Loss loss) {
    if (cache.activations.size() != net.layers.size() + 1)
        throw std::invalid_argument("backward: forward cache missing");
    const auto& out = cache.activations.back();
    if (out.size() != target.size())
        throw std::invalid_argument("backward: target shape mismatch");
    if (loss == Loss::cross_entropy && net.layers.back().act != Activation::linear)
        throw std::invalid_argument("backward: cross_entropy expects a linear output layer");

    Gradients g = Gradients::zeros_like(net);
    // delta at the output, w.r.t. the final preactivation
    std::vector<double> delta(out.size());
    if (loss == Loss::cross_entropy) {
        std::vector<double> p = softmax(out);
        for (std::size_t i = 0; i < out.size(); ++i) delta[i] = p[i] - target[i];
    } else {
        const auto& l = net.layers.back();
        const auto& pre = cache.preacts.back();
        for (std::size_t i = 0; i < out.size(); ++i)
            delta[i] = (out[i] - target[i]) * activate_deriv(pre[i], out[i], l.act, l.afu_segments);
    }

    for (int li = int(net.layers.size()) - 1; li >= 0; --li) {
        const auto& l = net.layers[std::size_t(li)];
        const auto& input = cache.activations[std::size_t(li)];
        kernels::dense_grad_accum(delta, input, g.w[std::size_t(li)], g.b[std::size_t(li)],
                                  std::size_t(l.out), std::size_t(l.in));
        if (li == 0) break;
        std::vector<double> back(l.in);
        kernels::dense_backprop_delta(l.w, delta, back, std::size_t(l.out), std::size_t(l.in));
        const auto& prev = net.layers[std::size_t(li - 1)];
        const auto& prev_pre = cache.preacts[std::size_t(li - 1)];
        const auto& prev_post = cache.activations[std::size_t(li)]; // output of layer li-1
        std::vector<double> next_delta(l.in);
        for (int k = 0; k < l.in; ++k)
            next_delta[std::size_t(k)] = back[std::size_t(k)] *
                activate_deriv(prev_pre[std::size_t(k)], prev_post[std::size_t(k)],
                               prev.act, prev.afu_segments);
        delta = std::move(next_delta);
    }
    return g;
}

void sgd_step(Mlp& net, const Gradients& g, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("sgd_step: alpha must be positive");
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        kernels::axpy(-alpha, g.w[i], net.layers[i].w);
        kernels::axpy(-alpha, g.b[i], net.layers[i].b);
    }
}

namespace {

std::string hexdump(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double hexparse(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

} // namespace

void save_checkpoint(const Mlp& net, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f << "mlp v1\n";
    f << "topology";
    for (int t : net.topology()) f << ' ' << t;
    f << '\n';
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& l = net.layers[i];
        f << "layer " << i << ' ' << to_string(l.act) << ' ' << l.afu_segments << '\n';
        f << "w";
        for (double v : l.w) f << ' ' << hexdump(v);
        f << "\nb";
        for (double v : l.b) f << ' ' << hexdump(v);
        f << '\n';
    }
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "mlp v1")
        throw std::runtime_error("load_checkpoint: bad header in " + path);
    if (!std::getline(f, line)) throw std::runtime_error("load_checkpoint: truncated file");
    std::istringstream ts(line);
    std::string tag;
    ts >> tag;
    if (tag != "topology") throw std::runtime_error("load_checkpoint: expected topology");
    std::vector<int> topo;
    int v;
    while (ts >> v) topo.push_back(v);

    Mlp net = make_mlp(topo, Activation::sigmoid, Activation::sigmoid);
    for (auto& l : net.layers) {
        if (!std::getline(f, line)) throw std::runtime_error("load_checkpoint: truncated file");
        std::istringstream ls(line);
        std::string kind, act;
        int idx, segs;
        ls >> kind >> idx >> act >> segs;
        if (kind != "layer") throw std::runtime_error("load_checkpoint: expected layer record");
        l.act = activation_from_string(act);
        l.afu_segments = segs;

        if (!std::getline(f, line)) throw std::runtime_error("load_checkpoint: truncated file");
        std::istringstream ws(line);
        ws >> tag;
        if (tag != "w") throw std::runtime_error("load_checkpoint: expected weights");
        std::string tok;
        for (auto& wv : l.w) {
            if (!(ws >> tok)) throw std::runtime_error("load_checkpoint: weight count mismatch");
            wv = hexparse(tok);
        }
        if (!std::getline(f, line)) throw std::runtime_error("load_checkpoint: truncated file");
        std::istringstream bs(line);
        bs >> tag;
        if (tag != "b") throw std::runtime_error("load_checkpoint: expected biases");
        for (auto& bv : l.b) {
            if (!(bs >> tok)) throw std::runtime_error("load_checkpoint: bias count mismatch");
            bv = hexparse(tok);
        }
    }
    return net;
}

} // namespace matic::nn
