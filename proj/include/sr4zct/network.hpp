#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sr4zct/image.hpp"

namespace sr4zct {

/// Mixed-scale dense regression network: single-channel 3x3 dilated layers
/// with dense connectivity, ReLU hidden activations and a linear 1x1
/// aggregation layer over the input and all feature maps.
struct NetworkConfig {
    int depth = 20;

    static int dilation(int layer) { return layer % 10 + 1; }

    void validate() const {
        if (depth < 1) throw std::invalid_argument("NetworkConfig: depth must be >= 1");
    }
};

namespace detail {

/// reflect-101 index mapping, iterated so it also covers dilation > extent.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= sn) {
        if (i < 0) i = -i;
        if (i >= sn) i = 2 * sn - 2 - i;
    }
    return static_cast<std::size_t>(i);
}

/// Deterministic standard-normal generator (explicit Box-Muller so results do
/// not depend on the standard library's distribution implementation).
class NormalRng {
public:
    explicit NormalRng(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    double uniform() { return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0); }
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace detail

/// Weights, ADAM moments and step counter, stored flat. Layout per hidden
/// layer j: (j+1) 3x3 kernels (one per earlier channel) then one bias; after
/// all hidden layers the 1x1 aggregation weights (depth+1) and its bias.
template <typename T>
struct ModelState {
    NetworkConfig config;
    std::uint64_t seed = 0;
    std::int64_t step = 0;
    std::vector<T> weights;
    std::vector<T> adam_m;
    std::vector<T> adam_v;

    std::size_t layer_offset(int layer) const {
        std::size_t off = 0;
        for (int j = 0; j < layer; ++j) off += static_cast<std::size_t>(j + 1) * 9 + 1;
        return off;
    }
    std::size_t final_offset() const { return layer_offset(config.depth); }
    std::size_t param_count() const {
        return final_offset() + static_cast<std::size_t>(config.depth + 1) + 1;
    }
};

template <typename T>
ModelState<T> init(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    ModelState<T> m;
    m.config = config;
    m.seed = seed;
    m.weights.assign(m.param_count(), T(0));
    m.adam_m.assign(m.param_count(), T(0));
    m.adam_v.assign(m.param_count(), T(0));

    detail::NormalRng rng(seed);
    std::size_t off = 0;
    for (int j = 0; j < config.depth; ++j) {
        const double stddev = std::sqrt(2.0 / (9.0 * static_cast<double>(j + 1)));
        for (std::size_t k = 0; k < static_cast<std::size_t>(j + 1) * 9; ++k)
            m.weights[off + k] = static_cast<T>(rng.next() * stddev);
        off += static_cast<std::size_t>(j + 1) * 9 + 1;  // bias stays zero
    }
    const double stddev = std::sqrt(2.0 / static_cast<double>(config.depth + 1));
    for (std::size_t k = 0; k < static_cast<std::size_t>(config.depth + 1); ++k)
        m.weights[off + k] = static_cast<T>(rng.next() * stddev);
    return m;
}

namespace detail {

/// dst += conv3x3(src, kernel, dilation), reflect-101 padding, same size.
template <typename T>
void accumulate_conv3x3(Image2D<T>& dst, const Image2D<T>& src, const T* k, int dilation) {
    const std::size_t rows = src.rows(), cols = src.cols();
    const std::ptrdiff_t d = dilation;
    for (std::size_t r = 0; r < rows; ++r) {
        const T* s0 = src.data() + reflect_index(static_cast<std::ptrdiff_t>(r) - d, rows) * cols;
        const T* s1 = src.data() + r * cols;
        const T* s2 = src.data() + reflect_index(static_cast<std::ptrdiff_t>(r) + d, rows) * cols;
        T* out = dst.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t cm = reflect_index(static_cast<std::ptrdiff_t>(c) - d, cols);
            const std::size_t cp = reflect_index(static_cast<std::ptrdiff_t>(c) + d, cols);
            out[c] += k[0] * s0[cm] + k[1] * s0[c] + k[2] * s0[cp] +
                      k[3] * s1[cm] + k[4] * s1[c] + k[5] * s1[cp] +
                      k[6] * s2[cm] + k[7] * s2[c] + k[8] * s2[cp];
        }
    }
}

/// Backward of accumulate_conv3x3: scatters grad_src += conv^T(delta) and
/// accumulates grad_k += corr(delta, src), both with the forward's padding.
template <typename T>
void backprop_conv3x3(const Image2D<T>& delta, const Image2D<T>& src,
                      const T* k, int dilation, Image2D<T>& grad_src, T* grad_k) {
    const std::size_t rows = src.rows(), cols = src.cols();
    const std::ptrdiff_t d = dilation;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t rm = reflect_index(static_cast<std::ptrdiff_t>(r) - d, rows);
        const std::size_t rp = reflect_index(static_cast<std::ptrdiff_t>(r) + d, rows);
        const std::size_t rr[3] = {rm, r, rp};
        const T* dl = delta.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            const T g = dl[c];
            if (g == T(0)) continue;
            const std::size_t cm = reflect_index(static_cast<std::ptrdiff_t>(c) - d, cols);
            const std::size_t cp = reflect_index(static_cast<std::ptrdiff_t>(c) + d, cols);
            const std::size_t cc[3] = {cm, c, cp};
            for (int t = 0; t < 9; ++t) {
                const std::size_t sr = rr[t / 3], sc = cc[t % 3];
                grad_k[t] += g * src(sr, sc);
                grad_src(sr, sc) += k[t] * g;
            }
        }
    }
}

/// Runs the network and returns all channels: [0] = input, [j+1] = feature j.
template <typename T>
std::vector<Image2D<T>> forward_channels(const ModelState<T>& m, const Image2D<T>& img) {
    if (!img.all_finite()) throw std::invalid_argument("forward: non-finite input");
    const int depth = m.config.depth;
    std::vector<Image2D<T>> ch;
    ch.reserve(static_cast<std::size_t>(depth) + 1);
    ch.push_back(img);
    std::size_t off = 0;
    for (int j = 0; j < depth; ++j) {
        Image2D<T> pre(img.rows(), img.cols(), m.weights[off + static_cast<std::size_t>(j + 1) * 9]);
        const int dil = NetworkConfig::dilation(j);
        for (int k = 0; k <= j; ++k)
            accumulate_conv3x3(pre, ch[static_cast<std::size_t>(k)],
                               m.weights.data() + off + static_cast<std::size_t>(k) * 9, dil);
        for (T& v : pre.raw())
            if (v < T(0)) v = T(0);
        ch.push_back(std::move(pre));
        off += static_cast<std::size_t>(j + 1) * 9 + 1;
    }
    return ch;
}

template <typename T>
Image2D<T> aggregate_output(const ModelState<T>& m, const std::vector<Image2D<T>>& ch) {
    const std::size_t foff = m.final_offset();
    Image2D<T> out(ch[0].rows(), ch[0].cols(), m.weights[foff + static_cast<std::size_t>(m.config.depth + 1)]);
    for (std::size_t k = 0; k < ch.size(); ++k) {
        const T w = m.weights[foff + k];
        const T* src = ch[k].data();
        T* dst = out.data();
        for (std::size_t i = 0; i < out.size(); ++i) dst[i] += w * src[i];
    }
    return out;
}

}  // namespace detail

template <typename T>
Image2D<T> forward(const ModelState<T>& m, const Image2D<T>& img) {
    const auto ch = detail::forward_channels(m, img);
    return detail::aggregate_output(m, ch);
}

template <typename T>
double loss_l2(const Image2D<T>& pred, const Image2D<T>& target) {
    if (!pred.same_shape(target)) throw std::invalid_argument("loss_l2: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.raw()[i]) - static_cast<double>(target.raw()[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

/// Exact analytic gradient of loss_l2(forward(m, img), target) in every
/// weight and bias.
template <typename T>
std::pair<double, std::vector<T>> backward(const ModelState<T>& m, const Image2D<T>& img,
                                           const Image2D<T>& target) {
    if (img.rows() != target.rows() || img.cols() != target.cols())
        throw std::invalid_argument("backward: dimension mismatch");
    const int depth = m.config.depth;
    const auto ch = detail::forward_channels(m, img);
    const Image2D<T> pred = detail::aggregate_output(m, ch);
    const double loss = loss_l2(pred, target);
    if (!std::isfinite(loss)) throw std::runtime_error("backward: non-finite loss");

    std::vector<T> grads(m.param_count(), T(0));
    const std::size_t npix = pred.size();
    const T scale = static_cast<T>(2.0 / static_cast<double>(npix));

    // d loss / d pred
    Image2D<T> gout(pred.rows(), pred.cols());
    for (std::size_t i = 0; i < npix; ++i)
        gout.raw()[i] = scale * (pred.raw()[i] - target.raw()[i]);

    // Aggregation layer: weight grads plus the seed of every channel gradient.
    const std::size_t foff = m.final_offset();
    std::vector<Image2D<T>> gch(static_cast<std::size_t>(depth) + 1);
    for (std::size_t k = 0; k < gch.size(); ++k) {
        double wg = 0.0;
        for (std::size_t i = 0; i < npix; ++i)
            wg += static_cast<double>(gout.raw()[i]) * static_cast<double>(ch[k].raw()[i]);
        grads[foff + k] = static_cast<T>(wg);
        gch[k] = Image2D<T>(pred.rows(), pred.cols());
        const T w = m.weights[foff + k];
        for (std::size_t i = 0; i < npix; ++i) gch[k].raw()[i] = w * gout.raw()[i];
    }
    double bg = 0.0;
    for (std::size_t i = 0; i < npix; ++i) bg += static_cast<double>(gout.raw()[i]);
    grads[foff + static_cast<std::size_t>(depth + 1)] = static_cast<T>(bg);

    // Hidden layers, deepest first.
    for (int j = depth - 1; j >= 0; --j) {
        const std::size_t off = m.layer_offset(j);
        const int dil = NetworkConfig::dilation(j);
        Image2D<T>& delta = gch[static_cast<std::size_t>(j + 1)];
        // ReLU gate on the layer's own activation.
        const Image2D<T>& act = ch[static_cast<std::size_t>(j + 1)];
        double bgj = 0.0;
        for (std::size_t i = 0; i < npix; ++i) {
            if (act.raw()[i] <= T(0)) delta.raw()[i] = T(0);
            bgj += static_cast<double>(delta.raw()[i]);
        }
        grads[off + static_cast<std::size_t>(j + 1) * 9] = static_cast<T>(bgj);
        for (int k = 0; k <= j; ++k)
            detail::backprop_conv3x3(delta, ch[static_cast<std::size_t>(k)],
                                     m.weights.data() + off + static_cast<std::size_t>(k) * 9, dil,
                                     gch[static_cast<std::size_t>(k)],
                                     grads.data() + off + static_cast<std::size_t>(k) * 9);
    }
    return {loss, std::move(grads)};
}

/// Standard ADAM update (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected).
template <typename T>
void adam_step(ModelState<T>& m, const std::vector<T>& grads, double lr) {
    if (grads.size() != m.weights.size()) throw std::invalid_argument("adam_step: shape mismatch");
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    m.step += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(m.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(m.step));
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
        const double mm = beta1 * static_cast<double>(m.adam_m[i]) + (1.0 - beta1) * g;
        const double vv = beta2 * static_cast<double>(m.adam_v[i]) + (1.0 - beta2) * g * g;
        m.adam_m[i] = static_cast<T>(mm);
        m.adam_v[i] = static_cast<T>(vv);
        const double update = lr * (mm / c1) / (std::sqrt(vv / c2) + eps);
        if (!std::isfinite(update)) throw std::runtime_error("adam_step: non-finite update");
        m.weights[i] = static_cast<T>(static_cast<double>(m.weights[i]) - update);
    }
}

/// Checkpoint: one-line JSON header, then f32 little-endian payload of
/// weights, adam_m and adam_v in order. Round trips bit-exactly.
inline void save_checkpoint(const ModelState<float>& m, const std::filesystem::path& path) {
    nlohmann::json hdr;
    hdr["format"] = "sr4zct-checkpoint-v1";
    hdr["depth"] = m.config.depth;
    hdr["step"] = m.step;
    hdr["seed"] = m.seed;
    hdr["n_params"] = m.param_count();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    f << hdr.dump() << "\n";
    auto dump = [&](const std::vector<float>& v) {
        f.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(float)));
    };
    dump(m.weights);
    dump(m.adam_m);
    dump(m.adam_v);
    if (!f) throw std::runtime_error("checkpoint write failed: " + path.string());
}

inline ModelState<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("missing checkpoint: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("malformed checkpoint header: " + path.string());
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(line);
        if (hdr.at("format").get<std::string>() != "sr4zct-checkpoint-v1")
            throw std::runtime_error("unknown checkpoint format");
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed checkpoint header " + path.string() + ": " + e.what());
    }
    ModelState<float> m;
    m.config.depth = hdr.at("depth").get<int>();
    m.config.validate();
    m.step = hdr.at("step").get<std::int64_t>();
    m.seed = hdr.at("seed").get<std::uint64_t>();
    const std::size_t n = m.param_count();
    if (hdr.at("n_params").get<std::size_t>() != n)
        throw std::runtime_error("checkpoint parameter count inconsistent with depth: " + path.string());
    auto read = [&](std::vector<float>& v) {
        v.resize(n);
        f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    };
    read(m.weights);
    read(m.adam_m);
    read(m.adam_v);
    if (!f) throw std::runtime_error("checkpoint payload truncated: " + path.string());
    return m;
}

}  // namespace sr4zct
