#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sr4zct/image.hpp"

namespace sr4zct {

enum class Boundary { ClampEdge };

/// Geometry of a 1-D degradation/restoration operator pair: source (high
/// resolution) pixel size, target (low resolution) pixel size and the overlap
/// between adjacent target pixels. All lengths in the same unit (mm).
struct ResamplingProfile {
    double src_pixel = 1.0;
    double tgt_pixel = 1.0;
    double overlap = 0.0;
    Boundary boundary = Boundary::ClampEdge;

    double spacing() const { return tgt_pixel - overlap; }

    void validate() const {
        if (!(src_pixel > 0.0)) throw std::invalid_argument("ResamplingProfile: src_pixel must be > 0");
        if (!(tgt_pixel > 0.0)) throw std::invalid_argument("ResamplingProfile: tgt_pixel must be > 0");
        if (!(overlap >= 0.0 && overlap < tgt_pixel))
            throw std::invalid_argument("ResamplingProfile: need 0 <= overlap < tgt_pixel");
        if (!(tgt_pixel >= src_pixel))
            throw std::invalid_argument("ResamplingProfile: tgt_pixel must be >= src_pixel");
    }
};

/// Sparse row-stochastic matrix with contiguous per-row support.
struct ResampleMatrix {
    struct Row {
        std::size_t first = 0;          // source index of the first weight
        std::vector<double> weights;    // contiguous support
    };

    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::vector<Row> rows;

    /// Applies the matrix to a single signal (length n_in), 64-bit accumulation.
    template <typename T>
    void apply(const T* in, T* out) const {
        for (std::size_t i = 0; i < n_out; ++i) {
            const Row& row = rows[i];
            double acc = 0.0;
            for (std::size_t k = 0; k < row.weights.size(); ++k)
                acc += row.weights[k] * static_cast<double>(in[row.first + k]);
            out[i] = static_cast<T>(acc);
        }
    }
};

namespace detail {

inline bool near_integer(double x, double tol = 1e-9) {
    return std::abs(x - std::round(x)) <= tol * std::max(1.0, std::abs(x));
}

}  // namespace detail

/// Number of fully covered target pixels for a source extent of n_src pixels.
inline std::size_t downscale_output_count(const ResamplingProfile& p, std::size_t n_src) {
    const double extent = static_cast<double>(n_src) * p.src_pixel;
    if (extent < p.tgt_pixel - 1e-12)
        throw std::invalid_argument("build_downscale: signal extent smaller than one target pixel");
    return static_cast<std::size_t>(std::floor((extent - p.tgt_pixel) / p.spacing() + 1e-9)) + 1;
}

/// Builds the degradation operator for arbitrary resolution/overlap.
///
/// Target pixel i covers the physical interval [i*spacing, i*spacing + tgt_pixel],
/// with the source signal's leading edge at 0 and source sample k centered at
/// (k + 1/2) * src_pixel. When the target grid is commensurate with the source
/// grid (tgt_pixel and spacing are integer multiples of src_pixel) the averaged
/// interpolation points coincide with the source centers and the row reduces to
/// a uniform box over the covered samples. Otherwise the row is the exact mean
/// of the piecewise-linear reconstruction (knots at source centers, edge values
/// clamped outside) over the target interval.
inline ResampleMatrix build_downscale(const ResamplingProfile& p, std::size_t n_src) {
    p.validate();
    if (n_src < 2) throw std::invalid_argument("build_downscale: n_src must be >= 2");

    ResampleMatrix m;
    m.n_in = n_src;
    m.n_out = downscale_output_count(p, n_src);
    m.rows.resize(m.n_out);

    const double d = p.spacing();
    const double h = p.src_pixel;
    const double ratio_w = p.tgt_pixel / h;
    const double ratio_s = d / h;

    if (detail::near_integer(ratio_w) && detail::near_integer(ratio_s)) {
        // Commensurate grids: box average over the covered source samples.
        const std::size_t w = static_cast<std::size_t>(std::llround(ratio_w));
        const std::size_t s = static_cast<std::size_t>(std::llround(ratio_s));
        for (std::size_t i = 0; i < m.n_out; ++i) {
            m.rows[i].first = i * s;
            m.rows[i].weights.assign(w, 1.0 / static_cast<double>(w));
        }
        return m;
    }

    const double first_center = 0.5 * h;
    const double last_center = (static_cast<double>(n_src) - 0.5) * h;

    for (std::size_t i = 0; i < m.n_out; ++i) {
        const double a = static_cast<double>(i) * d;
        const double b = a + p.tgt_pixel;
        std::vector<double> w(n_src, 0.0);

        // Clamped region before the first source center.
        if (a < first_center) w[0] += std::min(b, first_center) - a;
        // Clamped region after the last source center.
        if (b > last_center) w[n_src - 1] += b - std::max(a, last_center);

        // Interior: exact integral of the linear interpolant over each
        // overlapped knot interval [x_k, x_{k+1}].
        const double lo = std::max(a, first_center);
        const double hi = std::min(b, last_center);
        if (hi > lo) {
            std::size_t k = static_cast<std::size_t>(
                std::clamp(std::floor(lo / h - 0.5), 0.0, static_cast<double>(n_src - 2)));
            for (; k + 1 < n_src; ++k) {
                const double xk = (static_cast<double>(k) + 0.5) * h;
                const double xk1 = xk + h;
                const double u = std::max(lo, xk);
                const double v = std::min(hi, xk1);
                if (v <= u) {
                    if (xk >= hi) break;
                    continue;
                }
                const double len = v - u;
                const double frac = ((u + v) * 0.5 - xk) / h;  // mean of the hat slope
                w[k] += len * (1.0 - frac);
                w[k + 1] += len * frac;
            }
        }

        // Normalize to the target pixel width; weights then sum to 1.
        std::size_t first = 0;
        while (first < n_src && w[first] == 0.0) ++first;
        std::size_t last = n_src;
        while (last > first && w[last - 1] == 0.0) --last;
        ResampleMatrix::Row& row = m.rows[i];
        row.first = first;
        row.weights.assign(w.begin() + static_cast<std::ptrdiff_t>(first),
                           w.begin() + static_cast<std::ptrdiff_t>(last));
        for (double& x : row.weights) x /= p.tgt_pixel;
    }
    return m;
}

/// Builds the restoration-grid operator: linear interpolation from low-res
/// pixel centers c_i = i*spacing + tgt_pixel/2 to high-res centers
/// t_j = (j + 1/2)*src_pixel, clamped to the nearest center outside [c_0, c_last].
/// The caller fixes n_out so that upscale(downscale(x)) has the source length.
inline ResampleMatrix build_upscale(const ResamplingProfile& p, std::size_t n_lr, std::size_t n_out) {
    p.validate();
    if (n_lr < 2) throw std::invalid_argument("build_upscale: n_lr must be >= 2");
    if (n_out < 2) throw std::invalid_argument("build_upscale: n_out must be >= 2");

    ResampleMatrix m;
    m.n_in = n_lr;
    m.n_out = n_out;
    m.rows.resize(n_out);

    const double d = p.spacing();
    const double c0 = 0.5 * p.tgt_pixel;

    for (std::size_t j = 0; j < n_out; ++j) {
        const double t = (static_cast<double>(j) + 0.5) * p.src_pixel;
        ResampleMatrix::Row& row = m.rows[j];
        const double pos = (t - c0) / d;
        if (pos <= 0.0) {
            row.first = 0;
            row.weights = {1.0};
        } else if (pos >= static_cast<double>(n_lr - 1)) {
            row.first = n_lr - 1;
            row.weights = {1.0};
        } else {
            const std::size_t i = static_cast<std::size_t>(std::floor(pos));
            const double frac = pos - static_cast<double>(i);
            row.first = i;
            if (frac == 0.0)
                row.weights = {1.0};
            else
                row.weights = {1.0 - frac, frac};
        }
    }
    return m;
}

/// Stride-s box kernel of width w, the SMORE-style degradation operator.
inline ResampleMatrix build_box_stride(std::size_t filter_width, std::size_t stride, std::size_t n_src) {
    if (filter_width < 1 || stride < 1) throw std::invalid_argument("build_box_stride: width/stride must be >= 1");
    if (n_src < filter_width) throw std::invalid_argument("build_box_stride: signal shorter than filter");
    ResampleMatrix m;
    m.n_in = n_src;
    m.n_out = (n_src - filter_width) / stride + 1;
    m.rows.resize(m.n_out);
    for (std::size_t i = 0; i < m.n_out; ++i) {
        m.rows[i].first = i * stride;
        m.rows[i].weights.assign(filter_width, 1.0 / static_cast<double>(filter_width));
    }
    return m;
}

/// Transforms every column independently; output has matrix.n_out rows.
template <typename T>
Image2D<T> apply_vertical(const ResampleMatrix& m, const Image2D<T>& img) {
    if (img.rows() != m.n_in)
        throw std::invalid_argument("apply_vertical: image rows (" + std::to_string(img.rows()) +
                                    ") != matrix n_in (" + std::to_string(m.n_in) + ")");
    Image2D<T> out(m.n_out, img.cols());
    for (std::size_t i = 0; i < m.n_out; ++i) {
        const ResampleMatrix::Row& row = m.rows[i];
        for (std::size_t c = 0; c < img.cols(); ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < row.weights.size(); ++k)
                acc += row.weights[k] * static_cast<double>(img(row.first + k, c));
            out(i, c) = static_cast<T>(acc);
        }
    }
    return out;
}

/// Transforms every row independently; output has matrix.n_out columns.
template <typename T>
Image2D<T> apply_horizontal(const ResampleMatrix& m, const Image2D<T>& img) {
    if (img.cols() != m.n_in)
        throw std::invalid_argument("apply_horizontal: image cols (" + std::to_string(img.cols()) +
                                    ") != matrix n_in (" + std::to_string(m.n_in) + ")");
    Image2D<T> out(img.rows(), m.n_out);
    for (std::size_t r = 0; r < img.rows(); ++r) {
        for (std::size_t j = 0; j < m.n_out; ++j) {
            const ResampleMatrix::Row& row = m.rows[j];
            double acc = 0.0;
            for (std::size_t k = 0; k < row.weights.size(); ++k)
                acc += row.weights[k] * static_cast<double>(img(r, row.first + k));
            out(r, j) = static_cast<T>(acc);
        }
    }
    return out;
}

struct ConvEquivalence {
    double resolution = 0.0;  // mm
    double overlap = 0.0;     // mm
};

/// Resolution/overlap simulated by a width-w stride-s convolution on a grid of
/// pixel size src_pixel.
inline ConvEquivalence conv_stride_equivalence(std::size_t filter_width, std::size_t stride, double src_pixel) {
    if (filter_width < 1 || stride < 1) throw std::invalid_argument("conv_stride_equivalence: width/stride must be >= 1");
    if (!(src_pixel > 0.0)) throw std::invalid_argument("conv_stride_equivalence: src_pixel must be > 0");
    ConvEquivalence e;
    e.resolution = static_cast<double>(filter_width) * src_pixel;
    const double ov = static_cast<double>(filter_width) - static_cast<double>(stride);
    e.overlap = std::max(0.0, ov) * src_pixel;
    return e;
}

}  // namespace sr4zct
