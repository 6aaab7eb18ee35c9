#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "sr4zct/image.hpp"
#include "sr4zct/volume.hpp"

namespace sr4zct {

/// 10*log10(range^2 / MSE); +inf when the images are identical.
template <typename T>
double psnr(const Image2D<T>& a, const Image2D<T>& b, double data_range) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: dimension mismatch");
    if (!(data_range > 0.0)) throw std::invalid_argument("psnr: data_range must be > 0");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.raw()[i]) - static_cast<double>(b.raw()[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

namespace detail {

inline const std::vector<double>& ssim_window() {
    // 11-tap Gaussian, sigma 1.5, normalized.
    static const std::vector<double> w = [] {
        std::vector<double> g(11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            const double x = static_cast<double>(i - 5);
            g[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
            sum += g[static_cast<std::size_t>(i)];
        }
        for (double& v : g) v /= sum;
        return g;
    }();
    return w;
}

/// Separable Gaussian filter, valid region only (output shrinks by 10).
template <typename T>
Image2D<double> gauss_valid(const Image2D<T>& img) {
    const auto& w = ssim_window();
    const std::size_t rows = img.rows(), cols = img.cols();
    Image2D<double> tmp(rows, cols - 10);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c + 10 < cols; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 11; ++k) acc += w[k] * static_cast<double>(img(r, c + k));
            tmp(r, c) = acc;
        }
    Image2D<double> out(rows - 10, cols - 10);
    for (std::size_t r = 0; r + 10 < rows; ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 11; ++k) acc += w[k] * tmp(r + k, c);
            out(r, c) = acc;
        }
    return out;
}

}  // namespace detail

/// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1 0.01, K2 0.03.
template <typename T>
double ssim(const Image2D<T>& a, const Image2D<T>& b, double data_range) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: dimension mismatch");
    if (a.rows() < 11 || a.cols() < 11) throw std::invalid_argument("ssim: images smaller than 11x11 window");
    if (!(data_range > 0.0)) throw std::invalid_argument("ssim: data_range must be > 0");

    Image2D<double> aa(a.rows(), a.cols()), bb(a.rows(), a.cols()), ab(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a.raw()[i]);
        const double y = static_cast<double>(b.raw()[i]);
        aa.raw()[i] = x * x;
        bb.raw()[i] = y * y;
        ab.raw()[i] = x * y;
    }
    const Image2D<double> mu_a = detail::gauss_valid(a);
    const Image2D<double> mu_b = detail::gauss_valid(b);
    const Image2D<double> m_aa = detail::gauss_valid(aa);
    const Image2D<double> m_bb = detail::gauss_valid(bb);
    const Image2D<double> m_ab = detail::gauss_valid(ab);

    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a.raw()[i], mb = mu_b.raw()[i];
        const double va = m_aa.raw()[i] - ma * ma;
        const double vb = m_bb.raw()[i] - mb * mb;
        const double cov = m_ab.raw()[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

/// Removes margin_frac of rows and columns from each side.
template <typename T>
Image2D<T> central_crop(const Image2D<T>& img, double margin_frac) {
    if (!(margin_frac >= 0.0 && margin_frac <= 0.45))
        throw std::invalid_argument("central_crop: margin_frac must be in [0, 0.45]");
    const std::size_t mr = static_cast<std::size_t>(std::llround(margin_frac * static_cast<double>(img.rows())));
    const std::size_t mc = static_cast<std::size_t>(std::llround(margin_frac * static_cast<double>(img.cols())));
    const std::size_t rows = img.rows() - 2 * mr;
    const std::size_t cols = img.cols() - 2 * mc;
    if (rows < 11 || cols < 11) throw std::invalid_argument("central_crop: result smaller than 11x11");
    Image2D<T> out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out(r, c) = img(mr + r, mc + c);
    return out;
}

struct ViewMetrics {
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

struct MetricReport {
    ViewMetrics coronal;
    ViewMetrics sagittal;
    double margin_frac = 0.0;
    double data_range = 0.0;
};

/// Mean PSNR/SSIM over all coronal and all sagittal slices after central
/// cropping; data_range is max - min of the reference volume.
inline MetricReport report(const Volume& reference, const Volume& test, double margin_frac,
                           std::optional<double> data_range_override = std::nullopt) {
    if (!reference.same_dims(test)) throw std::invalid_argument("report: volume dims mismatch");
    MetricReport rep;
    rep.margin_frac = margin_frac;
    if (data_range_override) {
        rep.data_range = *data_range_override;
    } else {
        const auto [mn, mx] = std::minmax_element(reference.raw().begin(), reference.raw().end());
        rep.data_range = static_cast<double>(*mx) - static_cast<double>(*mn);
    }
    if (!(rep.data_range > 0.0)) throw std::invalid_argument("report: reference has zero data range");

    auto view_mean = [&](Orientation o) {
        const std::size_t n = reference.axis_extent(o);
        double psum = 0.0, ssum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto ra = central_crop(reference.extract_slice(o, i), margin_frac);
            const auto ta = central_crop(test.extract_slice(o, i), margin_frac);
            psum += psnr(ra, ta, rep.data_range);
            ssum += ssim(ra, ta, rep.data_range);
        }
        return ViewMetrics{psum / static_cast<double>(n), ssum / static_cast<double>(n)};
    };
    rep.coronal = view_mean(Orientation::Coronal);
    rep.sagittal = view_mean(Orientation::Sagittal);
    return rep;
}

inline nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j;
    auto view = [](const ViewMetrics& v) {
        nlohmann::json o;
        o["mean_psnr_db"] = std::isinf(v.mean_psnr) ? nlohmann::json("inf") : nlohmann::json(v.mean_psnr);
        o["mean_ssim"] = v.mean_ssim;
        return o;
    };
    j["coronal"] = view(r.coronal);
    j["sagittal"] = view(r.sagittal);
    j["margin_frac"] = r.margin_frac;
    j["data_range"] = r.data_range;
    return j;
}

}  // namespace sr4zct
