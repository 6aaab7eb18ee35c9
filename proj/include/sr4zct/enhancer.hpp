#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>

#include "sr4zct/dataset.hpp"
#include "sr4zct/network.hpp"
#include "sr4zct/resampler.hpp"
#include "sr4zct/volume.hpp"

namespace sr4zct {

enum class CombineMode { CoronalOnly, SagittalOnly, Average };

struct EnhanceConfig {
    CombineMode combine = CombineMode::Average;
    std::size_t target_rows = 0;  // 0 = derive from the volume geometry
    /// Profile used for the restoration upscale; defaults to the volume's own
    /// geometry. Overridden only for deliberate-mismatch experiments.
    std::optional<ResamplingProfile> profile_override;
};

/// z rows the enhanced volume gets so its sampling pitch equals voxel_xy.
inline std::size_t derive_target_rows(const Volume& v) {
    return static_cast<std::size_t>(std::llround(v.z_extent() / v.voxel_xy()));
}

/// Upscales a through-plane image (z vertical) to target_rows and runs the
/// trained network on it.
inline Image2D<float> enhance_slice(const Image2D<float>& img_lr, const ResamplingProfile& p,
                                    const ModelState<float>& m, std::size_t target_rows) {
    const ResampleMatrix up = build_upscale(p, img_lr.rows(), target_rows);
    return forward(m, apply_vertical(up, img_lr));
}

namespace detail {

using SliceOp = std::function<Image2D<float>(const Image2D<float>&)>;

inline Volume enhance_volume_with(const Volume& v, const EnhanceConfig& cfg, const SliceOp& op) {
    ResamplingProfile p = cfg.profile_override ? *cfg.profile_override : profile_from_volume(v);
    p.validate();
    const std::size_t target_rows = cfg.target_rows > 0 ? cfg.target_rows : derive_target_rows(v);
    if (target_rows < 2) throw std::invalid_argument("enhance_volume: target_rows must be >= 2");

    Volume out(v.nx(), v.ny(), target_rows, v.voxel_xy(), v.voxel_xy(), v.voxel_xy());

    auto run_pass = [&](Orientation o, Volume& dst) {
        const std::size_t n = v.axis_extent(o);
        for (std::size_t i = 0; i < n; ++i) {
            const Image2D<float> lr = v.extract_slice(o, i);
            const ResampleMatrix up = build_upscale(p, lr.rows(), target_rows);
            dst.insert_slice(o, i, op(apply_vertical(up, lr)));
        }
    };

    if (cfg.combine == CombineMode::CoronalOnly) {
        run_pass(Orientation::Coronal, out);
    } else if (cfg.combine == CombineMode::SagittalOnly) {
        run_pass(Orientation::Sagittal, out);
    } else {
        Volume sag(v.nx(), v.ny(), target_rows, v.voxel_xy(), v.voxel_xy(), v.voxel_xy());
        run_pass(Orientation::Coronal, out);
        run_pass(Orientation::Sagittal, sag);
        for (std::size_t i = 0; i < out.raw().size(); ++i)
            out.raw()[i] = 0.5f * (out.raw()[i] + sag.raw()[i]);
    }
    return out;
}

}  // namespace detail

/// Enhances every coronal and/or sagittal slice with the trained network and
/// reassembles an isotropic-z volume (voxel_z = z_spacing = voxel_xy).
inline Volume enhance_volume(const Volume& v, const ModelState<float>& m, const EnhanceConfig& cfg) {
    return detail::enhance_volume_with(v, cfg, [&](const Image2D<float>& up) { return forward(m, up); });
}

/// Interpolation-only baseline: the restoration upscale without a network.
inline Volume enhance_volume_interp(const Volume& v, const EnhanceConfig& cfg) {
    return detail::enhance_volume_with(v, cfg, [](const Image2D<float>& up) { return up; });
}

}  // namespace sr4zct
