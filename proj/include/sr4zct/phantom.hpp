#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "sr4zct/resampler.hpp"
#include "sr4zct/volume.hpp"

namespace sr4zct {

struct PhantomSpec {
    std::size_t nx = 64, ny = 64, nz = 64;
    std::uint64_t seed = 0;
    std::size_t n_ellipsoids = 30;
    double texture_amp = 0.0;  // optional fine texture amplitude

    void validate() const {
        if (nx < 2 || ny < 2 || nz < 2) throw std::invalid_argument("PhantomSpec: dims must be >= 2");
    }
};

/// Isotropic unit-voxel volume of seeded random ellipsoids with 1-voxel linear
/// edge falloff, values in [0, 1]. Deterministic per seed.
inline Volume generate(const PhantomSpec& spec) {
    spec.validate();
    Volume v(spec.nx, spec.ny, spec.nz, 1.0, 1.0, 1.0, 0.0f);
    std::mt19937_64 rng(spec.seed);
    auto uni = [&](double lo, double hi) {
        const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
        return lo + (hi - lo) * u;
    };

    for (std::size_t e = 0; e < spec.n_ellipsoids; ++e) {
        const double cx = uni(0.1, 0.9) * static_cast<double>(spec.nx);
        const double cy = uni(0.1, 0.9) * static_cast<double>(spec.ny);
        const double cz = uni(0.1, 0.9) * static_cast<double>(spec.nz);
        const double ax = uni(0.06, 0.35) * static_cast<double>(spec.nx);
        const double ay = uni(0.06, 0.35) * static_cast<double>(spec.ny);
        const double az = uni(0.06, 0.35) * static_cast<double>(spec.nz);
        const double intensity = uni(0.15, 1.0);
        const double rmin = std::min({ax, ay, az});

        const std::size_t x0 = static_cast<std::size_t>(std::max(0.0, std::floor(cx - ax - 2.0)));
        const std::size_t x1 = std::min(spec.nx, static_cast<std::size_t>(std::max(0.0, std::ceil(cx + ax + 2.0))));
        const std::size_t y0 = static_cast<std::size_t>(std::max(0.0, std::floor(cy - ay - 2.0)));
        const std::size_t y1 = std::min(spec.ny, static_cast<std::size_t>(std::max(0.0, std::ceil(cy + ay + 2.0))));
        const std::size_t z0 = static_cast<std::size_t>(std::max(0.0, std::floor(cz - az - 2.0)));
        const std::size_t z1 = std::min(spec.nz, static_cast<std::size_t>(std::max(0.0, std::ceil(cz + az + 2.0))));

        for (std::size_t z = z0; z < z1; ++z)
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x) {
                    const double dx = (static_cast<double>(x) + 0.5 - cx) / ax;
                    const double dy = (static_cast<double>(y) + 0.5 - cy) / ay;
                    const double dz = (static_cast<double>(z) + 0.5 - cz) / az;
                    const double rho = std::sqrt(dx * dx + dy * dy + dz * dz);
                    // approximate voxel distance to the surface, 1-voxel falloff
                    const double dist = (1.0 - rho) * rmin;
                    const double alpha = std::clamp(dist + 0.5, 0.0, 1.0);
                    if (alpha > 0.0) {
                        float& val = v.at(x, y, z);
                        val = static_cast<float>((1.0 - alpha) * static_cast<double>(val) + alpha * intensity);
                    }
                }
    }

    if (spec.texture_amp > 0.0) {
        for (float& val : v.raw())
            val = static_cast<float>(static_cast<double>(val) + spec.texture_amp * uni(-0.5, 0.5));
    }
    for (float& val : v.raw()) val = std::clamp(val, 0.0f, 1.0f);
    return v;
}

/// Ground-truth z degradation for simulated experiments: applies the
/// degradation operator along z to every (x, y) column. Output metadata
/// voxel_z = tgt_pixel, z_spacing = tgt_pixel - overlap.
inline Volume degrade_z(const Volume& v, double tgt_pixel, double overlap) {
    const double eps = 1e-9;
    if (std::abs(v.voxel_z() - v.voxel_xy()) > eps || std::abs(v.z_spacing() - v.voxel_z()) > eps)
        throw std::invalid_argument("degrade_z: input volume must be isotropic");
    ResamplingProfile p;
    p.src_pixel = v.voxel_xy();
    p.tgt_pixel = tgt_pixel;
    p.overlap = overlap;
    p.validate();

    const ResampleMatrix down = build_downscale(p, v.nz());
    Volume out(v.nx(), v.ny(), down.n_out, v.voxel_xy(), tgt_pixel, tgt_pixel - overlap);
    for (std::size_t y = 0; y < v.ny(); ++y)
        out.insert_slice(Orientation::Coronal, y,
                         apply_vertical(down, v.extract_slice(Orientation::Coronal, y)));
    return out;
}

}  // namespace sr4zct
