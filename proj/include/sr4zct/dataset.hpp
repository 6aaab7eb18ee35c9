#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "sr4zct/image.hpp"
#include "sr4zct/resampler.hpp"
#include "sr4zct/volume.hpp"

namespace sr4zct {

enum class Provenance { Vertical, Horizontal };

/// Degraded input slice paired with its pristine target. Horizontal pairs
/// store the rotated images, so the degraded axis is always vertical.
struct TrainingPair {
    Image2D<float> input;
    Image2D<float> target;
    Provenance provenance = Provenance::Vertical;
    std::size_t slice_index = 0;
};

/// a_ver = upscale(downscale(a)) along the vertical axis, target = a.
inline TrainingPair make_pair_vertical(const Image2D<float>& a, const ResamplingProfile& p) {
    const ResampleMatrix down = build_downscale(p, a.rows());
    const ResampleMatrix up = build_upscale(p, down.n_out, a.rows());
    TrainingPair pair;
    pair.input = apply_vertical(up, apply_vertical(down, a));
    pair.target = a;
    pair.provenance = Provenance::Vertical;
    return pair;
}

/// Horizontal degradation, then both images rotated 90 degrees so the
/// degraded axis becomes vertical.
inline TrainingPair make_pair_horizontal(const Image2D<float>& a, const ResamplingProfile& p) {
    const ResampleMatrix down = build_downscale(p, a.cols());
    const ResampleMatrix up = build_upscale(p, down.n_out, a.cols());
    TrainingPair pair;
    pair.input = rotate90(apply_horizontal(up, apply_horizontal(down, a)));
    pair.target = rotate90(a);
    pair.provenance = Provenance::Horizontal;
    return pair;
}

/// Profile implied by the volume's own z geometry.
inline ResamplingProfile profile_from_volume(const Volume& v) {
    ResamplingProfile p;
    p.src_pixel = v.voxel_xy();
    p.tgt_pixel = v.voxel_z();
    p.overlap = v.overlap();
    return p;
}

/// Generates the 2*Z training pairs, slice index ascending, vertical before
/// horizontal. The profile must match the volume geometry unless
/// allow_mismatch is set (deliberate-mismatch experiments only).
inline std::vector<TrainingPair> build_dataset(const Volume& v, const ResamplingProfile& p,
                                               bool allow_mismatch = false) {
    p.validate();
    if (!allow_mismatch) {
        const ResamplingProfile q = profile_from_volume(v);
        const double tol = 1e-9;
        if (std::abs(p.src_pixel - q.src_pixel) > tol ||
            std::abs(p.tgt_pixel - q.tgt_pixel) > tol ||
            std::abs(p.overlap - q.overlap) > tol)
            throw std::invalid_argument("build_dataset: profile does not match volume geometry");
    }
    std::vector<TrainingPair> pairs;
    pairs.reserve(2 * v.nz());
    for (std::size_t z = 0; z < v.nz(); ++z) {
        const Image2D<float> a = v.extract_slice(Orientation::Axial, z);
        TrainingPair ver = make_pair_vertical(a, p);
        ver.slice_index = z;
        pairs.push_back(std::move(ver));
        TrainingPair hor = make_pair_horizontal(a, p);
        hor.slice_index = z;
        pairs.push_back(std::move(hor));
    }
    return pairs;
}

/// Writes each pair as <idx>_{input,target}.{json,raw} for inspection.
inline void dump_dataset(const std::vector<TrainingPair>& pairs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write_image = [&](const Image2D<float>& img, const std::string& stem) {
        nlohmann::json hdr;
        hdr["shape"] = {img.rows(), img.cols()};
        hdr["dtype"] = "f32";
        hdr["order"] = "row-major";
        std::ofstream jf(dir / (stem + ".json"));
        jf << hdr.dump(2) << "\n";
        std::ofstream rf(dir / (stem + ".raw"), std::ios::binary);
        rf.write(reinterpret_cast<const char*>(img.data()),
                 static_cast<std::streamsize>(img.size() * sizeof(float)));
        if (!jf || !rf) throw std::runtime_error("dump_dataset: write failed in " + dir.string());
    };
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string tag = std::to_string(i) + "_" +
            (pairs[i].provenance == Provenance::Vertical ? "ver" : "hor");
        write_image(pairs[i].input, tag + "_input");
        write_image(pairs[i].target, tag + "_target");
    }
}

}  // namespace sr4zct
