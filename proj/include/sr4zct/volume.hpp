#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sr4zct/image.hpp"

namespace sr4zct {

enum class Orientation { Axial, Coronal, Sagittal };

inline const char* to_string(Orientation o) {
    switch (o) {
        case Orientation::Axial: return "axial";
        case Orientation::Coronal: return "coronal";
        case Orientation::Sagittal: return "sagittal";
    }
    return "?";
}

/// 3-D scalar field of shape X*Y*Z (x varies fastest) with voxel geometry:
/// in-plane pixel size, slice thickness and z center-to-center spacing.
class Volume {
public:
    Volume() = default;
    Volume(std::size_t x, std::size_t y, std::size_t z,
           double voxel_xy, double voxel_z, double z_spacing, float fill = 0.0f)
        : nx_(x), ny_(y), nz_(z),
          voxel_xy_(voxel_xy), voxel_z_(voxel_z), z_spacing_(z_spacing),
          data_(x * y * z, fill) {
        validate_geometry();
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t nz() const { return nz_; }
    double voxel_xy() const { return voxel_xy_; }
    double voxel_z() const { return voxel_z_; }
    double z_spacing() const { return z_spacing_; }
    double overlap() const { return voxel_z_ - z_spacing_; }
    /// Physical z extent: (Z-1) spacings plus one slice thickness.
    double z_extent() const { return static_cast<double>(nz_ - 1) * z_spacing_ + voxel_z_; }

    float& at(std::size_t x, std::size_t y, std::size_t z) { return data_[(z * ny_ + y) * nx_ + x]; }
    const float& at(std::size_t x, std::size_t y, std::size_t z) const { return data_[(z * ny_ + y) * nx_ + x]; }
    std::vector<float>& raw() { return data_; }
    const std::vector<float>& raw() const { return data_; }

    bool same_dims(const Volume& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_; }

    void validate_geometry() const {
        if (nx_ < 2 || ny_ < 2 || nz_ < 2)
            throw std::invalid_argument("Volume: all dims must be >= 2");
        if (!(voxel_xy_ > 0.0) || !(voxel_z_ > 0.0))
            throw std::invalid_argument("Volume: voxel sizes must be > 0");
        if (!(z_spacing_ > 0.0 && z_spacing_ <= voxel_z_ + 1e-12))
            throw std::invalid_argument("Volume: need 0 < z_spacing <= voxel_z");
    }

    std::size_t axis_extent(Orientation o) const {
        switch (o) {
            case Orientation::Axial: return nz_;
            case Orientation::Coronal: return ny_;
            case Orientation::Sagittal: return nx_;
        }
        return 0;
    }

    /// Axial: X*Y image at fixed z. Coronal/sagittal: z is the vertical image
    /// axis (rows = Z), columns run along x or y respectively.
    Image2D<float> extract_slice(Orientation o, std::size_t index) const {
        check_index(o, index);
        switch (o) {
            case Orientation::Axial: {
                Image2D<float> img(nx_, ny_);
                for (std::size_t x = 0; x < nx_; ++x)
                    for (std::size_t y = 0; y < ny_; ++y)
                        img(x, y) = at(x, y, index);
                return img;
            }
            case Orientation::Coronal: {
                Image2D<float> img(nz_, nx_);
                for (std::size_t z = 0; z < nz_; ++z)
                    for (std::size_t x = 0; x < nx_; ++x)
                        img(z, x) = at(x, index, z);
                return img;
            }
            case Orientation::Sagittal: {
                Image2D<float> img(nz_, ny_);
                for (std::size_t z = 0; z < nz_; ++z)
                    for (std::size_t y = 0; y < ny_; ++y)
                        img(z, y) = at(index, y, z);
                return img;
            }
        }
        throw std::logic_error("unreachable");
    }

    void insert_slice(Orientation o, std::size_t index, const Image2D<float>& img) {
        check_index(o, index);
        switch (o) {
            case Orientation::Axial:
                require_dims(img, nx_, ny_, o);
                for (std::size_t x = 0; x < nx_; ++x)
                    for (std::size_t y = 0; y < ny_; ++y)
                        at(x, y, index) = img(x, y);
                return;
            case Orientation::Coronal:
                require_dims(img, nz_, nx_, o);
                for (std::size_t z = 0; z < nz_; ++z)
                    for (std::size_t x = 0; x < nx_; ++x)
                        at(x, index, z) = img(z, x);
                return;
            case Orientation::Sagittal:
                require_dims(img, nz_, ny_, o);
                for (std::size_t z = 0; z < nz_; ++z)
                    for (std::size_t y = 0; y < ny_; ++y)
                        at(index, y, z) = img(z, y);
                return;
        }
    }

private:
    void check_index(Orientation o, std::size_t index) const {
        if (index >= axis_extent(o))
            throw std::out_of_range(std::string("slice index out of range for ") + to_string(o));
    }
    static void require_dims(const Image2D<float>& img, std::size_t r, std::size_t c, Orientation o) {
        if (img.rows() != r || img.cols() != c)
            throw std::invalid_argument(std::string("insert_slice: image dims do not match ") + to_string(o) + " plane");
    }

    std::size_t nx_ = 0, ny_ = 0, nz_ = 0;
    double voxel_xy_ = 1.0, voxel_z_ = 1.0, z_spacing_ = 1.0;
    std::vector<float> data_;
};

namespace detail {

/// Accepts "vol", "vol.json" or "vol.raw" and returns the extension-free stem.
inline std::filesystem::path volume_stem(const std::filesystem::path& path) {
    if (path.extension() == ".json" || path.extension() == ".raw") {
        std::filesystem::path p = path;
        p.replace_extension();
        return p;
    }
    return path;
}

inline void write_file(const std::filesystem::path& p, const void* data, std::size_t bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!f) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace detail

/// Writes <stem>.json sidecar and <stem>.raw little-endian f32 payload.
inline void save_volume(const Volume& v, const std::filesystem::path& path) {
    const auto stem = detail::volume_stem(path);
    nlohmann::json hdr;
    hdr["shape"] = {v.nx(), v.ny(), v.nz()};
    hdr["voxel_xy_mm"] = v.voxel_xy();
    hdr["voxel_z_mm"] = v.voxel_z();
    hdr["z_spacing_mm"] = v.z_spacing();
    hdr["dtype"] = "f32";
    hdr["order"] = "x-fastest";
    const std::string txt = hdr.dump(2) + "\n";
    detail::write_file(std::filesystem::path(stem).concat(".json"), txt.data(), txt.size());
    detail::write_file(std::filesystem::path(stem).concat(".raw"),
                       v.raw().data(), v.raw().size() * sizeof(float));
}

inline Volume load_volume(const std::filesystem::path& path) {
    const auto stem = detail::volume_stem(path);
    const auto json_path = std::filesystem::path(stem).concat(".json");
    const auto raw_path = std::filesystem::path(stem).concat(".raw");

    std::ifstream jf(json_path);
    if (!jf) throw std::runtime_error("missing volume header: " + json_path.string());
    nlohmann::json hdr;
    try {
        jf >> hdr;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed volume header " + json_path.string() + ": " + e.what());
    }

    std::array<std::size_t, 3> shape{};
    try {
        auto s = hdr.at("shape");
        if (!s.is_array() || s.size() != 3) throw std::runtime_error("shape must have 3 entries");
        for (int i = 0; i < 3; ++i) shape[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)].get<std::size_t>();
        if (hdr.at("dtype").get<std::string>() != "f32") throw std::runtime_error("unsupported dtype");
        if (hdr.at("order").get<std::string>() != "x-fastest") throw std::runtime_error("unsupported order");
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed volume header " + json_path.string() + ": " + e.what());
    }

    Volume v(shape[0], shape[1], shape[2],
             hdr.at("voxel_xy_mm").get<double>(),
             hdr.at("voxel_z_mm").get<double>(),
             hdr.at("z_spacing_mm").get<double>());

    std::ifstream rf(raw_path, std::ios::binary | std::ios::ate);
    if (!rf) throw std::runtime_error("missing volume payload: " + raw_path.string());
    const auto bytes = static_cast<std::size_t>(rf.tellg());
    const std::size_t expected = shape[0] * shape[1] * shape[2] * sizeof(float);
    if (bytes != expected)
        throw std::runtime_error("volume payload size mismatch in " + raw_path.string() + ": got " +
                                 std::to_string(bytes) + " bytes, expected " + std::to_string(expected));
    rf.seekg(0);
    rf.read(reinterpret_cast<char*>(v.raw().data()), static_cast<std::streamsize>(expected));
    if (!rf) throw std::runtime_error("short read: " + raw_path.string());
    for (float x : v.raw())
        if (!std::isfinite(x)) throw std::runtime_error("non-finite voxel in " + raw_path.string());
    return v;
}

}  // namespace sr4zct
