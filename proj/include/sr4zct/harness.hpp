#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sr4zct/dataset.hpp"
#include "sr4zct/enhancer.hpp"
#include "sr4zct/metrics.hpp"
#include "sr4zct/network.hpp"
#include "sr4zct/phantom.hpp"
#include "sr4zct/resampler.hpp"
#include "sr4zct/trainer.hpp"
#include "sr4zct/volume.hpp"

namespace sr4zct {

namespace detail {

inline std::string fnv1a_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot hash missing file: " + p.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof buf);
        const std::streamsize n = f.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

inline nlohmann::json hash_volume_files(const std::filesystem::path& stem_like) {
    const auto stem = volume_stem(stem_like);
    nlohmann::json j;
    for (const char* ext : {".json", ".raw"}) {
        const auto p = std::filesystem::path(stem).concat(ext);
        if (std::filesystem::exists(p)) j[p.string()] = fnv1a_file(p);
    }
    return j;
}

/// One manifest line per run, appended to <out_dir>/manifest.jsonl.
class ManifestScope {
public:
    ManifestScope(std::filesystem::path out_dir, std::string command)
        : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(out_dir_);
        entry_["command"] = std::move(command);
    }
    nlohmann::json& entry() { return entry_; }
    void finish() {
        const auto dt = std::chrono::steady_clock::now() - start_;
        entry_["duration_s"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(dt).count() / 1000.0;
        std::ofstream f(out_dir_ / "manifest.jsonl", std::ios::app);
        if (!f) throw std::runtime_error("cannot append manifest in " + out_dir_.string());
        f << entry_.dump() << "\n";
    }

private:
    std::filesystem::path out_dir_;
    nlohmann::json entry_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// First n z-slices of a volume, metadata unchanged.
inline Volume crop_z(const Volume& v, std::size_t n) {
    if (n < 2 || n > v.nz()) throw std::invalid_argument("crop_z: bad slice count");
    Volume out(v.nx(), v.ny(), n, v.voxel_xy(), v.voxel_z(), v.z_spacing());
    std::copy(v.raw().begin(),
              v.raw().begin() + static_cast<std::ptrdiff_t>(v.nx() * v.ny() * n),
              out.raw().begin());
    return out;
}

/// Writes hr/lr phantom volumes for a simulated experiment.
inline void cmd_simulate(const PhantomSpec& spec, double tgt_pixel, double overlap,
                         const std::filesystem::path& out_dir) {
    detail::ManifestScope man(out_dir, "simulate");
    man.entry()["config"] = {{"nx", spec.nx}, {"ny", spec.ny}, {"nz", spec.nz},
                             {"seed", spec.seed}, {"n_ellipsoids", spec.n_ellipsoids},
                             {"texture_amp", spec.texture_amp},
                             {"tgt_pixel", tgt_pixel}, {"overlap", overlap}};
    const Volume hr = generate(spec);
    const Volume lr = degrade_z(hr, tgt_pixel, overlap);
    save_volume(hr, out_dir / "hr");
    save_volume(lr, out_dir / "lr");
    man.entry()["outputs"]["hr"] = detail::hash_volume_files(out_dir / "hr");
    man.entry()["outputs"]["lr"] = detail::hash_volume_files(out_dir / "lr");
    man.finish();
}

/// build_dataset -> train -> enhance; writes enhanced volume, checkpoint and
/// loss history.
inline void cmd_pipeline(const std::filesystem::path& lr_volume, NetworkConfig net_cfg,
                         TrainConfig train_cfg, EnhanceConfig enh_cfg,
                         const std::filesystem::path& out_dir) {
    detail::ManifestScope man(out_dir, "pipeline");
    man.entry()["inputs"]["lr"] = detail::hash_volume_files(lr_volume);
    man.entry()["config"] = {{"depth", net_cfg.depth}, {"epochs", train_cfg.epochs},
                             {"patch", train_cfg.patch}, {"lr", train_cfg.lr},
                             {"seed", train_cfg.seed}};

    const Volume lr = load_volume(lr_volume);
    const ResamplingProfile p = profile_from_volume(lr);
    const auto pairs = build_dataset(lr, p);
    train_cfg.run_dir = out_dir;
    const TrainResult tr = train(pairs, net_cfg, train_cfg);
    save_checkpoint(tr.model, out_dir / "checkpoint.bin");
    const Volume enhanced = enhance_volume(lr, tr.model, enh_cfg);
    save_volume(enhanced, out_dir / "enhanced");
    man.entry()["outputs"]["enhanced"] = detail::hash_volume_files(out_dir / "enhanced");
    man.entry()["outputs"]["checkpoint"] = detail::fnv1a_file(out_dir / "checkpoint.bin");
    man.entry()["final_loss"] = tr.loss_history.back();
    man.finish();
}

/// The un-enhanced comparison point: restoration upscale only.
inline void cmd_baseline_interp(const std::filesystem::path& lr_volume, EnhanceConfig enh_cfg,
                                const std::filesystem::path& out_dir) {
    detail::ManifestScope man(out_dir, "baseline-interp");
    man.entry()["inputs"]["lr"] = detail::hash_volume_files(lr_volume);
    const Volume lr = load_volume(lr_volume);
    const Volume up = enhance_volume_interp(lr, enh_cfg);
    save_volume(up, out_dir / "baseline_interp");
    man.entry()["outputs"]["baseline_interp"] = detail::hash_volume_files(out_dir / "baseline_interp");
    man.finish();
}

/// SMORE-style degradation of the axial stack with a width-w stride-s box
/// kernel; the manifest records the equivalent resolution/overlap.
inline void cmd_baseline_smore_degrade(const std::filesystem::path& hr_volume,
                                       std::size_t filter_width, std::size_t stride,
                                       const std::filesystem::path& out_dir) {
    detail::ManifestScope man(out_dir, "baseline-smore-degrade");
    man.entry()["inputs"]["hr"] = detail::hash_volume_files(hr_volume);
    const Volume hr = load_volume(hr_volume);
    const ConvEquivalence eq = conv_stride_equivalence(filter_width, stride, hr.voxel_xy());
    man.entry()["config"] = {{"filter_width", filter_width}, {"stride", stride},
                             {"equivalent_resolution_mm", eq.resolution},
                             {"equivalent_overlap_mm", eq.overlap}};

    const ResampleMatrix box = build_box_stride(filter_width, stride, hr.nx());
    Volume out(box.n_out, hr.ny(), hr.nz(), hr.voxel_xy(), hr.voxel_z(), hr.z_spacing());
    for (std::size_t z = 0; z < hr.nz(); ++z)
        out.insert_slice(Orientation::Axial, z,
                         apply_vertical(box, hr.extract_slice(Orientation::Axial, z)));
    save_volume(out, out_dir / "smore_degraded");
    man.entry()["outputs"]["smore_degraded"] = detail::hash_volume_files(out_dir / "smore_degraded");
    man.finish();
}

struct MismatchCell {
    double d_resolution = 0.0;
    double d_overlap = 0.0;
    double mean_psnr = 0.0;  // mean of coronal and sagittal PSNR vs HR
};

/// Degrades the phantom once with the true geometry, then trains/enhances with
/// each deviated profile and scores PSNR against the HR ground truth.
inline std::vector<MismatchCell> cmd_mismatch_sweep(
    const std::filesystem::path& hr_volume, double true_resolution, double true_overlap,
    const std::vector<std::pair<double, double>>& deviations, NetworkConfig net_cfg,
    TrainConfig train_cfg, double margin_frac, const std::filesystem::path& out_dir) {
    detail::ManifestScope man(out_dir, "mismatch-sweep");
    man.entry()["inputs"]["hr"] = detail::hash_volume_files(hr_volume);
    man.entry()["config"] = {{"true_resolution", true_resolution}, {"true_overlap", true_overlap},
                             {"depth", net_cfg.depth}, {"epochs", train_cfg.epochs},
                             {"seed", train_cfg.seed}, {"margin_frac", margin_frac}};

    const Volume hr = load_volume(hr_volume);
    const Volume lr = degrade_z(hr, true_resolution, true_overlap);
    const std::size_t target_rows = derive_target_rows(lr);
    const Volume hr_ref = crop_z(hr, std::min(target_rows, hr.nz()));
    const auto [mn, mx] = std::minmax_element(hr_ref.raw().begin(), hr_ref.raw().end());
    const double data_range = static_cast<double>(*mx) - static_cast<double>(*mn);

    std::vector<MismatchCell> cells;
    for (const auto& [dr, dov] : deviations) {
        ResamplingProfile p;
        p.src_pixel = lr.voxel_xy();
        p.tgt_pixel = true_resolution + dr;
        p.overlap = true_overlap + dov;
        p.validate();

        const auto pairs = build_dataset(lr, p, /*allow_mismatch=*/true);
        TrainConfig cell_cfg = train_cfg;
        cell_cfg.run_dir.clear();
        const TrainResult tr = train(pairs, net_cfg, cell_cfg);

        EnhanceConfig enh;
        enh.combine = CombineMode::Average;
        enh.target_rows = hr_ref.nz();
        enh.profile_override = p;
        const Volume enhanced = enhance_volume(lr, tr.model, enh);

        const MetricReport rep = report(hr_ref, enhanced, margin_frac, data_range);
        MismatchCell cell;
        cell.d_resolution = dr;
        cell.d_overlap = dov;
        cell.mean_psnr = 0.5 * (rep.coronal.mean_psnr + rep.sagittal.mean_psnr);
        cells.push_back(cell);
    }

    nlohmann::json grid = nlohmann::json::array();
    for (const auto& c : cells)
        grid.push_back({{"d_resolution", c.d_resolution}, {"d_overlap", c.d_overlap},
                        {"mean_psnr_db", c.mean_psnr}});
    std::ofstream(out_dir / "mismatch_report.json") << grid.dump(2) << "\n";
    man.entry()["outputs"]["report"] = detail::fnv1a_file(out_dir / "mismatch_report.json");
    man.finish();
    return cells;
}

/// Writes metrics.json comparing a test volume against a reference.
inline MetricReport cmd_evaluate(const std::filesystem::path& reference,
                                 const std::filesystem::path& test, double margin_frac,
                                 const std::filesystem::path& out_dir) {
    detail::ManifestScope man(out_dir, "evaluate");
    man.entry()["inputs"]["reference"] = detail::hash_volume_files(reference);
    man.entry()["inputs"]["test"] = detail::hash_volume_files(test);
    const Volume ref = load_volume(reference);
    const Volume tst = load_volume(test);
    const MetricReport rep = report(ref, tst, margin_frac);
    std::ofstream(out_dir / "metrics.json") << to_json(rep).dump(2) << "\n";
    man.entry()["outputs"]["metrics"] = detail::fnv1a_file(out_dir / "metrics.json");
    man.finish();
    return rep;
}

}  // namespace sr4zct
