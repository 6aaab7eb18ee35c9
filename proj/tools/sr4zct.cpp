#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sr4zct/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    json j;
    f >> j;
    return j;
}

template <typename T>
void from_config(const json& cfg, const char* key, T& out) {
    if (cfg.contains(key)) out = cfg.at(key).get<T>();
}

sr4zct::CombineMode parse_combine(const std::string& s) {
    if (s == "coronal") return sr4zct::CombineMode::CoronalOnly;
    if (s == "sagittal") return sr4zct::CombineMode::SagittalOnly;
    if (s == "average") return sr4zct::CombineMode::Average;
    throw std::runtime_error("unknown combine mode: " + s + " (use coronal|sagittal|average)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SR4ZCT: self-supervised through-plane resolution enhancement for CT volumes"};
    app.require_subcommand(1);

    std::string input, output, config_path, combine = "average";
    std::uint64_t seed = 0;
    double resolution = 5.0, overlap = 2.5, margin_frac = 0.15;
    int epochs = 50, depth = 20;

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        if (needs_input) sub->add_option("--input", input, "input volume (json/raw stem)")->required();
        sub->add_option("--output", output, "output directory")->required();
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "RNG seed");
        return sub;
    };

    auto* sim = add_common(app.add_subcommand("simulate", "generate HR phantom and degraded LR volume"), false);
    std::size_t sim_nx = 64, sim_ny = 64, sim_nz = 64;
    sim->add_option("--nx", sim_nx);
    sim->add_option("--ny", sim_ny);
    sim->add_option("--nz", sim_nz);
    sim->add_option("--resolution", resolution, "simulated slice thickness (mm)");
    sim->add_option("--overlap", overlap, "simulated slice overlap (mm)");

    auto* pipe = add_common(app.add_subcommand("pipeline", "train on axial slices and enhance the volume"), true);
    pipe->add_option("--epochs", epochs);
    pipe->add_option("--depth", depth);
    pipe->add_option("--combine", combine, "coronal|sagittal|average");

    auto* base = add_common(app.add_subcommand("baseline-interp", "interpolation-only enhancement baseline"), true);
    base->add_option("--combine", combine, "coronal|sagittal|average");

    auto* smore = add_common(app.add_subcommand("baseline-smore-degrade",
                                                "degrade axial images with a box kernel"), true);
    std::size_t filter_width = 5, stride = 3;
    smore->add_option("--filter-width", filter_width);
    smore->add_option("--stride", stride);

    auto* sweep = add_common(app.add_subcommand("mismatch-sweep",
                                                "train with deviated profiles around the true geometry"), true);
    sweep->add_option("--resolution", resolution, "true slice thickness (mm)");
    sweep->add_option("--overlap", overlap, "true slice overlap (mm)");
    sweep->add_option("--epochs", epochs);
    sweep->add_option("--depth", depth);
    sweep->add_option("--margin-frac", margin_frac);

    auto* eval = add_common(app.add_subcommand("evaluate", "PSNR/SSIM report between two volumes"), true);
    std::string test_volume;
    eval->add_option("--test", test_volume, "test volume (json/raw stem)")->required();
    eval->add_option("--margin-frac", margin_frac);

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = load_config(config_path);
        from_config(cfg, "seed", seed);
        from_config(cfg, "epochs", epochs);
        from_config(cfg, "depth", depth);
        from_config(cfg, "resolution", resolution);
        from_config(cfg, "overlap", overlap);
        from_config(cfg, "margin_frac", margin_frac);
        from_config(cfg, "combine", combine);

        sr4zct::NetworkConfig net_cfg;
        net_cfg.depth = depth;
        sr4zct::TrainConfig train_cfg;
        train_cfg.epochs = epochs;
        train_cfg.seed = seed;
        from_config(cfg, "patch", train_cfg.patch);
        from_config(cfg, "lr", train_cfg.lr);
        from_config(cfg, "checkpoint_every", train_cfg.checkpoint_every);
        sr4zct::EnhanceConfig enh_cfg;
        enh_cfg.combine = parse_combine(combine);

        if (sim->parsed()) {
            sr4zct::PhantomSpec spec;
            spec.nx = sim_nx;
            spec.ny = sim_ny;
            spec.nz = sim_nz;
            spec.seed = seed;
            from_config(cfg, "n_ellipsoids", spec.n_ellipsoids);
            from_config(cfg, "texture_amp", spec.texture_amp);
            sr4zct::cmd_simulate(spec, resolution, overlap, output);
        } else if (pipe->parsed()) {
            sr4zct::cmd_pipeline(input, net_cfg, train_cfg, enh_cfg, output);
        } else if (base->parsed()) {
            sr4zct::cmd_baseline_interp(input, enh_cfg, output);
        } else if (smore->parsed()) {
            sr4zct::cmd_baseline_smore_degrade(input, filter_width, stride, output);
        } else if (sweep->parsed()) {
            std::vector<std::pair<double, double>> deviations;
            if (cfg.contains("deviations")) {
                for (const auto& d : cfg.at("deviations"))
                    deviations.emplace_back(d.at(0).get<double>(), d.at(1).get<double>());
            } else {
                for (double dr : {-0.25, 0.0, 0.25})
                    for (double dov : {-0.25, 0.0, 0.25})
                        deviations.emplace_back(dr, dov);
            }
            const auto cells = sr4zct::cmd_mismatch_sweep(input, resolution, overlap, deviations,
                                                          net_cfg, train_cfg, margin_frac, output);
            for (const auto& c : cells)
                std::printf("d_res=%+.2f d_ov=%+.2f  psnr=%.3f dB\n",
                            c.d_resolution, c.d_overlap, c.mean_psnr);
        } else if (eval->parsed()) {
            const auto rep = sr4zct::cmd_evaluate(input, test_volume, margin_frac, output);
            std::printf("coronal:  psnr=%.3f dB  ssim=%.4f\n", rep.coronal.mean_psnr, rep.coronal.mean_ssim);
            std::printf("sagittal: psnr=%.3f dB  ssim=%.4f\n", rep.sagittal.mean_psnr, rep.sagittal.mean_ssim);
        }
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
