#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sr4zct/harness.hpp"

using namespace sr4zct;
using Catch::Approx;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("sr4zct_harness_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

PhantomSpec small_spec(std::uint64_t seed = 1) {
    PhantomSpec spec;
    spec.nx = spec.ny = 16;
    spec.nz = 16;
    spec.seed = seed;
    spec.n_ellipsoids = 5;
    return spec;
}

int manifest_lines(const std::filesystem::path& dir) {
    std::ifstream f(dir / "manifest.jsonl");
    std::string line;
    int n = 0;
    while (std::getline(f, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("simulate writes hr/lr and is rerun-identical") {
    const auto dir = fresh_dir("sim");
    cmd_simulate(small_spec(), 2.0, 0.5, dir);
    REQUIRE(std::filesystem::exists(dir / "hr.raw"));
    REQUIRE(std::filesystem::exists(dir / "lr.json"));
    const auto lr1 = load_volume(dir / "lr");
    CHECK(lr1.voxel_z() == Approx(2.0));
    CHECK(lr1.z_spacing() == Approx(1.5));

    cmd_simulate(small_spec(), 2.0, 0.5, dir);
    const auto lr2 = load_volume(dir / "lr");
    CHECK(lr1.raw() == lr2.raw());
    CHECK(manifest_lines(dir) == 2);  // append-only
}

TEST_CASE("identity degradation simulate gives lr == hr") {
    const auto dir = fresh_dir("sim_id");
    cmd_simulate(small_spec(3), 1.0, 0.0, dir);
    const auto hr = load_volume(dir / "hr");
    const auto lr = load_volume(dir / "lr");
    REQUIRE(hr.same_dims(lr));
    for (std::size_t i = 0; i < hr.raw().size(); ++i)
        CHECK(lr.raw()[i] == Approx(hr.raw()[i]).margin(1e-7));
}

TEST_CASE("pipeline produces enhanced volume, checkpoint and loss history") {
    const auto sim = fresh_dir("pipe_sim");
    cmd_simulate(small_spec(5), 2.0, 0.5, sim);
    const auto out = fresh_dir("pipe_out");

    NetworkConfig net;
    net.depth = 3;
    TrainConfig tc;
    tc.epochs = 2;
    tc.patch = 0;
    tc.seed = 7;
    cmd_pipeline(sim / "lr", net, tc, EnhanceConfig{}, out);

    REQUIRE(std::filesystem::exists(out / "enhanced.raw"));
    REQUIRE(std::filesystem::exists(out / "checkpoint.bin"));
    std::ifstream csv(out / "loss_history.csv");
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 3);  // header + epochs

    const auto enhanced = load_volume(out / "enhanced");
    const auto lr = load_volume(sim / "lr");
    CHECK(enhanced.nz() == derive_target_rows(lr));
}

TEST_CASE("baseline geometry matches the pipeline output geometry") {
    const auto sim = fresh_dir("base_sim");
    cmd_simulate(small_spec(9), 2.0, 0.5, sim);
    const auto out = fresh_dir("base_out");
    cmd_baseline_interp(sim / "lr", EnhanceConfig{}, out);
    const auto base = load_volume(out / "baseline_interp");
    const auto lr = load_volume(sim / "lr");
    CHECK(base.nx() == lr.nx());
    CHECK(base.nz() == derive_target_rows(lr));
    CHECK(base.voxel_z() == Approx(lr.voxel_xy()));

    // constant volume passes through unchanged
    Volume c(8, 8, 10, 1, 2, 1.5, 0.3f);
    save_volume(c, sim / "const");
    cmd_baseline_interp(sim / "const", EnhanceConfig{}, out);
    const auto cb = load_volume(out / "baseline_interp");
    for (float v : cb.raw()) CHECK(v == Approx(0.3).margin(1e-6));
}

TEST_CASE("smore degradation records the equivalent geometry") {
    const auto sim = fresh_dir("smore_sim");
    cmd_simulate(small_spec(11), 1.0, 0.0, sim);
    const auto out = fresh_dir("smore_out");
    cmd_baseline_smore_degrade(sim / "hr", 5, 3, out);
    const auto degraded = load_volume(out / "smore_degraded");
    CHECK(degraded.nx() == (16 - 5) / 3 + 1);
    std::ifstream mf(out / "manifest.jsonl");
    std::string line;
    std::getline(mf, line);
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("config").at("equivalent_resolution_mm").get<double>() == Approx(5.0));
    CHECK(j.at("config").at("equivalent_overlap_mm").get<double>() == Approx(2.0));

    // width 1 stride 1 is the identity
    cmd_baseline_smore_degrade(sim / "hr", 1, 1, out);
    const auto same = load_volume(out / "smore_degraded");
    const auto hr = load_volume(sim / "hr");
    CHECK(same.raw() == hr.raw());
}

TEST_CASE("evaluate writes metrics.json consistent with the metrics module") {
    const auto sim = fresh_dir("eval_sim");
    cmd_simulate(small_spec(13), 1.0, 0.0, sim);
    const auto out = fresh_dir("eval_out");
    const auto rep = cmd_evaluate(sim / "hr", sim / "hr", 0.1, out);
    CHECK(rep.coronal.mean_ssim == Approx(1.0).margin(1e-9));
    CHECK(std::isinf(rep.coronal.mean_psnr));
    REQUIRE(std::filesystem::exists(out / "metrics.json"));

    const auto direct = report(load_volume(sim / "hr"), load_volume(sim / "hr"), 0.1);
    CHECK(direct.sagittal.mean_ssim == Approx(rep.sagittal.mean_ssim).margin(1e-12));
}

TEST_CASE("mismatch sweep scores each deviation cell") {
    const auto sim = fresh_dir("sweep_sim");
    PhantomSpec spec = small_spec(15);
    spec.nz = 32;
    cmd_simulate(spec, 1.0, 0.0, sim);  // only the hr volume is used
    const auto out = fresh_dir("sweep_out");

    NetworkConfig net;
    net.depth = 2;
    TrainConfig tc;
    tc.epochs = 1;
    tc.patch = 0;
    tc.seed = 3;
    const std::vector<std::pair<double, double>> devs = {{0.0, 0.0}, {0.5, 0.0}};
    const auto cells = cmd_mismatch_sweep(sim / "hr", 4.0, 1.5, devs, net, tc, 0.1, out);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].d_resolution == 0.0);
    CHECK(std::isfinite(cells[0].mean_psnr));
    CHECK(std::filesystem::exists(out / "mismatch_report.json"));
}
