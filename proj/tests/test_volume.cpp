#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "sr4zct/volume.hpp"
#include "test_util.hpp"

using namespace sr4zct;
using Catch::Approx;

namespace {

Volume random_volume(std::mt19937_64& rng, std::size_t nx, std::size_t ny, std::size_t nz,
                     double vxy = 1.0, double vz = 1.0, double dz = 1.0) {
    Volume v(nx, ny, nz, vxy, vz, dz);
    for (auto& x : v.raw()) x = static_cast<float>(testutil::uniform(rng, -1.0, 1.0));
    return v;
}

std::filesystem::path temp_dir() {
    auto p = std::filesystem::temp_directory_path() / "sr4zct_volume_test";
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("geometry invariants") {
    CHECK_THROWS_AS(Volume(1, 4, 4, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(Volume(4, 4, 4, 1, 1, 1.5), std::invalid_argument);  // z_spacing > voxel_z
    CHECK_THROWS_AS(Volume(4, 4, 4, 1, -1, -1), std::invalid_argument);
    CHECK_NOTHROW(Volume(4, 4, 4, 1, 3, 2));
}

TEST_CASE("axial extraction is definitional") {
    std::mt19937_64 rng(3);
    const auto v = random_volume(rng, 4, 4, 4);
    const auto a = v.extract_slice(Orientation::Axial, 0);
    REQUIRE(a.rows() == 4);
    REQUIRE(a.cols() == 4);
    for (std::size_t x = 0; x < 4; ++x)
        for (std::size_t y = 0; y < 4; ++y)
            CHECK(a(x, y) == v.at(x, y, 0));
}

TEST_CASE("extract/insert round trip for all orientations") {
    std::mt19937_64 rng(5);
    auto v = random_volume(rng, 5, 6, 7, 1.0, 3.0, 2.0);
    const auto copy = v.raw();
    for (Orientation o : {Orientation::Axial, Orientation::Coronal, Orientation::Sagittal}) {
        for (std::size_t i = 0; i < v.axis_extent(o); ++i)
            v.insert_slice(o, i, v.extract_slice(o, i));
        CHECK(v.raw() == copy);
    }
}

TEST_CASE("coronal slices of v(x,y,z)=z have constant rows") {
    Volume v(4, 4, 6, 1, 1, 1);
    for (std::size_t z = 0; z < 6; ++z)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x) v.at(x, y, z) = static_cast<float>(z);
    for (std::size_t y = 0; y < 4; ++y) {
        const auto c = v.extract_slice(Orientation::Coronal, y);
        REQUIRE(c.rows() == 6);  // z vertical
        REQUIRE(c.cols() == 4);
        for (std::size_t r = 0; r < 6; ++r)
            for (std::size_t col = 0; col < 4; ++col) CHECK(c(r, col) == Approx(double(r)));
    }
}

TEST_CASE("coronal/sagittal dims of an anisotropic volume") {
    Volume v(5, 6, 7, 1, 3, 2);
    CHECK(v.extract_slice(Orientation::Coronal, 0).rows() == 7);
    CHECK(v.extract_slice(Orientation::Coronal, 0).cols() == 5);
    CHECK(v.extract_slice(Orientation::Sagittal, 0).rows() == 7);
    CHECK(v.extract_slice(Orientation::Sagittal, 0).cols() == 6);
}

TEST_CASE("inserting into a coronal plane changes only y=j voxels") {
    std::mt19937_64 rng(9);
    auto v = random_volume(rng, 8, 8, 8);
    const auto before = v;
    const std::size_t j = 3;
    Image2D<float> img(8, 8, 42.0f);
    v.insert_slice(Orientation::Coronal, j, img);
    for (std::size_t z = 0; z < 8; ++z)
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x) {
                if (y == j)
                    CHECK(v.at(x, y, z) == 42.0f);
                else
                    CHECK(v.at(x, y, z) == before.at(x, y, z));
            }
}

TEST_CASE("insert rejects bad dims and bad index") {
    Volume v(4, 4, 4, 1, 1, 1);
    CHECK_THROWS_AS(v.insert_slice(Orientation::Axial, 0, Image2D<float>(3, 4)), std::invalid_argument);
    CHECK_THROWS_AS(v.insert_slice(Orientation::Axial, 4, Image2D<float>(4, 4)), std::out_of_range);
    CHECK_THROWS_AS(v.extract_slice(Orientation::Sagittal, 9), std::out_of_range);
}

TEST_CASE("rotate90 four times is the identity and swaps dims") {
    std::mt19937_64 rng(13);
    const auto img = testutil::random_image(rng, 5, 9);
    auto r = rotate90(img);
    CHECK(r.rows() == 9);
    CHECK(r.cols() == 5);
    r = rotate90(rotate90(rotate90(r)));
    REQUIRE(r.rows() == img.rows());
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(r.raw()[i] == img.raw()[i]);

    Image2D<float> row(1, 4);
    CHECK(rotate90(row).rows() == 4);
    CHECK(rotate90(row).cols() == 1);
}

TEST_CASE("volume file round trip is bit exact") {
    std::mt19937_64 rng(17);
    const auto v = random_volume(rng, 6, 5, 4, 0.74, 3.0, 2.0);
    const auto dir = temp_dir();
    save_volume(v, dir / "vol");
    const auto w = load_volume(dir / "vol.json");
    CHECK(w.raw() == v.raw());
    CHECK(w.voxel_xy() == v.voxel_xy());
    CHECK(w.voxel_z() == v.voxel_z());
    CHECK(w.z_spacing() == v.z_spacing());
    CHECK(w.nx() == 6);
    CHECK(w.ny() == 5);
    CHECK(w.nz() == 4);
}

TEST_CASE("short payload is a malformed-volume error") {
    std::mt19937_64 rng(19);
    const auto v = random_volume(rng, 4, 4, 4);
    const auto dir = temp_dir();
    save_volume(v, dir / "short");
    std::filesystem::resize_file(dir / "short.raw", 100);
    CHECK_THROWS_AS(load_volume(dir / "short"), std::runtime_error);
}

TEST_CASE("header violating the overlap invariant is rejected") {
    const auto dir = temp_dir();
    std::ofstream(dir / "bad.json")
        << R"({"shape":[4,4,4],"voxel_xy_mm":1.0,"voxel_z_mm":1.0,"z_spacing_mm":2.0,)"
        << R"("dtype":"f32","order":"x-fastest"})";
    std::vector<float> payload(64, 0.0f);
    std::ofstream(dir / "bad.raw", std::ios::binary)
        .write(reinterpret_cast<const char*>(payload.data()), 64 * 4);
    CHECK_THROWS_AS(load_volume(dir / "bad"), std::invalid_argument);
}

TEST_CASE("missing file and garbage header errors") {
    const auto dir = temp_dir();
    CHECK_THROWS_AS(load_volume(dir / "nope"), std::runtime_error);
    std::ofstream(dir / "garbage.json") << "not json {";
    CHECK_THROWS_AS(load_volume(dir / "garbage"), std::runtime_error);
}
