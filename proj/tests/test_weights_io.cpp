#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <stdexcept>

#include "e3d/models.hpp"
#include "e3d/scoring.hpp"
#include "e3d/weights_io.hpp"
#include "test_util.hpp"

using namespace e3d;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("e3d_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<uint8_t> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("E3DW encode/decode round-trips bitwise") {
    std::vector<NamedTensor> tensors;
    tensors.push_back({"alpha", {2, 3}, {1.0f, -2.5f, 0.0f, 3e-9f, -0.0f, 42.0f}});
    tensors.push_back({"beta.weight", {1, 2, 1, 1, 2}, testutil::random_vec(4, 1)});
    const auto bytes = e3dw_encode(tensors);
    CHECK(bytes[0] == 'E');
    CHECK(bytes[1] == '3');
    CHECK(bytes[2] == 'D');
    CHECK(bytes[3] == 'W');
    const auto back = e3dw_decode(bytes);
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "alpha");
    CHECK(back[0].dims == std::vector<uint32_t>{2, 3});
    CHECK(back[1].dims == std::vector<uint32_t>{1, 2, 1, 1, 2});
    // Re-encoding reproduces the exact bytes.
    CHECK(e3dw_encode(back) == bytes);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(e3dw_decode(truncated), std::runtime_error);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(e3dw_decode(bad_magic), std::runtime_error);
}

TEST_CASE("model weights save/load round-trips and feeds forward") {
    TempDir tmp;
    const ModelConfig cfg{.arch = Arch::kShuffleNetV2, .width = 0.25, .classes = 21,
                          .frames = 8, .size = 32};
    ModelGraph g = init_weights(build_model(cfg), 42);
    const std::string path = tmp.file("w.e3dw");
    save_weights(g, path);

    // Same seed, same bytes.
    const std::string path2 = tmp.file("w2.e3dw");
    save_weights(init_weights(build_model(cfg), 42), path2);
    CHECK(slurp(path) == slurp(path2));

    ModelGraph fresh = build_model(cfg);
    load_weights(fresh, path);
    Tensor5 x = testutil::random_tensor({1, 3, 8, 32, 32}, 5);
    CHECK(testutil::bitwise_equal(forward(fresh, x), forward(g, x)));

    // Wrong model rejects the file.
    ModelGraph other = build_model({.arch = Arch::kShuffleNetV2, .width = 0.5, .classes = 21,
                                    .frames = 8, .size = 32});
    CHECK_THROWS(load_weights(other, path));
}

TEST_CASE("clip tensors save/load bitwise with shape checking") {
    TempDir tmp;
    const Shape5 shape{1, 3, 4, 6, 6};
    Tensor5 clip = make_clip(shape, ClipSource::from_seed(9));
    const std::string path = tmp.file("clip.e3dw");
    save_tensor(clip, "clip", path);
    Tensor5 back = load_tensor(path, shape);
    CHECK(testutil::bitwise_equal(back, clip));

    CHECK_THROWS_AS(load_tensor(path, Shape5{1, 3, 4, 6, 7}), std::runtime_error);
    CHECK_THROWS_AS(load_tensor(tmp.file("missing.e3dw"), shape), std::runtime_error);
}

TEST_CASE("make_clip sources") {
    const Shape5 shape{2, 3, 2, 4, 4};
    Tensor5 zero = make_clip(shape, ClipSource::from_constant(0.0f));
    for (int64_t i = 0; i < zero.size(); ++i) CHECK(zero.data()[i] == 0.0f);

    Tensor5 a = make_clip(shape, ClipSource::from_seed(3));
    Tensor5 b = make_clip(shape, ClipSource::from_seed(3));
    CHECK(testutil::bitwise_equal(a, b));
    Tensor5 c = make_clip(shape, ClipSource::from_seed(4));
    CHECK_FALSE(testutil::bitwise_equal(a, c));
    for (int64_t i = 0; i < a.size(); ++i) {
        CHECK(a.data()[i] >= -1.0f);
        CHECK(a.data()[i] < 1.0f);
    }
}
