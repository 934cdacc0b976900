#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <string>
#include <vector>

#include <json.hpp>

#include "e3d/cli.hpp"
#include "e3d/scoring.hpp"
#include "e3d/weights_io.hpp"

using namespace e3d;

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"e3d"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("e3d_cli_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("profile subcommand emits the expected structure") {
    TempDir tmp;
    const std::string out = tmp.file("report.json");
    CHECK(run({"profile", "--arch", "shufflenet_v1", "--width", "2.0", "--classes", "600",
               "--out", out}) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["model"] == "shufflenet_v1");
    CHECK(j["structure"]["layers"] == 50);
    CHECK(j["structure"]["nonlin"] == 33);
    CHECK(j["structure"]["skips"] == 16);
    CHECK(j["totals"]["params"].get<int64_t>() > 0);
    CHECK(j.contains("convention"));
    CHECK(j["layers"].is_array());
    CHECK(j["published"]["params_within_5pct"] == true);
}

TEST_CASE("profile rejects non-stock widths without the override") {
    CHECK(run({"profile", "--arch", "mobilenet_v1", "--width", "0.81"}) == 1);
    TempDir tmp;
    const std::string out = tmp.file("r.json");
    CHECK(run({"profile", "--arch", "mobilenet_v1", "--width", "0.81", "--allow-any-width",
               "--out", out}) == 0);
    CHECK(run({"profile", "--arch", "no_such_net", "--out", out}) == 1);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}) == 2);
    CHECK(run({"profile", "--no-such-flag"}) == 2);
    CHECK(run({"frobnicate"}) == 2);
}

TEST_CASE("infer is deterministic byte for byte") {
    TempDir tmp;
    const std::string a = tmp.file("a.json"), b = tmp.file("b.json");
    const std::vector<std::string> args{"infer", "--arch", "mobilenet_v2", "--width", "0.2",
                                        "--classes", "31",  "--frames", "8", "--size", "32",
                                        "--seed", "7"};
    auto with_out = [&](const std::string& out) {
        auto v = args;
        v.push_back("--out");
        v.push_back(out);
        return v;
    };
    CHECK(run(with_out(a)) == 0);
    CHECK(run(with_out(b)) == 0);
    const std::string ja = slurp(a);
    CHECK(ja == slurp(b));
    const auto j = nlohmann::json::parse(ja);
    CHECK(j["classes"] == 31);
    CHECK(j["top"].size() == 5);
}

TEST_CASE("build then infer with the weight file matches seeded inference") {
    TempDir tmp;
    const std::string weights = tmp.file("m.e3dw");
    CHECK(run({"build", "--arch", "shufflenet_v2", "--width", "0.25", "--classes", "17",
               "--frames", "8", "--size", "32", "--seed", "3", "--out", weights}) == 0);

    const std::string a = tmp.file("a.json"), b = tmp.file("b.json");
    CHECK(run({"infer", "--arch", "shufflenet_v2", "--width", "0.25", "--classes", "17",
               "--frames", "8", "--size", "32", "--seed", "3", "--out", a}) == 0);
    CHECK(run({"infer", "--arch", "shufflenet_v2", "--width", "0.25", "--classes", "17",
               "--frames", "8", "--size", "32", "--seed", "3", "--weights", weights,
               "--out", b}) == 0);
    CHECK(slurp(a) == slurp(b));

    // Same build twice gives identical artifacts.
    const std::string weights2 = tmp.file("m2.e3dw");
    CHECK(run({"build", "--arch", "shufflenet_v2", "--width", "0.25", "--classes", "17",
               "--frames", "8", "--size", "32", "--seed", "3", "--out", weights2}) == 0);
    CHECK(slurp(weights) == slurp(weights2));
}

TEST_CASE("infer consumes a clip file") {
    TempDir tmp;
    const Shape5 shape{1, 3, 8, 32, 32};
    const std::string clip = tmp.file("clip.e3dw");
    save_tensor(make_clip(shape, ClipSource::from_seed(5)), "clip", clip);

    const std::string out = tmp.file("o.json");
    CHECK(run({"infer", "--arch", "shufflenet_v2", "--width", "0.25", "--classes", "9",
               "--frames", "8", "--size", "32", "--clip", clip, "--out", out}) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["clips"] == 1);

    // Mismatched geometry is a runtime error.
    CHECK(run({"infer", "--arch", "shufflenet_v2", "--width", "0.25", "--classes", "9",
               "--frames", "16", "--size", "32", "--clip", clip, "--out", out}) == 1);
}

TEST_CASE("verify subcommand passes on this build") {
    CHECK(run({"verify", "--cases", "12", "--seed", "5"}) == 0);
}

TEST_CASE("bench subcommand reports stats after verifying kernels") {
    TempDir tmp;
    const std::string out = tmp.file("bench.json");
    CHECK(run({"bench", "--arch", "shufflenet_v2", "--width", "0.25", "--classes", "11",
               "--frames", "4", "--size", "16", "--batch", "2", "--warmup", "1", "--iters", "3",
               "--out", out}) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["batch"] == 2);
    CHECK(j["iters"] == 3);
    CHECK(j["cps_mean"].get<double>() > 0);
    CHECK(j["iter_seconds"].size() == 3);
}
