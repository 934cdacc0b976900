#include "e3d/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "e3d/analyzer.hpp"
#include "e3d/bench.hpp"
#include "e3d/models.hpp"
#include "e3d/scoring.hpp"
#include "e3d/verify.hpp"
#include "e3d/weights_io.hpp"

namespace e3d {

namespace {

using ordered_json = nlohmann::ordered_json;

struct CommonArgs {
    std::string arch = "shufflenet_v2";
    double width = 1.0;
    int64_t classes = 600;
    int64_t frames = 16;
    int64_t size = 112;
    uint64_t seed = 0;
    int threads = 0;
    std::string backend = "auto";
    std::string weights;
    std::string out;
    bool allow_any_width = false;
};

void add_model_flags(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--arch", a.arch,
                    "architecture: squeezenet, mobilenet_v1, mobilenet_v2, shufflenet_v1, "
                    "shufflenet_v2");
    cmd->add_option("--width", a.width, "width multiplier");
    cmd->add_option("--classes", a.classes, "number of classes")->default_val(600);
    cmd->add_option("--frames", a.frames, "clip length in frames")->default_val(16);
    cmd->add_option("--size", a.size, "spatial resolution in pixels")->default_val(112);
    cmd->add_flag("--allow-any-width", a.allow_any_width, "accept non-stock width multipliers");
}

void add_exec_flags(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--threads", a.threads, "worker threads (0 = hardware parallelism)");
    cmd->add_option("--backend", a.backend, "kernel variant: auto, reference, scalar, avx2");
    cmd->add_option("--seed", a.seed, "seed for weights and synthetic inputs");
}

ModelConfig to_config(const CommonArgs& a) {
    return ModelConfig{.arch = arch_from_name(a.arch), .width = a.width, .classes = a.classes,
                       .in_channels = 3, .frames = a.frames, .size = a.size,
                       .allow_any_width = a.allow_any_width};
}

ExecContext to_ctx(const CommonArgs& a) {
    return ExecContext{.backend = backend_from_name(a.backend), .threads = a.threads};
}

ModelGraph build_ready_model(const CommonArgs& a) {
    ModelGraph g = build_model(to_config(a));
    if (!a.weights.empty()) {
        load_weights(g, a.weights);
    } else {
        g = init_weights(std::move(g), a.seed);
    }
    return g;
}

void write_out(const CommonArgs& a, const std::string& text) {
    if (a.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + a.out);
    f << text;
}

int cmd_build(const CommonArgs& a) {
    ModelGraph g = build_model(to_config(a));
    g = init_weights(std::move(g), a.seed);
    const std::string path = a.out.empty() ? a.arch + ".e3dw" : a.out;
    save_weights(g, path);
    ordered_json j;
    j["arch"] = g.arch;
    j["width"] = g.width;
    j["classes"] = g.classes;
    j["seed"] = a.seed;
    j["file"] = path;
    j["tensors"] = collect_weights(g).size();
    j["params"] = total_params(g);
    std::cerr << j.dump() << "\n";
    return 0;
}

int cmd_profile(const CommonArgs& a, bool with_bench, const BenchOptions& bopts) {
    ModelGraph g = build_model(to_config(a));
    std::optional<BenchStats> stats;
    if (with_bench) {
        g = init_weights(std::move(g), a.seed);
        stats = bench(g, bopts, to_ctx(a));
    }
    write_out(a, report_to_json(emit_report(g, stats)));
    return 0;
}

int cmd_infer(const CommonArgs& a, const std::string& clip_path, int64_t clips, int64_t topk) {
    ModelGraph g = build_ready_model(a);
    const Shape5 shape{1, 3, a.frames, a.size, a.size};
    std::vector<Tensor5> inputs;
    if (!clip_path.empty()) {
        inputs.push_back(make_clip(shape, ClipSource::from_file(clip_path)));
    } else {
        for (int64_t i = 0; i < std::max<int64_t>(1, clips); ++i) {
            // Clip stream seeded independently of the weights.
            inputs.push_back(make_clip(shape, ClipSource::from_seed(a.seed ^ (0xC11Full + static_cast<uint64_t>(i)))));
        }
    }
    const VideoScore score = score_video(g, inputs, to_ctx(a));

    std::vector<int64_t> order(score.probabilities.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
    std::stable_sort(order.begin(), order.end(), [&](int64_t x, int64_t y) {
        return score.probabilities[static_cast<size_t>(x)] >
               score.probabilities[static_cast<size_t>(y)];
    });

    ordered_json j;
    j["arch"] = g.arch;
    j["width"] = g.width;
    j["classes"] = g.classes;
    j["clips"] = inputs.size();
    j["class"] = score.class_index;
    j["prob"] = score.probabilities[static_cast<size_t>(score.class_index)];
    j["top"] = ordered_json::array();
    for (int64_t i = 0; i < std::min<int64_t>(topk, static_cast<int64_t>(order.size())); ++i) {
        j["top"].push_back(ordered_json{{"class", order[static_cast<size_t>(i)]},
                                        {"prob", score.probabilities[static_cast<size_t>(order[static_cast<size_t>(i)])]}});
    }
    write_out(a, j.dump(2) + "\n");
    return 0;
}

int run_verify_cmd(const VerifyOptions& opts, bool quiet) {
    const VerifyResult res = run_verify(opts);
    if (!quiet || !res.ok()) {
        std::cerr << "verify: " << res.checks << " checks, " << res.failures << " failures\n";
        for (const auto& m : res.messages) std::cerr << "  " << m << "\n";
    }
    return res.ok() ? 0 : 1;
}

int cmd_bench(const CommonArgs& a, const BenchOptions& bopts, bool force) {
    if (!force) {
        // A benchmark on kernels that disagree with the oracle is meaningless.
        VerifyOptions vopts{.cases = 25, .seed = 1, .threads = a.threads};
        if (run_verify_cmd(vopts, /*quiet=*/true) != 0) {
            std::cerr << "bench: kernel verification failed; rerun with --force to override\n";
            return 1;
        }
    }
    ModelGraph g = build_ready_model(a);
    const BenchStats stats = bench(g, bopts, to_ctx(a));
    ordered_json j;
    j["arch"] = g.arch;
    j["width"] = g.width;
    j["classes"] = g.classes;
    j["backend"] = backend_name(resolve_backend(to_ctx(a).backend));
    j["batch"] = stats.batch;
    j["warmup"] = stats.warmup;
    j["iters"] = stats.iters;
    j["threads"] = stats.threads;
    j["iter_seconds"] = stats.iter_seconds;
    j["cps_mean"] = stats.cps_mean;
    j["cps_median"] = stats.cps_median;
    j["cps_std"] = stats.cps_std;
    j["stability"] = stats.stability();
    write_out(a, j.dump(2) + "\n");
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Resource-efficient 3D CNN inference, profiling and benchmarking"};
    app.require_subcommand(1);

    CommonArgs a;

    auto* build = app.add_subcommand("build", "initialize weights and write an E3DW file");
    add_model_flags(build, a);
    add_exec_flags(build, a);
    build->add_option("--out", a.out, "output weight file (default <arch>.e3dw)");

    bool profile_bench = false;
    BenchOptions bopts;
    auto* profile = app.add_subcommand("profile", "emit the static profile report as JSON");
    add_model_flags(profile, a);
    add_exec_flags(profile, a);
    profile->add_option("--out", a.out, "write the report here instead of stdout");
    profile->add_flag("--bench", profile_bench, "embed a benchmark run in the report");
    profile->add_option("--batch", bopts.batch, "benchmark batch size")->default_val(8);
    profile->add_option("--warmup", bopts.warmup, "untimed warmup iterations")->default_val(3);
    profile->add_option("--iters", bopts.iters, "timed iterations")->default_val(10);

    std::string clip_path;
    int64_t clips = 1;
    int64_t topk = 5;
    auto* infer = app.add_subcommand("infer", "run inference on a clip file or synthetic clips");
    add_model_flags(infer, a);
    add_exec_flags(infer, a);
    infer->add_option("--clip", clip_path, "single-tensor E3DW clip file");
    infer->add_option("--clips", clips, "number of synthetic clips to aggregate")->default_val(1);
    infer->add_option("--top", topk, "top-k classes to print")->default_val(5);
    infer->add_option("--weights", a.weights, "E3DW weight file to load");
    infer->add_option("--out", a.out, "write the result here instead of stdout");

    bool force = false;
    auto* benchc = app.add_subcommand("bench", "measure forward throughput (clips per second)");
    add_model_flags(benchc, a);
    add_exec_flags(benchc, a);
    benchc->add_option("--batch", bopts.batch, "batch size")->default_val(8);
    benchc->add_option("--warmup", bopts.warmup, "untimed warmup iterations")->default_val(3);
    benchc->add_option("--iters", bopts.iters, "timed iterations")->default_val(10);
    benchc->add_option("--weights", a.weights, "E3DW weight file to load");
    benchc->add_option("--out", a.out, "write the stats here instead of stdout");
    benchc->add_flag("--force", force, "benchmark even if kernel verification fails");

    VerifyOptions vopts;
    auto* verifyc = app.add_subcommand("verify", "check optimized kernels against naive oracles");
    verifyc->add_option("--cases", vopts.cases, "randomized cases per kernel")->default_val(200);
    verifyc->add_option("--seed", vopts.seed, "randomization seed")->default_val(1);
    verifyc->add_option("--threads", vopts.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (build->parsed()) return cmd_build(a);
        if (profile->parsed()) return cmd_profile(a, profile_bench, bopts);
        if (infer->parsed()) return cmd_infer(a, clip_path, clips, topk);
        if (benchc->parsed()) return cmd_bench(a, bopts, force);
        if (verifyc->parsed()) return run_verify_cmd(vopts, /*quiet=*/false);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace e3d
