// End-to-end checks of the command line tool. Each case drives the installed
// binary through std::system with stdout/stderr captured to files, so these
// tests exercise argument parsing, exit codes and the on-disk artifacts
// exactly as a user would see them.

#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef _WIN32
#include <sys/wait.h>
#endif

// Absolute path of the tracecast binary, injected by the build.
#ifndef TRACECAST_CLI_PATH
#define TRACECAST_CLI_PATH "./tracecast"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
}

// Runs the CLI with the given argument string, capturing both streams.
CliResult run_cli(const std::string& args, const fs::path& scratch) {
    fs::create_directories(scratch);
    fs::path out_file = scratch / "stdout.txt";
    fs::path err_file = scratch / "stderr.txt";
    std::string cmd = std::string(TRACECAST_CLI_PATH) + " " + args + " >" +
                      out_file.string() + " 2>" + err_file.string();
    int status = std::system(cmd.c_str());

    CliResult r;
#ifdef _WIN32
    r.code = status;
#else
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

// A three-variable dataset small enough that a full sweep finishes in a
// couple of seconds.
std::string tiny_config(const std::string& out_dir) {
    return R"({
        "dataset": {
            "name": "tiny",
            "seed": 5,
            "samples_per_run": 60,
            "run_count": 3,
            "noise_sigma": 0.01,
            "mix": {"step_like": 2, "smooth_noisy": 1},
            "anomalies": [
                {"variable": "step_1", "category": "amplitude_shift",
                 "segment": [20, 40], "delta": 0.5}
            ]
        },
        "model": {"kind": "gnn", "embed_dim": 4, "top_k": 1, "top_k_list": [1]},
        "training": {"epochs": 2, "batch": 32, "lr": 0.01},
        "detection": {"b": 1, "th": 0.1},
        "windows": [[10, 3]],
        "seed": 42,
        "out_dir": ")" +
           out_dir + R"("
    })";
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("running without a subcommand is a usage error") {
    fs::path dir = fresh_dir("cli_noargs");
    CliResult r = run_cli("", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("unknown subcommands and flags are usage errors") {
    fs::path dir = fresh_dir("cli_unknown");
    write_file(dir / "cfg.json", tiny_config((dir / "out").string()));

    CliResult sub = run_cli("frobnicate --config " + (dir / "cfg.json").string(), dir);
    CHECK(sub.code == 1);

    CliResult flag = run_cli(
        "synth --config " + (dir / "cfg.json").string() + " --bogus", dir);
    CHECK(flag.code == 1);
    CHECK(flag.err.find("error:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("--help exits cleanly and lists the subcommands") {
    fs::path dir = fresh_dir("cli_help");
    CliResult r = run_cli("--help", dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("Forecast-based anomaly prediction") != std::string::npos);
    CHECK(r.out.find("synth") != std::string::npos);
    CHECK(r.out.find("bench") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("synth writes the raw trace and its descriptor") {
    fs::path dir = fresh_dir("cli_synth");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, tiny_config((dir / "out").string()));

    CliResult r = run_cli("synth --config " + cfg.string(), dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("180x3") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "tiny" / "data" / "trace_raw.csv"));
    CHECK(fs::exists(dir / "out" / "tiny" / "data" / "descriptor.json"));

    // --out wins over the configured directory
    CliResult moved = run_cli("synth --config " + cfg.string() + " --out " +
                                  (dir / "elsewhere").string(),
                              dir);
    CHECK(moved.code == 0);
    CHECK(fs::exists(dir / "elsewhere" / "tiny" / "data" / "trace_raw.csv"));
    fs::remove_all(dir);
}

TEST_CASE("complexity tabulates parameter counts") {
    fs::path dir = fresh_dir("cli_complexity");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, tiny_config((dir / "out").string()));

    CliResult r = run_cli("complexity --config " + cfg.string(), dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("nbeats/var") != std::string::npos);

    const std::string csv = slurp(dir / "out" / "complexity.csv");
    CHECK(csv.find("lookback,horizon,nbeats_per_variable,nbeats_total,gnn_total,"
                   "ratio") == 0);
    CHECK(csv.find("\n10,3,104066,") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("detect without checkpoints points at the train subcommand") {
    fs::path dir = fresh_dir("cli_detect_untrained");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, tiny_config((dir / "out").string()));

    CliResult r = run_cli("detect --config " + cfg.string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("missing checkpoint") != std::string::npos);
    CHECK(r.err.find("run the train subcommand first") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("a bad config is rejected with the offending path") {
    fs::path dir = fresh_dir("cli_badcfg");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, R"({"dataset": {"mix": {"step_like": 2}}, "detection": {"tresh": 1}})");

    CliResult r = run_cli("synth --config " + cfg.string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("config error:") != std::string::npos);
    CHECK(r.err.find("$.detection.tresh") != std::string::npos);

    CliResult gone = run_cli("synth --config " + (dir / "absent.json").string(), dir);
    CHECK(gone.code == 2);
    fs::remove_all(dir);
}

TEST_CASE("bench sweeps, caches, and feeds detect and eval") {
    fs::path dir = fresh_dir("cli_bench");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, tiny_config((dir / "out").string()));

    CliResult first = run_cli("bench --config " + cfg.string(), dir);
    CHECK(first.code == 0);
    CHECK(first.out.find(" trained") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "results.csv"));
    CHECK(fs::exists(dir / "out" / "complexity.csv"));
    CHECK(fs::exists(dir / "out" / "ablation.csv"));
    CHECK(fs::exists(dir / "out" / "tiny" / "gnn" / "10x3" / "k1" / "report.csv"));

    // second run reuses the checkpoint
    CliResult again = run_cli("bench --config " + cfg.string(), dir);
    CHECK(again.code == 0);
    CHECK(again.out.find(" cached") != std::string::npos);

    // detect works from the cached model
    CliResult detect = run_cli("detect --config " + cfg.string(), dir);
    CHECK(detect.code == 0);
    CHECK(detect.out.find("[detect] tiny gnn 10x3") != std::string::npos);

    // eval recomputes metrics from the written report
    CliResult eval = run_cli("eval --config " + cfg.string(), dir);
    CHECK(eval.code == 0);
    CHECK(eval.out.find("[eval] tiny gnn 10x3 k1") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("eval with no reports on disk fails") {
    fs::path dir = fresh_dir("cli_eval_empty");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, tiny_config((dir / "out").string()));

    CliResult r = run_cli("eval --config " + cfg.string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("no report.csv found") != std::string::npos);
    fs::remove_all(dir);
}

} // TEST_SUITE
