#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "emgsnn/cli.hpp"
#include "emgsnn/io.hpp"

using namespace emgsnn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "emgsnn_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(std::vector<std::string> args) { return run_cli(args); }

// Small model and dataset so train-backed commands stay subsecond.
std::vector<std::string> tiny_flags() {
    return {"--synth.channels", "3",  "--synth.classes",  "2", "--synth.actions_per_class", "6",
            "--snn.hidden",     "8",  "--snn.population", "4", "--snn.t_sim",               "10",
            "--snn.t_fix",      "800", "--snn.bin",       "80", "--train.epochs",           "3",
            "--train.batch_size", "8"};
}

std::vector<std::string> cat(std::vector<std::string> a, std::vector<std::string> b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::string capture_stdout(const std::vector<std::string>& args, int& code) {
    std::ostringstream sink;
    std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
    code = run_cli(args);
    std::cout.rdbuf(old);
    return sink.str();
}

}  // namespace

TEST_CASE("--help exits 0 and prints the module defaults") {
    int code = -1;
    const std::string help = capture_stdout({"--help"}, code);
    CHECK(code == 0);
    CHECK(help.find("--encode.delta") != std::string::npos);
    CHECK(help.find("0.025") != std::string::npos);   // encoder delta default
    CHECK(help.find("0.05") != std::string::npos);    // encoder theta_min default
    CHECK(help.find("--tad.u_th") != std::string::npos);
    CHECK(help.find("--train.learning_rate") != std::string::npos);
}

TEST_CASE("synth writes signal, labels and a manifest deterministically") {
    const fs::path a = fresh_dir("synth_a");
    const fs::path b = fresh_dir("synth_b");
    const std::vector<std::string> flags = {"synth", "--seed", "42", "--synth.classes", "2",
                                            "--synth.actions_per_class", "3",
                                            "--synth.channels", "2"};
    CHECK(run(cat(flags, {"--out", a.string()})) == 0);
    CHECK(run(cat(flags, {"--out", b.string()})) == 0);

    for (const char* name : {"signal.csv", "labels.csv", "run.json"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(a / name));
        CHECK(read_text(a / name) == read_text(b / name));
    }
    CHECK(!fs::exists(a / "distractors.csv"));

    const auto labels = read_labels(a / "labels.csv");
    CHECK(labels.size() == 6);
    const SignalBuffer sig = read_signal(a / "signal.csv");
    CHECK(sig.samples.rows() == 2);
    CHECK(sig.rate_hz == 2000.0);
}

TEST_CASE("synth lists distractors separately") {
    const fs::path dir = fresh_dir("synth_distractors");
    CHECK(run({"synth", "--seed", "7", "--synth.classes", "2", "--synth.actions_per_class", "2",
               "--synth.distractors", "2", "--out", dir.string()}) == 0);
    REQUIRE(fs::exists(dir / "distractors.csv"));
    const auto rows = read_labels(dir / "distractors.csv");
    CHECK(rows.size() == 2);
    for (const LabeledInterval& r : rows) CHECK(r.class_id == -1);
}

TEST_CASE("the manifest records the resolved config and output hashes") {
    const fs::path dir = fresh_dir("manifest");
    CHECK(run({"synth", "--seed", "9", "--synth.classes", "2", "--synth.actions_per_class", "2",
               "--tad.u_th", "3.5", "--out", dir.string()}) == 0);
    const json j = json::parse(read_text(dir / "run.json"));
    CHECK(j["version"] == 1);
    CHECK(j["command"] == "synth");
    CHECK(j["config"]["seed"] == "9");
    CHECK(j["config"]["tad.u_th"] == "3.5");
    CHECK(j["config"]["encode.n_trains"] == "10");
    CHECK(!j["config"].contains("threads"));
    CHECK(j["outputs"]["signal.csv"] == file_hash_hex(dir / "signal.csv"));
    CHECK(j["outputs"]["labels.csv"] == file_hash_hex(dir / "labels.csv"));
}

TEST_CASE("a config file fills in values and flags still win") {
    const fs::path dir = fresh_dir("config_file");
    const fs::path cfg = dir / "settings.ini";
    write_text(cfg, "tad.u_th=3.25\nencode.n_trains=5\n");

    CHECK(run({"synth", "--config", cfg.string(), "--seed", "3", "--synth.classes", "2",
               "--synth.actions_per_class", "2", "--out", (dir / "from_file").string()}) == 0);
    json j = json::parse(read_text(dir / "from_file" / "run.json"));
    CHECK(j["config"]["tad.u_th"] == "3.25");
    CHECK(j["config"]["encode.n_trains"] == "5");

    CHECK(run({"synth", "--config", cfg.string(), "--tad.u_th", "4.5", "--seed", "3",
               "--synth.classes", "2", "--synth.actions_per_class", "2",
               "--out", (dir / "flag_wins").string()}) == 0);
    j = json::parse(read_text(dir / "flag_wins" / "run.json"));
    CHECK(j["config"]["tad.u_th"] == "4.5");
    CHECK(j["config"]["encode.n_trains"] == "5");

    write_text(cfg, "no.such_key=1\n");
    CHECK(run({"synth", "--config", cfg.string(), "--out", (dir / "bad").string()}) == 1);
}

TEST_CASE("validation, parse and I/O failures map to distinct exit codes") {
    const fs::path dir = fresh_dir("exit_codes");
    CHECK(run({"synth", "--synth.classes", "0", "--out", dir.string()}) == 1);
    CHECK(run({"synth", "--bogus-flag", "3", "--out", dir.string()}) == 1);
    CHECK(run({"synth"}) == 1);  // --out is required
    CHECK(run({"synth", "--out", "/dev/null/nested"}) == 2);
}

TEST_CASE("the threads flag never changes results") {
    const fs::path one = fresh_dir("threads_one");
    const fs::path four = fresh_dir("threads_four");
    const std::vector<std::string> flags = {"synth", "--seed", "5", "--synth.classes", "2",
                                            "--synth.actions_per_class", "2"};
    CHECK(run(cat(flags, {"--threads", "1", "--out", one.string()})) == 0);
    CHECK(run(cat(flags, {"--threads", "4", "--out", four.string()})) == 0);
    CHECK(read_text(one / "signal.csv") == read_text(four / "signal.csv"));
    CHECK(read_text(one / "run.json") == read_text(four / "run.json"));
}

TEST_CASE("calibrate fits a profile from recorded files") {
    const fs::path dir = fresh_dir("calibrate");
    CHECK(run({"synth", "--seed", "11", "--synth.actions_per_class", "0", "--synth.duration_s",
               "5", "--out", (dir / "neutral").string()}) == 0);
    CHECK(run({"synth", "--seed", "12", "--synth.actions_per_class", "6", "--synth.gap_ms_lo",
               "30", "--synth.gap_ms_hi", "60", "--out", (dir / "reference").string()}) == 0);

    const fs::path profile = dir / "profile.json";
    CHECK(run({"calibrate", "--neutral", (dir / "neutral" / "signal.csv").string(),
               "--reference", (dir / "reference" / "signal.csv").string(),
               "--out", profile.string()}) == 0);
    const CalibrationProfile p = read_profile(profile);
    REQUIRE(p.theta_min.has_value());
    CHECK(*p.theta_min > 0.0);
    CHECK(*p.theta_min <= 1.0);
    CHECK(p.median_per_channel.size() == 4);

    const json manifest = json::parse(read_text(dir / "run.json"));
    CHECK(manifest["command"] == "calibrate");
    CHECK(manifest["inputs"].size() == 2);

    CHECK(run({"calibrate", "--neutral", (dir / "missing.csv").string(),
               "--reference", (dir / "reference" / "signal.csv").string(),
               "--out", profile.string()}) == 2);
}

TEST_CASE("encode needs calibration and then reruns byte-identically") {
    const fs::path dir = fresh_dir("encode");
    CHECK(run({"synth", "--seed", "13", "--synth.classes", "2", "--synth.actions_per_class", "2",
               "--out", (dir / "data").string()}) == 0);
    CHECK(run({"synth", "--seed", "14", "--synth.actions_per_class", "0", "--synth.duration_s",
               "5", "--out", (dir / "neutral").string()}) == 0);
    CHECK(run({"synth", "--seed", "15", "--synth.actions_per_class", "6", "--synth.gap_ms_lo",
               "30", "--synth.gap_ms_hi", "60", "--out", (dir / "reference").string()}) == 0);
    const std::string signal = (dir / "data" / "signal.csv").string();
    const std::string neutral = (dir / "neutral" / "signal.csv").string();
    const std::string reference = (dir / "reference" / "signal.csv").string();

    CHECK(run({"encode", "--in", signal, "--out", (dir / "spikes.txt").string()}) == 1);

    CHECK(run({"encode", "--in", signal, "--calibrate-from", neutral, reference,
               "--out", (dir / "spikes.txt").string()}) == 0);
    const SpikeTensor spikes = read_spikes(dir / "spikes.txt");
    CHECK(spikes.channels == 4);
    CHECK(spikes.trains == 10);

    CHECK(run({"calibrate", "--neutral", neutral, "--reference", reference,
               "--out", (dir / "profile.json").string()}) == 0);
    CHECK(run({"encode", "--in", signal, "--profile", (dir / "profile.json").string(),
               "--out", (dir / "spikes_b.txt").string()}) == 0);
    CHECK(read_text(dir / "spikes.txt") == read_text(dir / "spikes_b.txt"));

    CHECK(run({"encode", "--in", signal, "--profile", (dir / "profile.json").string(),
               "--ablate", "normal-delta", "--out", (dir / "spikes_nd.txt").string()}) == 0);
    CHECK(read_spikes(dir / "spikes_nd.txt").trains == 1);

    CHECK(run({"encode", "--in", signal, "--profile", (dir / "profile.json").string(),
               "--ablate", "sideways", "--out", (dir / "x.txt").string()}) == 1);
}

TEST_CASE("detect reports segments, op counts and optional metrics") {
    const fs::path dir = fresh_dir("detect");
    CHECK(run({"synth", "--seed", "21", "--synth.classes", "2", "--synth.actions_per_class", "3",
               "--out", (dir / "data").string()}) == 0);
    CHECK(run({"synth", "--seed", "22", "--synth.actions_per_class", "0", "--synth.duration_s",
               "5", "--out", (dir / "neutral").string()}) == 0);
    CHECK(run({"synth", "--seed", "23", "--synth.actions_per_class", "6", "--synth.gap_ms_lo",
               "30", "--synth.gap_ms_hi", "60", "--out", (dir / "reference").string()}) == 0);
    const std::string signal = (dir / "data" / "signal.csv").string();
    const std::string labels = (dir / "data" / "labels.csv").string();
    const std::string neutral = (dir / "neutral" / "signal.csv").string();
    const std::string reference = (dir / "reference" / "signal.csv").string();

    CHECK(run({"detect", "--in", signal, "--calibrate-from", neutral, reference, "--labels",
               labels, "--out", (dir / "tad.json").string()}) == 0);
    json j = json::parse(read_text(dir / "tad.json"));
    CHECK(j["method"] == "tad-lif");
    CHECK(j["segments"].is_array());
    CHECK(j["metrics"].contains("recall"));
    CHECK(j["metrics"].contains("precision"));
    CHECK(j["metrics"]["op_counts"]["multiplies"].get<std::uint64_t>() > 0);

    CHECK(run({"detect", "--in", signal, "--calibrate-from", neutral, reference,
               "--out", (dir / "tad_plain.json").string()}) == 0);
    j = json::parse(read_text(dir / "tad_plain.json"));
    CHECK(j["op_counts"].contains("additions"));
    CHECK(!j.contains("metrics"));

    CHECK(run({"detect", "--in", signal, "--method", "amp-threshold",
               "--out", (dir / "amp.json").string()}) == 0);
    j = json::parse(read_text(dir / "amp.json"));
    CHECK(j["method"] == "amp-threshold");

    CHECK(run({"detect", "--in", signal, "--method", "psychic",
               "--out", (dir / "x.json").string()}) == 1);
}

TEST_CASE("train writes model, profile and log, and infer consumes them") {
    const fs::path dir = fresh_dir("train_infer");
    int code = -1;
    const std::string out = capture_stdout(
        cat({"train", "--seed", "31", "--out", (dir / "fit").string()}, tiny_flags()), code);
    REQUIRE(code == 0);
    CHECK(out.find("final test accuracy") != std::string::npos);
    REQUIRE(fs::exists(dir / "fit" / "model.json"));
    REQUIRE(fs::exists(dir / "fit" / "profile.json"));
    const SnnModel model = read_model(dir / "fit" / "model.json");
    CHECK(model.hidden_dim == 8);
    CHECK(model.population == 4);

    const std::string log = read_text(dir / "fit" / "train_log.csv");
    CHECK(log.find("epoch,mean_loss,train_acc,test_acc") == 0);
    CHECK(std::count(log.begin(), log.end(), '\n') == 4);  // header + 3 epochs

    CHECK(run(cat({"synth", "--seed", "32", "--out", (dir / "data").string()}, tiny_flags())) == 0);
    CHECK(run(cat(cat({"infer", "--in", (dir / "data" / "signal.csv").string()}, tiny_flags()),
                  {"--profile", (dir / "fit" / "profile.json").string(),
                   "--model", (dir / "fit" / "model.json").string(),
                   "--out", (dir / "infer.json").string()})) == 0);
    const json j = json::parse(read_text(dir / "infer.json"));
    CHECK(j["predictions"].is_array());
    for (const json& p : j["predictions"]) {
        CHECK(p["class_id"].get<int>() >= 0);
        CHECK(p["class_id"].get<int>() < 2);
    }
    CHECK(j["energy"]["stages"]["encode"]["ac"].get<std::uint64_t>() > 0);
}

TEST_CASE("infer on an actionless stream spends nothing past encode and detect") {
    const fs::path dir = fresh_dir("infer_quiet");
    int code = -1;
    capture_stdout(cat({"train", "--seed", "41", "--out", (dir / "fit").string()}, tiny_flags()),
                   code);
    REQUIRE(code == 0);
    CHECK(run({"synth", "--seed", "43", "--synth.channels", "3", "--synth.actions_per_class",
               "0", "--synth.duration_s", "4", "--out", (dir / "quiet").string()}) == 0);

    CHECK(run(cat(cat({"infer", "--in", (dir / "quiet" / "signal.csv").string()}, tiny_flags()),
                  {"--profile", (dir / "fit" / "profile.json").string(),
                   "--model", (dir / "fit" / "model.json").string(),
                   "--out", (dir / "quiet.json").string()})) == 0);
    const json j = json::parse(read_text(dir / "quiet.json"));
    CHECK(j["predictions"].empty());
    CHECK(j["energy"]["stages"]["fc_in"]["mac"] == 0);
    CHECK(j["energy"]["stages"]["fc_out"]["ac"] == 0);
    CHECK(j["energy"]["stages"]["lif_hidden"]["mac"] == 0);
    CHECK(j["energy"]["stages"]["encode"]["ac"].get<std::uint64_t>() > 0);
}

TEST_CASE("missing pipeline state exits with the state code") {
    const fs::path dir = fresh_dir("state_errors");
    CHECK(run(cat({"synth", "--seed", "51", "--out", (dir / "data").string()}, tiny_flags())) == 0);
    const std::string signal = (dir / "data" / "signal.csv").string();

    CHECK(run({"infer", "--in", signal, "--profile", (dir / "nope.json").string(),
               "--model", (dir / "nope_model.json").string(),
               "--out", (dir / "r.json").string()}) == 3);

    write_text(dir / "old_profile.json",
               "{\"version\": 2, \"alpha\": 4.0, \"median_per_channel\": [1.0]}\n");
    CHECK(run({"encode", "--in", signal, "--profile", (dir / "old_profile.json").string(),
               "--out", (dir / "s.txt").string()}) == 3);
}

TEST_CASE("bench emits one JSON report covering detection, accuracy and energy") {
    const fs::path dir = fresh_dir("bench");
    const std::vector<std::string> bench_flags = {
        "bench", "--seed", "61", "--bench.actions_per_class", "10", "--bench.duration_s", "30",
        "--bench.distractors", "5", "--out", (dir / "bench.json").string()};
    CHECK(run(cat(bench_flags, tiny_flags())) == 0);

    const json j = json::parse(read_text(dir / "bench.json"));
    CHECK(j["version"] == 1);
    CHECK(j["ablation"] == "none");
    CHECK(j["detection"]["tad_lif"].contains("recall"));
    CHECK(j["detection"]["tad_lif"].contains("distractor_emissions"));
    CHECK(j["detection"]["spike_threshold"].contains("precision"));
    CHECK(j["detection"]["amp_threshold"].contains("segments"));
    CHECK(j["classification"].contains("test_accuracy"));
    CHECK(j["classification"]["train_log"].size() == 3);
    CHECK(j["energy"]["inferences"].get<std::uint64_t>() > 0);
    CHECK(j["energy"].contains("mean_total_pj"));

    const json manifest = json::parse(read_text(dir / "run.json"));
    CHECK(manifest["command"] == "bench");
    CHECK(manifest["args"]["ablate"] == "none");
}
