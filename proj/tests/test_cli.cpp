// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

using namespace vlsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("vlsim_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        fs::path p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
    std::string read(const std::string& name) const {
        std::ifstream in(path / name, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }
};

int run(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

const char* kLinearSamples = "seq_len,runtime_us\n1,1\n100000,100000\n";

std::string base_config(const std::string& lut_path) {
    return std::string("{\n") +
           "  \"spec_version\": 1,\n"
           "  \"vae\": \"seaweed48x\",\n"
           "  \"patch\": {\"p_t\": 1, \"p_h\": 2, \"p_w\": 2},\n"
           "  \"item_count\": 16,\n"
           "  \"seed\": 7,\n"
           "  \"capacity_tokens\": 250000,\n"
           "  \"ranks\": 4,\n"
           "  \"time_source\": {\"kind\": \"lut\", \"path\": \"" + lut_path + "\"}\n"
           "}\n";
}

}  // namespace

TEST_CASE("lut fit writes the fitted table and reports pooling") {
    TempDir dir("lutfit");
    std::string samples = dir.file("samples.csv", "seq_len,runtime_us\n100,10\n200,8\n300,30\n");
    std::string out_text;
    int code = run({"lut", "fit", samples, "--out", (dir.path / "out").string()}, &out_text);
    CHECK(code == 0);
    CHECK(dir.read("out/lut.csv") == "seq_len,runtime_us\n100,9\n200,9\n300,30\n");
    CHECK(out_text.find("breakpoints: 3") != std::string::npos);
    CHECK(out_text.find("max pooling adjustment: 1") != std::string::npos);
}

TEST_CASE("lut fit rejects a missing header naming the expectation") {
    TempDir dir("lutbad");
    std::string samples = dir.file("samples.csv", "100,10\n200,20\n");
    std::string err_text;
    int code = run({"lut", "fit", samples, "--out", (dir.path / "out").string()}, nullptr,
                   &err_text);
    CHECK(code == 1);
    CHECK(err_text.find("seq_len,runtime_us") != std::string::npos);
}

TEST_CASE("workload gen is deterministic and honors --seed") {
    TempDir dir("gen");
    std::string lut = dir.file("samples.csv", kLinearSamples);
    std::string cfg = dir.file("run.json", base_config("samples.csv"));

    CHECK(run({"workload", "gen", "--config", cfg, "--out", (dir.path / "a").string()}) == 0);
    CHECK(run({"workload", "gen", "--config", cfg, "--out", (dir.path / "b").string()}) == 0);
    CHECK(dir.read("a/workload.csv") == dir.read("b/workload.csv"));
    CHECK(run({"workload", "gen", "--config", cfg, "--seed", "8", "--out",
               (dir.path / "c").string()}) == 0);
    CHECK(dir.read("a/workload.csv") != dir.read("c/workload.csv"));
    CHECK(dir.read("a/workload.csv").starts_with(
        "id,modality,task,stage,frames,height,width,fps,seq_len\n"));
}

TEST_CASE("unknown config keys are rejected before any output") {
    TempDir dir("badkey");
    dir.file("samples.csv", kLinearSamples);
    std::string cfg = dir.file("run.json",
                               "{\"spec_version\": 1, \"time_source\": {\"kind\": \"lut\", "
                               "\"path\": \"samples.csv\"}, \"capactiy_tokens\": 3}");
    std::string err_text;
    int code = run({"simulate", "--config", cfg, "--out", (dir.path / "out").string()}, nullptr,
                   &err_text);
    CHECK(code == 1);
    CHECK(err_text.find("capactiy_tokens") != std::string::npos);
    CHECK(!fs::exists(dir.path / "out" / "report.json"));
}

TEST_CASE("context parallel degree must divide ranks") {
    TempDir dir("pdiv");
    dir.file("samples.csv", kLinearSamples);
    std::string cfg = dir.file(
        "run.json",
        "{\"spec_version\": 1, \"ranks\": 4, \"context_parallel\": 3, "
        "\"time_source\": {\"kind\": \"lut\", \"path\": \"samples.csv\"}}");
    std::string err_text;
    int code = run({"simulate", "--config", cfg, "--out", (dir.path / "out").string()}, nullptr,
                   &err_text);
    CHECK(code == 1);
    CHECK(!fs::exists(dir.path / "out" / "report.json"));
}

TEST_CASE("simulate produces identical bytes on re-run") {
    TempDir dir("simdet");
    dir.file("samples.csv", kLinearSamples);
    std::string cfg = dir.file("run.json", base_config("samples.csv"));

    CHECK(run({"simulate", "--config", cfg, "--trace", "--out",
               (dir.path / "r1").string()}) == 0);
    CHECK(run({"simulate", "--config", cfg, "--trace", "--out",
               (dir.path / "r2").string()}) == 0);
    CHECK(dir.read("r1/report.json") == dir.read("r2/report.json"));
    CHECK(dir.read("r1/trace.json") == dir.read("r2/trace.json"));
    CHECK(dir.read("r1/report.json").find("\"makespan_us\"") != std::string::npos);
    CHECK(dir.read("r1/trace.json").find("\"traceEvents\"") != std::string::npos);
}

TEST_CASE("pack and balance emit both tabular formats") {
    TempDir dir("fmt");
    dir.file("samples.csv", kLinearSamples);
    std::string cfg = dir.file("run.json", base_config("samples.csv"));

    CHECK(run({"pack", "--config", cfg, "--out", (dir.path / "p").string()}) == 0);
    CHECK(dir.read("p/microbatches.json").find("total_tokens") != std::string::npos);
    CHECK(run({"pack", "--config", cfg, "--format", "csv", "--out",
               (dir.path / "pc").string()}) == 0);
    CHECK(dir.read("pc/microbatches.csv").starts_with("id,total_tokens,capacity,items\n"));

    CHECK(run({"balance", "--config", cfg, "--out", (dir.path / "b").string()}) == 0);
    CHECK(dir.read("b/assignment.json").find("\"ranks\": 4") != std::string::npos);
    CHECK(run({"balance", "--config", cfg, "--format", "csv", "--out",
               (dir.path / "bc").string()}) == 0);
    CHECK(dir.read("bc/assignment.csv").starts_with("rank,runtime_us,microbatches\n"));
}

TEST_CASE("cost model simulate reports mfu in (0, 1]") {
    TempDir dir("mfu");
    std::string cfg = dir.file(
        "run.json",
        "{\n"
        "  \"spec_version\": 1,\n"
        "  \"vae\": \"seaweed48x\",\n"
        "  \"patch\": {\"p_t\": 1, \"p_h\": 2, \"p_w\": 2},\n"
        "  \"item_count\": 8,\n"
        "  \"seed\": 7,\n"
        "  \"capacity_tokens\": 120000,\n"
        "  \"ranks\": 2,\n"
        "  \"cluster\": {\"peak_flops_per_rank\": 9.89e14, "
        "\"link_bandwidth_bytes_per_s\": 9e11, \"link_latency_s\": 2e-6},\n"
        "  \"time_source\": {\"kind\": \"cost_model\", \"model\": \"seaweed7b\", "
        "\"achieved_efficiency\": 0.5}\n"
        "}\n");
    std::string out_text;
    CHECK(run({"simulate", "--config", cfg, "--out", (dir.path / "out").string()},
              &out_text) == 0);
    std::string report = dir.read("out/report.json");
    auto pos = report.find("\"mfu\": ");
    REQUIRE(pos != std::string::npos);
    double mfu_value = std::stod(report.substr(pos + 7));
    CHECK(mfu_value > 0.0);
    CHECK(mfu_value <= 1.0);
}

TEST_CASE("compare: linear lut makes seqlen and runtime greedy agree") {
    TempDir dir("cmp");
    dir.file("samples.csv", kLinearSamples);
    std::string cfg = dir.file("run.json", base_config("samples.csv"));
    std::string out_text;
    CHECK(run({"compare", "--config", cfg, "--format", "csv", "--out",
               (dir.path / "out").string()}, &out_text) == 0);
    std::string table = dir.read("out/compare.csv");
    CHECK(table.starts_with("strategy,makespan_us,imbalance\n"));

    // parse the two greedy rows and compare makespans
    auto grab = [&](const std::string& name) {
        auto pos = table.find(name + ",");
        REQUIRE(pos != std::string::npos);
        return std::stoll(table.substr(pos + name.size() + 1));
    };
    CHECK(grab("seqlen_greedy") == grab("runtime_greedy"));
    CHECK(grab("round_robin") >= grab("runtime_greedy"));
}

TEST_CASE("compare on a single rank makes all strategies identical") {
    std::vector<MicroBatch> mbs;
    for (std::uint64_t i = 0; i < 5; ++i) {
        MicroBatch mb;
        mb.id = i;
        mb.items = {i};
        mb.total_tokens = static_cast<std::int64_t>(10 * (i + 1));
        mb.capacity = 100;
        mbs.push_back(mb);
    }
    RuntimeLut lut;
    lut.points = {{1, 1.0}, {100, 100.0}};
    auto rows = compare_strategies(mbs, 1, lut);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].makespan_us == doctest::Approx(rows[1].makespan_us));
    CHECK(rows[1].makespan_us == doctest::Approx(rows[2].makespan_us));
}

TEST_CASE("mlac plan subcommand") {
    TempDir dir("mlacplan");
    dir.file("samples.csv", kLinearSamples);
    dir.file("acts.csv",
             "id,flops,bytes,compute_bound,is_module_input\n"
             "0,0,1024,0,1\n"
             "1,500000,64,1,0\n"
             "2,1000,2048,0,0\n");
    std::string cfg = dir.file(
        "run.json",
        "{\n"
        "  \"spec_version\": 1,\n"
        "  \"time_source\": {\"kind\": \"lut\", \"path\": \"samples.csv\"},\n"
        "  \"mlac\": {\"graph_path\": \"acts.csv\", \"gpu_budget_bytes\": 64,\n"
        "             \"bandwidths\": {\"gpu_cpu_bytes_per_s\": 1e7, "
        "\"cpu_disk_bytes_per_s\": 1e7, \"compute_flops_per_s\": 1e6}}\n"
        "}\n");
    std::string out_text;
    CHECK(run({"mlac", "plan", "--config", cfg, "--out", (dir.path / "out").string()},
              &out_text) == 0);
    std::string plan = dir.read("out/mlac_plan.csv");
    CHECK(plan.starts_with("id,decision\n"));
    CHECK(plan.find("1,keep_gpu") != std::string::npos);  // compute-bound node fits the budget
    CHECK(out_text.find("gpu_resident_bytes: 64") != std::string::npos);
}

TEST_CASE("missing required files fail validation") {
    TempDir dir("missing");
    std::string cfg = dir.file(
        "run.json",
        "{\"spec_version\": 1, \"time_source\": {\"kind\": \"lut\", \"path\": \"nope.csv\"}}");
    std::string err_text;
    CHECK(run({"simulate", "--config", cfg, "--out", (dir.path / "out").string()}, nullptr,
              &err_text) == 1);
    CHECK(err_text.find("nope.csv") != std::string::npos);
}
