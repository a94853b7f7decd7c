#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "listen/harness.hpp"
#include "listen/oracle.hpp"

using namespace listen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("listen_harness_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

std::string slurp(const fs::path& path) {
    std::ifstream stream(path);
    std::stringstream buffer;
    buffer << stream.rdbuf();
    return buffer.str();
}

ExperimentPlan small_plan(const fs::path& out) {
    ExperimentPlan plan;
    plan.datasets = {helpers::linear_synthetic(25, 3, 5, 100),
                     helpers::linear_synthetic(30, 3, 6, 200)};
    plan.algorithms = {AlgorithmKind::ListenU, AlgorithmKind::BaselineRandom};
    plan.oracle = OracleChoice::ScriptedLinear;
    plan.replications = 3;
    plan.iterations = 4;
    plan.base_seed = 7;
    plan.out_dir = out;
    return plan;
}

}  // namespace

TEST_CASE("expected random NAR matches brute-force enumeration") {
    const std::size_t N = 20;
    const std::size_t m = 6;
    double total = 0.0;
    for (std::size_t rank = 1; rank <= m; ++rank) total += static_cast<double>(rank) / N;
    total += (N - m) * (unranked_rank(N, m) / N);
    CHECK(expected_random_nar(N, m) == doctest::Approx(total / N).epsilon(1e-12));
}

TEST_CASE("atomic_write leaves no temp files behind") {
    TempDir dir;
    const auto target = dir.path / "nested" / "file.txt";
    atomic_write(target, "hello");
    CHECK(slurp(target) == "hello");
    int entries = 0;
    for (const auto& entry : fs::directory_iterator(target.parent_path())) {
        (void)entry;
        ++entries;
    }
    CHECK(entries == 1);
    atomic_write(target, "replaced");
    CHECK(slurp(target) == "replaced");
}

TEST_CASE("trace paths encode dataset, algorithm and replication") {
    const auto path = cell_trace_path("/out", "flights", "listen_u@base", 3);
    CHECK(path.string() == "/out/traces/flights__listen_u@base__rep3.jsonl");
}

TEST_CASE("oracle choice names round trip") {
    for (auto choice : {OracleChoice::ScriptedLinear, OracleChoice::ScriptedFixedTrue,
                        OracleChoice::LlmHttp}) {
        CHECK(oracle_choice_from_string(to_string(choice)) == choice);
    }
    CHECK_THROWS_AS(oracle_choice_from_string("psychic"), ConfigError);
}

TEST_CASE("estimated oracle calls counts only oracle-backed cells") {
    ExperimentPlan plan = small_plan("/unused");
    // One oracle-backed algorithm: 2 datasets x 3 reps x 4 iterations.
    CHECK(estimated_oracle_calls(plan) == 2 * 3 * 4);
    plan.ablation = true;
    CHECK(estimated_oracle_calls(plan) == 2 * 2 * 3 * 4);
}

TEST_CASE("a live-LLM plan refuses to run unconfirmed") {
    TempDir dir;
    auto plan = small_plan(dir.path);
    plan.oracle = OracleChoice::LlmHttp;
    plan.confirm_llm_spend = false;
    CHECK_THROWS_AS(run_experiment(plan), ConfigError);
}

TEST_CASE("experiments run the full grid with per-replication seeds") {
    TempDir dir;
    const auto plan = small_plan(dir.path);
    const auto bundle = run_experiment(plan);
    CHECK(bundle.cells.size() == 2 * 2 * 3);
    CHECK(bundle.failed_cells == 0);
    std::set<std::uint64_t> seeds;
    for (const auto& cell : bundle.cells) {
        CHECK(cell.seed == plan.base_seed + cell.replication);
        CHECK(cell.selected_ids.size() == 4);
        CHECK(cell.nar.size() == 4);
        seeds.insert(cell.seed);
    }
    CHECK(seeds.size() == 3);
    for (const auto& summary : bundle.datasets) {
        CHECK(summary.concordance.num_samples == plan.concordance_samples);
        CHECK(summary.fit.has_value());
    }
}

TEST_CASE("reruns resume from existing traces and reproduce bytes exactly") {
    TempDir dir;
    const auto plan = small_plan(dir.path);
    run_experiment(plan);
    std::map<std::string, std::string> before;
    for (const auto& entry : fs::directory_iterator(dir.path / "traces")) {
        before[entry.path().filename().string()] = slurp(entry.path());
    }
    REQUIRE(before.size() == 12);

    const auto resumed = run_experiment(plan);
    int loaded = 0;
    for (const auto& cell : resumed.cells) {
        if (cell.loaded_from_disk) ++loaded;
    }
    CHECK(loaded == 12);
    for (const auto& entry : fs::directory_iterator(dir.path / "traces")) {
        CHECK(slurp(entry.path()) == before[entry.path().filename().string()]);
    }

    // A fresh output directory reproduces the same bytes from scratch.
    TempDir fresh;
    auto plan_fresh = small_plan(fresh.path);
    run_experiment(plan_fresh);
    for (const auto& entry : fs::directory_iterator(fresh.path / "traces")) {
        CHECK(slurp(entry.path()) == before[entry.path().filename().string()]);
    }
}

TEST_CASE("reports aggregate every cell and re-emit byte-identically") {
    TempDir dir;
    const auto plan = small_plan(dir.path);
    const auto bundle = run_experiment(plan);
    emit_reports(bundle);
    const auto aggregate = slurp(dir.path / "aggregate.csv");
    const auto concordance_table = slurp(dir.path / "concordance.csv");
    CHECK_FALSE(aggregate.empty());

    // Header plus datasets x algorithms x iterations x metrics (nar + aus).
    int lines = 0;
    for (char c : aggregate) {
        if (c == '\n') ++lines;
    }
    CHECK(lines == 1 + 2 * 2 * 4 * 2);

    emit_reports(bundle);
    CHECK(slurp(dir.path / "aggregate.csv") == aggregate);
    CHECK(slurp(dir.path / "concordance.csv") == concordance_table);
    CHECK(fs::exists(dir.path / "metadata.json"));
}

TEST_CASE("random-baseline NAR approaches its closed-form expectation") {
    TempDir dir;
    ExperimentPlan plan;
    plan.datasets = {helpers::linear_synthetic(40, 3, 8, 300)};
    plan.algorithms = {AlgorithmKind::BaselineRandom};
    plan.replications = 60;
    plan.iterations = 10;
    plan.base_seed = 11;
    plan.out_dir = dir.path;
    plan.compute_aus = false;
    const auto bundle = run_experiment(plan);

    double sum = 0.0;
    int count = 0;
    for (const auto& cell : bundle.cells) {
        for (double nar : cell.nar) {
            sum += nar;
            ++count;
        }
    }
    const double expected = expected_random_nar(40, 8);
    CHECK(sum / count == doctest::Approx(expected).epsilon(0.08));
}

TEST_CASE("ablation twins share seeds and differ only in the priorities section") {
    TempDir dir;
    ExperimentPlan plan;
    plan.datasets = {helpers::linear_synthetic(20, 3, 5, 400)};
    plan.algorithms = {AlgorithmKind::ListenU};
    plan.replications = 2;
    plan.iterations = 3;
    plan.base_seed = 5;
    plan.ablation = true;
    plan.out_dir = dir.path;
    const auto bundle = run_experiment(plan);
    REQUIRE(bundle.cells.size() == 4);  // 2 reps x {full, base}

    for (int r = 0; r < 2; ++r) {
        const CellResult* full = nullptr;
        const CellResult* base = nullptr;
        for (const auto& cell : bundle.cells) {
            if (cell.replication != r) continue;
            (cell.ablation ? base : full) = &cell;
        }
        REQUIRE(full != nullptr);
        REQUIRE(base != nullptr);
        CHECK(full->seed == base->seed);

        const auto full_log = Transcript::from_jsonl(slurp(cell_transcript_path(
            dir.path, full->dataset, full->algorithm_label, full->replication)));
        const auto base_log = Transcript::from_jsonl(slurp(cell_transcript_path(
            dir.path, base->dataset, base->algorithm_label, base->replication)));
        REQUIRE(full_log.entries.size() == base_log.entries.size());
        CHECK(strip_priorities_section(full_log.entries[0].prompt) ==
              base_log.entries[0].prompt);
        CHECK(full_log.entries[0].prompt != base_log.entries[0].prompt);
    }
}

TEST_CASE("per-cell failures are recorded without aborting the grid") {
    TempDir dir;
    ExperimentPlan plan;
    // A dataset without generator weights cannot back a scripted oracle.
    auto bad = helpers::linear_synthetic(15, 2, 3, 500);
    bad.name = "no_weights";
    bad.generator.reset();
    plan.datasets = {bad};
    plan.algorithms = {AlgorithmKind::ListenU, AlgorithmKind::BaselineRandom};
    plan.replications = 2;
    plan.iterations = 2;
    plan.out_dir = dir.path;
    plan.compute_aus = false;
    const auto bundle = run_experiment(plan);
    CHECK(bundle.failed_cells == 2);
    int ok_cells = 0;
    for (const auto& cell : bundle.cells) {
        if (cell.failed) {
            CHECK_FALSE(cell.error.empty());
            CHECK_FALSE(fs::exists(cell_trace_path(dir.path, cell.dataset,
                                                   cell.algorithm_label, cell.replication)));
        } else {
            ++ok_cells;
        }
    }
    CHECK(ok_cells == 2);
}
