#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "dynoframe/io.hpp"
#include "dynoframe/runner.hpp"
#include "dynoframe/synthworld.hpp"

using namespace df;
using runner::json;

namespace {

std::string temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("dynoframe_runner_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir.string();
}

struct WorldFixture {
    std::string dir;
    synthworld::WorldFiles files;

    explicit WorldFixture(const std::string& tag, size_t n = 60, size_t hoi = 6,
                          uint64_t seed = 11)
        : dir(temp_dir(tag)),
          files(synthworld::generate_world_files(synthworld::WorldSpec::demo(), n, hoi, seed,
                                                 dir + "/w")) {}
    ~WorldFixture() { std::filesystem::remove_all(dir); }
};

json gsr_options(const synthworld::WorldFiles& files) {
    return {{"pred", files.gsr_pred}, {"gt", files.gsr_gt}, {"lexicon", files.lexicon}};
}

} // namespace

TEST_CASE("unknown and malformed options are rejected") {
    CHECK_THROWS_WITH_AS(runner::augment_check({{"trails", 5}}),
                         doctest::Contains("unknown option 'trails'"), Error);
    CHECK_THROWS_WITH_AS(runner::augment_check(json::array()),
                         doctest::Contains("must be a JSON object"), Error);
    CHECK_THROWS_WITH_AS(runner::eval_sir(json::object()),
                         doctest::Contains("missing required option 'pred'"), Error);
    CHECK_THROWS_WITH_AS(runner::augment_check({{"trials", "many"}}),
                         doctest::Contains("'trials' must be an integer"), Error);
    CHECK_THROWS_WITH_AS(runner::augment_check({{"trials", 0}}),
                         doctest::Contains("'trials' must be >= 1"), Error);
    CHECK_THROWS_WITH_AS(runner::augment_check({{"seed", -4}}),
                         doctest::Contains("non-negative"), Error);
    CHECK_THROWS_WITH_AS(runner::augment_check({{"mode", "blend"}}),
                         doctest::Contains("mode must be augment or replace"), Error);
}

TEST_CASE("eval-gsr runner packages report, renders, and manifest") {
    WorldFixture fx("gsr");
    const json result = runner::eval_gsr(gsr_options(fx.files));

    const json& report = result.at("report");
    CHECK(report.at("schema") == "dynoframe.report/1");
    CHECK(report.at("task") == "gsr");
    CHECK(report.at("items") == 60);
    CHECK(report.at("metrics").at("verb") == 1.0);
    CHECK(report.at("metrics").at("grnd_value_all") == 1.0);
    CHECK(result.at("table").get<std::string>().find("task: gsr") == 0);
    CHECK(result.at("csv").get<std::string>().find("metric,value") != std::string::npos);

    const json& manifest = result.at("manifest");
    CHECK(manifest.at("schema") == "dynoframe.manifest/1");
    CHECK(manifest.at("command") == "eval-gsr");
    CHECK(manifest.at("tool").at("name") == "dynoframe");
    REQUIRE(manifest.at("inputs").size() == 3);
    for (const auto& input : manifest.at("inputs")) {
        CHECK(input.at("fnv1a64").is_number());
        CHECK(input.at("bytes").get<int64_t>() > 0);
    }
}

TEST_CASE("reports are byte-stable and independent of the worker count") {
    WorldFixture fx("det");
    json opts = gsr_options(fx.files);
    opts["scenario"] = "gtverb";

    opts["jobs"] = 1;
    const std::string first = runner::eval_gsr(opts).at("report").dump();
    const std::string second = runner::eval_gsr(opts).at("report").dump();
    CHECK(first == second);

    opts["jobs"] = 4;
    CHECK(runner::eval_gsr(opts).at("report").dump() == first);
}

TEST_CASE("scenario and value-mode names flow through") {
    WorldFixture fx("names");
    json opts = gsr_options(fx.files);
    opts["scenario"] = "top5";
    opts["value_mode"] = "any";
    const json report = runner::eval_gsr(opts).at("report");
    CHECK(report.at("options").at("scenario") == "top5");
    CHECK(report.at("options").at("value_mode") == "any_role");
}

TEST_CASE("eval-hoi runner scores the generated detections") {
    WorldFixture fx("hoi");
    const json result = runner::eval_hoi({{"det", fx.files.hoi_det},
                                          {"gt", fx.files.hoi_gt},
                                          {"catalog", fx.files.catalog}});
    CHECK(result.at("report").at("metrics").at("map_full") == 1.0);
    CHECK(result.at("manifest").at("inputs").size() == 3);
}

TEST_CASE("eval-hhi runner wires the exact scorer") {
    const std::string dir = temp_dir("hhi");
    const std::string pred = dir + "/pred.jsonl";
    const std::string gt = dir + "/gt.jsonl";
    io::write_text_file(pred, "{\"id\":1,\"text\":\"[P1] waves at [P2]\"}\n"
                              "{\"id\":2,\"text\":\"[P1] nods\"}\n");
    io::write_text_file(gt, "{\"id\":1,\"text\":\"[P1] waves at [P2]\"}\n"
                            "{\"id\":2,\"text\":\"[P1] bows\"}\n");
    const json result = runner::eval_hhi({{"pred", pred}, {"gt", gt}});
    CHECK(result.at("report").at("metrics").at("exact") == 0.5);
    std::filesystem::remove_all(dir);
}

TEST_CASE("probe runner reports accuracies and appends scatter rows") {
    WorldFixture fx("probe", 120);
    const std::string scatter = fx.dir + "/scatter.csv";

    json opts = {{"in", fx.files.embeddings}, {"seed", 5}};
    const json first = runner::probe_run(opts);
    const json& metrics = first.at("report").at("metrics");
    CHECK(metrics.at("classes") == 6.0);
    CHECK(metrics.at("train_acc").get<double>() > 0.9);
    CHECK(metrics.at("probe_acc") == metrics.at("test_acc"));

    opts["scatter"] = scatter;
    opts["representation"] = "demo-a";
    opts["task_metric"] = 0.25;
    (void)runner::probe_run(opts);
    opts["representation"] = "demo-b";
    opts["task_metric"] = 0.75;
    (void)runner::probe_run(opts);

    const std::string body = io::read_text_file(scatter);
    CHECK(body.find("representation,probe_acc,task_metric\n") == 0);
    CHECK(body.find("demo-a,") != std::string::npos);
    CHECK(body.find("demo-b,") != std::string::npos);

    const std::string hand = fx.dir + "/hand.csv";
    io::write_text_file(hand, "representation,probe_acc,task_metric\n"
                              "a,0.1,0.2\nb,0.5,0.9\nc,0.9,0.4\n");
    const json corr = runner::correlate_run({{"csv", hand}});
    CHECK(corr.at("report").at("metrics").at("n") == 3.0);
    CHECK(corr.at("report").at("metrics").at("spearman") == 0.5);

    opts["representation"] = "bad,name";
    CHECK_THROWS_WITH_AS(runner::probe_run(opts), doctest::Contains("must not contain"),
                         Error);
    opts.erase("representation");
    opts.erase("task_metric");
    CHECK_THROWS_WITH_AS(runner::probe_run(opts),
                         doctest::Contains("needs both 'representation' and 'task_metric'"),
                         Error);
}

TEST_CASE("correlate rejects a foreign header") {
    const std::string dir = temp_dir("corr");
    const std::string path = dir + "/bad.csv";
    io::write_text_file(path, "name,acc,metric\nx,1,2\n");
    CHECK_THROWS_WITH_AS(runner::correlate_run({{"csv", path}}),
                         doctest::Contains("expected header"), Error);
    io::write_text_file(path, "representation,probe_acc,task_metric\nx,1\n");
    CHECK_THROWS_WITH_AS(runner::correlate_run({{"csv", path}}),
                         doctest::Contains("three columns"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("gen-world runner lists files and hashes them into the manifest") {
    const std::string dir = temp_dir("gen");
    const json result = runner::gen_world(
        {{"n", 25}, {"hoi_images", 4}, {"seed", 2}, {"out_prefix", dir + "/w"}});
    const json& files = result.at("files");
    REQUIRE(files.size() == 9);
    for (const auto& [key, path] : files.items())
        CHECK(std::filesystem::exists(path.get<std::string>()));
    CHECK(result.at("manifest").at("outputs").size() == 9);
    CHECK(result.at("manifest").at("seed") == 2);
    CHECK(result.at("report").at("metrics").at("items") == 25.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("demo-train then demo-generate reproduces the sampled items") {
    const std::string dir = temp_dir("train");
    const auto world = synthworld::WorldSpec::demo();
    const auto files = synthworld::generate_world_files(world, 80, 0, 21, dir + "/w");

    const json trained = runner::demo_train({{"n", 80},
                                             {"seed", 21},
                                             {"epochs", 30},
                                             {"out", dir + "/model.bin"}});
    CHECK(trained.at("report").at("metrics").at("final_loss").get<double>() <
          trained.at("report").at("metrics").at("first_loss").get<double>());
    CHECK(std::filesystem::exists(dir + "/model.bin"));

    const json generated = runner::demo_generate({{"model", dir + "/model.bin"},
                                                  {"embeddings", files.embeddings},
                                                  {"out", dir + "/gen.jsonl"}});
    const json& gens = generated.at("generations");
    REQUIRE(gens.size() == 80);
    CHECK(gens[0].at("id") == "item0");
    CHECK(gens[0].at("text").get<std::string>().rfind("VERB ", 0) == 0);

    const auto lines = io::load_jsonl(dir + "/gen.jsonl");
    REQUIRE(lines.size() == 80);
    CHECK(lines[0].at("schema") == "dynoframe.generations/1");
    CHECK(lines[0].at("text") == gens[0].at("text"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("demo-generate rejects embeddings of the wrong width") {
    const std::string dir = temp_dir("width");
    const json trained = runner::demo_train(
        {{"n", 10}, {"epochs", 1}, {"out", dir + "/model.bin"}});
    io::write_text_file(dir + "/e.jsonl", "{\"id\":\"x\",\"vector\":[1.0,2.0]}\n");
    CHECK_THROWS_WITH_AS(runner::demo_generate({{"model", dir + "/model.bin"},
                                                {"embeddings", dir + "/e.jsonl"}}),
                         doctest::Contains("does not match the model"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("augment-check runner renders per-check rows") {
    const json result = runner::augment_check({{"trials", 5}, {"mode", "replace"}});
    const json& report = result.at("report");
    CHECK(report.at("pass") == true);
    REQUIRE(report.at("checks").size() == 5);
    bool saw_replace = false;
    for (const auto& check : report.at("checks")) {
        CHECK(check.at("pass") == true);
        if (check.at("name") == "replace-token-count") saw_replace = true;
    }
    CHECK(saw_replace);
    CHECK(result.at("table").get<std::string>().find("overall PASS") != std::string::npos);
    CHECK(result.at("csv").get<std::string>().find("check,max_deviation,tolerance,pass") ==
          0);
}

TEST_CASE("pipeline runner composes generate, train, decode, and score") {
    const std::string dir = temp_dir("pipe");
    const json result = runner::pipeline_run(
        {{"n", 120}, {"hoi_images", 2}, {"seed", 9}, {"epochs", 12}, {"workdir", dir}});
    const json& metrics = result.at("report").at("metrics");
    CHECK(metrics.at("strict_parse_rate").get<double>() >= 0.0);
    CHECK(metrics.at("strict_parse_rate").get<double>() <= 1.0);
    CHECK(metrics.at("verb").get<double>() >= 0.0);
    CHECK(metrics.contains("value_all"));
    CHECK(metrics.at("train_final_loss").get<double>() <
          metrics.at("train_first_loss").get<double>());
    CHECK(std::filesystem::exists(dir + "/model.bin"));
    CHECK(std::filesystem::exists(dir + "/generations.jsonl"));
    CHECK(result.at("manifest").at("outputs").size() == 11);
    std::filesystem::remove_all(dir);
}

TEST_CASE("make-manifest records caller-driven work") {
    const std::string dir = temp_dir("mani");
    io::write_text_file(dir + "/in.txt", "hello\n");
    const json manifest = runner::make_manifest({{"command", "parse"},
                                                 {"seed", 7},
                                                 {"options", {{"tolerant", true}}},
                                                 {"inputs", {dir + "/in.txt"}},
                                                 {"outputs", json::array()}});
    CHECK(manifest.at("command") == "parse");
    CHECK(manifest.at("seed") == 7);
    CHECK(manifest.at("options").at("tolerant") == true);
    REQUIRE(manifest.at("inputs").size() == 1);
    CHECK(manifest.at("inputs")[0].at("bytes") == 6);
    CHECK_THROWS_WITH_AS(runner::make_manifest({{"command", "x"}, {"stuff", 1}}),
                         doctest::Contains("unknown option 'stuff'"), Error);
    CHECK_THROWS_WITH_AS(runner::make_manifest({{"command", "x"}, {"inputs", 3}}),
                         doctest::Contains("must be an array"), Error);
    std::filesystem::remove_all(dir);
}
