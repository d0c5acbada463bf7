#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "embkit/commands.hpp"
#include "embkit/pipeline.hpp"
#include "embkit/records_io.hpp"
#include "support/fixtures.hpp"

using namespace embkit;
using namespace embkit::cli;

namespace {

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

void write_eval_inputs(const fs::path& dir) {
    write(dir / "run.jsonl",
          R"({"query_id":"q1","ranking":[{"doc_id":"d1","score":2.0},{"doc_id":"d2","score":1.0}]})"
          "\n");
    write(dir / "qrels.tsv", "q1\td1\t1\nq2\td3\t1\n");
}

}  // namespace

TEST(ConfigParsers, DefaultsAndOverrides) {
    const auto m = parse_mining_config(R"({"rrf_k": 30, "window_hi": 80})");
    EXPECT_EQ(m.rrf_k, 30.0);
    EXPECT_EQ(m.window_lo, 30u);
    EXPECT_EQ(m.window_hi, 80u);
    const auto e = parse_embedder_settings(R"({"learning_rate": 0.5, "dim": 16, "registry": {"a": "nli"}})");
    EXPECT_EQ(e.training.learning_rate, 0.5);
    EXPECT_EQ(e.dim, 16u);
    ASSERT_TRUE(e.registry);
    EXPECT_EQ(e.registry->family("a"), distill::LossFamily::Nli);
    const auto r = parse_rerank_settings(R"({"stage2": {"epochs": 0}})");
    EXPECT_EQ(r.stage2.epochs, 0u);
    EXPECT_EQ(r.stage2.max_length, 512u);
    EXPECT_EQ(r.stage1.max_length, 256u);
}

TEST(ConfigParsers, RejectUnknownKeysAndBadTypes) {
    EXPECT_THROW(parse_mining_config(R"({"rrfk": 60})"), InvalidArgument);
    EXPECT_THROW(parse_mining_config(R"({"rrf_k": "sixty"})"), InvalidArgument);
    EXPECT_THROW(parse_embedder_settings(R"({"lr": 1})"), InvalidArgument);
    EXPECT_THROW(parse_rerank_settings(R"({"stage3": {}})"), InvalidArgument);
    EXPECT_THROW(parse_rerank_settings(R"({"stage1": {"max_len": 3}})"), InvalidArgument);
    EXPECT_THROW(parse_registry(R"({"a": "regression"})"), InvalidArgument);
    EXPECT_THROW(parse_registry("[1]"), InvalidArgument);
    EXPECT_THROW(parse_mining_config("{"), InvalidArgument);
}

TEST(Schema, ParseNames) {
    EXPECT_EQ(parse_schema("triplet"), Schema::Triplet);
    EXPECT_EQ(to_string(Schema::Qrels), "qrels");
    EXPECT_THROW(parse_schema("csv"), InvalidArgument);
}

TEST(ValidateData, WellFormedTriplets) {
    testsupport::TempDir dir("val");
    const std::vector<TrainTriplet> rows = {{"q", "p", {"n"}, "s", std::nullopt},
                                            {"q2", "p2", {"n2", "n3"}, "s", std::vector<double>{1, 0, 0.5}}};
    io::write_triplets(dir / "t.jsonl", rows);
    const auto report = validate_data(dir / "t.jsonl", Schema::Triplet);
    EXPECT_EQ(report.rows, 2u);
    EXPECT_TRUE(report.failures.empty());
}

TEST(ValidateData, TeacherScoreMismatchCitesLine) {
    testsupport::TempDir dir("val");
    write(dir / "t.jsonl",
          R"({"anchor":"q","positive":"p","negatives":["n"],"source":"s"})"
          "\n"
          R"({"anchor":"q","positive":"p","negatives":["n"],"source":"s","teacher_scores":[1,2,3]})"
          "\n");
    const auto report = validate_data(dir / "t.jsonl", Schema::Triplet);
    EXPECT_EQ(report.rows, 2u);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0].first, 2u);
    EXPECT_NE(report.to_text().find("2"), std::string::npos);
}

TEST(ValidateData, EmptyAndUnreadable) {
    testsupport::TempDir dir("val");
    write(dir / "empty.jsonl", "");
    const auto report = validate_data(dir / "empty.jsonl", Schema::TextRecord);
    EXPECT_EQ(report.rows, 0u);
    EXPECT_TRUE(report.failures.empty());
    EXPECT_THROW(validate_data(dir / "nope.jsonl", Schema::TextRecord), IoError);
}

TEST(ValidateData, DuplicateQrelsAcrossLines) {
    testsupport::TempDir dir("val");
    write(dir / "q.tsv", "q1\td1\t1\nq1\td1\t0\n");
    const auto report = validate_data(dir / "q.tsv", Schema::Qrels);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0].first, 2u);
}

TEST(Pipeline, EvalOnlyConfig) {
    testsupport::TempDir dir("pipe");
    write_eval_inputs(dir.path());
    write(dir / "cfg.json",
          R"({"seed": 3, "steps": [{"stage": "eval", "run": "run.jsonl", "qrels": "qrels.tsv",
               "metrics": "recall@1", "out": "report.json"}]})");
    const auto result = run_pipeline(dir / "cfg.json");
    ASSERT_EQ(result.steps, std::vector<std::string>{"eval"});
    const auto report = io::read_file(dir / "work" / "report.json");
    EXPECT_NE(report.find("\"recall@1\": 0.5"), std::string::npos);
}

TEST(Pipeline, UnregisteredTagNamed) {
    testsupport::TempDir dir("pipe");
    io::write_triplets(dir / "t.jsonl", std::vector<TrainTriplet>{{"q", "p", {"n"}, "mystery_set", std::nullopt}});
    write(dir / "cfg.json",
          R"({"registry": {"known": "retrieval"},
              "steps": [{"stage": "normalize", "schema": "triplet", "input": "t.jsonl", "output": "n.jsonl"}]})");
    try {
        run_pipeline(dir / "cfg.json");
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "normalize");
        EXPECT_NE(std::string(e.what()).find("mystery_set"), std::string::npos);
    }
}

TEST(Pipeline, MissingInputAndUnknownStage) {
    testsupport::TempDir dir("pipe");
    write(dir / "a.json", R"({"steps": [{"stage": "eval", "name": "score-it", "run": "none.jsonl",
                               "qrels": "none.tsv", "out": "r.json"}]})");
    try {
        run_pipeline(dir / "a.json");
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "score-it");
        EXPECT_NE(std::string(e.what()).find("missing input"), std::string::npos);
    }
    write(dir / "b.json", R"({"steps": [{"stage": "teleport"}]})");
    try {
        run_pipeline(dir / "b.json");
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "teleport");
    }
    write(dir / "c.json", R"({"steps": [], "extra": 1})");
    EXPECT_THROW(run_pipeline(dir / "c.json"), StageError);
}

TEST(Pipeline, WorkInputsChainBetweenSteps) {
    testsupport::TempDir dir("pipe");
    io::write_text_records(dir / "docs.jsonl",
                           std::vector<TextRecord>{{"d1", "ａlpha beta", "s"}, {"d2", "gamma", "s"}});
    write(dir / "cfg.json", R"({"steps": [
        {"stage": "normalize", "input": "docs.jsonl", "output": "docs.jsonl"},
        {"stage": "build-index", "input": "@docs.jsonl", "output": "bm25.idx"},
        {"stage": "validate", "input": "@docs.jsonl", "schema": "textrecord"}]})");
    const auto result = run_pipeline(dir / "cfg.json");
    EXPECT_EQ(result.steps.size(), 3u);
    EXPECT_EQ(io::read_text_records(dir / "work" / "docs.jsonl")[0].text, "alpha beta");
    EXPECT_TRUE(fs::exists(dir / "work" / "bm25.idx"));
}

TEST(DistillTrainFile, SeveralDataFilesActLikeOne) {
    testsupport::TempDir dir("dt");
    std::vector<std::string> words;
    for (int i = 0; i < 12; ++i) words.push_back("w" + std::to_string(i));
    embed::EmbedderParams::create(embed::build_vocabulary(words), 6, 0.05, 3).save(dir / "e.bin");
    const std::vector<TrainTriplet> ret = {{"w0", "w1", {"w2", "w3"}, "ret", std::vector<double>{0.9, 0.1, 0.4}},
                                           {"w4", "w5", {"w6", "w7"}, "ret", std::vector<double>{0.8, 0.3, 0.2}}};
    const std::vector<TrainTriplet> nli = {{"w8 w9", "w10", {"w11"}, "nli", std::nullopt}};
    io::write_triplets(dir / "ret.jsonl", ret);
    io::write_triplets(dir / "nli.jsonl", nli);
    auto both = ret;
    both.insert(both.end(), nli.begin(), nli.end());
    io::write_triplets(dir / "both.jsonl", both);

    DistillTrainArgs a;
    a.data = {dir / "ret.jsonl", dir / "nli.jsonl"};
    a.teacher_tag = "t";
    a.embedder = dir / "e.bin";
    a.settings.training.learning_rate = 0.1;
    a.settings.training.batch_size = 2;
    a.settings.training.hard_negatives = 2;
    a.out = dir / "split.bin";
    distill_train_file(a);
    a.data = {dir / "both.jsonl"};
    a.out = dir / "joined.bin";
    distill_train_file(a);
    EXPECT_EQ(embed::EmbedderParams::load(dir / "split.bin"), embed::EmbedderParams::load(dir / "joined.bin"));

    write(dir / "empty.jsonl", "");
    a.data = {dir / "empty.jsonl"};
    EXPECT_THROW(distill_train_file(a), InvalidArgument);
}

#ifdef EMBKIT_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + EMBKIT_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(CliBinary, ExitCodes) {
    testsupport::TempDir dir("bin");
    write_eval_inputs(dir.path());
    const auto d = dir.path().string();
    EXPECT_EQ(run_cli("eval --run " + d + "/run.jsonl --qrels " + d + "/qrels.tsv"), 0);
    EXPECT_EQ(run_cli("eval --run " + d + "/run.jsonl"), 1);
    EXPECT_EQ(run_cli("frobnicate"), 1);
    EXPECT_EQ(run_cli("eval --run " + d + "/missing.jsonl --qrels " + d + "/qrels.tsv"), 2);
    write(dir / "bad.jsonl", "{\"id\": 1}\n");
    EXPECT_EQ(run_cli("validate --in " + d + "/bad.jsonl --schema textrecord"), 2);
    EXPECT_EQ(run_cli("validate --in " + d + "/run.jsonl --schema run"), 0);
}
#endif
