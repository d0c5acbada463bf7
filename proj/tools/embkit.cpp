#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "embkit/commands.hpp"
#include "embkit/pipeline.hpp"
#include "embkit/records_io.hpp"
#include "embkit/synthetic.hpp"
#include "embkit/utf8.hpp"

namespace fs = std::filesystem;
using namespace embkit;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string read_config(const std::optional<std::string>& path) {
    return path ? io::read_file(*path) : std::string("{}");
}

std::optional<fs::path> opt_path(const std::optional<std::string>& s) {
    return s ? std::optional<fs::path>(*s) : std::nullopt;
}

// Fullwidth letters and zero-width spaces, so the bundled raw corpus gives
// the normalizer something to undo.
std::string add_noise(std::string_view text) {
    std::string out;
    bool first_space = true;
    for (char32_t cp : utf8::decode(text)) {
        if (cp >= U'a' && cp <= U'z') {
            utf8::append(out, cp - U'a' + U'\uFF41');
        } else if (cp == U' ' && first_space) {
            utf8::append(out, U'\u200B');
            out += ' ';
            first_space = false;
        } else {
            utf8::append(out, cp);
        }
    }
    return out;
}

void make_toy(const fs::path& dir, synthetic::ToyWorldConfig cfg) {
    const auto world = synthetic::make_toy_world(cfg);
    fs::create_directories(dir);

    auto raw = world.docs;
    for (std::size_t i = 0; i < raw.size(); i += 3) {
        raw[i].text = add_noise(raw[i].text);
    }
    io::write_text_records(dir / "docs_raw.jsonl", raw);
    io::write_queries(dir / "train_queries.jsonl", world.train_queries);
    io::write_triplets(dir / "train_pairs.jsonl", world.train_triplets);

    std::vector<io::QueryRecord> eval;
    for (const auto& q : world.eval_queries) {
        eval.push_back({q, std::nullopt, std::nullopt});
    }
    io::write_queries(dir / "eval_queries.jsonl", eval);
    evalx::save_qrels(dir / "qrels.tsv", world.qrels);
    io::write_triplets(dir / "nli.jsonl", synthetic::make_toy_nli(cfg, 200, "toynli", cfg.seed + 1));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"embkit: text embedding training data and evaluation toolkit"};
    app.require_subcommand(1);

    // normalize
    auto* normalize = app.add_subcommand("normalize", "NFKC-normalize and strip invisible characters");
    cli::NormalizeArgs norm_args;
    std::string norm_schema = "textrecord";
    normalize->add_option("--in", norm_args.input, "input JSONL")->required();
    normalize->add_option("--out", norm_args.output, "output JSONL")->required();
    normalize->add_option("--schema", norm_schema, "textrecord|triplet|query");

    // build-index
    auto* build = app.add_subcommand("build-index", "build a BM25 index from TextRecord JSONL");
    cli::BuildIndexArgs build_args;
    build->add_option("--input,--docs", build_args.input, "documents JSONL")->required();
    build->add_option("--output,--out", build_args.output, "index file")->required();
    build->add_option("--k1", build_args.params.k1, "BM25 k1");
    build->add_option("--b", build_args.params.b, "BM25 b");

    // mine
    auto* mine = app.add_subcommand("mine", "mine hard negatives with BM25 + dense fusion");
    std::string mine_index, mine_queries, mine_out;
    std::optional<std::string> mine_dense, mine_config;
    mine->add_option("--index", mine_index, "index file")->required();
    mine->add_option("--dense-model", mine_dense, "embedder file (BM25 only when absent)");
    mine->add_option("--queries", mine_queries, "query JSONL")->required();
    mine->add_option("--config", mine_config, "mining JSON config");
    mine->add_option("--out", mine_out, "triplet JSONL")->required();

    // train-embed
    auto* train_embed = app.add_subcommand("train-embed", "train the dual encoder with the contrastive loss");
    std::string te_data, te_out;
    std::optional<std::string> te_config, te_init;
    train_embed->add_option("--data", te_data, "triplet JSONL")->required();
    train_embed->add_option("--config", te_config, "training JSON config");
    train_embed->add_option("--init", te_init, "start from this embedder");
    train_embed->add_option("--out", te_out, "embedder file")->required();

    // train-rerank
    auto* train_rerank = app.add_subcommand("train-rerank", "two-stage listwise reranker training");
    std::string tr_s1, tr_s2, tr_out;
    std::optional<std::string> tr_config, tr_index, tr_embedder;
    train_rerank->add_option("--stage1", tr_s1, "stage 1 triplet JSONL")->required();
    train_rerank->add_option("--stage2", tr_s2, "stage 2 triplet JSONL")->required();
    train_rerank->add_option("--config", tr_config, "rerank JSON config");
    train_rerank->add_option("--index", tr_index, "index for the BM25 feature");
    train_rerank->add_option("--embedder", tr_embedder, "embedder for the cosine feature");
    train_rerank->add_option("--out", tr_out, "reranker model file")->required();

    // score
    auto* score = app.add_subcommand("score", "score pairs or attach teacher scores to triplets");
    std::string sc_model, sc_out;
    std::optional<std::string> sc_pairs, sc_triplets, sc_index, sc_embedder;
    score->add_option("--model", sc_model, "reranker model file")->required();
    auto* pairs_opt = score->add_option("--pairs", sc_pairs, "JSONL of {query, doc}");
    auto* triplets_opt = score->add_option("--triplets", sc_triplets, "triplet JSONL");
    pairs_opt->excludes(triplets_opt);
    score->add_option("--index", sc_index, "index file");
    score->add_option("--embedder", sc_embedder, "embedder file");
    score->add_option("--out", sc_out, "output JSONL")->required();

    // filter
    auto* filter = app.add_subcommand("filter", "drop low-scoring triplets");
    cli::FilterArgs filter_args;
    std::string filter_mode = "threshold";
    filter->add_option("--in", filter_args.input, "scored triplet JSONL")->required();
    filter->add_option("--out", filter_args.output, "output JSONL")->required();
    filter->add_option("--mode", filter_mode, "threshold|bottom-percentile")
        ->check(CLI::IsMember({"threshold", "bottom-percentile"}));
    filter->add_option("--threshold", filter_args.config.score_threshold, "positive score threshold");
    filter->add_option("--percentile", filter_args.config.bottom_percentile, "bottom percentile to drop");

    // distill-train
    auto* distill = app.add_subcommand("distill-train", "distill reranker scores into the dual encoder");
    std::vector<std::string> dt_data;
    std::string dt_tag, dt_embedder, dt_out;
    std::optional<std::string> dt_config;
    distill->add_option("--data", dt_data, "triplet JSONL files (retrieval rows carry teacher_scores)")->required();
    distill->add_option("--teacher-tag", dt_tag, "name of the teacher model")->required();
    distill->add_option("--embedder", dt_embedder, "student embedder file")->required();
    distill->add_option("--config", dt_config, "training JSON config (may hold a registry)");
    distill->add_option("--out", dt_out, "output embedder file")->required();

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "write a run file for a query set");
    cli::RetrieveArgs ret_args;
    std::string ret_mode = "bm25";
    std::optional<std::string> ret_embedder;
    retrieve->add_option("--index", ret_args.index, "index file")->required();
    retrieve->add_option("--embedder", ret_embedder, "embedder file");
    retrieve->add_option("--queries", ret_args.queries, "query JSONL")->required();
    retrieve->add_option("--mode", ret_mode, "bm25|dense|hybrid")->check(CLI::IsMember({"bm25", "dense", "hybrid"}));
    retrieve->add_option("--k", ret_args.k, "depth");
    retrieve->add_option("--rrf-k", ret_args.rrf_k, "RRF constant for hybrid mode");
    retrieve->add_option("--out", ret_args.out, "run JSONL")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "nDCG / MAP / Recall over a run");
    std::string ev_run, ev_qrels, ev_metrics = "ndcg@10,map@10,recall@30";
    std::optional<std::string> ev_out;
    eval->add_option("--run", ev_run, "run JSONL")->required();
    eval->add_option("--qrels", ev_qrels, "qrels TSV")->required();
    eval->add_option("--metrics", ev_metrics, "comma-separated metric list");
    eval->add_option("--out", ev_out, "report JSON (stdout always gets it)");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "run every step of a pipeline config");
    std::string pl_config;
    std::optional<std::string> pl_work;
    pipeline->add_option("--config", pl_config, "pipeline JSON")->required();
    pipeline->add_option("--work-dir", pl_work, "override the config's work_dir");

    // validate
    auto* validate = app.add_subcommand("validate", "check every line of a data file against a schema");
    std::string va_path, va_schema;
    validate->add_option("--in", va_path, "data file")->required();
    validate->add_option("--schema", va_schema, "textrecord|triplet|query|run|qrels")->required();

    // make-toy
    auto* toy = app.add_subcommand("make-toy", "generate the synthetic toy corpus");
    std::string toy_dir;
    synthetic::ToyWorldConfig toy_cfg;
    toy->add_option("--out-dir", toy_dir, "output directory")->required();
    toy->add_option("--seed", toy_cfg.seed, "generator seed");
    toy->add_option("--query-doc-words", toy_cfg.query_doc_words, "query words taken from the document vocabulary");
    toy->add_option("--background-topic-words", toy_cfg.background_topic_words,
                    "topic words per background sentence");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*normalize) {
            norm_args.schema = cli::parse_schema(norm_schema);
            cli::normalize_file(norm_args);
        } else if (*build) {
            cli::build_index_file(build_args);
        } else if (*mine) {
            cli::MineArgs a{mine_index, opt_path(mine_dense), mine_queries,
                            cli::parse_mining_config(read_config(mine_config)), mine_out};
            const auto s = cli::mine_file(a);
            std::cout << s.written << " triplets from " << s.queries << " queries ("
                      << s.skipped_without_positive << " without a positive)\n";
        } else if (*train_embed) {
            cli::TrainEmbedArgs a{te_data, cli::parse_embedder_settings(read_config(te_config)), opt_path(te_init),
                                  te_out};
            const auto log = cli::train_embed_file(a);
            std::cout << log.step_losses.size() << " steps";
            if (!log.step_losses.empty()) {
                std::cout << ", final loss " << log.step_losses.back();
            }
            std::cout << '\n';
        } else if (*train_rerank) {
            cli::TrainRerankArgs a{tr_s1, tr_s2, opt_path(tr_index), opt_path(tr_embedder),
                                   cli::parse_rerank_settings(read_config(tr_config)), tr_out};
            cli::train_rerank_file(a);
        } else if (*score) {
            cli::ScoreArgs a{sc_model, opt_path(sc_pairs), opt_path(sc_triplets), opt_path(sc_index),
                             opt_path(sc_embedder), sc_out};
            cli::score_file(a);
        } else if (*filter) {
            filter_args.mode =
                filter_mode == "threshold" ? cli::FilterMode::Threshold : cli::FilterMode::BottomPercentile;
            const auto s = cli::filter_file(filter_args);
            std::cout << "kept " << s.kept << " of " << s.input << '\n';
        } else if (*distill) {
            cli::DistillTrainArgs a{std::vector<fs::path>(dt_data.begin(), dt_data.end()), dt_tag, dt_embedder, cli::parse_embedder_settings(read_config(dt_config)),
                                    dt_out};
            cli::distill_train_file(a);
        } else if (*retrieve) {
            ret_args.embedder = opt_path(ret_embedder);
            ret_args.mode = ret_mode == "bm25"    ? cli::RetrieveMode::Bm25
                            : ret_mode == "dense" ? cli::RetrieveMode::Dense
                                                  : cli::RetrieveMode::Hybrid;
            cli::retrieve_file(ret_args);
        } else if (*eval) {
            cli::EvalArgs a{ev_run, ev_qrels, evalx::MetricSpec::parse_list(ev_metrics), opt_path(ev_out)};
            std::cout << cli::eval_files(a).to_json() << '\n';
        } else if (*pipeline) {
            cli::PipelineOptions options;
            options.work_dir = opt_path(pl_work);
            const auto result = cli::run_pipeline(pl_config, options);
            for (const auto& step : result.steps) {
                std::cout << "done " << step << '\n';
            }
        } else if (*validate) {
            const auto report = cli::validate_data(va_path, cli::parse_schema(va_schema));
            std::cout << report.to_text();
            return report.failures.empty() ? 0 : kExitData;
        } else if (*toy) {
            make_toy(toy_dir, toy_cfg);
        }
    } catch (const cli::StageError& e) {
        std::cerr << "error in stage " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
