#include "embkit/commands.hpp"

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>

#include "config_json.hpp"
#include "embkit/records_io.hpp"
#include "embkit/rng.hpp"

namespace embkit::cli {

namespace detail {

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
    if (!obj.is_object()) {
        throw InvalidArgument(std::string(context) + ": expected a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw InvalidArgument(std::string(context) + ": unknown key \"" + key + "\"");
        }
    }
}

json parse_json_text(std::string_view text, std::string_view context) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string(context) + ": " + e.what());
    }
}

namespace {

template <typename T>
void read_field(const json& obj, const char* key, T& out, std::string_view context) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!it->is_number_unsigned()) {
                throw InvalidArgument("");
            }
        } else if constexpr (std::is_same_v<T, int>) {
            if (!it->is_number_integer()) {
                throw InvalidArgument("");
            }
        } else if constexpr (std::is_same_v<T, double>) {
            if (!it->is_number()) {
                throw InvalidArgument("");
            }
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) {
                throw InvalidArgument("");
            }
        }
        out = it->get<T>();
    } catch (const std::exception&) {
        throw InvalidArgument(std::string(context) + ": bad value for \"" + key + "\"");
    }
}

}  // namespace

mining::MiningConfig mining_config_from(const json& obj) {
    constexpr std::string_view ctx = "mining config";
    reject_unknown_keys(obj, {"rrf_k", "window_lo", "window_hi", "negatives_per_query", "retrieval_depth"}, ctx);
    mining::MiningConfig cfg;
    read_field(obj, "rrf_k", cfg.rrf_k, ctx);
    read_field(obj, "window_lo", cfg.window_lo, ctx);
    read_field(obj, "window_hi", cfg.window_hi, ctx);
    read_field(obj, "negatives_per_query", cfg.negatives_per_query, ctx);
    read_field(obj, "retrieval_depth", cfg.retrieval_depth, ctx);
    cfg.validate();
    return cfg;
}

distill::DatasetRegistry registry_from(const json& obj) {
    if (!obj.is_object()) {
        throw InvalidArgument("registry: expected an object of tag -> loss family");
    }
    distill::DatasetRegistry registry;
    for (const auto& [tag, family] : obj.items()) {
        if (!family.is_string()) {
            throw InvalidArgument("registry: family for \"" + tag + "\" must be a string");
        }
        registry.add(tag, distill::parse_loss_family(family.get<std::string>()));
    }
    return registry;
}

EmbedderSettings embedder_settings_from(const json& obj) {
    constexpr std::string_view ctx = "training config";
    reject_unknown_keys(obj,
                        {"learning_rate", "warmup_ratio", "batch_size", "epochs", "hard_negatives", "seed",
                         "augment_shuffled_positives", "dim", "tau", "init_scale", "registry"},
                        ctx);
    EmbedderSettings s;
    auto& t = s.training;
    read_field(obj, "learning_rate", t.learning_rate, ctx);
    read_field(obj, "warmup_ratio", t.warmup_ratio, ctx);
    read_field(obj, "batch_size", t.batch_size, ctx);
    read_field(obj, "epochs", t.epochs, ctx);
    read_field(obj, "hard_negatives", t.hard_negatives, ctx);
    read_field(obj, "seed", t.seed, ctx);
    read_field(obj, "augment_shuffled_positives", t.augment_shuffled_positives, ctx);
    read_field(obj, "dim", s.dim, ctx);
    read_field(obj, "tau", s.tau, ctx);
    read_field(obj, "init_scale", s.init_scale, ctx);
    if (auto it = obj.find("registry"); it != obj.end()) {
        s.registry = registry_from(*it);
    }
    t.validate();
    if (s.dim == 0) {
        throw InvalidArgument("training config: dim must be positive");
    }
    if (!(s.tau > 0.0)) {
        throw InvalidArgument("training config: tau must be positive");
    }
    return s;
}

rerank::StageConfig stage_config_from(const json& obj, rerank::StageConfig base) {
    constexpr std::string_view ctx = "rerank stage config";
    reject_unknown_keys(obj,
                        {"max_length", "shuffle_positive", "hard_negatives", "learning_rate", "batch_size",
                         "epochs", "warmup_ratio", "seed"},
                        ctx);
    read_field(obj, "max_length", base.max_length, ctx);
    read_field(obj, "shuffle_positive", base.shuffle_positive, ctx);
    read_field(obj, "hard_negatives", base.hard_negatives, ctx);
    read_field(obj, "learning_rate", base.learning_rate, ctx);
    read_field(obj, "batch_size", base.batch_size, ctx);
    read_field(obj, "epochs", base.epochs, ctx);
    read_field(obj, "warmup_ratio", base.warmup_ratio, ctx);
    read_field(obj, "seed", base.seed, ctx);
    base.validate();
    return base;
}

RerankSettings rerank_settings_from(const json& obj) {
    reject_unknown_keys(obj, {"stage1", "stage2"}, "rerank config");
    RerankSettings s;
    if (auto it = obj.find("stage1"); it != obj.end()) {
        s.stage1 = stage_config_from(*it, s.stage1);
    }
    if (auto it = obj.find("stage2"); it != obj.end()) {
        s.stage2 = stage_config_from(*it, s.stage2);
    }
    return s;
}

}  // namespace detail

using detail::json;

Schema parse_schema(std::string_view name) {
    if (name == "textrecord") return Schema::TextRecord;
    if (name == "triplet") return Schema::Triplet;
    if (name == "query") return Schema::Query;
    if (name == "run") return Schema::Run;
    if (name == "qrels") return Schema::Qrels;
    throw InvalidArgument("unknown schema \"" + std::string(name) + "\"");
}

std::string_view to_string(Schema schema) {
    switch (schema) {
        case Schema::TextRecord: return "textrecord";
        case Schema::Triplet: return "triplet";
        case Schema::Query: return "query";
        case Schema::Run: return "run";
        case Schema::Qrels: return "qrels";
    }
    return "?";
}

mining::MiningConfig parse_mining_config(std::string_view json_text) {
    return detail::mining_config_from(detail::parse_json_text(json_text, "mining config"));
}

EmbedderSettings parse_embedder_settings(std::string_view json_text) {
    return detail::embedder_settings_from(detail::parse_json_text(json_text, "training config"));
}

RerankSettings parse_rerank_settings(std::string_view json_text) {
    return detail::rerank_settings_from(detail::parse_json_text(json_text, "rerank config"));
}

distill::DatasetRegistry parse_registry(std::string_view json_text) {
    return detail::registry_from(detail::parse_json_text(json_text, "registry"));
}

void normalize_file(const NormalizeArgs& args) {
    switch (args.schema) {
        case Schema::TextRecord: {
            auto rows = io::read_text_records(args.input);
            for (auto& r : rows) {
                r = corpus::normalize_record(std::move(r));
            }
            io::write_text_records(args.output, rows);
            return;
        }
        case Schema::Triplet: {
            auto rows = io::read_triplets(args.input);
            for (auto& t : rows) {
                t = corpus::normalize_triplet(std::move(t));
            }
            io::write_triplets(args.output, rows);
            return;
        }
        case Schema::Query: {
            auto rows = io::read_queries(args.input);
            for (auto& q : rows) {
                q.record = corpus::normalize_record(std::move(q.record));
                if (q.answer) {
                    q.answer = corpus::normalize_text(*q.answer);
                }
            }
            io::write_queries(args.output, rows);
            return;
        }
        case Schema::Run:
        case Schema::Qrels:
            break;
    }
    throw InvalidArgument("normalize supports textrecord, triplet and query files");
}

void build_index_file(const BuildIndexArgs& args) {
    auto docs = io::read_text_records(args.input);
    lexical::build_index(docs, args.params).save(args.output);
}

namespace {

std::string doc_text_or_throw(const lexical::InvertedIndex& index, std::string_view id) {
    auto ord = index.find_doc(id);
    if (!ord) {
        throw InvalidArgument("doc id \"" + std::string(id) + "\" is not in the index");
    }
    return index.doc_text(*ord);
}

}  // namespace

MineSummary mine_file(const MineArgs& args) {
    args.config.validate();
    const auto index = lexical::InvertedIndex::load(args.index);
    std::optional<embed::EmbedderParams> dense_params;
    std::unique_ptr<mining::EmbedderDenseRanker> dense;
    if (args.dense_model) {
        dense_params = embed::EmbedderParams::load(*args.dense_model);
        dense = std::make_unique<mining::EmbedderDenseRanker>(*dense_params, index);
    }
    const auto queries = io::read_queries(args.queries);
    const auto lookup = mining::lookup_in(index);

    MineSummary summary;
    std::vector<TrainTriplet> out;
    for (const auto& q : queries) {
        ++summary.queries;
        auto bm25 = lexical::search_topk(index, q.record.text, args.config.retrieval_depth);
        bm25.query_id = q.record.id;
        RankedList dense_list{q.record.id, {}};
        if (dense) {
            dense_list = dense->rank(q.record, args.config.retrieval_depth);
        }
        auto mined = mining::mine_hard_negatives(q.record, q.answer, bm25, dense_list, lookup, args.config);

        std::optional<std::string> positive_id = q.positive_id;
        if (!positive_id && !mined.mined_positives.empty()) {
            positive_id = mined.mined_positives.front();
        }
        if (!positive_id) {
            ++summary.skipped_without_positive;
            continue;
        }
        TrainTriplet t;
        t.anchor = q.record.text;
        t.positive = doc_text_or_throw(index, *positive_id);
        t.source = q.record.source;
        for (const auto& id : mined.negatives) {
            if (id != *positive_id) {
                t.negatives.push_back(doc_text_or_throw(index, id));
            }
        }
        out.push_back(std::move(t));
    }
    io::write_triplets(args.out, out);
    summary.written = out.size();
    return summary;
}

embed::TrainLog train_embed_file(const TrainEmbedArgs& args) {
    const auto triplets = io::read_triplets(args.data);
    if (triplets.empty()) {
        throw InvalidArgument("no training rows in " + args.data.string());
    }
    const auto& s = args.settings;
    embed::EmbedderParams params =
        args.init_model ? embed::EmbedderParams::load(*args.init_model)
                        : embed::EmbedderParams::create(embed::build_vocabulary(triplets), s.dim, s.tau,
                                                        derive_seed(s.training.seed, "init"), s.init_scale);
    embed::TrainLog log;
    params = embed::train_embedder(std::move(params), triplets, s.training, &log);
    params.save(args.out);
    return log;
}

namespace {

struct FeatureResources {
    std::optional<lexical::InvertedIndex> index;
    std::optional<embed::EmbedderParams> embedder;

    rerank::FeatureContext context(std::size_t max_length) const {
        rerank::FeatureContext ctx;
        ctx.index = index ? &*index : nullptr;
        ctx.embedder = embedder ? &*embedder : nullptr;
        ctx.max_length = max_length;
        return ctx;
    }
};

FeatureResources load_resources(const std::optional<fs::path>& index, const std::optional<fs::path>& embedder) {
    FeatureResources r;
    if (index) {
        r.index = lexical::InvertedIndex::load(*index);
    }
    if (embedder) {
        r.embedder = embed::EmbedderParams::load(*embedder);
    }
    return r;
}

std::vector<TrainTriplet> with_negatives(std::vector<TrainTriplet> rows) {
    std::erase_if(rows, [](const TrainTriplet& t) { return t.negatives.empty(); });
    return rows;
}

}  // namespace

void train_rerank_file(const TrainRerankArgs& args) {
    const auto stage1 = with_negatives(io::read_triplets(args.stage1));
    const auto stage2 = with_negatives(io::read_triplets(args.stage2));
    const auto resources = load_resources(args.index, args.embedder);
    const auto& s = args.settings;

    // Features are cached per stage; max_length is applied by the stage itself.
    const auto ctx = resources.context(s.stage2.max_length);
    rerank::RerankerModel model;
    model.params = rerank::train_reranker_two_stage({}, stage1, stage2, s.stage1, s.stage2, ctx);
    model.max_length = s.stage2.max_length;
    model.uses_index = resources.index.has_value();
    model.uses_embedder = resources.embedder.has_value();
    model.save(args.out);
}

void score_file(const ScoreArgs& args) {
    if (args.pairs.has_value() == args.triplets.has_value()) {
        throw InvalidArgument("score needs exactly one of pairs or triplets input");
    }
    const auto model = rerank::RerankerModel::load(args.model);
    if (model.uses_index && !args.index) {
        throw InvalidArgument("model was trained with BM25 features; an index is required");
    }
    if (model.uses_embedder && !args.embedder) {
        throw InvalidArgument("model was trained with embedder features; an embedder is required");
    }
    const auto resources = load_resources(model.uses_index ? args.index : std::nullopt,
                                          model.uses_embedder ? args.embedder : std::nullopt);
    const auto ctx = resources.context(model.max_length);
    auto score = [&](std::string_view q, std::string_view d) {
        const auto f = rerank::rerank_features(q, d, ctx);
        return rerank::rerank_score(model.params, f);
    };

    if (args.triplets) {
        auto rows = io::read_triplets(*args.triplets);
        for (auto& t : rows) {
            std::vector<double> scores{score(t.anchor, t.positive)};
            for (const auto& n : t.negatives) {
                scores.push_back(score(t.anchor, n));
            }
            t.teacher_scores = std::move(scores);
        }
        io::write_triplets(args.out, rows);
        return;
    }

    std::vector<std::string> lines;
    io::for_each_line(*args.pairs, [&](std::size_t number, std::string_view line) {
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InvalidArgument("line " + std::to_string(number) + ": " + e.what());
        }
        if (!row.is_object() || !row.contains("query") || !row.contains("doc") || !row["query"].is_string() ||
            !row["doc"].is_string()) {
            throw InvalidArgument("line " + std::to_string(number) + ": expected string fields query and doc");
        }
        row["score"] = score(row["query"].get<std::string>(), row["doc"].get<std::string>());
        lines.push_back(row.dump());
    });
    io::write_lines(args.out, lines);
}

FilterSummary filter_file(const FilterArgs& args) {
    args.config.validate();
    const auto rows = io::read_triplets(args.input);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].teacher_scores) {
            throw InvalidArgument("triplet #" + std::to_string(i) + " has no teacher_scores; run score first");
        }
    }
    std::vector<TrainTriplet> kept;
    if (args.mode == FilterMode::Threshold) {
        kept = corpus::filter_by_score_threshold(rows, args.config);
    } else {
        std::vector<corpus::ScoredItem> items;
        items.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            items.push_back({std::to_string(i), rows[i].teacher_scores->front()});
        }
        for (const auto& item : corpus::filter_bottom_percentile(items, args.config.bottom_percentile)) {
            kept.push_back(rows[std::stoul(item.id)]);
        }
    }
    io::write_triplets(args.output, kept);
    return {rows.size(), kept.size()};
}

embed::TrainLog distill_train_file(const DistillTrainArgs& args) {
    std::vector<TrainTriplet> rows;
    for (const auto& path : args.data) {
        auto part = io::read_triplets(path);
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    if (rows.empty()) {
        throw InvalidArgument("no distillation training rows");
    }
    distill::DatasetRegistry registry;
    if (args.settings.registry) {
        registry = *args.settings.registry;
    } else {
        for (const auto& t : rows) {
            if (!registry.contains(t.source)) {
                registry.add(t.source,
                             t.teacher_scores ? distill::LossFamily::Retrieval : distill::LossFamily::Nli);
            }
        }
    }
    auto params = embed::EmbedderParams::load(args.embedder);
    embed::TrainLog log;
    params = distill::distill_train(std::move(params), rows, registry, args.settings.training, &log);
    params.set_label("distilled-from:" + args.teacher_tag);
    params.save(args.out);
    return log;
}

void retrieve_file(const RetrieveArgs& args) {
    if (args.k == 0) {
        throw InvalidArgument("k must be positive");
    }
    if (args.mode != RetrieveMode::Bm25 && !args.embedder) {
        throw InvalidArgument("dense and hybrid retrieval need an embedder");
    }
    const auto index = lexical::InvertedIndex::load(args.index);
    std::optional<embed::EmbedderParams> params;
    std::unique_ptr<mining::EmbedderDenseRanker> dense;
    if (args.embedder) {
        params = embed::EmbedderParams::load(*args.embedder);
        dense = std::make_unique<mining::EmbedderDenseRanker>(*params, index);
    }
    const auto queries = io::read_queries(args.queries);
    std::vector<RankedList> run;
    run.reserve(queries.size());
    for (const auto& q : queries) {
        RankedList list;
        if (args.mode == RetrieveMode::Bm25) {
            list = lexical::search_topk(index, q.record.text, args.k);
            list.query_id = q.record.id;
        } else if (args.mode == RetrieveMode::Dense) {
            list = dense->rank(q.record, args.k);
        } else {
            auto bm25 = lexical::search_topk(index, q.record.text, args.k);
            bm25.query_id = q.record.id;
            const std::vector<RankedList> lists{std::move(bm25), dense->rank(q.record, args.k)};
            list = mining::rrf_fuse(lists, args.rrf_k);
            if (list.entries.size() > args.k) {
                list.entries.resize(args.k);
            }
        }
        run.push_back(std::move(list));
    }
    io::write_run(args.out, run);
}

evalx::EvalReport eval_files(const EvalArgs& args) {
    if (args.metrics.empty()) {
        throw InvalidArgument("no metrics requested");
    }
    evalx::Run run;
    for (auto& list : io::read_run(args.run)) {
        auto id = list.query_id;
        if (!run.emplace(id, std::move(list)).second) {
            throw InvalidArgument("query \"" + id + "\" appears twice in the run");
        }
    }
    const auto qrels = evalx::load_qrels(args.qrels);
    auto report = evalx::evaluate_run(run, qrels, args.metrics);
    if (args.out) {
        io::write_file(*args.out, report.to_json() + "\n");
    }
    return report;
}

std::string ValidationReport::to_text() const {
    std::ostringstream out;
    for (const auto& [line, message] : failures) {
        out << "line " << line << ": " << message << '\n';
    }
    out << rows << " rows, " << failures.size() << " failures\n";
    return out.str();
}

ValidationReport validate_data(const fs::path& path, Schema schema) {
    ValidationReport report;
    std::set<std::pair<std::string, std::string>> qrel_keys;
    io::for_each_line(path, [&](std::size_t number, std::string_view line) {
        ++report.rows;
        try {
            switch (schema) {
                case Schema::TextRecord: io::parse_text_record(line); break;
                case Schema::Triplet: io::parse_triplet(line); break;
                case Schema::Query: io::parse_query(line); break;
                case Schema::Run: io::parse_run_row(line); break;
                case Schema::Qrels: {
                    const auto parsed = evalx::parse_qrels(line);
                    for (const auto& [qid, judged] : parsed) {
                        for (const auto& [doc, grade] : judged) {
                            if (!qrel_keys.emplace(qid, doc).second) {
                                throw InvalidArgument("duplicate judgment for " + qid + " / " + doc);
                            }
                        }
                    }
                    break;
                }
            }
        } catch (const InvalidArgument& e) {
            report.failures.emplace_back(number, e.what());
        }
    });
    return report;
}

}  // namespace embkit::cli
