#include "embkit/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "config_json.hpp"
#include "embkit/commands.hpp"
#include "embkit/records_io.hpp"
#include "embkit/rng.hpp"

namespace embkit::cli {

namespace {

using detail::json;

struct Step {
    std::string stage;
    std::string name;
    json body;
};

class Runner {
  public:
    Runner(fs::path config_dir, fs::path work_dir, std::uint64_t seed, std::optional<distill::DatasetRegistry> registry)
        : config_dir_(std::move(config_dir)), work_dir_(std::move(work_dir)), seed_(seed),
          registry_(std::move(registry)) {}

    void run(const Step& step, PipelineResult& result);

  private:
    std::string str(const json& body, const char* key) const {
        auto it = body.find(key);
        if (it == body.end() || !it->is_string()) {
            throw InvalidArgument(std::string("missing string field \"") + key + "\"");
        }
        return it->get<std::string>();
    }

    // "@name" refers to a file in the work dir; anything else is relative to
    // the config file.
    fs::path input(const json& body, const char* key) const {
        const auto raw = str(body, key);
        fs::path p = raw.starts_with('@') ? work_dir_ / raw.substr(1) : config_dir_ / raw;
        if (!fs::exists(p)) {
            throw InvalidArgument("missing input " + p.string());
        }
        return p;
    }

    // A single name or an array of names.
    std::vector<fs::path> inputs(const json& body, const char* key) const {
        auto it = body.find(key);
        if (it == body.end() || !it->is_array()) {
            return {input(body, key)};
        }
        if (it->empty()) {
            throw InvalidArgument(std::string("\"") + key + "\" must not be empty");
        }
        std::vector<fs::path> out;
        for (const auto& item : *it) {
            if (!item.is_string()) {
                throw InvalidArgument(std::string("\"") + key + "\" must hold strings");
            }
            json one;
            one[key] = item;
            out.push_back(input(one, key));
        }
        return out;
    }

    std::optional<fs::path> optional_input(const json& body, const char* key) const {
        if (!body.contains(key)) {
            return std::nullopt;
        }
        return input(body, key);
    }

    fs::path output(const json& body, const char* key, PipelineResult& result) const {
        const auto raw = str(body, key);
        fs::path p = work_dir_ / raw;
        if (p.has_parent_path()) {
            fs::create_directories(p.parent_path());
        }
        result.artifacts.push_back(p);
        return p;
    }

    json section(const json& body, const char* key) const {
        auto it = body.find(key);
        return it == body.end() ? json::object() : *it;
    }

    /// Fills "seed" from the global seed unless the section pins one.
    json seeded(json section, const std::string& step_name) const {
        if (!section.contains("seed")) {
            section["seed"] = derive_seed(seed_, step_name);
        }
        return section;
    }

    void check_sources(const fs::path& path, bool queries) const;

    fs::path config_dir_;
    fs::path work_dir_;
    std::uint64_t seed_;
    std::optional<distill::DatasetRegistry> registry_;
};

void Runner::check_sources(const fs::path& path, bool queries) const {
    std::set<std::string, std::less<>> tags;
    io::for_each_line(path, [&](std::size_t, std::string_view line) {
        tags.insert(queries ? io::parse_query(line).record.source : io::parse_triplet(line).source);
    });
    for (const auto& tag : tags) {
        if (!registry_ || !registry_->contains(tag)) {
            throw InvalidArgument("source tag \"" + tag + "\" in " + path.string() + " is not in the registry");
        }
    }
}

void Runner::run(const Step& step, PipelineResult& result) {
    const json& b = step.body;
    const auto& s = step.stage;

    if (s == "normalize") {
        detail::reject_unknown_keys(b, {"stage", "name", "input", "output", "schema"}, "normalize step");
        NormalizeArgs a;
        a.input = input(b, "input");
        a.schema = b.contains("schema") ? parse_schema(str(b, "schema")) : Schema::TextRecord;
        if (a.schema == Schema::Triplet || a.schema == Schema::Query) {
            check_sources(a.input, a.schema == Schema::Query);
        }
        a.output = output(b, "output", result);
        normalize_file(a);
    } else if (s == "build-index") {
        detail::reject_unknown_keys(b, {"stage", "name", "input", "output", "k1", "b"}, "build-index step");
        BuildIndexArgs a;
        a.input = input(b, "input");
        if (b.contains("k1")) a.params.k1 = b["k1"].get<double>();
        if (b.contains("b")) a.params.b = b["b"].get<double>();
        a.params.validate();
        a.output = output(b, "output", result);
        build_index_file(a);
    } else if (s == "mine") {
        detail::reject_unknown_keys(b, {"stage", "name", "index", "dense_model", "queries", "config", "out"},
                                    "mine step");
        MineArgs a;
        a.index = input(b, "index");
        a.dense_model = optional_input(b, "dense_model");
        a.queries = input(b, "queries");
        check_sources(a.queries, true);
        a.config = detail::mining_config_from(section(b, "config"));
        a.out = output(b, "out", result);
        mine_file(a);
    } else if (s == "train-embed") {
        detail::reject_unknown_keys(b, {"stage", "name", "data", "init_model", "config", "out"},
                                    "train-embed step");
        TrainEmbedArgs a;
        a.data = input(b, "data");
        check_sources(a.data, false);
        a.init_model = optional_input(b, "init_model");
        a.settings = detail::embedder_settings_from(seeded(section(b, "config"), step.name));
        a.out = output(b, "out", result);
        train_embed_file(a);
    } else if (s == "train-rerank") {
        detail::reject_unknown_keys(b, {"stage", "name", "stage1", "stage2", "index", "embedder", "config", "out"},
                                    "train-rerank step");
        TrainRerankArgs a;
        a.stage1 = input(b, "stage1");
        a.stage2 = input(b, "stage2");
        check_sources(a.stage1, false);
        check_sources(a.stage2, false);
        a.index = optional_input(b, "index");
        a.embedder = optional_input(b, "embedder");
        auto cfg = section(b, "config");
        for (const char* key : {"stage1", "stage2"}) {
            cfg[key] = seeded(cfg.contains(key) ? cfg[key] : json::object(), step.name + "/" + key);
        }
        a.settings = detail::rerank_settings_from(cfg);
        a.out = output(b, "out", result);
        train_rerank_file(a);
    } else if (s == "score") {
        detail::reject_unknown_keys(b, {"stage", "name", "model", "pairs", "triplets", "index", "embedder", "out"},
                                    "score step");
        ScoreArgs a;
        a.model = input(b, "model");
        a.pairs = optional_input(b, "pairs");
        a.triplets = optional_input(b, "triplets");
        if (a.triplets) {
            check_sources(*a.triplets, false);
        }
        a.index = optional_input(b, "index");
        a.embedder = optional_input(b, "embedder");
        a.out = output(b, "out", result);
        score_file(a);
    } else if (s == "filter") {
        detail::reject_unknown_keys(b, {"stage", "name", "input", "output", "mode", "score_threshold",
                                        "bottom_percentile"},
                                    "filter step");
        FilterArgs a;
        a.input = input(b, "input");
        check_sources(a.input, false);
        const auto mode = b.contains("mode") ? str(b, "mode") : std::string("threshold");
        if (mode == "threshold") {
            a.mode = FilterMode::Threshold;
        } else if (mode == "bottom-percentile") {
            a.mode = FilterMode::BottomPercentile;
        } else {
            throw InvalidArgument("unknown filter mode \"" + mode + "\"");
        }
        if (b.contains("score_threshold")) a.config.score_threshold = b["score_threshold"].get<double>();
        if (b.contains("bottom_percentile")) a.config.bottom_percentile = b["bottom_percentile"].get<double>();
        a.output = output(b, "output", result);
        filter_file(a);
    } else if (s == "distill-train") {
        detail::reject_unknown_keys(b, {"stage", "name", "data", "teacher_tag", "embedder", "config", "out"},
                                    "distill-train step");
        DistillTrainArgs a;
        a.data = inputs(b, "data");
        for (const auto& path : a.data) {
            check_sources(path, false);
        }
        a.teacher_tag = str(b, "teacher_tag");
        a.embedder = input(b, "embedder");
        a.settings = detail::embedder_settings_from(seeded(section(b, "config"), step.name));
        if (a.settings.registry) {
            throw InvalidArgument("the registry is set once at the top level of a pipeline config");
        }
        a.settings.registry = registry_;
        a.out = output(b, "out", result);
        distill_train_file(a);
    } else if (s == "retrieve") {
        detail::reject_unknown_keys(b, {"stage", "name", "index", "embedder", "queries", "mode", "k", "rrf_k", "out"},
                                    "retrieve step");
        RetrieveArgs a;
        a.index = input(b, "index");
        a.embedder = optional_input(b, "embedder");
        a.queries = input(b, "queries");
        const auto mode = b.contains("mode") ? str(b, "mode") : std::string("bm25");
        if (mode == "bm25") {
            a.mode = RetrieveMode::Bm25;
        } else if (mode == "dense") {
            a.mode = RetrieveMode::Dense;
        } else if (mode == "hybrid") {
            a.mode = RetrieveMode::Hybrid;
        } else {
            throw InvalidArgument("unknown retrieve mode \"" + mode + "\"");
        }
        if (b.contains("k")) a.k = b["k"].get<std::size_t>();
        if (b.contains("rrf_k")) a.rrf_k = b["rrf_k"].get<double>();
        a.out = output(b, "out", result);
        retrieve_file(a);
    } else if (s == "eval") {
        detail::reject_unknown_keys(b, {"stage", "name", "run", "qrels", "metrics", "out"}, "eval step");
        EvalArgs a;
        a.run = input(b, "run");
        a.qrels = input(b, "qrels");
        a.metrics = evalx::MetricSpec::parse_list(b.contains("metrics") ? str(b, "metrics")
                                                                        : std::string("ndcg@10,map@10,recall@30"));
        a.out = output(b, "out", result);
        eval_files(a);
    } else if (s == "validate") {
        detail::reject_unknown_keys(b, {"stage", "name", "input", "schema"}, "validate step");
        const auto report = validate_data(input(b, "input"), parse_schema(str(b, "schema")));
        if (!report.failures.empty()) {
            throw InvalidArgument(report.to_text());
        }
    } else {
        throw InvalidArgument("unknown stage \"" + s + "\"");
    }
}

}  // namespace

const std::vector<std::string>& known_stages() {
    static const std::vector<std::string> stages = {
        "normalize", "build-index", "mine",     "train-embed", "train-rerank", "score",
        "filter",    "distill-train", "retrieve", "eval",        "validate"};
    return stages;
}

PipelineResult run_pipeline(const fs::path& config_path, const PipelineOptions& options) {
    json config;
    std::uint64_t seed = 0;
    std::optional<distill::DatasetRegistry> registry;
    std::vector<Step> steps;
    fs::path work_dir;
    const fs::path config_dir = config_path.parent_path();

    try {
        config = detail::parse_json_text(io::read_file(config_path), "pipeline config");
        detail::reject_unknown_keys(config, {"seed", "work_dir", "registry", "steps"}, "pipeline config");
        if (config.contains("seed")) {
            if (!config["seed"].is_number_unsigned()) {
                throw InvalidArgument("pipeline config: seed must be a non-negative integer");
            }
            seed = config["seed"].get<std::uint64_t>();
        }
        if (config.contains("registry")) {
            registry = detail::registry_from(config["registry"]);
        }
        if (options.work_dir) {
            work_dir = *options.work_dir;
        } else {
            work_dir = config_dir / config.value("work_dir", std::string("work"));
        }
        if (!config.contains("steps") || !config["steps"].is_array() || config["steps"].empty()) {
            throw InvalidArgument("pipeline config: \"steps\" must be a non-empty array");
        }
        std::set<std::string> names;
        for (const auto& body : config["steps"]) {
            if (!body.is_object() || !body.contains("stage") || !body["stage"].is_string()) {
                throw InvalidArgument("pipeline config: every step needs a \"stage\" string");
            }
            Step step{body["stage"].get<std::string>(), {}, body};
            const auto& known = known_stages();
            if (std::find(known.begin(), known.end(), step.stage) == known.end()) {
                throw StageError(step.stage, "unknown stage");
            }
            step.name = body.contains("name") ? body["name"].get<std::string>() : step.stage;
            if (!names.insert(step.name).second) {
                throw InvalidArgument("pipeline config: duplicate step name \"" + step.name +
                                      "\"; give repeated stages distinct names");
            }
            steps.push_back(std::move(step));
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("config", e.what());
    }

    fs::create_directories(work_dir);
    Runner runner(config_dir, work_dir, seed, std::move(registry));
    PipelineResult result;
    for (const auto& step : steps) {
        try {
            runner.run(step, result);
        } catch (const std::exception& e) {
            throw StageError(step.name, e.what());
        }
        result.steps.push_back(step.name);
    }
    return result;
}

}  // namespace embkit::cli
