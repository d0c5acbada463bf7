#include "embkit/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "embkit/error.hpp"
#include "embkit/rng.hpp"

namespace embkit::synthetic {

namespace {

std::string padded(std::size_t n, int width = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, n);
    return buf;
}

std::string pick(Rng& rng, char kind, std::size_t topic, std::size_t vocab) {
    return toy_word(kind, topic, static_cast<std::size_t>(rng.below(vocab)));
}

std::string sentence(Rng& rng, char kind, std::size_t topic, std::size_t vocab, std::size_t words) {
    std::string s;
    for (std::size_t w = 0; w < words; ++w) {
        if (w > 0) {
            s += ' ';
        }
        s += pick(rng, kind, topic, vocab);
    }
    return s + "。";
}

std::string document(Rng& rng, char kind, std::size_t topic, const ToyWorldConfig& cfg) {
    std::string doc;
    for (std::size_t s = 0; s < cfg.doc_sentences; ++s) {
        doc += sentence(rng, kind, topic, cfg.doc_words_per_topic, cfg.words_per_sentence);
    }
    return doc;
}

std::string query(Rng& rng, std::size_t topic, const ToyWorldConfig& cfg) {
    std::string q;
    const std::size_t lexical_from = cfg.query_length - std::min(cfg.query_doc_words, cfg.query_length);
    for (std::size_t w = 0; w < cfg.query_length; ++w) {
        if (w > 0) {
            q += ' ';
        }
        q += w < lexical_from ? pick(rng, 'q', topic, cfg.query_words_per_topic)
                              : pick(rng, 'd', topic, cfg.doc_words_per_topic);
    }
    return q + "?";
}

std::string background(Rng& rng, std::size_t i, const ToyWorldConfig& cfg) {
    const std::size_t borrowed = std::min(cfg.background_topic_words, cfg.words_per_sentence);
    std::string doc;
    for (std::size_t s = 0; s < cfg.doc_sentences; ++s) {
        for (std::size_t w = 0; w < cfg.words_per_sentence; ++w) {
            if (w > 0) {
                doc += ' ';
            }
            doc += w < borrowed ? pick(rng, 'd', i % cfg.topics, cfg.doc_words_per_topic)
                                : pick(rng, 'b', i, cfg.doc_words_per_topic);
        }
        doc += "。";
    }
    return doc;
}

}  // namespace

std::string toy_word(char kind, std::size_t topic, std::size_t index) {
    return std::string(1, kind) + std::to_string(topic) + "x" + std::to_string(index);
}

ToyWorld make_toy_world(const ToyWorldConfig& cfg) {
    if (cfg.topics == 0 || cfg.query_words_per_topic == 0 || cfg.doc_words_per_topic == 0 ||
        cfg.query_length == 0 || cfg.doc_sentences == 0 || cfg.words_per_sentence == 0) {
        throw InvalidArgument("toy world sizes must be positive");
    }
    Rng rng(cfg.seed);
    ToyWorld world;
    for (std::size_t t = 0; t < cfg.topics; ++t) {
        const std::string doc_id = "doc-" + padded(t);
        // The answer word sits in the first sentence of the relevant doc only.
        std::string text = document(rng, 'd', t, cfg);
        text.insert(0, toy_word('a', t, 0) + " ");
        world.docs.push_back(TextRecord{doc_id, std::move(text), cfg.source});

        const std::string qid = "q-" + padded(t);
        world.eval_queries.push_back(TextRecord{qid, query(rng, t, cfg), cfg.source});
        world.qrels[qid][doc_id] = 1;

        io::QueryRecord train_query;
        train_query.record = TextRecord{"tq-" + padded(t), query(rng, t, cfg), cfg.source};
        train_query.answer = toy_word('a', t, 0);
        train_query.positive_id = doc_id;
        world.train_queries.push_back(std::move(train_query));
    }
    for (std::size_t i = 0; i < cfg.background_docs; ++i) {
        world.docs.push_back(TextRecord{"bg-" + padded(i), background(rng, i, cfg), cfg.source});
    }
    for (std::size_t t = 0; t < cfg.topics; ++t) {
        for (std::size_t k = 0; k < cfg.train_pairs_per_topic; ++k) {
            TrainTriplet row;
            row.anchor = query(rng, t, cfg);
            row.positive = document(rng, 'd', t, cfg);
            if (cfg.topics > 1) {
                auto other = static_cast<std::size_t>(rng.below(cfg.topics - 1));
                other += other >= t ? 1 : 0;
                row.negatives.push_back(document(rng, 'd', other, cfg));
            }
            row.source = cfg.source;
            world.train_triplets.push_back(std::move(row));
        }
    }
    return world;
}

std::vector<TrainTriplet> make_toy_nli(const ToyWorldConfig& cfg, std::size_t rows, const std::string& source,
                                       std::uint64_t seed) {
    if (cfg.topics < 2) {
        throw InvalidArgument("toy NLI rows need at least two topics");
    }
    Rng rng(seed);
    std::vector<TrainTriplet> out;
    out.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto t = static_cast<std::size_t>(rng.below(cfg.topics));
        auto other = static_cast<std::size_t>(rng.below(cfg.topics - 1));
        other += other >= t ? 1 : 0;
        TrainTriplet row;
        row.anchor = sentence(rng, 'd', t, cfg.doc_words_per_topic, cfg.words_per_sentence);
        row.positive = sentence(rng, 'd', t, cfg.doc_words_per_topic, cfg.words_per_sentence);
        row.negatives.push_back(sentence(rng, 'd', other, cfg.doc_words_per_topic, cfg.words_per_sentence));
        row.source = source;
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace embkit::synthetic
