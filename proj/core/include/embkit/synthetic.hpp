#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "embkit/evalx.hpp"
#include "embkit/records.hpp"
#include "embkit/records_io.hpp"

namespace embkit::synthetic {

/// A retrieval world whose topics use disjoint vocabularies. Queries are
/// written with a topic's query words and documents with its document
/// words, so lexical overlap between a query and its relevant document is
/// zero and retrieval only works once an encoder has aligned the two.
struct ToyWorldConfig {
    std::size_t topics = 50;
    std::size_t background_docs = 150;
    std::size_t query_words_per_topic = 4;
    std::size_t doc_words_per_topic = 8;
    std::size_t query_length = 4;
    std::size_t doc_sentences = 3;
    std::size_t words_per_sentence = 5;
    std::size_t train_pairs_per_topic = 8;
    /// Trailing query words drawn from the topic's document vocabulary
    /// instead of its query vocabulary. 0 keeps queries and documents
    /// lexically disjoint.
    std::size_t query_doc_words = 0;
    /// Words per background sentence borrowed from topic (i mod topics),
    /// which turns background docs into lexical distractors.
    std::size_t background_topic_words = 0;
    std::string source = "toyqa";
    std::uint64_t seed = 1;
};

struct ToyWorld {
    std::vector<TextRecord> docs;           // topics relevant docs + background
    std::vector<TextRecord> eval_queries;   // one per topic
    evalx::QRels qrels;                     // eval query -> its relevant doc
    std::vector<io::QueryRecord> train_queries;  // with answer and positive_id
    std::vector<TrainTriplet> train_triplets;    // fresh samples, 1 cross-topic negative
};

ToyWorld make_toy_world(const ToyWorldConfig& cfg);

/// Word `index` of vocabulary `kind` ('q' query, 'd' document, 'b'
/// background, 'a' answer) for `topic`; unique per argument triple.
std::string toy_word(char kind, std::size_t topic, std::size_t index);

/// NLI-style triplets (anchor/entailment/contradiction) over the same
/// topic vocabularies, tagged with `source`.
std::vector<TrainTriplet> make_toy_nli(const ToyWorldConfig& cfg, std::size_t rows, const std::string& source,
                                       std::uint64_t seed);

}  // namespace embkit::synthetic
