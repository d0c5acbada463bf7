#include "embkit/lexical_index.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "binary_io.hpp"
#include "embkit/error.hpp"
#include "embkit/utf8.hpp"

namespace embkit::lexical {

namespace {

constexpr std::string_view kIndexMagic = "EMBKIDX\n";
constexpr std::uint32_t kIndexVersion = 1;

enum class RunKind { None, Latin, Cjk };

RunKind classify(char32_t cp) {
    if (utf8::is_latin_alnum(cp)) {
        return RunKind::Latin;
    }
    if (utf8::is_cjk(cp)) {
        return RunKind::Cjk;
    }
    return RunKind::None;
}

void flush_run(RunKind kind, const std::u32string& run, std::vector<std::string>& out) {
    if (run.empty()) {
        return;
    }
    if (kind == RunKind::Latin) {
        std::string token;
        for (const char32_t cp : run) {
            utf8::append(token, utf8::to_lower(cp));
        }
        out.push_back(std::move(token));
    } else if (run.size() == 1) {
        out.push_back(utf8::encode(run));
    } else {
        for (std::size_t i = 0; i + 1 < run.size(); ++i) {
            out.push_back(utf8::encode(std::u32string_view(run).substr(i, 2)));
        }
    }
}

}  // namespace

std::vector<std::string> tokenize_lexical(std::string_view text) {
    std::vector<std::string> tokens;
    std::u32string run;
    RunKind run_kind = RunKind::None;
    for (const char32_t cp : utf8::decode(text)) {
        const RunKind kind = classify(cp);
        if (kind != run_kind) {
            flush_run(run_kind, run, tokens);
            run.clear();
            run_kind = kind;
        }
        if (kind != RunKind::None) {
            run.push_back(cp);
        }
    }
    flush_run(run_kind, run, tokens);
    return tokens;
}

void Bm25Params::validate() const {
    if (!(k1 >= 0.0) || !std::isfinite(k1)) {
        throw InvalidArgument("BM25 k1 must be >= 0");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw InvalidArgument("BM25 b must lie in [0, 1]");
    }
}

InvertedIndex InvertedIndex::build(std::span<const TextRecord> docs, const Bm25Params& params) {
    params.validate();
    std::vector<const TextRecord*> sorted;
    sorted.reserve(docs.size());
    for (const auto& d : docs) {
        sorted.push_back(&d);
    }
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i]->id == sorted[i - 1]->id) {
            throw InvalidArgument("duplicate doc id '" + sorted[i]->id + "'");
        }
    }

    InvertedIndex index;
    index.params_ = params;
    index.doc_ids_.reserve(sorted.size());
    index.doc_texts_.reserve(sorted.size());
    index.doc_sources_.reserve(sorted.size());
    index.doc_lengths_.reserve(sorted.size());
    std::uint64_t total_length = 0;
    for (std::uint32_t ordinal = 0; ordinal < sorted.size(); ++ordinal) {
        const TextRecord& doc = *sorted[ordinal];
        const auto tokens = tokenize_lexical(doc.text);
        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : tokens) {
            ++tf[t];
        }
        // Ordinals increase monotonically, so appending keeps postings sorted.
        for (const auto& [term, count] : tf) {
            index.postings_[std::string(term)].push_back(Posting{ordinal, count});
        }
        index.doc_ids_.push_back(doc.id);
        index.doc_texts_.push_back(doc.text);
        index.doc_sources_.push_back(doc.source);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_length += tokens.size();
    }
    index.avg_doc_length_ =
        sorted.empty() ? 0.0 : static_cast<double>(total_length) / static_cast<double>(sorted.size());
    return index;
}

std::optional<std::uint32_t> InvertedIndex::find_doc(std::string_view doc_id) const {
    const auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
    if (it == doc_ids_.end() || *it != doc_id) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - doc_ids_.begin());
}

std::span<const Posting> InvertedIndex::postings(const std::string& term) const {
    const auto it = postings_.find(term);
    if (it == postings_.end()) {
        return {};
    }
    return it->second;
}

double InvertedIndex::idf(std::size_t df) const {
    const auto n = static_cast<double>(doc_count());
    const auto d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double InvertedIndex::tf_weight(double tf, double doc_length) const {
    const double norm = avg_doc_length_ > 0.0 ? doc_length / avg_doc_length_ : 0.0;
    return tf * (params_.k1 + 1.0) / (tf + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    detail::BinaryWriter w(path);
    w.magic(kIndexMagic);
    w.u32(kIndexVersion);
    w.f64(params_.k1);
    w.f64(params_.b);
    w.u64(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        w.str(doc_ids_[i]);
        w.str(doc_texts_[i]);
        w.str(doc_sources_[i]);
        w.u32(doc_lengths_[i]);
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) {
        terms.push_back(&term);
    }
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
    w.u64(terms.size());
    for (const auto* term : terms) {
        const auto& list = postings_.at(*term);
        w.str(*term);
        w.u64(list.size());
        for (const auto& p : list) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    w.finish();
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    detail::BinaryReader r(path);
    r.expect_magic(kIndexMagic);
    if (const auto version = r.u32(); version != kIndexVersion) {
        throw IoError(path.string() + ": unsupported index version " + std::to_string(version));
    }
    InvertedIndex index;
    index.params_.k1 = r.f64();
    index.params_.b = r.f64();
    const auto n = r.count();
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        index.doc_ids_.push_back(r.str());
        index.doc_texts_.push_back(r.str());
        index.doc_sources_.push_back(r.str());
        index.doc_lengths_.push_back(r.u32());
        total += index.doc_lengths_.back();
    }
    if (!std::is_sorted(index.doc_ids_.begin(), index.doc_ids_.end()) ||
        std::adjacent_find(index.doc_ids_.begin(), index.doc_ids_.end()) != index.doc_ids_.end()) {
        throw IoError(path.string() + ": doc ids are not strictly ascending");
    }
    index.avg_doc_length_ = n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
    const auto terms = r.count();
    for (std::uint64_t t = 0; t < terms; ++t) {
        std::string term = r.str();
        const auto len = r.count();
        std::vector<Posting> list;
        list.reserve(len);
        for (std::uint64_t i = 0; i < len; ++i) {
            const auto doc = r.u32();
            const auto tf = r.u32();
            if (doc >= n || (!list.empty() && doc <= list.back().doc)) {
                throw IoError(path.string() + ": corrupt postings for '" + term + "'");
            }
            list.push_back(Posting{doc, tf});
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    r.expect_end();
    return index;
}

double bm25_score(const InvertedIndex& index, std::span<const std::string> query_tokens, std::string_view doc_id) {
    const auto ordinal = index.find_doc(doc_id);
    if (!ordinal) {
        throw InvalidArgument("unknown doc id '" + std::string(doc_id) + "'");
    }
    const double dl = index.doc_length(*ordinal);
    double score = 0.0;
    for (const auto& term : query_tokens) {
        const auto list = index.postings(term);
        const auto it = std::lower_bound(list.begin(), list.end(), *ordinal,
                                         [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (it == list.end() || it->doc != *ordinal) {
            continue;
        }
        score += index.idf(list.size()) * index.tf_weight(it->tf, dl);
    }
    return score;
}

double bm25_score_tokens(const InvertedIndex& index, std::span<const std::string> query_tokens,
                         std::span<const std::string> doc_tokens) {
    std::map<std::string_view, std::uint32_t> tf;
    for (const auto& t : doc_tokens) {
        ++tf[t];
    }
    const double dl = static_cast<double>(doc_tokens.size());
    double score = 0.0;
    for (const auto& term : query_tokens) {
        const auto it = tf.find(term);
        if (it == tf.end()) {
            continue;
        }
        score += index.idf(index.document_frequency(term)) * index.tf_weight(it->second, dl);
    }
    return score;
}

RankedList search_topk_tokens(const InvertedIndex& index, std::span<const std::string> query_tokens,
                              std::size_t k) {
    if (k == 0) {
        throw InvalidArgument("search_topk needs k >= 1");
    }
    // Term-at-a-time accumulation in query order gives bit-identical sums
    // to bm25_score, which adds the same terms in the same order.
    std::vector<double> acc(index.doc_count(), 0.0);
    std::vector<bool> touched(index.doc_count(), false);
    std::vector<std::uint32_t> candidates;
    for (const auto& term : query_tokens) {
        const auto list = index.postings(term);
        if (list.empty()) {
            continue;
        }
        const double idf = index.idf(list.size());
        for (const auto& p : list) {
            acc[p.doc] += idf * index.tf_weight(p.tf, index.doc_length(p.doc));
            if (!touched[p.doc]) {
                touched[p.doc] = true;
                candidates.push_back(p.doc);
            }
        }
    }
    const auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (acc[a] != acc[b]) {
            return acc[a] > acc[b];
        }
        return a < b;
    };
    const std::size_t take = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      better);
    RankedList out;
    out.entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.entries.push_back(ScoredDoc{index.doc_id(candidates[i]), acc[candidates[i]]});
    }
    return out;
}

RankedList search_topk(const InvertedIndex& index, std::string_view query, std::size_t k) {
    const auto tokens = tokenize_lexical(query);
    return search_topk_tokens(index, tokens, k);
}

}  // namespace embkit::lexical
