#include "embkit/records_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "embkit/error.hpp"

namespace embkit::io {

namespace {

using nlohmann::json;

json parse_object(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw InvalidArgument("row is not a JSON object");
    }
    return j;
}

std::string require_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw InvalidArgument(std::string("missing field \"") + key + "\"");
    }
    if (!it->is_string()) {
        throw InvalidArgument(std::string("field \"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw InvalidArgument(std::string("field \"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

double require_number(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
        throw InvalidArgument(std::string("field \"") + key + "\" must be a number");
    }
    return it->get<double>();
}

template <typename T, typename Parse>
std::vector<T> read_rows(const std::filesystem::path& path, Parse parse) {
    std::vector<T> rows;
    for_each_line(path, [&](std::size_t number, std::string_view line) {
        try {
            rows.push_back(parse(line));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    });
    return rows;
}

template <typename T, typename Format>
void write_rows(const std::filesystem::path& path, std::span<const T> rows, Format format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (const auto& row : rows) {
        out << format(row) << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace

TextRecord parse_text_record(std::string_view line) {
    const json j = parse_object(line);
    return TextRecord{require_string(j, "id"), require_string(j, "text"), require_string(j, "source")};
}

TrainTriplet parse_triplet(std::string_view line) {
    const json j = parse_object(line);
    TrainTriplet t;
    t.anchor = require_string(j, "anchor");
    t.positive = require_string(j, "positive");
    t.source = require_string(j, "source");
    if (const auto it = j.find("negatives"); it != j.end()) {
        if (!it->is_array()) {
            throw InvalidArgument("field \"negatives\" must be an array");
        }
        for (const auto& n : *it) {
            if (!n.is_string()) {
                throw InvalidArgument("field \"negatives\" must hold strings");
            }
            t.negatives.push_back(n.get<std::string>());
        }
    } else {
        throw InvalidArgument("missing field \"negatives\"");
    }
    if (const auto it = j.find("teacher_scores"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) {
            throw InvalidArgument("field \"teacher_scores\" must be an array");
        }
        std::vector<double> scores;
        for (const auto& s : *it) {
            if (!s.is_number()) {
                throw InvalidArgument("field \"teacher_scores\" must hold numbers");
            }
            scores.push_back(s.get<double>());
        }
        t.teacher_scores = std::move(scores);
    }
    check_triplet(t);
    return t;
}

QueryRecord parse_query(std::string_view line) {
    const json j = parse_object(line);
    QueryRecord q;
    q.record = TextRecord{require_string(j, "id"), require_string(j, "text"), require_string(j, "source")};
    q.answer = optional_string(j, "answer");
    q.positive_id = optional_string(j, "positive_id");
    return q;
}

RankedList parse_run_row(std::string_view line) {
    const json j = parse_object(line);
    RankedList list;
    list.query_id = require_string(j, "query_id");
    const auto it = j.find("ranking");
    if (it == j.end() || !it->is_array()) {
        throw InvalidArgument("field \"ranking\" must be an array");
    }
    for (const auto& entry : *it) {
        if (!entry.is_object()) {
            throw InvalidArgument("ranking entries must be objects");
        }
        list.entries.push_back(ScoredDoc{require_string(entry, "doc_id"), require_number(entry, "score")});
    }
    check_ranked_list(list);
    return list;
}

std::string format_text_record(const TextRecord& record) {
    json j = json::object();
    j["id"] = record.id;
    j["text"] = record.text;
    j["source"] = record.source;
    return j.dump();
}

std::string format_triplet(const TrainTriplet& triplet) {
    json j = json::object();
    j["anchor"] = triplet.anchor;
    j["positive"] = triplet.positive;
    j["negatives"] = triplet.negatives;
    j["source"] = triplet.source;
    if (triplet.teacher_scores) {
        j["teacher_scores"] = *triplet.teacher_scores;
    }
    return j.dump();
}

std::string format_run_row(const RankedList& list) {
    json ranking = json::array();
    for (const auto& e : list.entries) {
        ranking.push_back(json{{"doc_id", e.doc_id}, {"score", e.score}});
    }
    json j = json::object();
    j["query_id"] = list.query_id;
    j["ranking"] = std::move(ranking);
    return j.dump();
}

std::string format_query(const QueryRecord& query) {
    json j = json::object();
    j["id"] = query.record.id;
    j["text"] = query.record.text;
    j["source"] = query.record.source;
    if (query.answer) {
        j["answer"] = *query.answer;
    }
    if (query.positive_id) {
        j["positive_id"] = *query.positive_id;
    }
    return j.dump();
}

std::vector<TextRecord> read_text_records(const std::filesystem::path& path) {
    return read_rows<TextRecord>(path, parse_text_record);
}

std::vector<TrainTriplet> read_triplets(const std::filesystem::path& path) {
    return read_rows<TrainTriplet>(path, parse_triplet);
}

std::vector<QueryRecord> read_queries(const std::filesystem::path& path) {
    return read_rows<QueryRecord>(path, parse_query);
}

std::vector<RankedList> read_run(const std::filesystem::path& path) {
    return read_rows<RankedList>(path, parse_run_row);
}

void write_text_records(const std::filesystem::path& path, std::span<const TextRecord> records) {
    write_rows(path, records, format_text_record);
}

void write_triplets(const std::filesystem::path& path, std::span<const TrainTriplet> triplets) {
    write_rows(path, triplets, format_triplet);
}

void write_run(const std::filesystem::path& path, std::span<const RankedList> lists) {
    write_rows(path, lists, format_run_row);
}

void write_queries(const std::filesystem::path& path, std::span<const QueryRecord> queries) {
    write_rows(path, queries, format_query);
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
    write_rows(path, lines, [](const std::string& s) -> const std::string& { return s; });
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::vector<std::string> lines;
    for_each_line(path, [&](std::size_t, std::string_view line) { lines.emplace_back(line); });
    return lines;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace embkit::io
