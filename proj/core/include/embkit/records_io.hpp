#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embkit/records.hpp"

namespace embkit::io {

/// A query row: TextRecord fields plus the optional "answer" (for
/// pseudo-positive extraction) and "positive_id" (known relevant doc).
struct QueryRecord {
    TextRecord record;
    std::optional<std::string> answer;
    std::optional<std::string> positive_id;
};

/// JSONL line codecs. Parsers throw InvalidArgument with a message naming
/// the offending field.
TextRecord parse_text_record(std::string_view line);
TrainTriplet parse_triplet(std::string_view line);
QueryRecord parse_query(std::string_view line);
RankedList parse_run_row(std::string_view line);

std::string format_text_record(const TextRecord& record);
std::string format_triplet(const TrainTriplet& triplet);
std::string format_run_row(const RankedList& list);
std::string format_query(const QueryRecord& query);

/// Calls `fn(line_number, line)` for every non-blank line (1-based numbers).
template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn);

std::vector<TextRecord> read_text_records(const std::filesystem::path& path);
std::vector<TrainTriplet> read_triplets(const std::filesystem::path& path);
std::vector<QueryRecord> read_queries(const std::filesystem::path& path);
std::vector<RankedList> read_run(const std::filesystem::path& path);

void write_text_records(const std::filesystem::path& path, std::span<const TextRecord> records);
void write_triplets(const std::filesystem::path& path, std::span<const TrainTriplet> triplets);
void write_run(const std::filesystem::path& path, std::span<const RankedList> lists);
void write_queries(const std::filesystem::path& path, std::span<const QueryRecord> queries);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace embkit::io

#include <fstream>

#include "embkit/error.hpp"

template <typename Fn>
void embkit::io::for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        fn(number, std::string_view(line));
    }
}
