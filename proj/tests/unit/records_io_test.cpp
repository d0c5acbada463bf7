#include <gtest/gtest.h>

#include "embkit/error.hpp"
#include "embkit/records_io.hpp"
#include "support/fixtures.hpp"

using namespace embkit;
using namespace embkit::io;

TEST(RecordsIo, TextRecordRoundTrip) {
    const TextRecord r{"d1", "東京 \"quoted\"\n", "wiki"};
    EXPECT_EQ(parse_text_record(format_text_record(r)), r);
    EXPECT_THROW(parse_text_record("{\"id\": \"x\"}"), InvalidArgument);
    EXPECT_THROW(parse_text_record("not json"), InvalidArgument);
    EXPECT_THROW(parse_text_record("[1,2]"), InvalidArgument);
    EXPECT_THROW(parse_text_record(R"({"id": 1, "text": "t", "source": "s"})"), InvalidArgument);
}

TEST(RecordsIo, TripletRoundTripAndChecks) {
    const TrainTriplet t{"q", "p", {"n1", "n2"}, "qa", std::vector<double>{0.9, 0.1, 0.2}};
    EXPECT_EQ(parse_triplet(format_triplet(t)), t);
    const TrainTriplet bare{"q", "p", {}, "qa", std::nullopt};
    EXPECT_EQ(parse_triplet(format_triplet(bare)), bare);
    EXPECT_THROW(parse_triplet(R"({"anchor":"q","positive":"p","source":"s"})"), InvalidArgument);
    EXPECT_THROW(parse_triplet(R"({"anchor":"q","positive":"p","negatives":["a"],"source":"s","teacher_scores":[1]})"),
                 InvalidArgument);
    EXPECT_THROW(parse_triplet(R"({"anchor":"","positive":"p","negatives":[],"source":"s"})"), InvalidArgument);
}

TEST(RecordsIo, QueryOptionalFields) {
    QueryRecord q{{"q1", "text", "qa"}, std::string("42"), std::nullopt};
    const auto back = parse_query(format_query(q));
    EXPECT_EQ(back.record, q.record);
    EXPECT_EQ(back.answer, q.answer);
    EXPECT_FALSE(back.positive_id);
}

TEST(RecordsIo, RunRowRoundTrip) {
    const RankedList l{"q1", {{"d1", 2.5}, {"d2", 0.125}}};
    EXPECT_EQ(parse_run_row(format_run_row(l)), l);
}

TEST(RecordsIo, FilesSkipBlankLinesAndCiteLineNumbers) {
    testsupport::TempDir dir("io");
    const std::vector<TextRecord> rows = {{"a", "x", "s"}, {"b", "y", "s"}};
    write_text_records(dir / "r.jsonl", rows);
    EXPECT_EQ(read_text_records(dir / "r.jsonl"), rows);
    write_file(dir / "bad.jsonl", format_text_record(rows[0]) + "\n\n{broken\n");
    try {
        read_text_records(dir / "bad.jsonl");
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
    }
    EXPECT_THROW(read_text_records(dir / "missing.jsonl"), IoError);
}
