#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "embkit/records.hpp"
#include "embkit/rng.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = fs::temp_directory_path() /
                ("embkit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

  private:
    fs::path path_;
};

/// Space separated words w0..w{vocab-1}.
inline std::string random_sentence(embkit::Rng& rng, std::size_t vocab, std::size_t min_words,
                                   std::size_t max_words, const std::string& prefix = "w") {
    const std::size_t n = min_words + rng.below(max_words - min_words + 1);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += prefix + std::to_string(rng.below(vocab));
    }
    return out;
}

inline std::vector<std::string> unique_texts(embkit::Rng& rng, std::size_t count, std::size_t vocab,
                                             std::size_t min_words, std::size_t max_words) {
    std::vector<std::string> out;
    while (out.size() < count) {
        auto s = random_sentence(rng, vocab, min_words, max_words);
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace testsupport
