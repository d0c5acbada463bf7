#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "embkit/error.hpp"

// Little-endian primitives for the versioned model and index files.
namespace embkit::detail {

class BinaryWriter {
  public:
    explicit BinaryWriter(const std::filesystem::path& path)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw IoError("cannot write " + path.string());
        }
    }

    void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            out_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void str(std::string_view s) {
        u64(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void finish() {
        out_.flush();
        if (!out_) {
            throw IoError("write failed for " + path_.string());
        }
    }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class BinaryReader {
  public:
    explicit BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) {
            throw IoError("cannot open " + path.string());
        }
    }

    void expect_magic(std::string_view tag) {
        std::string got(tag.size(), '\0');
        in_.read(got.data(), static_cast<std::streamsize>(got.size()));
        if (!in_ || got != tag) {
            throw IoError(path_.string() + " is not a " + std::string(tag) + " file");
        }
    }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        }
        return v;
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        }
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str() {
        const auto n = u64();
        if (n > (std::uint64_t{1} << 32)) {
            throw IoError(path_.string() + ": corrupt string length");
        }
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        if (!in_) {
            truncated();
        }
        return s;
    }

    /// Caps element counts read from the file so corrupt headers fail fast.
    std::uint64_t count(std::uint64_t limit = std::uint64_t{1} << 34) {
        const auto n = u64();
        if (n > limit) {
            throw IoError(path_.string() + ": corrupt element count");
        }
        return n;
    }

    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) {
            throw IoError(path_.string() + ": trailing bytes");
        }
    }

  private:
    unsigned char byte() {
        const int c = in_.get();
        if (c == std::char_traits<char>::eof()) {
            truncated();
        }
        return static_cast<unsigned char>(c);
    }

    [[noreturn]] void truncated() { throw IoError(path_.string() + ": truncated file"); }

    std::filesystem::path path_;
    std::ifstream in_;
};

}  // namespace embkit::detail
