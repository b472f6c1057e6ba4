#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softdistill/errors.h"

namespace softdistill {

// Little-endian binary writer/reader for the on-disk container formats.
// All multi-byte fields are stored little-endian regardless of host order.

static_assert(std::endian::native == std::endian::little,
              "big-endian hosts would need byte swapping in serialize.h");

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open for writing: " + path);
        path_ = path;
    }

    void magic(std::string_view m) { out_.write(m.data(), static_cast<std::streamsize>(m.size())); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i32(std::int32_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }

    void f64_array(std::span<const double> vals) { raw(vals.data(), vals.size() * sizeof(double)); }
    void i32_array(std::span<const std::int32_t> vals) { raw(vals.data(), vals.size() * sizeof(std::int32_t)); }
    void i64_array(std::span<const std::int64_t> vals) { raw(vals.data(), vals.size() * sizeof(std::int64_t)); }

    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failed: " + path_);
    }

private:
    void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IoError("cannot open for reading: " + path);
    }

    // Reads and checks an 8-byte magic; wrong bytes are a format error.
    void expect_magic(std::string_view want) {
        std::string got(want.size(), '\0');
        in_.read(got.data(), static_cast<std::streamsize>(want.size()));
        if (in_.gcount() != static_cast<std::streamsize>(want.size()))
            throw TruncatedError(path_ + ": truncated before magic");
        if (got != want) throw FormatError(path_ + ": bad magic, expected \"" + std::string(want) + "\"");
    }

    std::uint32_t u32() { return scalar<std::uint32_t>("u32"); }
    std::uint64_t u64() { return scalar<std::uint64_t>("u64"); }
    std::int32_t i32() { return scalar<std::int32_t>("i32"); }
    std::int64_t i64() { return scalar<std::int64_t>("i64"); }
    double f64() { return scalar<double>("f64"); }

    std::vector<double> f64_array(std::size_t n) { return array<double>(n); }
    std::vector<std::int32_t> i32_array(std::size_t n) { return array<std::int32_t>(n); }
    std::vector<std::int64_t> i64_array(std::size_t n) { return array<std::int64_t>(n); }

    std::string str() {
        const std::uint32_t n = u32();
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n)) throw TruncatedError(path_ + ": truncated string");
        return s;
    }

    void expect_eof() {
        char c;
        if (in_.read(&c, 1)) throw FormatError(path_ + ": trailing bytes after payload");
    }

private:
    template <typename T>
    T scalar(const char* what) {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        if (in_.gcount() != static_cast<std::streamsize>(sizeof v))
            throw TruncatedError(path_ + ": truncated " + what);
        return v;
    }

    template <typename T>
    std::vector<T> array(std::size_t n) {
        std::vector<T> vals(n);
        const std::streamsize bytes = static_cast<std::streamsize>(n * sizeof(T));
        in_.read(reinterpret_cast<char*>(vals.data()), bytes);
        if (in_.gcount() != bytes) throw TruncatedError(path_ + ": truncated payload");
        return vals;
    }

    std::ifstream in_;
    std::string path_;
};

}  // namespace softdistill
