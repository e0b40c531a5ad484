#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "modelmesh/errors.hpp"

namespace modelmesh {

// Little-endian byte sink for the MMV1/MMD1 container formats. Floats are
// written as raw IEEE-754 bits so round-trips are bit-exact.
class ByteWriter {
public:
    void put_u8(uint8_t v) { out_.push_back(v); }

    void put_u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void put_u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void put_f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        put_u64(bits);
    }

    void put_bytes(std::span<const uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    void put_bytes(const std::string& s) {
        out_.insert(out_.end(), s.begin(), s.end());
    }

    std::vector<uint8_t> take() { return std::move(out_); }
    size_t size() const { return out_.size(); }

private:
    std::vector<uint8_t> out_;
};

// Bounds-checked reader; overruns raise FormatError naming the field.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t get_u8(const char* field) {
        need(1, field);
        return data_[pos_++];
    }

    uint32_t get_u32(const char* field) {
        need(4, field);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t get_u64(const char* field) {
        need(8, field);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    double get_f64(const char* field) {
        const uint64_t bits = get_u64(field);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    std::span<const uint8_t> get_bytes(size_t n, const char* field) {
        need(n, field);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    size_t remaining() const { return data_.size() - pos_; }
    size_t position() const { return pos_; }

    void expect_end(const char* what) {
        if (remaining() != 0)
            throw FormatError(std::string(what) + ": " + std::to_string(remaining()) +
                              " trailing bytes");
    }

private:
    void need(size_t n, const char* field) {
        if (data_.size() - pos_ < n)
            throw FormatError(std::string("truncated input while reading ") + field);
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

std::string base64_encode(std::span<const uint8_t> data);
std::vector<uint8_t> base64_decode(const std::string& text);

std::vector<uint8_t> read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::span<const uint8_t> data);

}  // namespace modelmesh
