#ifndef GCSFNO_BINIO_HPP
#define GCSFNO_BINIO_HPP

// Little-endian binary file helpers shared by the archive, dataset, and
// checkpoint formats. Readers track their byte offset so malformed files
// can be reported precisely.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gcsfno/errors.hpp"

namespace gcsfno::binio {

class Writer {
  public:
    explicit Writer(const std::string& path) : path_(path), f_(path, std::ios::binary) {
        if (!f_) throw ConfigError("cannot open for writing: " + path);
    }

    void bytes(const void* p, std::size_t n) {
        f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        pos_ += n;
    }
    void magic(const char* m, std::size_t n) { bytes(m, n); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void f32_array(const float* p, std::size_t n) { bytes(p, n * 4); }
    void f64_array(const double* p, std::size_t n) { bytes(p, n * 8); }

    std::size_t pos() const { return pos_; }

    void close() {
        f_.close();
        if (!f_) throw ConfigError("write failed: " + path_);
    }

  private:
    std::string path_;
    std::ofstream f_;
    std::size_t pos_ = 0;
};

class Reader {
  public:
    explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
        if (!f_) throw ConfigError("cannot open for reading: " + path);
        f_.seekg(0, std::ios::end);
        size_ = static_cast<std::size_t>(f_.tellg());
        f_.seekg(0);
    }

    void bytes(void* p, std::size_t n) {
        if (pos_ + n > size_)
            throw FormatError(path_ + ": truncated, wanted " + std::to_string(n) + " more bytes",
                              pos_);
        f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!f_) throw FormatError(path_ + ": read failed", pos_);
        pos_ += n;
    }
    void magic(const char* expect, std::size_t n) {
        std::vector<char> got(n);
        const std::size_t at = pos_;
        bytes(got.data(), n);
        if (std::memcmp(got.data(), expect, n) != 0)
            throw FormatError(path_ + ": bad magic", at);
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    float f32() {
        float v;
        bytes(&v, 4);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    void f32_array(float* p, std::size_t n) { bytes(p, n * 4); }
    void f64_array(double* p, std::size_t n) { bytes(p, n * 8); }

    std::size_t pos() const { return pos_; }
    std::size_t size() const { return size_; }
    bool at_end() const { return pos_ == size_; }
    const std::string& path() const { return path_; }

    void require_end() {
        if (!at_end()) throw FormatError(path_ + ": trailing bytes after payload", pos_);
    }

  private:
    std::string path_;
    std::ifstream f_;
    std::size_t size_ = 0;
    std::size_t pos_ = 0;
};

}  // namespace gcsfno::binio

#endif
