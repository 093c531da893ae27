// Copyright 2026 The ddmm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little helpers for the versioned binary cache files. Every file starts with
// an 8-byte magic tag and a 32-bit format version; numbers are written in host
// byte order, which round-trips bit-exactly on the same platform.

#pragma once

#include "ddmm/error.hpp"

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace ddmm {

class BinaryWriter {
public:
    BinaryWriter(const std::string& path, const char (&magic)[9], std::uint32_t version) : path_(path) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        require(out_.good(), ErrorCode::IoError, "cannot open " + path + " for writing");
        out_.write(magic, 8);
        put(version);
    }

    template <typename T>
    void put(const T& value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

    template <typename T>
    void put_vector(const std::vector<T>& values) {
        put(static_cast<std::uint64_t>(values.size()));
        if (!values.empty())
            out_.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
    }

    void finish() {
        out_.flush();
        require(out_.good(), ErrorCode::IoError, "write to " + path_ + " failed");
    }

private:
    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    BinaryReader(const std::string& path, const char (&magic)[9], std::uint32_t version) : path_(path) {
        in_.open(path, std::ios::binary);
        require(in_.good(), ErrorCode::IoError, "cannot open " + path);
        char tag[8];
        in_.read(tag, 8);
        require(in_.good() && std::string(tag, 8) == std::string(magic, 8), ErrorCode::FormatError,
                path + " is not a " + std::string(magic, 8) + " file");
        const auto v = get<std::uint32_t>();
        require(v == version, ErrorCode::FormatError,
                path + " has format version " + std::to_string(v) + ", expected " + std::to_string(version));
    }

    template <typename T>
    T get() {
        T value{};
        in_.read(reinterpret_cast<char*>(&value), sizeof(T));
        require(in_.good(), ErrorCode::FormatError, path_ + " is truncated");
        return value;
    }

    template <typename T>
    std::vector<T> get_vector(std::uint64_t max_size = (1ULL << 34)) {
        const auto n = get<std::uint64_t>();
        require(n <= max_size, ErrorCode::FormatError, path_ + " declares an implausible array size");
        std::vector<T> values(n);
        if (n > 0) {
            in_.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(T)));
            require(in_.good(), ErrorCode::FormatError, path_ + " is truncated");
        }
        return values;
    }

private:
    std::string path_;
    std::ifstream in_;
};

/// FNV-1a over raw bytes, used for cache keys.
inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::vector<double>& values, std::uint64_t seed = 1469598103934665603ULL) {
    return fnv1a(values.data(), values.size() * sizeof(double), seed);
}

}  // namespace ddmm
