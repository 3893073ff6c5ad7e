#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "voltgrid/errors.hpp"

namespace voltgrid {

// Shortest decimal that round-trips; keeps text outputs byte-deterministic.
inline std::string to_string_shortest(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc()) throw Error("double formatting failed");
    return std::string(buf, res.ptr);
}

// Write via temp file + rename so readers never observe a partial file.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw Error("short write: " + tmp.string());
    }
    fs::rename(tmp, target);
}

// FNV-1a 64-bit content hash, used for manifest checksums.
inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace voltgrid
