#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace spinlets::cli {

/// Hex SHA-256 of a file, or of the sorted (name, digest) listing of a directory.
std::string sha256_digest(const std::filesystem::path& path);

/// What a run consumed and produced; serialized as manifest.json in the output directory.
struct Manifest {
    std::string subcommand;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::map<std::string, std::string> flags;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::string status = "ok";
    std::string error;

    std::string to_json() const;
    void write(const std::filesystem::path& out_dir) const;
};

}  // namespace spinlets::cli
