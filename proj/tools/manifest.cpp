#include "manifest.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "spinlets/error.hpp"

namespace spinlets::cli {

namespace {

std::string hex(const unsigned char* bytes, unsigned length) {
    std::string out;
    char buf[3];
    for (unsigned k = 0; k < length; ++k) {
        std::snprintf(buf, sizeof buf, "%02x", bytes[k]);
        out += buf;
    }
    return out;
}

class Sha256 {
  public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw Error("cannot initialize SHA-256");
    }
    void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_.get(), data, size); }
    std::string finish() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned length = 0;
        EVP_DigestFinal_ex(ctx_.get(), md.data(), &length);
        return hex(md.data(), length);
    }

  private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    Sha256 sha;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        sha.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return sha.finish();
}

}  // namespace

std::string sha256_digest(const std::filesystem::path& path) {
    if (!std::filesystem::is_directory(path)) return file_digest(path);
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(path))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    Sha256 sha;
    for (const auto& f : files) {
        const std::string line = std::filesystem::relative(f, path).generic_string() + " " + file_digest(f) + "\n";
        sha.update(line.data(), line.size());
    }
    return sha.finish();
}

std::string Manifest::to_json() const {
    nlohmann::json j;
    j["tool"] = "spinlets";
    j["version"] = SPINLETS_VERSION;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["threads"] = threads;
    j["flags"] = flags;
    j["inputs"] = nlohmann::json::array();
    for (const auto& p : inputs) {
        nlohmann::json entry = {{"path", p.generic_string()}};
        try {
            entry["sha256"] = sha256_digest(p);
        } catch (const Error&) {
            entry["sha256"] = nullptr;
        }
        j["inputs"].push_back(entry);
    }
    j["outputs"] = nlohmann::json::array();
    for (const auto& p : outputs) j["outputs"].push_back(p.generic_string());
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    return j.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path& out_dir) const {
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json();
}

}  // namespace spinlets::cli
