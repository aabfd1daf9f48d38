#pragma once

// Run manifests: what was run, by which tool version, on which inputs.

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "newsrel/error.hpp"
#include "newsrel/text_util.hpp"
#include "newsrel/version.hpp"

namespace cli {

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw newsrel::IoError("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void arg(const std::string& key, const std::string& value) { args_.emplace_back(key, value); }

  void config(const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) config_.emplace_back(k, v);
  }

  void input(const std::filesystem::path& path) {
    if (path.empty() || !std::filesystem::is_regular_file(path)) return;
    inputs_[path.string()] = sha256_hex(newsrel::text::read_file(path.string()));
  }

  std::string render() const {
    std::string out = "tool=newsrel\nversion=" + std::string(newsrel::kVersion) + "\ncommand=" + command_ + "\n";
    for (const auto& [k, v] : args_) out += "arg." + k + "=" + v + "\n";
    for (const auto& [k, v] : config_) out += "config." + k + "=" + v + "\n";
    for (const auto& [p, d] : inputs_) out += "input." + p + "=sha256:" + d + "\n";
    return out;
  }

  // dir/manifest.txt for directory outputs, <file>.manifest for file outputs.
  void write_into(const std::filesystem::path& dir) const {
    newsrel::text::write_file((dir / "manifest.txt").string(), render());
  }
  void write_beside(const std::filesystem::path& file) const {
    newsrel::text::write_file(file.string() + ".manifest", render());
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> args_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::map<std::string, std::string> inputs_;
};

}  // namespace cli
