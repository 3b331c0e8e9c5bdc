#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>

#include "cogfx/stimuli.hpp"

namespace testsupport {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cogfx-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_corpus(const std::filesystem::path& path,
                         std::span<const cogfx::PrimingTriple> triples) {
  std::ofstream out(path);
  out << "# target\trelated\tscore\tunrelated\tscore\n";
  for (const auto& t : triples) {
    out << t.target << '\t' << t.related_prime << '\t' << t.related_association << '\t'
        << t.unrelated_prime << '\t' << t.unrelated_association << '\n';
  }
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testsupport
