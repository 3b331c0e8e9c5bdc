#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cogfx/backend.hpp"

namespace cogfx {

struct CacheRecord {
  std::string key;
  std::vector<TokenDistribution> distributions;
  std::string created_at;
};

void to_json(nlohmann::json& j, const CacheRecord& r);
void from_json(const nlohmann::json& j, CacheRecord& r);

// Append-only JSON Lines store keyed by cache_key(). Later records win on
// duplicate keys. A torn final line (crash mid-append) is skipped on load
// and truncated away.
// One writer at a time through this object; lookups may run concurrently.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path path);
  ~ResultCache();

  ResultCache(const ResultCache&) = delete;
  ResultCache& operator=(const ResultCache&) = delete;

  std::optional<std::vector<TokenDistribution>> lookup(const std::string& key) const;
  void store(CacheRecord record);

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_lines_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::vector<TokenDistribution>> records_;
  std::FILE* out_ = nullptr;
  std::size_t skipped_lines_ = 0;
};

}  // namespace cogfx
