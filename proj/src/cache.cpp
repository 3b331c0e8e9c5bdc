#include "cogfx/cache.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <optional>

#include "cogfx/error.hpp"

namespace cogfx {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void to_json(nlohmann::json& j, const CacheRecord& r) {
  j = nlohmann::json{{"key", r.key}, {"distributions", r.distributions}, {"created_at", r.created_at}};
}

void from_json(const nlohmann::json& j, CacheRecord& r) {
  j.at("key").get_to(r.key);
  j.at("distributions").get_to(r.distributions);
  r.created_at = j.value("created_at", "");
}

ResultCache::ResultCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());

  bool needs_newline = false;
  std::optional<std::uintmax_t> torn_at;
  if (std::ifstream in{path_, std::ios::binary}) {
    std::string line;
    std::size_t line_no = 0;
    std::uintmax_t offset = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const bool terminated = !in.eof();
      const auto start = offset;
      offset += line.size() + (terminated ? 1 : 0);
      if (line.empty()) continue;
      try {
        auto rec = nlohmann::json::parse(line).get<CacheRecord>();
        records_[rec.key] = std::move(rec.distributions);
        needs_newline = !terminated;
      } catch (const nlohmann::json::exception&) {
        if (terminated) {
          throw ParseError("cache " + path_.string() + ": corrupt record", line_no);
        }
        ++skipped_lines_;  // torn tail from an interrupted append
        torn_at = start;
      }
    }
  }
  // Drop the torn fragment so later appends start on a clean line.
  if (torn_at) std::filesystem::resize_file(path_, *torn_at);

  out_ = std::fopen(path_.c_str(), "ab");
  if (!out_) throw Error("cannot open cache file " + path_.string());
  if (needs_newline) {
    std::fputc('\n', out_);
    std::fflush(out_);
  }
}

ResultCache::~ResultCache() {
  if (out_) std::fclose(out_);
}

std::optional<std::vector<TokenDistribution>> ResultCache::lookup(const std::string& key) const {
  std::shared_lock lock(mu_);
  const auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void ResultCache::store(CacheRecord record) {
  if (record.created_at.empty()) record.created_at = utc_now();
  const std::string line = nlohmann::json(record).dump() + "\n";
  std::unique_lock lock(mu_);
  if (std::fwrite(line.data(), 1, line.size(), out_) != line.size() || std::fflush(out_) != 0) {
    throw Error("cache write failed: " + path_.string());
  }
  records_[record.key] = std::move(record.distributions);
}

std::size_t ResultCache::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

}  // namespace cogfx
