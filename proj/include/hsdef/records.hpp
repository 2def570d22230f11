#pragma once

#include "hsdef/dataset.hpp"
#include "hsdef/errors.hpp"
#include "hsdef/gateway.hpp"

#include <atomic>
#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hsdef {

struct RecordKey {
    std::string experiment;
    std::string condition;
    std::string model;
    int run = 0;
    std::string sample;

    auto operator<=>(const RecordKey&) const = default;
    bool operator==(const RecordKey&) const = default;
};

// One (experiment, condition, model, run, sample) outcome. Records with
// `failed` set are markers for unrecoverable backend errors; they are kept in
// memory for coverage accounting but never persisted.
struct RunRecord {
    RecordKey key;
    Gold gold = Gold::NHS;
    std::optional<std::string> functionality;
    Label parsed = Label::Refusal;
    std::string raw;
    std::string prompt_hash;
    std::string timestamp;
    int attempts = 0;
    std::int64_t latency_ms = 0;
    int status = 0;
    std::string finish_reason;
    bool failed = false;
    std::string error;
};

class CacheError : public Error {
public:
    enum class Kind { Corruption, StaleEntry, Io };

    CacheError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    bool is_config_error() const noexcept override { return kind_ == Kind::StaleEntry; }
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// One JSON line including its checksum, without the trailing newline.
std::string serialize_record(const RunRecord& record);

/// Parses and verifies a line; throws CacheError(Corruption) naming the line.
RunRecord parse_record(std::string_view line, std::size_t line_number);

std::vector<RunRecord> read_records(const std::filesystem::path& path);

/// Current UTC time as ISO-8601 with second precision.
std::string utc_timestamp();

// Append-only JSON-lines store of run records, keyed by RecordKey. All
// methods are thread-safe; appends are serialized and flushed per line.
class ResponseCache {
public:
    /// Loads every existing line, verifying checksums.
    explicit ResponseCache(std::filesystem::path path);

    std::optional<RunRecord> find(const RecordKey& key) const;
    void append(const RunRecord& record);
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<RecordKey, RunRecord> entries_;
    std::ofstream out_;
};

struct CacheStats {
    std::atomic<std::uint64_t> hits{0};
    std::atomic<std::uint64_t> misses{0};
};

/// Returns the cached response for the draft's key, or classifies, persists
/// and returns. The draft supplies key, gold, functionality and prompt hash.
RunRecord cached_classify(ResponseCache& cache, const RunRecord& draft, std::string_view prompt, Gateway& gateway,
                          CacheStats* stats = nullptr);

} // namespace hsdef
