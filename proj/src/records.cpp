#include "hsdef/records.hpp"

#include "hsdef/hash.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>

namespace hsdef {

namespace {

nlohmann::json record_body(const RunRecord& r) {
    nlohmann::json j;
    j["experiment"] = r.key.experiment;
    j["condition"] = r.key.condition;
    j["model"] = r.key.model;
    j["run"] = r.key.run;
    j["sample"] = r.key.sample;
    j["gold"] = std::string(to_string(r.gold));
    j["functionality"] = r.functionality ? nlohmann::json(*r.functionality) : nlohmann::json(nullptr);
    j["parsed"] = std::string(to_string(r.parsed));
    j["raw"] = r.raw;
    j["prompt_hash"] = r.prompt_hash;
    j["timestamp"] = r.timestamp;
    j["attempts"] = r.attempts;
    j["latency_ms"] = r.latency_ms;
    j["status"] = r.status;
    j["finish_reason"] = r.finish_reason;
    return j;
}

CacheError corruption(std::size_t line, const std::string& why) {
    return CacheError(CacheError::Kind::Corruption, "CacheCorruption(line " + std::to_string(line) + "): " + why);
}

} // namespace

std::string serialize_record(const RunRecord& record) {
    auto body = record_body(record);
    const auto digest = sha256_hex(body.dump());
    body["checksum"] = digest;
    return body.dump();
}

RunRecord parse_record(std::string_view line, std::size_t line_number) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw corruption(line_number, "not valid JSON");
    }
    if (!j.is_object() || !j.contains("checksum") || !j["checksum"].is_string()) {
        throw corruption(line_number, "missing checksum");
    }
    const auto stored = j["checksum"].get<std::string>();
    j.erase("checksum");
    if (sha256_hex(j.dump()) != stored) throw corruption(line_number, "checksum mismatch");

    try {
        RunRecord r;
        r.key = {j.at("experiment").get<std::string>(), j.at("condition").get<std::string>(),
                 j.at("model").get<std::string>(), j.at("run").get<int>(), j.at("sample").get<std::string>()};
        auto gold = parse_gold(j.at("gold").get<std::string>());
        auto parsed = parse_label_name(j.at("parsed").get<std::string>());
        if (!gold || !parsed) throw corruption(line_number, "unknown label value");
        r.gold = *gold;
        r.parsed = *parsed;
        if (!j.at("functionality").is_null()) r.functionality = j["functionality"].get<std::string>();
        r.raw = j.at("raw").get<std::string>();
        r.prompt_hash = j.at("prompt_hash").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.attempts = j.at("attempts").get<int>();
        r.latency_ms = j.at("latency_ms").get<std::int64_t>();
        r.status = j.at("status").get<int>();
        r.finish_reason = j.at("finish_reason").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& ex) {
        throw corruption(line_number, std::string("bad field: ") + ex.what());
    }
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CacheError(CacheError::Kind::Io, "cannot open records file " + path.string());
    std::vector<RunRecord> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        out.push_back(parse_record(line, number));
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
        for (auto& record : read_records(path_)) {
            auto key = record.key;
            entries_.insert_or_assign(std::move(key), std::move(record));
        }
    } else if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw CacheError(CacheError::Kind::Io, "cannot open records file for append: " + path_.string());
}

std::optional<RunRecord> ResponseCache::find(const RecordKey& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::append(const RunRecord& record) {
    const std::string line = serialize_record(record) + "\n";
    std::lock_guard lock(mutex_);
    if (entries_.count(record.key)) return;
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) throw CacheError(CacheError::Kind::Io, "write to " + path_.string() + " failed");
    entries_.emplace(record.key, record);
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

RunRecord cached_classify(ResponseCache& cache, const RunRecord& draft, std::string_view prompt, Gateway& gateway,
                          CacheStats* stats) {
    if (auto hit = cache.find(draft.key)) {
        if (hit->prompt_hash != draft.prompt_hash) {
            throw CacheError(CacheError::Kind::StaleEntry,
                             "cached record for " + draft.key.condition + "/" + draft.key.model + "/run " +
                                 std::to_string(draft.key.run) + "/" + draft.key.sample +
                                 " was produced from a different prompt; use a new experiment id");
        }
        if (stats) stats->hits.fetch_add(1);
        return *hit;
    }
    if (stats) stats->misses.fetch_add(1);
    RunRecord record = draft;
    RawResponse raw = gateway.classify(prompt, RequestContext{draft.key.sample, draft.key.run});
    record.raw = raw.text;
    record.parsed = parse_label(raw);
    record.attempts = raw.attempts;
    record.latency_ms = raw.latency.count();
    record.status = raw.status;
    record.finish_reason = raw.finish_reason;
    record.timestamp = utc_timestamp();
    cache.append(record);
    return record;
}

} // namespace hsdef
