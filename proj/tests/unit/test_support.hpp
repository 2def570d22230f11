#pragma once

#include "hsdef/records.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testing_support {

inline std::filesystem::path source_dir() { return HSDEF_SOURCE_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("hsdef_test_" + std::to_string(rd()) + std::to_string(rd()));
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

inline hsdef::RunRecord record(std::string condition, int run, std::string sample, hsdef::Gold gold,
                               hsdef::Label parsed, std::string model = "m") {
    hsdef::RunRecord r;
    r.key = {"exp", std::move(condition), std::move(model), run, std::move(sample)};
    r.gold = gold;
    r.parsed = parsed;
    r.raw = parsed == hsdef::Label::HS ? "1" : parsed == hsdef::Label::NHS ? "0" : "no";
    return r;
}

} // namespace testing_support
