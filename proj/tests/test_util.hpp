#pragma once

// Shared helpers for the test suite: fixture lookup, throwaway
// directories, and canned providers.

#include <filesystem>
#include <random>
#include <string>

#include "dgqa/dgqa.hpp"

namespace testutil {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(DGQA_TEST_DATA_DIR) / name;
}

/// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        path_ = base / ("dgqa-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline dgqa::Corpus mini_corpus() { return dgqa::load_corpus(fixture("mini_manual.json")); }

/// Gateway over a MockProvider with no cache (live mode): pure
/// function of the request, no files touched.
inline dgqa::Gateway live_mock_gateway(std::shared_ptr<dgqa::MockProvider> provider) {
    dgqa::GatewayConfig gc;
    gc.mode = dgqa::GatewayMode::live;
    return dgqa::Gateway(std::move(provider), gc);
}

/// Recursive content snapshot of a directory: relative path -> sha256.
/// Two byte-identical trees produce equal snapshots.
inline std::map<std::string, std::string> tree_snapshot(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        out[std::filesystem::relative(entry.path(), root).string()] =
            dgqa::sha256_of_file(entry.path());
    }
    return out;
}

}  // namespace testutil
