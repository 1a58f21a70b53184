#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ptl::cli {

// Collects output files in memory and publishes them together: every file is
// first written next to its destination under a temporary name, then all are
// renamed into place. Nothing is left behind if commit() is never reached.
class StagedOutput {
public:
    StagedOutput() = default;
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;
    ~StagedOutput();

    void add(std::filesystem::path path, std::string bytes);
    void add_directory(std::filesystem::path dir);
    void commit();

private:
    std::vector<std::filesystem::path> directories_;
    std::vector<std::pair<std::filesystem::path, std::string>> files_;
    std::vector<std::filesystem::path> temporaries_;
    std::vector<std::filesystem::path> created_dirs_;
    bool committed_ = false;
};

}  // namespace ptl::cli
