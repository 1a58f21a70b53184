#include "staged_output.hpp"

#include <fstream>
#include <system_error>
#include <unistd.h>

#include "ptl/error.hpp"

namespace ptl::cli {

namespace fs = std::filesystem;

StagedOutput::~StagedOutput() {
    std::error_code ec;
    for (const auto& tmp : temporaries_) fs::remove(tmp, ec);
    if (!committed_) {
        for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it) fs::remove(*it, ec);
    }
}

void StagedOutput::add(fs::path path, std::string bytes) { files_.emplace_back(std::move(path), std::move(bytes)); }

void StagedOutput::add_directory(fs::path dir) { directories_.push_back(std::move(dir)); }

void StagedOutput::commit() {
    for (const auto& dir : directories_) {
        // Remember each level we create so a failed commit can undo it.
        std::vector<fs::path> missing;
        for (fs::path p = fs::absolute(dir); !p.empty() && !fs::exists(p); p = p.parent_path()) {
            missing.push_back(p);
            if (p == p.parent_path()) break;
        }
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
        created_dirs_.insert(created_dirs_.end(), missing.rbegin(), missing.rend());
    }

    const std::string suffix = ".tmp." + std::to_string(::getpid());
    std::vector<std::pair<fs::path, fs::path>> moves;
    for (const auto& [path, bytes] : files_) {
        fs::path tmp = path;
        tmp += suffix;
        temporaries_.push_back(tmp);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        if (!out) throw DataError("failed writing '" + path.string() + "'");
        moves.emplace_back(tmp, path);
    }
    for (const auto& [tmp, path] : moves) {
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec) throw DataError("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
    temporaries_.clear();
    committed_ = true;
}

}  // namespace ptl::cli
