#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "embkit/error.hpp"

namespace embkit::cli {

/// A pipeline failure attributed to one step.
class StageError : public Error {
  public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

struct PipelineOptions {
    /// Overrides the config's "work_dir" (outputs are written below it).
    std::optional<std::filesystem::path> work_dir;
};

struct PipelineResult {
    std::vector<std::string> steps;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs the steps of a pipeline JSON config in order. Input paths resolve
/// against the config's directory, output paths against the work dir.
/// Every failure surfaces as StageError.
PipelineResult run_pipeline(const std::filesystem::path& config_path, const PipelineOptions& options = {});

/// Stage names accepted in a pipeline config.
const std::vector<std::string>& known_stages();

}  // namespace embkit::cli
