#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "dsagent/case_bank.hpp"
#include "dsagent/executor.hpp"

namespace dsagent {

/// A data science task directory:
///
///     task/task.md     description
///     task/train.py    scaffold script
///     task/data/...    files copied into the run's workdir
///     task/task.json   optional: {"id", "metric_pattern", "direction", "timeout_s", "modality"}
struct TaskSpec {
    std::string id;
    std::string description;
    std::string scaffold;
    std::filesystem::path dir;
    std::string metric_pattern = std::string(MetricPattern::kDefault);
    MetricDirection direction = MetricDirection::lower_better;
    std::optional<std::chrono::milliseconds> timeout;
    Modality modality = Modality::other;
};

/// Throws ConfigError if task.md or train.py is missing or empty, or task.json is invalid.
TaskSpec load_task(const std::filesystem::path& dir);

/// Creates `workdir` and copies the task's data files into it.
void prepare_workdir(const TaskSpec& task, const std::filesystem::path& workdir);

}  // namespace dsagent
