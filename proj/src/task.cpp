#include "dsagent/task.hpp"

#include <json.hpp>

#include "dsagent/errors.hpp"
#include "fs_util.hpp"

namespace dsagent {

TaskSpec load_task(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("task directory not found: " + dir.string());
    TaskSpec t;
    t.dir = dir;
    t.id = std::filesystem::absolute(dir).lexically_normal().filename().string();
    if (t.id.empty()) t.id = std::filesystem::absolute(dir).parent_path().filename().string();

    auto read_required = [&](const char* name) {
        const auto p = dir / name;
        if (!std::filesystem::is_regular_file(p)) throw ConfigError("task is missing " + p.string());
        auto text = detail::read_file(p);
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError(p.string() + " is empty");
        return text;
    };
    t.description = read_required("task.md");
    while (!t.description.empty() && (t.description.back() == '\n' || t.description.back() == ' '))
        t.description.pop_back();
    t.scaffold = read_required("train.py");

    const auto meta = dir / "task.json";
    if (std::filesystem::exists(meta)) {
        try {
            auto j = nlohmann::json::parse(detail::read_file(meta));
            t.id = j.value("id", t.id);
            t.metric_pattern = j.value("metric_pattern", t.metric_pattern);
            if (j.contains("direction")) t.direction = parse_direction(j["direction"].get<std::string>());
            if (j.contains("timeout_s")) {
                const double secs = j["timeout_s"].get<double>();
                if (!(secs > 0)) throw ConfigError("timeout_s must be positive");
                t.timeout = std::chrono::milliseconds(static_cast<long long>(secs * 1000));
            }
            if (j.contains("modality")) t.modality = parse_modality(j["modality"].get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(meta.string() + ": " + e.what());
        }
    }
    MetricPattern validate(t.metric_pattern);
    return t;
}

void prepare_workdir(const TaskSpec& task, const std::filesystem::path& workdir) {
    std::filesystem::create_directories(workdir);
    const auto data = task.dir / "data";
    if (std::filesystem::is_directory(data))
        std::filesystem::copy(data, workdir,
                              std::filesystem::copy_options::recursive | std::filesystem::copy_options::overwrite_existing);
}

}  // namespace dsagent
