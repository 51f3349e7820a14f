#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdrl/env.hpp"

namespace sdrl::env {

/// One line of an episode log.
struct StepRecord {
  long episode = 0;
  int step = 0;  // 1-based within the episode
  std::array<double, kActionDim> action{};
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  TransitionEvents events;
  Eigen::Vector3d eef = Eigen::Vector3d::Zero();
  Eigen::Vector3d cube = Eigen::Vector3d::Zero();
};

nlohmann::json to_json(const TransitionEvents& events);
TransitionEvents events_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StepRecord& record);
StepRecord step_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RewardConfig& config);
RewardConfig reward_config_from_json(const nlohmann::json& j);

class LogParseError : public std::runtime_error {
 public:
  LogParseError(long line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Append-only JSON Lines writer, one StepRecord per line.
class EpisodeLogWriter {
 public:
  explicit EpisodeLogWriter(const std::filesystem::path& path);
  void write(const StepRecord& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Reads a whole log. Throws LogParseError naming the first bad line, std::runtime_error on IO.
std::vector<StepRecord> read_episode_log(const std::filesystem::path& path);

}  // namespace sdrl::env
