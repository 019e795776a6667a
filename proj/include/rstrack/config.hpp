#pragma once

#include <map>
#include <string>

#include "rstrack/tracker.hpp"

namespace rstrack {

// Plain-text key=value pairs; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies recognized keys over the defaults; unknown keys raise.
TrackerConfig tracker_config_from(const std::map<std::string, std::string>& kv);

TrackerConfig load_tracker_config(const std::string& path);

std::string mode_name(EstimatorMode mode);
EstimatorMode mode_from_name(const std::string& name);

}  // namespace rstrack
