#pragma once

// Plain-text key=value configuration. '#' starts a comment; blank lines are
// ignored. Keys mirror TrainConfig fields; other keys (e.g. file paths) are
// left for the caller.

#include <map>
#include <string>

#include "docrel/pipeline.hpp"

namespace docrel {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);  // throws ConfigError
KeyValues load_key_values(const std::string& path);

// Applies and removes every TrainConfig key found in kv.
void apply_train_config(KeyValues& kv, TrainConfig& config);

std::string serialize_train_config(const TrainConfig& config);

// "auto" or a finite float.
ThresholdPolicy parse_threshold(const std::string& text);

}  // namespace docrel
