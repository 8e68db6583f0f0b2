#pragma once

// Binary checkpoint: magic, format version, a JSON header carrying the model
// configuration and vocabularies, then every named parameter with its shape
// and row-major float64 payload.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "docrel/model.hpp"

namespace docrel {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParameters params;
  std::vector<std::string> token_vocabulary;
  std::vector<std::string> relation_names;
  std::string na_name = "Na";
  double threshold = 0.5;  // emission threshold chosen at training time
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

}  // namespace docrel
