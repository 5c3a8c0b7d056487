#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqpf/climatology.hpp"

namespace pqpf::pipeline {

struct PipelineConfig {
  int training_days = 20;       // rolling window length in available days
  int accumulation_days = 1;    // 1..5
  std::vector<std::string> methods = {"raw", "epc", "emos", "bma"};
  std::string reference = "epc";
  std::uint64_t seed = 1;
  int jobs = 1;
  int init_hour = 0;            // EPS initialization hour (00/06/12 UTC)
  climatology::EpcConfig epc;

  void validate() const;
};

// Reads .json, or a flat TOML subset (`key = value`, strings, numbers,
// booleans and flat arrays; [section] prefixes keys with "section.").
PipelineConfig load_config(const std::string& path);

}  // namespace pqpf::pipeline
