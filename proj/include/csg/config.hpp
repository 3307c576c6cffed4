// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// INI-style run configuration: `key = value` entries under [section]
// headers, comments starting with '#' or ';'. Unknown sections or keys are
// rejected. Serialization is canonical (fixed section/key order, shortest
// round-trip number formatting), so parse -> serialize -> parse is a fixed
// point.

#pragma once

#include <string>

#include "csg/synth_data.hpp"
#include "csg/trainer.hpp"

namespace csg {

struct EvalConfig {
  int n = 64;
  int steps = 8;
  uint64_t seed = 12345;
};

struct RunConfig {
  TrainConfig train;
  DatasetConfig data;    // data.num_styles mirrors train.num_styles
  std::string data_dir;  // when set, load the dataset from this directory
  EvalConfig eval;
  bool seed_in_file = false;  // whether [run] seed appeared explicitly
};

RunConfig default_run_config();

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

std::string serialize_run_config(const RunConfig& cfg);

// Applies one "section.key=value" override (the CLI --set flag).
void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value);

}  // namespace csg
