#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fedbcd/harness.hpp"

namespace fedbcd {

inline constexpr const char* kToolVersion = "0.1.0";

struct DataSpec {
  bool is_synthetic = true;
  // synthetic source
  Index n = 2000;
  Index d = 20;
  SyntheticTask task = SyntheticTask::LogisticSeparable;
  double noise = 1.0;
  std::uint64_t gen_seed = 7;
  std::vector<Index> split;  // per-party column widths; empty = even split
  // csv source
  std::vector<std::string> party_files;
  std::string label_file;
};

struct RunSpec {
  TrainingConfig train;
  DataSpec data;
  double eval_fraction = 0.2;
  std::string encoder = "identity";
};

/// Parses and validates a config document. Unknown keys are hard errors
/// naming the key; a top-level "manifest" object is accepted and ignored
/// so a written manifest is itself a runnable config.
RunSpec run_spec_from_json(const nlohmann::json& doc);
RunSpec load_run_spec(const std::string& path);

/// The spec with every default materialized.
nlohmann::json run_spec_to_json(const RunSpec& spec);

VerticalDataset materialize_dataset(const DataSpec& data);

/// FNV-1a over the raw feature and label bytes.
std::string dataset_fingerprint(const VerticalDataset& data);

nlohmann::json make_manifest(const RunSpec& spec, const std::string& fingerprint,
                             const LipschitzEstimate& lips, const std::string& started_at,
                             const std::string& finished_at, const std::string& status);

std::string utc_timestamp();

}  // namespace fedbcd
