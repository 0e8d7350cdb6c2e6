#pragma once

#include <string>

#include "hwcl/dataset.hpp"
#include "hwcl/embedding.hpp"
#include "hwcl/experiment.hpp"
#include "hwcl/synthetic.hpp"

namespace hwcl {

// JSON file formats behind the CLI. Schemas are documented in the README;
// every file carries a schema_version field.

void save_dataset(const PairDataset& data, const SyntheticSpec& spec, const std::string& path);
PairDataset load_dataset(const std::string& path);

SyntheticSpec load_synthetic_spec(const std::string& path);
ExperimentConfig load_experiment_config(const std::string& path);

// {"queries": [[...]], "targets": [[...]], "positive_index": [...]}
EmbeddingBatch load_embeddings(const std::string& path);

std::string read_text_file(const std::string& path);  // throws IoError
void write_text_file(const std::string& path, const std::string& content);

} // namespace hwcl
