#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "can/image.hpp"
#include "can/operators.hpp"
#include "can/rng.hpp"

namespace can {

enum class DatasetMode { Fixed, ParamSampled, MultiOp };

struct DatasetEntry {
  std::string input_path;
  std::string target_path;
  std::vector<float> aux;
};

struct DatasetIndex {
  DatasetMode mode = DatasetMode::Fixed;
  std::string operator_names; // "l0" or "rof,l0"
  double lambda_bar = 0.0;
  uint64_t seed = 0;
  std::vector<DatasetEntry> entries;
  int aux_width() const { return entries.empty() ? 0 : static_cast<int>(entries[0].aux.size()); }
};

// Text index: a '#' header with mode, operators, lambda_bar and seed, then
// one tab-separated line per entry: input path, target path, aux values.
void save_index(const DatasetIndex &ds, const std::string &path);
DatasetIndex load_index(const std::string &path);

struct BuildOptions {
  DatasetMode mode = DatasetMode::Fixed;
  std::vector<OperatorSpec> ops; // one entry unless MultiOp
  uint64_t seed = 0;
};

struct BuildFailure {
  std::string path;
  std::string message;
};
struct BuildReport {
  std::vector<BuildFailure> failures;
};

// Runs the reference operators over the input PNGs and writes target PNGs
// into out_dir. Parameter and operator draws happen up front in input order,
// so results do not depend on how the per-image work is scheduled.
DatasetIndex build_dataset(const std::vector<std::string> &inputs, const std::string &out_dir,
                           const BuildOptions &opt, BuildReport *report = nullptr);

struct TrainPair {
  Image input;
  Image target;
  std::vector<float> aux;
};

struct LoadedDataset {
  std::vector<TrainPair> pairs;
  int aux_width() const { return pairs.empty() ? 0 : static_cast<int>(pairs[0].aux.size()); }
};

// Loads and validates every pair up front.
LoadedDataset load_pairs(const DatasetIndex &ds);

struct Sample {
  Image input;
  Image target;
  std::vector<float> aux;
};

// Uniform entry choice, one uniform height in [min_res, max_res], the same
// bilinear resize applied to both sides.
Sample sample_example(const LoadedDataset &ds, int min_res, int max_res, Rng &rng);

} // namespace can
