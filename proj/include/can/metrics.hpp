#pragma once

#include <string>
#include <vector>

#include "can/dataset.hpp"
#include "can/image.hpp"
#include "can/model.hpp"

namespace can {

struct MetricReport {
  double mse255 = 0.0; // mean squared error over all samples, 0-255 units
  double psnr = 0.0;   // dB, capped at 100 for identical images
  double ssim = 0.0;   // luma SSIM, 11x11 Gaussian window sigma 1.5
  double dssim = 0.0;  // (1 - ssim) / 2
};

// Inputs are clamped to [0,1] first. SSIM uses K1=0.01, K2=0.03, dynamic
// range 255, every window position, replicate boundary.
MetricReport metric_report(const Image &a, const Image &b);

// Per-pixel RGB Euclidean distance in 0-255 units, divided by 100 and
// clamped, so 1.0 marks error >= 100.
Image error_map(const Image &a, const Image &b);

// Forward on a zero image versus the same image with a large centred
// perturbation; returns the side length of the bounding box of output
// differences (any bitwise difference counts).
int empirical_receptive_field(const CanModel &model, int probe_size);

struct CorpusRow {
  std::string path;
  MetricReport model;
  MetricReport input_baseline; // raw input vs target, the do-nothing baseline
};

struct CorpusEval {
  std::vector<CorpusRow> rows;
  MetricReport mean_model;
  MetricReport mean_input;
  std::vector<std::pair<std::string, std::string>> failures;
};

CorpusEval evaluate_corpus(const CanModel &model, const DatasetIndex &ds);

// header path,mse255,psnr_db,ssim,dssim; per-image rows, input-baseline rows
// prefixed input:, then input:MEAN and a final MEAN row. Six significant
// digits.
void write_corpus_csv(const CorpusEval &eval, const std::string &path);

} // namespace can
