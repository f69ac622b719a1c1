#include <chrono>
#include <fstream>

#include "can/training.hpp"

namespace can {

TrainResult train(CanModel &model, const LoadedDataset &ds, const TrainConfig &cfg,
                  const std::string &checkpoint_path, const std::string &loss_csv_path) {
  cfg.validate();
  model.config.validate();
  if (ds.aux_width() != model.config.aux_channels)
    fail(errc::bad_argument, "model aux_channels does not match the dataset");

  std::ofstream csv;
  if (!loss_csv_path.empty()) {
    csv.open(loss_csv_path);
    if (!csv) fail(errc::file_write_failed, "cannot write " + loss_csv_path);
    csv << "iteration,loss,wall_ms\n";
  }

  TrainResult result;
  Rng rng(cfg.seed);
  AdamState adam = AdamState::init(model);
  const auto start = std::chrono::steady_clock::now();

  auto log_entry = [&](long long iter, double loss) {
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    result.log.push_back({iter, loss, ms});
    if (csv.is_open()) {
      csv << iter << "," << loss << "," << ms << "\n";
      csv.flush();
    }
  };

  for (long long iter = 1; iter <= cfg.iterations; ++iter) {
    Sample s = sample_example(ds, cfg.min_res, cfg.max_res, rng);
    LossGrad lg;
    try {
      lg = loss_and_grad(model, s.input, s.aux, s.target, /*update_running_stats=*/true);
    } catch (const Error &e) {
      if (e.code() == errc::divergence)
        fail(errc::divergence, "training diverged at iteration " + std::to_string(iter) +
                                   "; last checkpoint retained");
      throw;
    }
    adam_step(model, lg.grads, adam, cfg);
    if (iter % cfg.log_every == 0 || iter == cfg.iterations) log_entry(iter, lg.loss);
    if (!checkpoint_path.empty() && iter % cfg.checkpoint_every == 0)
      save_model(model, checkpoint_path);
  }
  if (!checkpoint_path.empty()) save_model(model, checkpoint_path);
  return result;
}

} // namespace can
