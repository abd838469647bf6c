#pragma once

#include <filesystem>

#include "pseudoflow/checkpoint.hpp"
#include "pseudoflow/dataset.hpp"
#include "pseudoflow/losses.hpp"

namespace pseudoflow {

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 2;
  int batch = 1;
  std::int64_t max_iterations = 0;  // 0: epochs decide; otherwise a hard cap
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights weights;
  FlowSpec flow;
  NoiseSpec noise;
  SuppressionFlags suppression;
  AdvForm adversarial = AdvForm::nonsaturating;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  int resolution = 0;  // expected square frame size; 0 infers from the data
  std::filesystem::path data_root;
  std::filesystem::path out_dir = "runs/default";
  int checkpoint_interval = 500;
  std::filesystem::path resume;  // checkpoint to continue from

  void validate() const;
  std::string to_json() const;  // resolved-config echo, logged and checkpointed
};

// Raised when training stops on a non-finite loss or gradient; carries the
// newest checkpoint that predates the failure.
struct TrainAbort : Error {
  TrainAbort(const std::string& msg, std::filesystem::path ckpt)
      : Error(msg + (ckpt.empty() ? " (no checkpoint written yet)"
                                  : " (last good checkpoint: " + ckpt.string() + ")")),
        last_good_checkpoint(std::move(ckpt)) {}
  std::filesystem::path last_good_checkpoint;
};

// Bias-corrected Adam on a single parameter tensor; step is the 1-based
// update count already incremented by the caller.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::int64_t step,
                 double lr, double beta1, double beta2, double eps, const std::string& name);

struct AdamState {
  std::vector<Tensor> m, v;  // aligned with the network's parameters()
  std::int64_t step = 0;
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path log_path;
  std::int64_t iterations = 0;
};

class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  // One alternating optimization step: generators first on the weighted
  // total, then each discriminator on detached fakes.
  LossBreakdown train_iteration(const Tensor& batch_x, const Tensor& batch_y);

  TrainResult train(const FrameDataset& train_x, const FrameDataset& train_y);

  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

  const Network& gx() const { return gx_; }
  const Network& gy() const { return gy_; }
  const Network& dx() const { return dx_; }
  const Network& dy() const { return dy_; }
  std::int64_t iteration() const { return iteration_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  void apply_adam(Network& net, AdamState& state, const GradMapT<float>& grads);

  TrainConfig cfg_;
  Network gx_, gy_, dx_, dy_;
  AdamState opt_gx_, opt_gy_, opt_dx_, opt_dy_;
  Rng rng_;
  std::int64_t iteration_ = 0;
  std::int64_t epoch_ = 0;
  std::int64_t epoch_pos_ = 0;
  std::filesystem::path last_checkpoint_;
  bool resumed_ = false;
};

// Per-frame independent translation; frame order preserved, no temporal
// state. Ground-truth attachments describe the source and are not copied.
VideoSequence translate_sequence(const Network& net, const VideoSequence& frames);

// Checkpoint (de)serialization of the four networks, shared with the CLI.
void save_networks_to(Checkpoint& ck, const std::string& prefix, const Network& net);
void load_networks_from(const Checkpoint& ck, const std::string& prefix, Network& net);

// Loads one generator ("gx" or "gy") from a training checkpoint using the
// generator config echoed in the checkpoint itself.
Network load_generator(const std::filesystem::path& checkpoint, const std::string& which);

}  // namespace pseudoflow
