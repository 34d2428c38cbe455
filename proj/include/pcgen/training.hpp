#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "pcgen/checkpoint.hpp"
#include "pcgen/dataset.hpp"
#include "pcgen/objective.hpp"

namespace pcgen {

// Run configuration; serialized as flat JSON with exactly these keys.
// Unknown keys in a config file are errors.
struct TrainConfig {
    i64 epochs = 30;
    i64 batch_size = 16;
    double base_lr = 2.56e-4;
    i64 lr_drop_epoch = 20;
    double lr_divisor = 4.0;
    i64 points_per_cloud = 256;
    i64 latent_dim = 64;
    i64 flow_layers = 16;
    double kl_weight = -1.0;  // < 0 selects the default 1 / latent_dim
    double adv_weight = 0.05;
    i64 d_steps_per_g_step = 1;
    std::uint64_t seed = 1;
    std::string precision = "f32";  // "f32" train default; "f64" for test runs

    double effective_kl_weight() const {
        return kl_weight >= 0.0 ? kl_weight : 1.0 / static_cast<double>(latent_dim);
    }
    ModelConfig model() const;
    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);  // strict keys
};

struct StepRecord {
    i64 step = 0;
    double recon_nll = 0.0;
    double kl = 0.0;
    double adv = 0.0;
    double total = 0.0;
    double lr = 0.0;
    double d_loss = 0.0;  // not logged; exposed for tests
};

struct TrainResult {
    std::string final_checkpoint;
    std::string log_path;
    i64 steps = 0;
    i64 epochs = 0;
};

// Image-conditioned generation along the differentiable path:
// z ~ p_psi(z|I) by reparameterization, then n base draws pushed forward.
template <class T>
PointCloud make_fake_cloud(ParamStore<T>& store, const ModelConfig& cfg, const ImageTensor& image,
                           i64 n, Rng& rng) {
    const LatentGaussian g = encode_image(store, cfg, image);
    const std::vector<double> z = reparam_sample(g, rng);
    return sample_cloud(store, cfg, z, n, rng);
}

// Trains on the manifest's train split and writes per-epoch checkpoints plus
// a JSON-lines log under out_dir. Fully deterministic in cfg.seed; resuming
// from an epoch checkpoint reproduces the uninterrupted trajectory.
TrainResult train(const TrainConfig& cfg, const std::string& data_path, const std::string& out_dir,
                  const std::string& resume_checkpoint = "", bool debug_isolation = false);

// One optimization step (critic update(s), then generator update) exposed at
// type granularity for tests.
template <class T>
class TrainLoop {
  public:
    TrainLoop(const TrainConfig& cfg, ParamStore<T>&& store, i64 start_epoch, i64 start_step)
        : cfg_(cfg), mcfg_(cfg.model()), store_(std::move(store)), epoch_(start_epoch),
          step_(start_step) {}

    static TrainLoop fresh(const TrainConfig& cfg) {
        ParamStore<T> store;
        Rng rng(derive_seed(cfg.seed, {0x1417}));
        init_model(store, cfg.model(), rng);
        return TrainLoop(cfg, std::move(store), 0, 0);
    }

    ParamStore<T>& store() { return store_; }
    const ModelConfig& model_config() const { return mcfg_; }
    i64 epoch() const { return epoch_; }
    i64 step() const { return step_; }

    StepRecord train_step(const std::vector<const DatasetSample*>& batch, double lr, Rng& rng,
                          bool debug_isolation = false);

    // Runs epochs [epoch_, cfg.epochs); emits one log line per step.
    void run(const std::vector<DatasetSample>& train_samples, std::ostream* log,
             const std::string& out_dir, bool debug_isolation,
             std::vector<StepRecord>* records = nullptr);

    void save(const std::string& path) const;

  private:
    Tensor<T> batch_rows(const std::vector<const DatasetSample*>& batch) const;
    Tensor<T> batch_images(const std::vector<const DatasetSample*>& batch) const;
    Tensor<T> detached_fake_rows(const Tensor<T>& images, i64 b, Rng& rng);

    TrainConfig cfg_;
    ModelConfig mcfg_;
    ParamStore<T> store_;
    i64 epoch_ = 0;
    i64 step_ = 0;
};

}  // namespace pcgen
