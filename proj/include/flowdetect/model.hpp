#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowdetect/dataflow.hpp"
#include "flowdetect/layers.hpp"
#include "flowdetect/tensor.hpp"

namespace flowdetect {

struct ConvBlockConfig {
    std::size_t out_channels = 32;
    std::size_t kernel = 3;
    std::size_t pool = 2;
};

/// Network shape: conv/pool blocks -> dropout -> BiLSTM -> dense(2H -> 1)
/// -> sigmoid score. All sizes are artifact defaults and config-overridable.
struct ModelConfig {
    std::size_t time_steps = 10;  // T, window length
    std::size_t features = 8;     // n, per-step feature count
    std::vector<ConvBlockConfig> conv_blocks = {{32, 3, 2}, {64, 3, 2}};
    double dropout = 0.3;
    std::size_t hidden = 64;  // H per LSTM direction

    /// Throws ConfigError when a block would shrink the sequence below one
    /// step or the dropout rate is outside [0,1).
    void validate() const;

    /// (sequence length, channels) after the conv/pool stack.
    std::pair<std::size_t, std::size_t> conv_output() const;
};

struct ModelParams {
    std::vector<Conv1dParams> conv;
    LstmParams lstm_fwd;
    LstmParams lstm_bwd;
    Tensor dense_w;  // [1 x 2H]
    Tensor dense_b;  // [1]
};

/// Zero tensors with the shapes the config dictates.
ModelParams make_params(const ModelConfig& config);

/// Uniform init on +-1/sqrt(fan_in) per tensor (see uniform_init_bound);
/// the forget-gate bias slice starts at +1.0 for stable early training.
ModelParams init_params(const ModelConfig& config, Rng& rng);

/// All parameter tensors in a fixed documented order: conv blocks (w, b)
/// in stack order, forward LSTM (W, U, b), backward LSTM (W, U, b), dense
/// (W, b). Checkpoints and the optimizer both rely on this order.
std::vector<Tensor*> param_views(ModelParams& params);
std::vector<const Tensor*> param_views(const ModelParams& params);

struct SampleCache {
    std::vector<Conv1dCache> conv;
    std::vector<MaxPoolCache> pool;
    DropoutCache dropout;
    BilstmCache bilstm;
    DenseCache dense;
    double score = 0.0;
};

struct ForwardResult {
    Tensor scores;  // [B], each in (0,1)
    std::vector<SampleCache> caches;
};

/// Batch forward. `batch` is [B x T x n]; samples run independently in batch
/// order. `rng` is consumed only when training with a positive dropout rate.
ForwardResult forward(const Tensor& batch, const ModelParams& params, const ModelConfig& config,
                      bool training, Rng* rng);

struct LossResult {
    double loss = 0.0;   // mean BCE over the batch
    ModelParams grads;   // gradient of the mean loss, parameter-shaped
};

/// Mean binary cross-entropy and its exact gradient over one mini-batch.
/// Dropout is active (training mode); disable it via config.dropout = 0.
LossResult loss_and_grads(const Tensor& batch, const std::vector<std::uint8_t>& labels,
                          const ModelParams& params, const ModelConfig& config, Rng* rng);

struct CheckpointMeta {
    std::uint64_t epochs_run = 0;
    std::uint64_t best_epoch = 0;  // 1-based; 0 = untrained
    double best_val_f1 = 0.0;
    std::uint64_t window_stride = 1;
};

/// Everything needed to reproduce inference exactly: architecture, weights,
/// fitted preprocessing statistics and the calibrated decision threshold.
struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    PreprocStats stats;
    double threshold = 0.5;
    CheckpointMeta meta;
};

/// Versioned little-endian container with a section manifest and a CRC-32
/// over the payload; load(save(x)) == x bitwise for every field.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace flowdetect
