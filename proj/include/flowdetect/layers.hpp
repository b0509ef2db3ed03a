#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "flowdetect/tensor.hpp"

namespace flowdetect {

// Differentiable layer primitives. Each forward pass returns the output plus
// an opaque cache; the matching backward pass must receive the cache that
// forward produced, and returns exact analytic gradients.

struct Conv1dParams {
    Tensor w;  // [out_ch x in_ch x k]
    Tensor b;  // [out_ch]

    std::size_t out_channels() const { return w.dim(0); }
    std::size_t in_channels() const { return w.dim(1); }
    std::size_t kernel() const { return w.dim(2); }
};

struct Conv1dCache {
    Tensor x;  // forward input [T x in_ch]
};

struct Conv1dGrads {
    Tensor x;  // dL/dx
    Tensor w;  // dL/dw
    Tensor b;  // dL/db
};

/// Valid (no padding), stride-1 1-D convolution over the time axis:
/// y(i,c) = sum_{j,ic} x(i+j,ic) * w(c,ic,j) + b(c), output length T-k+1.
std::pair<Tensor, Conv1dCache> conv1d_forward(const Tensor& x, const Conv1dParams& p);

Conv1dGrads conv1d_backward(const Tensor& grad_y, const Conv1dCache& cache, const Conv1dParams& p);

struct MaxPoolCache {
    std::vector<std::size_t> argmax;  // input row index per (out row, channel)
    std::size_t in_rows = 0;
    std::size_t channels = 0;
    std::size_t window = 0;
};

/// Non-overlapping max pooling over time; the trailing remainder is dropped
/// and ties break to the lowest index so gradients are deterministic.
std::pair<Tensor, MaxPoolCache> maxpool1d_forward(const Tensor& x, std::size_t window);

Tensor maxpool1d_backward(const Tensor& grad_y, const MaxPoolCache& cache);

struct DropoutCache {
    Tensor mask;           // per-element multiplier, 0 or 1/(1-rate)
    bool identity = true;  // inference or rate 0: pass-through both ways
};

/// Inverted dropout: kept elements are scaled by 1/(1-rate) during training
/// so that inference is the literal identity (no rng consumed).
std::pair<Tensor, DropoutCache> dropout_forward(const Tensor& x, double rate, Rng& rng,
                                                bool training);

Tensor dropout_backward(const Tensor& grad_y, const DropoutCache& cache);

struct DenseCache {
    Tensor x;  // forward input [d]
};

struct DenseGrads {
    Tensor x;  // dL/dx
    Tensor w;  // dL/dW
    Tensor b;  // dL/db
};

/// y = W x + b with x: [d], W: [out x d], b: [out].
std::pair<Tensor, DenseCache> dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

DenseGrads dense_backward(const Tensor& grad_y, const DenseCache& cache, const Tensor& w);

/// Packed LSTM parameters. Gate order inside the 4H axis is fixed as
/// (input, forget, cell-candidate, output); checkpoints rely on this order.
struct LstmParams {
    Tensor w;  // input weights    [4H x n]
    Tensor u;  // recurrent weights [4H x H]
    Tensor b;  // bias             [4H]

    std::size_t hidden() const { return w.dim(0) / 4; }
    std::size_t input() const { return w.dim(1); }
};

/// Zero-initialized gradient accumulator shaped like `p`.
LstmParams lstm_grads_like(const LstmParams& p);

struct LstmStepCache {
    Tensor x, h_prev, c_prev;
    Tensor gate_i, gate_f, gate_g, gate_o;
    Tensor c, tanh_c;
};

/// One LSTM step: i,f,o are sigmoid gates, g the tanh candidate,
/// c_t = f*c_prev + i*g and h_t = o*tanh(c_t).
struct LstmStepOut {
    Tensor h;
    Tensor c;
    LstmStepCache cache;
};

LstmStepOut lstm_cell_forward(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
                              const LstmParams& p);

struct LstmStepGrads {
    Tensor x;
    Tensor h_prev;
    Tensor c_prev;
};

/// Backward through one step. `grad_h` / `grad_c` are the losses flowing in
/// from later steps; parameter gradients accumulate into `grad_p`.
LstmStepGrads lstm_cell_backward(const Tensor& grad_h, const Tensor& grad_c,
                                 const LstmStepCache& cache, const LstmParams& p,
                                 LstmParams& grad_p);

struct BilstmCache {
    std::vector<LstmStepCache> fwd;  // in processing order t = 0..T-1
    std::vector<LstmStepCache> bwd;  // in processing order t = T-1..0
    std::size_t time_steps = 0;
    std::size_t features = 0;
};

/// Runs one LSTM over t = 0..T-1 and a second over t = T-1..0 (both from
/// zero initial state) and concatenates the two terminal hidden states,
/// forward half first: output length is exactly 2H.
std::pair<Tensor, BilstmCache> bilstm_forward(const Tensor& x, const LstmParams& p_fwd,
                                              const LstmParams& p_bwd);

struct BilstmGrads {
    Tensor x;           // dL/dX, same shape as the input sequence
    LstmParams p_fwd;   // gradient tensors shaped like the parameters
    LstmParams p_bwd;
};

/// Full backpropagation through time in both directions; the two directions'
/// input gradients are summed over the shared sequence.
BilstmGrads bilstm_backward(const Tensor& grad_hc, const BilstmCache& cache,
                            const LstmParams& p_fwd, const LstmParams& p_bwd);

struct BceResult {
    double loss = 0.0;
    double grad_score = 0.0;
};

/// Binary cross-entropy on a sigmoid score. The score is clamped to
/// [eps, 1-eps] with eps = 1e-7 before both the loss and the gradient.
BceResult bce_loss(double score, int label);

}  // namespace flowdetect
