#include "flowdetect/layers.hpp"

#include <cmath>
#include <string>

namespace flowdetect {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ContractError(what);
}

}  // namespace

std::pair<Tensor, Conv1dCache> conv1d_forward(const Tensor& x, const Conv1dParams& p) {
    if (x.rank() != 2 || x.dim(1) != p.in_channels()) {
        throw DimensionError("conv1d input " + shape_to_string(x.shape()) + " does not match " +
                             std::to_string(p.in_channels()) + " input channels");
    }
    const std::size_t t_in = x.dim(0), in_ch = p.in_channels();
    const std::size_t k = p.kernel(), out_ch = p.out_channels();
    if (t_in < k) {
        throw SequenceError("conv1d: sequence length " + std::to_string(t_in) +
                            " is shorter than kernel size " + std::to_string(k));
    }
    const std::size_t t_out = t_in - k + 1;
    Tensor y({t_out, out_ch});
    for (std::size_t i = 0; i < t_out; ++i) {
        for (std::size_t c = 0; c < out_ch; ++c) {
            double acc = p.b.at(c);
            for (std::size_t ic = 0; ic < in_ch; ++ic) {
                for (std::size_t j = 0; j < k; ++j) {
                    acc += x.at(i + j, ic) * p.w.at(c, ic, j);
                }
            }
            y.at(i, c) = acc;
        }
    }
    y.ensure_finite("conv1d_forward");
    return {std::move(y), Conv1dCache{x}};
}

Conv1dGrads conv1d_backward(const Tensor& grad_y, const Conv1dCache& cache, const Conv1dParams& p) {
    const Tensor& x = cache.x;
    const std::size_t t_in = x.dim(0), in_ch = p.in_channels();
    const std::size_t k = p.kernel(), out_ch = p.out_channels();
    require(t_in >= k, "conv1d_backward: cache does not match parameters");
    const std::size_t t_out = t_in - k + 1;
    if (grad_y.rank() != 2 || grad_y.dim(0) != t_out || grad_y.dim(1) != out_ch) {
        throw ContractError("conv1d_backward: grad shape " + shape_to_string(grad_y.shape()) +
                            " does not match forward output [" + std::to_string(t_out) + "x" +
                            std::to_string(out_ch) + "]");
    }

    Conv1dGrads g{Tensor(x.shape()), Tensor(p.w.shape()), Tensor(p.b.shape())};
    for (std::size_t i = 0; i < t_out; ++i) {
        for (std::size_t c = 0; c < out_ch; ++c) {
            const double gy = grad_y.at(i, c);
            g.b.at(c) += gy;
            for (std::size_t ic = 0; ic < in_ch; ++ic) {
                for (std::size_t j = 0; j < k; ++j) {
                    g.w.at(c, ic, j) += gy * x.at(i + j, ic);
                    g.x.at(i + j, ic) += gy * p.w.at(c, ic, j);
                }
            }
        }
    }
    g.x.ensure_finite("conv1d_backward");
    g.w.ensure_finite("conv1d_backward");
    g.b.ensure_finite("conv1d_backward");
    return g;
}

std::pair<Tensor, MaxPoolCache> maxpool1d_forward(const Tensor& x, std::size_t window) {
    if (x.rank() != 2) {
        throw DimensionError("maxpool1d expects [T x ch], got " + shape_to_string(x.shape()));
    }
    if (window == 0) throw ConfigError("maxpool1d: window must be >= 1");
    const std::size_t t_in = x.dim(0), ch = x.dim(1);
    if (t_in < window) {
        throw SequenceError("maxpool1d: sequence length " + std::to_string(t_in) +
                            " is shorter than window " + std::to_string(window));
    }
    const std::size_t t_out = t_in / window;
    Tensor y({t_out, ch});
    MaxPoolCache cache;
    cache.argmax.resize(t_out * ch);
    cache.in_rows = t_in;
    cache.channels = ch;
    cache.window = window;
    for (std::size_t o = 0; o < t_out; ++o) {
        for (std::size_t c = 0; c < ch; ++c) {
            std::size_t best = o * window;
            double best_v = x.at(best, c);
            for (std::size_t r = o * window + 1; r < (o + 1) * window; ++r) {
                if (x.at(r, c) > best_v) {  // strict: ties keep the lowest index
                    best_v = x.at(r, c);
                    best = r;
                }
            }
            y.at(o, c) = best_v;
            cache.argmax[o * ch + c] = best;
        }
    }
    return {std::move(y), std::move(cache)};
}

Tensor maxpool1d_backward(const Tensor& grad_y, const MaxPoolCache& cache) {
    const std::size_t t_out = cache.in_rows / cache.window;
    if (grad_y.rank() != 2 || grad_y.dim(0) != t_out || grad_y.dim(1) != cache.channels) {
        throw ContractError("maxpool1d_backward: grad shape " + shape_to_string(grad_y.shape()) +
                            " does not match the cached forward pass");
    }
    Tensor grad_x({cache.in_rows, cache.channels});
    for (std::size_t o = 0; o < t_out; ++o) {
        for (std::size_t c = 0; c < cache.channels; ++c) {
            grad_x.at(cache.argmax[o * cache.channels + c], c) += grad_y.at(o, c);
        }
    }
    return grad_x;
}

std::pair<Tensor, DropoutCache> dropout_forward(const Tensor& x, double rate, Rng& rng,
                                                bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("dropout rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        return {x, DropoutCache{Tensor(), true}};
    }
    const double scale = 1.0 / (1.0 - rate);
    Tensor mask(x.shape());
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double keep = rng.next_double() >= rate ? scale : 0.0;
        mask.at(i) = keep;
        y.at(i) = x.at(i) * keep;
    }
    return {std::move(y), DropoutCache{std::move(mask), false}};
}

Tensor dropout_backward(const Tensor& grad_y, const DropoutCache& cache) {
    if (cache.identity) return grad_y;
    if (!grad_y.same_shape(cache.mask)) {
        throw ContractError("dropout_backward: grad shape does not match the cached mask");
    }
    return mul(grad_y, cache.mask);
}

std::pair<Tensor, DenseCache> dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 1 || w.rank() != 2 || w.dim(1) != x.dim(0) || b.dim(0) != w.dim(0)) {
        throw DimensionError("dense shape mismatch: x " + shape_to_string(x.shape()) + ", W " +
                             shape_to_string(w.shape()) + ", b " + shape_to_string(b.shape()));
    }
    const std::size_t out = w.dim(0), d = x.dim(0);
    Tensor y({out});
    for (std::size_t o = 0; o < out; ++o) {
        double acc = b.at(o);
        for (std::size_t i = 0; i < d; ++i) acc += w.at(o, i) * x.at(i);
        y.at(o) = acc;
    }
    y.ensure_finite("dense_forward");
    return {std::move(y), DenseCache{x}};
}

DenseGrads dense_backward(const Tensor& grad_y, const DenseCache& cache, const Tensor& w) {
    const std::size_t out = w.dim(0), d = w.dim(1);
    if (grad_y.rank() != 1 || grad_y.dim(0) != out || cache.x.dim(0) != d) {
        throw ContractError("dense_backward: grad/cache shapes do not match the weights");
    }
    DenseGrads g{Tensor({d}), Tensor({out, d}), grad_y};
    for (std::size_t o = 0; o < out; ++o) {
        const double gy = grad_y.at(o);
        for (std::size_t i = 0; i < d; ++i) {
            g.w.at(o, i) = gy * cache.x.at(i);
            g.x.at(i) += gy * w.at(o, i);
        }
    }
    return g;
}

LstmParams lstm_grads_like(const LstmParams& p) {
    return LstmParams{Tensor(p.w.shape()), Tensor(p.u.shape()), Tensor(p.b.shape())};
}

LstmStepOut lstm_cell_forward(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
                              const LstmParams& p) {
    const std::size_t h = p.hidden(), n = p.input();
    if (x_t.rank() != 1 || x_t.dim(0) != n || h_prev.dim(0) != h || c_prev.dim(0) != h) {
        throw DimensionError("lstm_cell shape mismatch: x " + shape_to_string(x_t.shape()) +
                             ", h " + shape_to_string(h_prev.shape()) + " against W " +
                             shape_to_string(p.w.shape()));
    }
    // Pre-activations for all four gates in packed (i, f, g, o) order.
    Tensor z({4 * h});
    for (std::size_t r = 0; r < 4 * h; ++r) {
        double acc = p.b.at(r);
        for (std::size_t c = 0; c < n; ++c) acc += p.w.at(r, c) * x_t.at(c);
        for (std::size_t c = 0; c < h; ++c) acc += p.u.at(r, c) * h_prev.at(c);
        z.at(r) = acc;
    }

    LstmStepCache cache;
    cache.x = x_t;
    cache.h_prev = h_prev;
    cache.c_prev = c_prev;
    cache.gate_i = Tensor({h});
    cache.gate_f = Tensor({h});
    cache.gate_g = Tensor({h});
    cache.gate_o = Tensor({h});
    cache.c = Tensor({h});
    cache.tanh_c = Tensor({h});

    Tensor h_t({h});
    for (std::size_t j = 0; j < h; ++j) {
        const double gi = sigmoid_scalar(z.at(j));
        const double gf = sigmoid_scalar(z.at(h + j));
        const double gg = std::tanh(z.at(2 * h + j));
        const double go = sigmoid_scalar(z.at(3 * h + j));
        const double c_t = gf * c_prev.at(j) + gi * gg;
        const double tc = std::tanh(c_t);
        cache.gate_i.at(j) = gi;
        cache.gate_f.at(j) = gf;
        cache.gate_g.at(j) = gg;
        cache.gate_o.at(j) = go;
        cache.c.at(j) = c_t;
        cache.tanh_c.at(j) = tc;
        h_t.at(j) = go * tc;
    }
    h_t.ensure_finite("lstm_cell_forward");
    Tensor c_out = cache.c;
    return LstmStepOut{std::move(h_t), std::move(c_out), std::move(cache)};
}

LstmStepGrads lstm_cell_backward(const Tensor& grad_h, const Tensor& grad_c,
                                 const LstmStepCache& cache, const LstmParams& p,
                                 LstmParams& grad_p) {
    const std::size_t h = p.hidden(), n = p.input();
    require(grad_h.dim(0) == h && grad_c.dim(0) == h && cache.gate_i.dim(0) == h &&
                cache.x.dim(0) == n,
            "lstm_cell_backward: grads or cache do not match the parameters");

    // Gate pre-activation gradients, packed (i, f, g, o).
    Tensor dz({4 * h});
    Tensor dc_prev({h});
    for (std::size_t j = 0; j < h; ++j) {
        const double gi = cache.gate_i.at(j);
        const double gf = cache.gate_f.at(j);
        const double gg = cache.gate_g.at(j);
        const double go = cache.gate_o.at(j);
        const double tc = cache.tanh_c.at(j);

        const double dh = grad_h.at(j);
        const double dc = grad_c.at(j) + dh * go * (1.0 - tc * tc);

        dz.at(j) = dc * gg * gi * (1.0 - gi);                        // input gate
        dz.at(h + j) = dc * cache.c_prev.at(j) * gf * (1.0 - gf);    // forget gate
        dz.at(2 * h + j) = dc * gi * (1.0 - gg * gg);                // candidate
        dz.at(3 * h + j) = dh * tc * go * (1.0 - go);                // output gate
        dc_prev.at(j) = dc * gf;
    }

    LstmStepGrads g{Tensor({n}), Tensor({h}), std::move(dc_prev)};
    for (std::size_t r = 0; r < 4 * h; ++r) {
        const double d = dz.at(r);
        grad_p.b.at(r) += d;
        for (std::size_t c = 0; c < n; ++c) {
            grad_p.w.at(r, c) += d * cache.x.at(c);
            g.x.at(c) += d * p.w.at(r, c);
        }
        for (std::size_t c = 0; c < h; ++c) {
            grad_p.u.at(r, c) += d * cache.h_prev.at(c);
            g.h_prev.at(c) += d * p.u.at(r, c);
        }
    }
    return g;
}

namespace {

Tensor sequence_row(const Tensor& x, std::size_t t) {
    const std::size_t n = x.dim(1);
    Tensor row({n});
    for (std::size_t c = 0; c < n; ++c) row.at(c) = x.at(t, c);
    return row;
}

}  // namespace

std::pair<Tensor, BilstmCache> bilstm_forward(const Tensor& x, const LstmParams& p_fwd,
                                              const LstmParams& p_bwd) {
    if (x.rank() != 2) {
        throw DimensionError("bilstm expects [T x n] input, got " + shape_to_string(x.shape()));
    }
    const std::size_t t_steps = x.dim(0), n = x.dim(1);
    if (t_steps == 0) throw SequenceError("bilstm: empty sequence");
    if (p_fwd.input() != n || p_bwd.input() != n || p_fwd.hidden() != p_bwd.hidden()) {
        throw DimensionError("bilstm parameter shapes do not match the input feature count");
    }
    const std::size_t h = p_fwd.hidden();

    BilstmCache cache;
    cache.time_steps = t_steps;
    cache.features = n;
    cache.fwd.reserve(t_steps);
    cache.bwd.reserve(t_steps);

    Tensor h_f({h}), c_f({h});
    for (std::size_t t = 0; t < t_steps; ++t) {
        auto step = lstm_cell_forward(sequence_row(x, t), h_f, c_f, p_fwd);
        h_f = std::move(step.h);
        c_f = std::move(step.c);
        cache.fwd.push_back(std::move(step.cache));
    }

    Tensor h_b({h}), c_b({h});
    for (std::size_t i = 0; i < t_steps; ++i) {
        const std::size_t t = t_steps - 1 - i;
        auto step = lstm_cell_forward(sequence_row(x, t), h_b, c_b, p_bwd);
        h_b = std::move(step.h);
        c_b = std::move(step.c);
        cache.bwd.push_back(std::move(step.cache));
    }

    // Terminal states of both directions, forward half first.
    Tensor h_c({2 * h});
    for (std::size_t j = 0; j < h; ++j) {
        h_c.at(j) = h_f.at(j);
        h_c.at(h + j) = h_b.at(j);
    }
    return {std::move(h_c), std::move(cache)};
}

BilstmGrads bilstm_backward(const Tensor& grad_hc, const BilstmCache& cache,
                            const LstmParams& p_fwd, const LstmParams& p_bwd) {
    const std::size_t t_steps = cache.time_steps, n = cache.features;
    const std::size_t h = p_fwd.hidden();
    if (grad_hc.rank() != 1 || grad_hc.dim(0) != 2 * h || cache.fwd.size() != t_steps ||
        cache.bwd.size() != t_steps) {
        throw ContractError("bilstm_backward: grad or cache does not match the forward pass");
    }

    BilstmGrads g{Tensor({t_steps, n}), lstm_grads_like(p_fwd), lstm_grads_like(p_bwd)};

    // Forward direction: only the terminal hidden state receives an external
    // gradient; earlier steps get theirs through the recurrence.
    Tensor dh({h}), dc({h});
    for (std::size_t j = 0; j < h; ++j) dh.at(j) = grad_hc.at(j);
    for (std::size_t i = 0; i < t_steps; ++i) {
        const std::size_t t = t_steps - 1 - i;
        auto step = lstm_cell_backward(dh, dc, cache.fwd[t], p_fwd, g.p_fwd);
        for (std::size_t c = 0; c < n; ++c) g.x.at(t, c) += step.x.at(c);
        dh = std::move(step.h_prev);
        dc = std::move(step.c_prev);
    }

    // Backward direction processed t = T-1..0, so cache.bwd[i] holds step
    // t = T-1-i; unwinding starts from its terminal state (the t = 0 step).
    Tensor dhb({h}), dcb({h});
    for (std::size_t j = 0; j < h; ++j) dhb.at(j) = grad_hc.at(h + j);
    for (std::size_t i = 0; i < t_steps; ++i) {
        const std::size_t idx = t_steps - 1 - i;
        const std::size_t t = t_steps - 1 - idx;
        auto step = lstm_cell_backward(dhb, dcb, cache.bwd[idx], p_bwd, g.p_bwd);
        for (std::size_t c = 0; c < n; ++c) g.x.at(t, c) += step.x.at(c);
        dhb = std::move(step.h_prev);
        dcb = std::move(step.c_prev);
    }

    g.x.ensure_finite("bilstm_backward");
    return g;
}

BceResult bce_loss(double score, int label) {
    if (label != 0 && label != 1) {
        throw ContractError("bce_loss: label must be 0 or 1, got " + std::to_string(label));
    }
    constexpr double kEps = 1e-7;
    const double s = std::min(std::max(score, kEps), 1.0 - kEps);
    const double y = static_cast<double>(label);
    BceResult r;
    r.loss = -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
    r.grad_score = (s - y) / (s * (1.0 - s));
    return r;
}

}  // namespace flowdetect
