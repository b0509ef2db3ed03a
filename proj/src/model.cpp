#include "flowdetect/model.hpp"

#include <cmath>
#include <utility>

#include "flowdetect/serialize.hpp"

namespace flowdetect {

void ModelConfig::validate() const {
    if (time_steps == 0 || features == 0 || hidden == 0) {
        throw ConfigError("model config: T, n and hidden size must all be >= 1");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ConfigError("model config: dropout must lie in [0,1)");
    }
    std::size_t len = time_steps;
    for (const auto& block : conv_blocks) {
        if (block.out_channels == 0 || block.kernel == 0 || block.pool == 0) {
            throw ConfigError("model config: conv block sizes must be >= 1");
        }
        if (len < block.kernel) {
            throw ConfigError("model config: sequence length " + std::to_string(len) +
                              " is shorter than kernel " + std::to_string(block.kernel));
        }
        len = len - block.kernel + 1;
        if (len < block.pool) {
            throw ConfigError("model config: sequence length " + std::to_string(len) +
                              " is shorter than pool window " + std::to_string(block.pool));
        }
        len /= block.pool;
    }
    if (len == 0) throw ConfigError("model config: conv stack consumes the whole sequence");
}

std::pair<std::size_t, std::size_t> ModelConfig::conv_output() const {
    std::size_t len = time_steps;
    std::size_t channels = features;
    for (const auto& block : conv_blocks) {
        len = (len - block.kernel + 1) / block.pool;
        channels = block.out_channels;
    }
    return {len, channels};
}

ModelParams make_params(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    std::size_t in_ch = config.features;
    for (const auto& block : config.conv_blocks) {
        p.conv.push_back(Conv1dParams{Tensor({block.out_channels, in_ch, block.kernel}),
                                      Tensor({block.out_channels})});
        in_ch = block.out_channels;
    }
    const std::size_t lstm_in = config.conv_output().second;
    const std::size_t h = config.hidden;
    p.lstm_fwd = LstmParams{Tensor({4 * h, lstm_in}), Tensor({4 * h, h}), Tensor({4 * h})};
    p.lstm_bwd = LstmParams{Tensor({4 * h, lstm_in}), Tensor({4 * h, h}), Tensor({4 * h})};
    p.dense_w = Tensor({1, 2 * h});
    p.dense_b = Tensor({1});
    return p;
}

namespace {

void init_lstm(LstmParams& p, Rng& rng) {
    const std::size_t h = p.hidden();
    p.w = init_uniform(rng, p.w.shape(), uniform_init_bound(p.input()));
    p.u = init_uniform(rng, p.u.shape(), uniform_init_bound(h));
    p.b = Tensor(p.b.shape());
    // Forget-gate slice (second quarter of the packed (i,f,g,o) layout).
    for (std::size_t j = 0; j < h; ++j) p.b.at(h + j) = 1.0;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, Rng& rng) {
    ModelParams p = make_params(config);
    for (auto& block : p.conv) {
        const double bound = uniform_init_bound(block.in_channels() * block.kernel());
        block.w = init_uniform(rng, block.w.shape(), bound);
        block.b = init_uniform(rng, block.b.shape(), bound);
    }
    init_lstm(p.lstm_fwd, rng);
    init_lstm(p.lstm_bwd, rng);
    const double dense_bound = uniform_init_bound(p.dense_w.dim(1));
    p.dense_w = init_uniform(rng, p.dense_w.shape(), dense_bound);
    p.dense_b = init_uniform(rng, p.dense_b.shape(), dense_bound);
    return p;
}

std::vector<Tensor*> param_views(ModelParams& params) {
    std::vector<Tensor*> v;
    for (auto& block : params.conv) {
        v.push_back(&block.w);
        v.push_back(&block.b);
    }
    for (LstmParams* lstm : {&params.lstm_fwd, &params.lstm_bwd}) {
        v.push_back(&lstm->w);
        v.push_back(&lstm->u);
        v.push_back(&lstm->b);
    }
    v.push_back(&params.dense_w);
    v.push_back(&params.dense_b);
    return v;
}

std::vector<const Tensor*> param_views(const ModelParams& params) {
    std::vector<const Tensor*> v;
    for (const auto t : param_views(const_cast<ModelParams&>(params))) v.push_back(t);
    return v;
}

namespace {

Tensor batch_sample(const Tensor& batch, std::size_t b) {
    const std::size_t t = batch.dim(1), n = batch.dim(2);
    Tensor x({t, n});
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < n; ++j) x.at(i, j) = batch.at(b, i, j);
    return x;
}

}  // namespace

ForwardResult forward(const Tensor& batch, const ModelParams& params, const ModelConfig& config,
                      bool training, Rng* rng) {
    config.validate();
    if (batch.rank() != 3 || batch.dim(1) != config.time_steps || batch.dim(2) != config.features) {
        throw DimensionError("forward: batch " + shape_to_string(batch.shape()) +
                             " does not match config [B x " + std::to_string(config.time_steps) +
                             " x " + std::to_string(config.features) + "]");
    }
    if (params.conv.size() != config.conv_blocks.size()) {
        throw DimensionError("forward: parameter set has " + std::to_string(params.conv.size()) +
                             " conv blocks, config expects " +
                             std::to_string(config.conv_blocks.size()));
    }
    if (training && config.dropout > 0.0 && rng == nullptr) {
        throw ContractError("forward: training with dropout requires an rng");
    }

    const std::size_t batch_size = batch.dim(0);
    ForwardResult result;
    result.scores = Tensor({batch_size});
    result.caches.resize(batch_size);

    for (std::size_t b = 0; b < batch_size; ++b) {
        SampleCache& cache = result.caches[b];
        Tensor act = batch_sample(batch, b);
        for (std::size_t blk = 0; blk < params.conv.size(); ++blk) {
            auto [conv_out, conv_cache] = conv1d_forward(act, params.conv[blk]);
            cache.conv.push_back(std::move(conv_cache));
            auto [pool_out, pool_cache] = maxpool1d_forward(conv_out, config.conv_blocks[blk].pool);
            cache.pool.push_back(std::move(pool_cache));
            act = std::move(pool_out);
        }

        Rng dummy(0);
        auto [dropped, drop_cache] =
            dropout_forward(act, config.dropout, rng ? *rng : dummy, training);
        cache.dropout = std::move(drop_cache);

        auto [h_c, bilstm_cache] = bilstm_forward(dropped, params.lstm_fwd, params.lstm_bwd);
        cache.bilstm = std::move(bilstm_cache);

        auto [logit, dense_cache] = dense_forward(h_c, params.dense_w, params.dense_b);
        cache.dense = std::move(dense_cache);

        cache.score = sigmoid_scalar(logit.at(0));
        result.scores.at(b) = cache.score;
    }
    return result;
}

LossResult loss_and_grads(const Tensor& batch, const std::vector<std::uint8_t>& labels,
                          const ModelParams& params, const ModelConfig& config, Rng* rng) {
    if (batch.rank() != 3 || labels.size() != batch.dim(0)) {
        throw DimensionError("loss_and_grads: " + std::to_string(labels.size()) +
                             " labels for batch " + shape_to_string(batch.shape()));
    }
    ForwardResult fwd = forward(batch, params, config, /*training=*/true, rng);

    const std::size_t batch_size = batch.dim(0);
    LossResult result;
    result.grads = make_params(config);

    for (std::size_t b = 0; b < batch_size; ++b) {
        const SampleCache& cache = fwd.caches[b];
        const double score = cache.score;
        const BceResult bce = bce_loss(score, labels[b]);
        result.loss += bce.loss / static_cast<double>(batch_size);

        // d(mean loss)/d(logit) through the sigmoid.
        const double dscore = bce.grad_score / static_cast<double>(batch_size);
        const double dlogit = dscore * score * (1.0 - score);

        DenseGrads dg = dense_backward(Tensor({1}, {dlogit}), cache.dense, params.dense_w);
        for (std::size_t i = 0; i < dg.w.numel(); ++i) result.grads.dense_w.at(i) += dg.w.at(i);
        result.grads.dense_b.at(0) += dg.b.at(0);

        BilstmGrads bg = bilstm_backward(dg.x, cache.bilstm, params.lstm_fwd, params.lstm_bwd);
        for (auto [dst, src] : {std::pair{&result.grads.lstm_fwd, &bg.p_fwd},
                                std::pair{&result.grads.lstm_bwd, &bg.p_bwd}}) {
            for (std::size_t i = 0; i < dst->w.numel(); ++i) dst->w.at(i) += src->w.at(i);
            for (std::size_t i = 0; i < dst->u.numel(); ++i) dst->u.at(i) += src->u.at(i);
            for (std::size_t i = 0; i < dst->b.numel(); ++i) dst->b.at(i) += src->b.at(i);
        }

        Tensor act_grad = dropout_backward(bg.x, cache.dropout);
        for (std::size_t blk = params.conv.size(); blk-- > 0;) {
            Tensor pool_grad = maxpool1d_backward(act_grad, cache.pool[blk]);
            Conv1dGrads cg = conv1d_backward(pool_grad, cache.conv[blk], params.conv[blk]);
            for (std::size_t i = 0; i < cg.w.numel(); ++i) result.grads.conv[blk].w.at(i) += cg.w.at(i);
            for (std::size_t i = 0; i < cg.b.numel(); ++i) result.grads.conv[blk].b.at(i) += cg.b.at(i);
            act_grad = std::move(cg.x);
        }
    }
    return result;
}

namespace {

constexpr char kCheckpointMagic[9] = "FDCHKPNT";
constexpr std::uint32_t kCheckpointVersion = 1;

std::string config_to_bytes(const ModelConfig& c) {
    ByteWriter w;
    w.put_u64(c.time_steps);
    w.put_u64(c.features);
    w.put_u64(c.conv_blocks.size());
    for (const auto& block : c.conv_blocks) {
        w.put_u64(block.out_channels);
        w.put_u64(block.kernel);
        w.put_u64(block.pool);
    }
    w.put_f64(c.dropout);
    w.put_u64(c.hidden);
    return w.take();
}

ModelConfig config_from_bytes(const std::string& bytes) {
    ByteReader r(bytes);
    ModelConfig c;
    c.time_steps = r.get_u64();
    c.features = r.get_u64();
    const std::uint64_t blocks = r.get_u64();
    c.conv_blocks.clear();
    for (std::uint64_t i = 0; i < blocks; ++i) {
        ConvBlockConfig b;
        b.out_channels = r.get_u64();
        b.kernel = r.get_u64();
        b.pool = r.get_u64();
        c.conv_blocks.push_back(b);
    }
    c.dropout = r.get_f64();
    c.hidden = r.get_u64();
    return c;
}

std::string params_to_bytes(const ModelParams& p) {
    ByteWriter w;
    const auto views = param_views(p);
    w.put_u64(views.size());
    for (const Tensor* t : views) {
        w.put_u64(t->rank());
        for (std::size_t d = 0; d < t->rank(); ++d) w.put_u64(t->dim(d));
        w.put_f64_array(t->values());
    }
    return w.take();
}

void params_from_bytes(const std::string& bytes, ModelParams& p) {
    ByteReader r(bytes);
    auto views = param_views(p);
    const std::uint64_t count = r.get_u64();
    if (count != views.size()) {
        throw IntegrityError("checkpoint holds " + std::to_string(count) +
                             " parameter tensors, the architecture expects " +
                             std::to_string(views.size()));
    }
    for (Tensor* t : views) {
        const std::uint64_t rank = r.get_u64();
        Shape shape(rank);
        for (auto& d : shape) d = r.get_u64();
        std::vector<double> values = r.get_f64_array();
        Tensor loaded(shape, std::move(values));
        if (!loaded.same_shape(*t)) {
            throw IntegrityError("checkpoint tensor shape " + shape_to_string(loaded.shape()) +
                                 " does not match the architecture's " +
                                 shape_to_string(t->shape()));
        }
        *t = std::move(loaded);
    }
}

const std::string& section(const std::map<std::string, std::string>& sections,
                           const std::string& name, const std::string& path) {
    const auto it = sections.find(name);
    if (it == sections.end()) throw IntegrityError(path + ": missing section '" + name + "'");
    return it->second;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    ByteWriter threshold;
    threshold.put_f64(ckpt.threshold);
    ByteWriter meta;
    meta.put_u64(ckpt.meta.epochs_run);
    meta.put_u64(ckpt.meta.best_epoch);
    meta.put_f64(ckpt.meta.best_val_f1);
    meta.put_u64(ckpt.meta.window_stride);
    write_container(path, kCheckpointMagic, kCheckpointVersion,
                    {{"config", config_to_bytes(ckpt.config)},
                     {"params", params_to_bytes(ckpt.params)},
                     {"stats", preproc_stats_to_bytes(ckpt.stats)},
                     {"threshold", threshold.take()},
                     {"meta", meta.take()}});
}

Checkpoint load_checkpoint(const std::string& path) {
    const auto sections = read_container(path, kCheckpointMagic, kCheckpointVersion);
    Checkpoint ckpt;
    ckpt.config = config_from_bytes(section(sections, "config", path));
    ckpt.config.validate();
    ckpt.params = make_params(ckpt.config);
    params_from_bytes(section(sections, "params", path), ckpt.params);
    ckpt.stats = preproc_stats_from_bytes(section(sections, "stats", path));
    ByteReader threshold(section(sections, "threshold", path));
    ckpt.threshold = threshold.get_f64();
    ByteReader meta(section(sections, "meta", path));
    ckpt.meta.epochs_run = meta.get_u64();
    ckpt.meta.best_epoch = meta.get_u64();
    ckpt.meta.best_val_f1 = meta.get_f64();
    ckpt.meta.window_stride = meta.get_u64();
    return ckpt;
}

}  // namespace flowdetect
