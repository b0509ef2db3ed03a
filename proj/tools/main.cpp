// flowdetect - NetFlow anomaly detector CLI.
//
// Subcommands mirror the workflow: prepare (ingest + preprocess + window),
// train (fit + calibrate), evaluate (test-split metrics), predict (score a
// raw CSV). Exit codes: 0 success, 1 usage/config, 2 data error, 3 internal
// invariant violation.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowdetect/dataflow.hpp"
#include "flowdetect/metrics.hpp"
#include "flowdetect/model.hpp"
#include "flowdetect/pipeline.hpp"
#include "flowdetect/serialize.hpp"

namespace fd = flowdetect;
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw fd::ConfigError("cannot open config file " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw fd::ConfigError("config file " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw fd::ConfigError("config file " + path + " must hold a JSON object");
    return cfg;
}

// Precedence: command-line flag > config-file key > built-in default.
template <typename T>
const char* merge_option(const json& cfg, const CLI::Option* opt, const char* key, T& value) {
    if (opt != nullptr && opt->count() > 0) return "flag";
    if (cfg.contains(key)) {
        try {
            value = cfg.at(key).get<T>();
        } catch (const json::exception& e) {
            throw fd::ConfigError(std::string("config key '") + key + "': " + e.what());
        }
        return "config-file";
    }
    return "default";
}

void print_setting(const char* key, const std::string& value, const char* source) {
    std::printf("config: %-14s = %s [%s]\n", key, value.c_str(), source);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

fd::SplitRatios parse_splits(const std::string& text) {
    fd::SplitRatios r{};
    double a = 0, b = 0, c = 0;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3) {
        throw fd::ConfigError("--splits expects three comma-separated ratios, got '" + text + "'");
    }
    r.train = a;
    r.val = b;
    r.test = c;
    return r;
}

struct PrepareOptions {
    std::string data;
    std::string out_dir;
    std::string splits_text = "0.6,0.2,0.2";
    std::size_t window = 10;
    std::size_t stride = 1;
    std::size_t sample = 0;  // 0 = use every row
    std::uint64_t seed = 1;
};

int run_prepare(const PrepareOptions& opt) {
    const fd::SplitRatios ratios = parse_splits(opt.splits_text);
    fs::create_directories(opt.out_dir);

    fd::LoadResult loaded = fd::load_csv(opt.data);
    std::printf("loaded %zu records (%zu skipped), benign share %.4f%%\n", loaded.records.size(),
                loaded.skipped.size(), 100.0 * loaded.benign_fraction());
    for (std::size_t i = 0; i < loaded.skipped.size() && i < 5; ++i) {
        std::printf("  skipped line %zu: %s\n", loaded.skipped[i].line,
                    loaded.skipped[i].reason.c_str());
    }
    if (loaded.skipped.size() > 5) {
        std::printf("  ... and %zu more\n", loaded.skipped.size() - 5);
    }

    std::vector<fd::FlowRecord> records = std::move(loaded.records);
    if (opt.sample > 0 && opt.sample < records.size()) {
        records = fd::subsample_stratified(records, opt.sample, opt.seed);
        std::printf("stratified subsample: %zu rows (seed %llu)\n", records.size(),
                    static_cast<unsigned long long>(opt.seed));
    }

    const fd::Splits splits = fd::split_chronological(records, ratios);
    const fd::PreprocStats stats = fd::fit_preprocessor(splits.train);

    ordered_json summary;
    summary["rows_loaded"] = records.size();
    summary["rows_skipped"] = loaded.skipped.size();
    summary["benign_share"] = loaded.benign_fraction();
    summary["sample"] = opt.sample;
    summary["seed"] = opt.seed;
    summary["window"] = opt.window;
    summary["stride"] = opt.stride;
    summary["features"] = stats.feature_names;
    summary["dropped_features"] = stats.dropped;

    const struct {
        const char* name;
        const std::vector<fd::FlowRecord>& rows;
        const char* file;
    } parts[] = {{"train", splits.train, "train.windows"},
                 {"val", splits.val, "val.windows"},
                 {"test", splits.test, "test.windows"}};

    for (const auto& part : parts) {
        const fd::FeatureTable table = fd::transform(part.rows, stats);
        const fd::WindowSet ws = fd::build_windows(table, opt.window, opt.stride);
        fd::save_window_set(ws, (fs::path(opt.out_dir) / part.file).string());
        std::size_t attacks = 0;
        for (auto l : ws.labels) attacks += l;
        summary[part.name] = {{"rows", part.rows.size()},
                              {"windows", ws.count()},
                              {"attack_windows", attacks}};
        std::printf("%s: %zu rows -> %zu windows (%zu attack)\n", part.name, part.rows.size(),
                    ws.count(), attacks);
    }

    fd::save_preproc_stats(stats, (fs::path(opt.out_dir) / "preproc.stats").string());
    fd::write_file_atomic((fs::path(opt.out_dir) / "summary.json").string(), summary.dump(2) + "\n");
    std::printf("prepared caches written to %s\n", opt.out_dir.c_str());
    return 0;
}

struct TrainOptions {
    std::string prepared;
    std::string out_ckpt;
    fd::TrainConfig train;
    double dropout = 0.3;
    std::size_t hidden = 64;
    std::vector<std::vector<std::size_t>> conv_blocks;  // optional config-file override
};

std::string csv_epoch_metrics(const std::vector<fd::EpochReport>& history) {
    std::string out = "epoch,train_loss,val_accuracy,val_precision,val_recall,val_f1,threshold\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + fmt_double(r.train_loss) + "," +
               fmt_double(r.val_accuracy) + "," + fmt_double(r.val_precision) + "," +
               fmt_double(r.val_recall) + "," + fmt_double(r.val_f1) + "," +
               fmt_double(r.threshold) + "\n";
    }
    return out;
}

int run_train(const TrainOptions& opt) {
    const fd::WindowSet wtrain =
        fd::load_window_set((fs::path(opt.prepared) / "train.windows").string());
    const fd::WindowSet wval = fd::load_window_set((fs::path(opt.prepared) / "val.windows").string());
    const fd::PreprocStats stats =
        fd::load_preproc_stats((fs::path(opt.prepared) / "preproc.stats").string());

    fd::ModelConfig mc;
    mc.time_steps = wtrain.time_steps();
    mc.features = wtrain.features();
    mc.dropout = opt.dropout;
    mc.hidden = opt.hidden;
    if (!opt.conv_blocks.empty()) {
        mc.conv_blocks.clear();
        for (const auto& triple : opt.conv_blocks) {
            if (triple.size() != 3) {
                throw fd::ConfigError("conv_blocks entries must be [out_channels, kernel, pool]");
            }
            mc.conv_blocks.push_back({triple[0], triple[1], triple[2]});
        }
    }
    mc.validate();

    std::printf("training on %zu windows (val %zu), T=%zu n=%zu\n", wtrain.count(), wval.count(),
                mc.time_steps, mc.features);

    const fd::TrainResult result = fd::train(wtrain, wval, stats, mc, opt.train);
    for (const auto& r : result.history) {
        std::printf("epoch %2zu  loss %.6f  val f1 %.4f  (tau %.4f)\n", r.epoch, r.train_loss,
                    r.val_f1, r.threshold);
    }

    const fs::path out_path(opt.out_ckpt);
    const fs::path out_dir = out_path.parent_path().empty() ? "." : out_path.parent_path();
    fs::create_directories(out_dir);
    fd::save_checkpoint(result.best, out_path.string());

    std::string loss_csv = "epoch,loss\n";
    for (const auto& r : result.history) {
        loss_csv += std::to_string(r.epoch) + "," + fmt_double(r.train_loss) + "\n";
    }
    fd::write_file_atomic((out_dir / "loss_curve.csv").string(), loss_csv);
    fd::write_file_atomic((out_dir / "epoch_metrics.csv").string(), csv_epoch_metrics(result.history));

    // Calibration sweep of the shipped model over the validation split.
    const std::vector<double> val_scores =
        fd::score_windows(result.best.params, result.best.config, wval);
    std::string sweep_csv = "threshold,f1\n";
    for (const auto& [tau, f1] : fd::threshold_sweep(val_scores, wval.labels, opt.train.threshold_grid)) {
        sweep_csv += fmt_double(tau) + "," + fmt_double(f1) + "\n";
    }
    fd::write_file_atomic((out_dir / "threshold_sweep.csv").string(), sweep_csv);

    ordered_json summary;
    summary["epochs_run"] = result.best.meta.epochs_run;
    summary["best_epoch"] = result.best.meta.best_epoch;
    summary["best_val_f1"] = result.best.meta.best_val_f1;
    summary["threshold"] = result.best.threshold;
    summary["seed"] = opt.train.seed;
    summary["batch_size"] = opt.train.batch_size;
    summary["learning_rate"] = opt.train.adam.learning_rate;
    summary["hidden"] = opt.hidden;
    summary["dropout"] = opt.dropout;
    summary["train_windows"] = wtrain.count();
    summary["val_windows"] = wval.count();
    fd::write_file_atomic((out_dir / "train_summary.json").string(), summary.dump(2) + "\n");

    std::printf("best epoch %llu: validation F1 %.4f at threshold %.6f\n",
                static_cast<unsigned long long>(result.best.meta.best_epoch),
                result.best.meta.best_val_f1, result.best.threshold);
    std::printf("checkpoint written to %s\n", opt.out_ckpt.c_str());
    return 0;
}

struct EvaluateOptions {
    std::string ckpt;
    std::string prepared;
    std::string out = "metrics.json";
};

int run_evaluate(const EvaluateOptions& opt) {
    const fd::Checkpoint ckpt = fd::load_checkpoint(opt.ckpt);
    const fd::WindowSet wtest =
        fd::load_window_set((fs::path(opt.prepared) / "test.windows").string());
    const fd::MetricsReport report = fd::evaluate(ckpt, wtest);
    std::fputs(fd::metrics_to_text(report).c_str(), stdout);
    fd::write_file_atomic(opt.out, fd::metrics_to_json(report));
    std::printf("metrics written to %s\n", opt.out.c_str());
    return 0;
}

struct PredictOptions {
    std::string ckpt;
    std::string data;
    std::string out;  // empty = stdout
};

int run_predict(const PredictOptions& opt) {
    const fd::Checkpoint ckpt = fd::load_checkpoint(opt.ckpt);
    const fd::LoadResult loaded = fd::load_csv(opt.data);
    if (!loaded.skipped.empty()) {
        std::fprintf(stderr, "note: skipped %zu malformed rows\n", loaded.skipped.size());
    }
    const fd::FeatureTable table = fd::transform(loaded.records, ckpt.stats);
    const fd::WindowSet ws =
        fd::build_windows(table, ckpt.config.time_steps, ckpt.meta.window_stride);
    const std::vector<double> scores = fd::score_windows(ckpt.params, ckpt.config, ws);

    std::string out = "start_row,score,verdict\n";
    for (std::size_t w = 0; w < scores.size(); ++w) {
        char line[80];
        // Verdict rule: attack iff score strictly greater than the threshold.
        std::snprintf(line, sizeof(line), "%zu,%.9f,%d\n", w * ws.stride, scores[w],
                      scores[w] > ckpt.threshold ? 1 : 0);
        out += line;
    }
    if (opt.out.empty()) {
        std::fputs(out.c_str(), stdout);
    } else {
        fd::write_file_atomic(opt.out, out);
        std::printf("predictions written to %s\n", opt.out.c_str());
    }
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"flowdetect - CNN-BiLSTM NetFlow anomaly detector"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its keys");

    PrepareOptions prep;
    CLI::App* prepare = app.add_subcommand("prepare", "ingest a CSV, preprocess, split and window");
    auto* p_data = prepare->add_option("--data", prep.data, "input CSV")->required();
    auto* p_out = prepare->add_option("--out", prep.out_dir, "output directory")->required();
    auto* p_splits = prepare->add_option("--splits", prep.splits_text, "train,val,test ratios");
    auto* p_window = prepare->add_option("--window", prep.window, "window length T");
    auto* p_stride = prepare->add_option("--stride", prep.stride, "window stride");
    auto* p_sample = prepare->add_option("--sample", prep.sample, "stratified subsample size (0 = all)");
    auto* p_seed = prepare->add_option("--seed", prep.seed, "subsample seed");

    TrainOptions tr;
    CLI::App* train = app.add_subcommand("train", "train and calibrate on prepared caches");
    auto* t_prepared = train->add_option("--prepared", tr.prepared, "prepared cache directory")->required();
    auto* t_out = train->add_option("--out", tr.out_ckpt, "checkpoint output path")->required();
    auto* t_epochs = train->add_option("--epochs", tr.train.epochs, "training epochs");
    auto* t_batch = train->add_option("--batch", tr.train.batch_size, "mini-batch size");
    auto* t_seed = train->add_option("--seed", tr.train.seed, "training seed");
    auto* t_lr = train->add_option("--lr", tr.train.adam.learning_rate, "Adam learning rate");
    auto* t_clip = train->add_option("--clip", tr.train.clip_norm, "global gradient-norm clip (<=0 off)");
    auto* t_hidden = train->add_option("--hidden", tr.hidden, "LSTM hidden size per direction");
    auto* t_dropout = train->add_option("--dropout", tr.dropout, "dropout rate before the BiLSTM");
    auto* t_patience = train->add_option("--patience", tr.train.patience, "early-stop patience (0 off)");
    auto* t_grid = train->add_option("--threshold-grid", tr.train.threshold_grid,
                                     "exported threshold-sweep resolution");

    EvaluateOptions ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "test-split metrics at the stored threshold");
    evaluate->add_option("--ckpt", ev.ckpt, "checkpoint path")->required();
    evaluate->add_option("--prepared", ev.prepared, "prepared cache directory")->required();
    auto* e_out = evaluate->add_option("--out", ev.out, "metrics JSON output path");

    PredictOptions pr;
    CLI::App* predict = app.add_subcommand("predict", "score a raw CSV window by window");
    predict->add_option("--ckpt", pr.ckpt, "checkpoint path")->required();
    predict->add_option("--data", pr.data, "input CSV")->required();
    predict->add_option("--out", pr.out, "output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const json cfg = load_config_file(config_path);

    if (prepare->parsed()) {
        print_setting("data", prep.data, merge_option(cfg, p_data, "data", prep.data));
        print_setting("out", prep.out_dir, merge_option(cfg, p_out, "out", prep.out_dir));
        print_setting("splits", prep.splits_text, merge_option(cfg, p_splits, "splits", prep.splits_text));
        print_setting("window", std::to_string(prep.window), merge_option(cfg, p_window, "window", prep.window));
        print_setting("stride", std::to_string(prep.stride), merge_option(cfg, p_stride, "stride", prep.stride));
        print_setting("sample", std::to_string(prep.sample), merge_option(cfg, p_sample, "sample", prep.sample));
        print_setting("seed", std::to_string(prep.seed), merge_option(cfg, p_seed, "seed", prep.seed));
        return run_prepare(prep);
    }
    if (train->parsed()) {
        print_setting("prepared", tr.prepared, merge_option(cfg, t_prepared, "prepared", tr.prepared));
        print_setting("out", tr.out_ckpt, merge_option(cfg, t_out, "out", tr.out_ckpt));
        print_setting("epochs", std::to_string(tr.train.epochs), merge_option(cfg, t_epochs, "epochs", tr.train.epochs));
        print_setting("batch", std::to_string(tr.train.batch_size), merge_option(cfg, t_batch, "batch", tr.train.batch_size));
        print_setting("seed", std::to_string(tr.train.seed), merge_option(cfg, t_seed, "seed", tr.train.seed));
        print_setting("lr", fmt_double(tr.train.adam.learning_rate), merge_option(cfg, t_lr, "learning_rate", tr.train.adam.learning_rate));
        merge_option(cfg, nullptr, "beta1", tr.train.adam.beta1);
        merge_option(cfg, nullptr, "beta2", tr.train.adam.beta2);
        merge_option(cfg, nullptr, "epsilon", tr.train.adam.epsilon);
        print_setting("clip", fmt_double(tr.train.clip_norm), merge_option(cfg, t_clip, "clip_norm", tr.train.clip_norm));
        print_setting("hidden", std::to_string(tr.hidden), merge_option(cfg, t_hidden, "hidden", tr.hidden));
        print_setting("dropout", fmt_double(tr.dropout), merge_option(cfg, t_dropout, "dropout", tr.dropout));
        print_setting("patience", std::to_string(tr.train.patience), merge_option(cfg, t_patience, "patience", tr.train.patience));
        print_setting("threshold_grid", std::to_string(tr.train.threshold_grid), merge_option(cfg, t_grid, "threshold_grid", tr.train.threshold_grid));
        merge_option(cfg, nullptr, "conv_blocks", tr.conv_blocks);
        return run_train(tr);
    }
    if (evaluate->parsed()) {
        print_setting("out", ev.out, merge_option(cfg, e_out, "metrics_out", ev.out));
        return run_evaluate(ev);
    }
    if (predict->parsed()) {
        return run_predict(pr);
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const fd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const fd::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const fd::SequenceError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const fd::IntegrityError& e) {
        std::fprintf(stderr, "file error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
