#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "impress/checkpoint.hpp"
#include "impress/dataset.hpp"
#include "impress/errors.hpp"
#include "impress/metrics.hpp"
#include "impress/models.hpp"
#include "impress/optimizer.hpp"
#include "impress/sampler.hpp"

namespace impress {

struct TrainerConfig {
    double learning_rate = 0.05;
    double weight_decay = 5e-4;
    double momentum = 0.9;
    double lr_decay = 1e-4;
    int batch_size = 128;
    int epochs = 500;
    int n_partitions = 6;
    uint64_t base_seed = 0;
    std::string architecture = "lstm";
    int checkpoint_interval = 100;  // epochs between periodic checkpoints; 0 = final only
    bool decay_biases = true;

    void validate() const {
        if (learning_rate <= 0 || weight_decay < 0 || momentum < 0 || lr_decay < 0)
            throw std::invalid_argument("trainer: rates must be non-negative, learning rate positive");
        if (batch_size < 1) throw std::invalid_argument("trainer: batch_size must be >= 1");
        if (epochs < 1) throw std::invalid_argument("trainer: epochs must be >= 1");
        if (n_partitions < 1) throw std::invalid_argument("trainer: n_partitions must be >= 1");
        if (architecture != "conv3d" && architecture != "lstm")
            throw std::invalid_argument("trainer: unknown architecture '" + architecture + "'");
    }
};

struct TrainResult {
    std::vector<double> epoch_mse;
    std::string final_checkpoint;  // empty when no output directory was given
};

namespace detail {

template <typename T, typename Model>
BimodalInput<T> assemble_input(const LoadedSample<T>& s, const FrameCombination& combo,
                               const Model& model) {
    BimodalInput<T> in;
    in.frames.reserve(model.n_partitions());
    for (const int idx : combo.indices) in.frames.push_back(s.frames[idx]);
    in.audio = s.audio_features;
    return in;
}

}  // namespace detail

// One SGD run. Parameters are (re)initialized from cfg.base_seed, so a
// (dataset, config) pair pins every byte of the outcome. Per epoch each
// video contributes one freshly sampled frame combination; batches follow
// dataset order and the batch gradient is the mean of per-sample gradients,
// accumulated in sample-index order.
template <typename T, typename Model>
TrainResult train(Model& model, const LoadedDataset<T>& data, const TrainerConfig& cfg,
                  const std::string& out_dir = "") {
    cfg.validate();
    if (data.samples.empty()) throw DataFormatError("train: empty dataset");
    std::vector<FramePartitioning> parts;
    parts.reserve(data.samples.size());
    for (const auto& s : data.samples) {
        if (!s.has_traits)
            throw DataFormatError("train: video '" + s.video_id + "' has no ground-truth traits");
        parts.push_back(partition_frames(static_cast<int>(s.frames.size()), model.n_partitions()));
    }

    namespace fs = std::filesystem;
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw MissingInputError("train: cannot create output directory: " + out_dir);
    }

    init_params<T>(model, cfg.base_seed);
    auto params = model.tensors();
    Sgd<T> opt(SgdConfig{cfg.learning_rate, cfg.weight_decay, cfg.momentum, cfg.lr_decay,
                         cfg.decay_biases},
               params);

    TrainResult result;
    result.epoch_mse.reserve(cfg.epochs);
    const size_t n = data.samples.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (size_t start = 0; start < n; start += cfg.batch_size) {
            const size_t stop = std::min(n, start + cfg.batch_size);
            std::vector<Tensor<T>> acc;
            for (size_t i = start; i < stop; ++i) {
                const LoadedSample<T>& s = data.samples[i];
                const FrameCombination combo =
                    epoch_plan(parts[i], s.video_hash, epoch, cfg.base_seed);
                LossGrads<T> lg =
                    model.loss_and_grads(detail::assemble_input(s, combo, model), s.traits);
                epoch_loss += static_cast<double>(lg.loss);
                if (acc.empty()) {
                    acc = std::move(lg.grads);
                } else {
                    for (size_t g = 0; g < acc.size(); ++g)
                        for (size_t k = 0; k < acc[g].numel(); ++k) acc[g][k] += lg.grads[g][k];
                }
            }
            const T inv = T(1) / static_cast<T>(stop - start);
            for (auto& g : acc)
                for (T& v : g.data) v *= inv;
            opt.step(params, acc);
        }
        result.epoch_mse.push_back(epoch_loss / static_cast<double>(n));

        if (!out_dir.empty() && cfg.checkpoint_interval > 0 &&
            (epoch + 1) % cfg.checkpoint_interval == 0 && epoch + 1 < cfg.epochs) {
            char name[40];
            std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.bin", epoch + 1);
            save_checkpoint<T>((fs::path(out_dir) / name).string(), model);
        }
    }

    if (!out_dir.empty()) {
        result.final_checkpoint = (fs::path(out_dir) / "checkpoint_final.bin").string();
        save_checkpoint<T>(result.final_checkpoint, model);
        std::ofstream mse((fs::path(out_dir) / "mse.csv").string());
        if (!mse) throw MissingInputError("train: cannot write MSE curve under: " + out_dir);
        mse << "epoch,mse\n";
        char buf[40];
        for (size_t e = 0; e < result.epoch_mse.size(); ++e) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e + 1, result.epoch_mse[e]);
            mse << buf;
        }
    }
    return result;
}

// Stochastic averaged predictions for every video, scored with the challenge
// metric. Each video draws its combinations from a stream split off
// (seed, video id), so the set-level result is order-independent.
template <typename T, typename Model>
MetricReport evaluate_dataset(const Model& model, const LoadedDataset<T>& data, int k,
                              uint64_t seed) {
    if (data.samples.empty()) throw DataFormatError("evaluate: empty dataset");
    const int m = model.outputs();
    Tensor<T> targets({static_cast<int>(data.samples.size()), m});
    Tensor<T> preds({static_cast<int>(data.samples.size()), m});
    for (size_t i = 0; i < data.samples.size(); ++i) {
        const LoadedSample<T>& s = data.samples[i];
        if (!s.has_traits)
            throw DataFormatError("evaluate: video '" + s.video_id + "' has no ground-truth traits");
        const Tensor<T> y = predict_stochastic(model, s.frames, s.audio_features, k,
                                               seed_combine(seed, s.video_hash));
        for (int j = 0; j < m; ++j) {
            targets[i * m + j] = s.traits[j];
            preds[i * m + j] = y[j];
        }
    }
    return mean_average_accuracy(targets, preds);
}

}  // namespace impress
