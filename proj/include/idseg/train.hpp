#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "idseg/dataset.hpp"
#include "idseg/loss.hpp"
#include "idseg/model.hpp"
#include "idseg/optimizer.hpp"

namespace idseg {

/// End-of-epoch metrics. Train values aggregate the epoch's batches as they
/// were seen; validation values come from a full pass after the epoch.
struct EpochStats {
    int epoch = 0;
    double loss = 0, accuracy = 0, precision = 0, recall = 0;
    double val_loss = 0, val_accuracy = 0, val_precision = 0, val_recall = 0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
};

struct TrainOptions {
    int epochs = 60;
    int batch_size = 32;
    double lr = 1e-3;
    uint64_t seed = 42;
    std::ostream* progress = nullptr;  // plain-text epoch lines when set
};

namespace detail {

struct EvalAccum {
    double loss_sum = 0;
    int64_t elems = 0;
    ConfusionCounts counts;

    void add(double loss, int64_t n, const ConfusionCounts& c) {
        loss_sum += loss * static_cast<double>(n);
        elems += n;
        counts += c;
    }
    double mean_loss() const { return elems > 0 ? loss_sum / static_cast<double>(elems) : 0.0; }
};

inline EvalAccum run_validation(const Model& model, std::span<const Sample> val_set,
                                int batch_size) {
    EvalAccum acc;
    for (const auto& idx : batch_indices(static_cast<int>(val_set.size()), batch_size, 0, false)) {
        auto [images, masks] = assemble_batch(val_set, idx);
        const Tensor prob = forward(model, images);
        const auto bce = bce_loss(prob, masks);
        acc.add(bce.loss, prob.size(), confusion_counts(prob, masks));
    }
    return acc;
}

}  // namespace detail

/// One Adam step per batch, seeded reshuffle each epoch, short final batch
/// kept. (seed, data) fully determine the resulting weights.
inline TrainLog train(Model& model, std::span<const Sample> train_set,
                      std::span<const Sample> val_set, const TrainOptions& opt) {
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("train: datasets must be nonempty");
    if (opt.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (opt.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");

    TrainLog log;
    AdamState adam = init_adam(model, opt.lr);
    Rng shuffle_rng(opt.seed);
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        const std::vector<int> order = shuffle_rng.permutation(static_cast<int>(train_set.size()));
        detail::EvalAccum train_acc;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch_size));
            const std::span<const int> idx(order.data() + start, end - start);
            auto [images, masks] = assemble_batch(train_set, idx);

            ForwardCache<float> cache;
            const Tensor prob = forward(model, images, &cache);
            auto bce = bce_loss(prob, masks);
            train_acc.add(bce.loss, prob.size(), confusion_counts(prob, masks));

            const ModelGrads<float> grads = backward(model, cache, bce.d_prob);
            adam_step(model, adam, grads);
        }

        const detail::EvalAccum val_acc = detail::run_validation(model, val_set, opt.batch_size);
        const PixelMetrics tm = metrics_from_counts(train_acc.counts);
        const PixelMetrics vm = metrics_from_counts(val_acc.counts);
        EpochStats row;
        row.epoch = epoch;
        row.loss = train_acc.mean_loss();
        row.accuracy = tm.accuracy;
        row.precision = tm.precision;
        row.recall = tm.recall;
        row.val_loss = val_acc.mean_loss();
        row.val_accuracy = vm.accuracy;
        row.val_precision = vm.precision;
        row.val_recall = vm.recall;
        log.epochs.push_back(row);

        if (opt.progress) {
            char line[256];
            std::snprintf(line, sizeof line,
                          "epoch %d/%d loss=%.4f acc=%.4f prec=%.4f rec=%.4f "
                          "val_loss=%.4f val_acc=%.4f val_prec=%.4f val_rec=%.4f",
                          epoch, opt.epochs, row.loss, row.accuracy, row.precision, row.recall,
                          row.val_loss, row.val_accuracy, row.val_precision, row.val_recall);
            (*opt.progress) << line << std::endl;
        }
    }
    return log;
}

/// RFC-4180-style CSV with one row per epoch.
inline std::string train_log_csv(const TrainLog& log) {
    std::string out =
        "epoch,loss,accuracy,precision,recall,val_loss,val_accuracy,val_precision,val_recall\n";
    char buf[320];
    for (const EpochStats& e : log.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch,
                      e.loss, e.accuracy, e.precision, e.recall, e.val_loss, e.val_accuracy,
                      e.val_precision, e.val_recall);
        out += buf;
    }
    return out;
}

}  // namespace idseg
