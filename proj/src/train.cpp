// SPDX-License-Identifier: Apache-2.0
#include "lrvae/train.hpp"

#include <chrono>

#include "lrvae/rng.hpp"

namespace lrvae::cli {

data::Dataset load_dataset(const RunConfig& cfg) {
    data::Dataset ds;
    if (cfg.data == "idx") {
        if (cfg.idx_images.empty()) throw ConfigError("data=idx requires idx_images");
        std::optional<std::string> labels;
        if (!cfg.idx_labels.empty()) labels = cfg.idx_labels;
        ds = data::load_idx(cfg.idx_images, labels);
    } else if (cfg.data == "synthetic") {
        ds = data::gen_synthetic(cfg.synthetic_spec(), cfg.synth_n, cfg.seed);
    } else {
        throw ConfigError("config: unknown data source: " + cfg.data);
    }
    if (cfg.binarize) data::binarize(ds.x);
    if (cfg.n_limit > 0 && ds.x.rows() > cfg.n_limit) {
        const std::size_t d = ds.x.cols();
        Tensor sub({cfg.n_limit, d});
        std::copy(ds.x.data(), ds.x.data() + cfg.n_limit * d, sub.data());
        ds.x = std::move(sub);
        if (ds.labels) ds.labels->resize(cfg.n_limit);
    }
    return ds;
}

TrainResult train_model(const RunConfig& cfg, const Tensor& x, const EpochCallback& on_epoch) {
    TrainResult result;
    result.model = nn::init_model(cfg.arch(x.cols()), cfg.seed);
    nn::Model& model = result.model;

    const objectives::LossWeights weights = cfg.loss_weights();
    objectives::Adam opt(cfg.learning_rate);
    Rng noise(cfg.seed, 0x5eedULL);
    const std::size_t n = x.rows();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        objectives::LossBreakdown acc;
        std::size_t seen = 0;
        const auto batches = data::batch_iter(n, cfg.batch_size, cfg.seed, epoch);
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            Tensor xb = data::gather_rows(x, batches[bi]);
            Tape tape;
            objectives::TotalLoss loss = [&] {
                try {
                    return objectives::total_loss(tape, model, xb, weights, epoch, noise);
                } catch (const NumericError& e) {
                    throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                                       std::to_string(bi) + ": " + e.what());
                }
            }();
            tape.backward(loss.total);

            std::vector<Tensor> grads;
            for (Var v : loss.bound.param_vars()) grads.push_back(tape.grad(v));
            opt.step(model.params(), grads);

            const double w = static_cast<double>(xb.rows());
            acc.dr += loss.breakdown.dr * w;
            acc.kl += loss.breakdown.kl * w;
            acc.lr += loss.breakdown.lr * w;
            acc.total += loss.breakdown.total * w;
            acc.alpha_t = loss.breakdown.alpha_t;
            acc.beta = loss.breakdown.beta;
            seen += xb.rows();
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean = acc;
        const double inv = 1.0 / static_cast<double>(seen);
        stats.mean.dr *= inv;
        stats.mean.kl *= inv;
        stats.mean.lr *= inv;
        stats.mean.total *= inv;
        stats.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.epochs.push_back(stats);
        if (on_epoch) on_epoch(model, stats);
    }
    return result;
}

}  // namespace lrvae::cli
