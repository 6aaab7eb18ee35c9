#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "sr4zct/dataset.hpp"
#include "sr4zct/network.hpp"

namespace sr4zct {

struct TrainConfig {
    int epochs = 50;
    int patch = 96;              // square patch side; 0 = full slices
    int pairs_per_epoch = 0;     // 0 = all pairs
    double lr = 1e-3;
    std::uint64_t seed = 1;
    int checkpoint_every = 0;    // epochs; 0 = off
    std::filesystem::path run_dir;  // empty = no artifacts written

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (patch != 0 && patch < 32) throw std::invalid_argument("TrainConfig: patch must be 0 or >= 32");
        if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    }
};

struct TrainResult {
    ModelState<float> model;
    std::vector<double> loss_history;  // mean training loss per epoch
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& msg, std::filesystem::path last_checkpoint)
        : std::runtime_error(msg), last_checkpoint_(std::move(last_checkpoint)) {}
    const std::filesystem::path& last_checkpoint() const { return last_checkpoint_; }

private:
    std::filesystem::path last_checkpoint_;
};

namespace detail {

inline std::pair<Image2D<float>, Image2D<float>> crop_pair(const TrainingPair& pair, int patch,
                                                           std::mt19937_64& rng) {
    const std::size_t rows = pair.input.rows(), cols = pair.input.cols();
    const std::size_t p = static_cast<std::size_t>(patch);
    if (patch <= 0 || p >= rows || p >= cols) return {pair.input, pair.target};
    // Same window from input and target.
    const std::size_t r0 = rng() % (rows - p + 1);
    const std::size_t c0 = rng() % (cols - p + 1);
    Image2D<float> in(p, p), tg(p, p);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) {
            in(r, c) = pair.input(r0 + r, c0 + c);
            tg(r, c) = pair.target(r0 + r, c0 + c);
        }
    return {std::move(in), std::move(tg)};
}

}  // namespace detail

/// Mean loss over all pairs, no weight updates.
inline double evaluate_epoch(const ModelState<float>& m, const std::vector<TrainingPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("evaluate_epoch: empty pair set");
    double acc = 0.0;
    for (const TrainingPair& p : pairs) acc += loss_l2(forward(m, p.input), p.target);
    return acc / static_cast<double>(pairs.size());
}

/// Optimizes the summed per-pair L2 objective: per epoch one seeded shuffle of
/// all pairs and one ADAM step per pair (batch size 1), on the full slice or a
/// seeded random patch cropped identically from input and target.
inline TrainResult train(const std::vector<TrainingPair>& pairs, const NetworkConfig& net_cfg,
                         const TrainConfig& cfg) {
    cfg.validate();
    net_cfg.validate();
    if (pairs.empty()) throw std::invalid_argument("train: empty pair set");

    if (!cfg.run_dir.empty()) {
        std::filesystem::create_directories(cfg.run_dir);
        nlohmann::json echo;
        echo["epochs"] = cfg.epochs;
        echo["patch"] = cfg.patch;
        echo["pairs_per_epoch"] = cfg.pairs_per_epoch;
        echo["lr"] = cfg.lr;
        echo["seed"] = cfg.seed;
        echo["checkpoint_every"] = cfg.checkpoint_every;
        echo["depth"] = net_cfg.depth;
        echo["n_pairs"] = pairs.size();
        std::ofstream(cfg.run_dir / "train_config.json") << echo.dump(2) << "\n";
    }

    TrainResult result;
    result.model = init<float>(net_cfg, cfg.seed);
    std::mt19937_64 rng(cfg.seed ^ 0x5a4c70ffee11ull);

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    const std::size_t per_epoch = cfg.pairs_per_epoch > 0
        ? std::min(pairs.size(), static_cast<std::size_t>(cfg.pairs_per_epoch))
        : pairs.size();

    std::filesystem::path last_ckpt;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t i = 0; i < per_epoch; ++i) {
            auto [in, tg] = detail::crop_pair(pairs[order[i]], cfg.patch, rng);
            double loss;
            std::vector<float> grads;
            try {
                std::tie(loss, grads) = backward(result.model, in, tg);
                adam_step(result.model, grads, cfg.lr);
            } catch (const std::runtime_error& e) {
                throw TrainingDiverged(std::string("training diverged at epoch ") +
                                           std::to_string(epoch) + ": " + e.what(),
                                       last_ckpt);
            }
            epoch_loss += loss;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(per_epoch));

        if (!cfg.run_dir.empty() && cfg.checkpoint_every > 0 &&
            (epoch + 1) % cfg.checkpoint_every == 0) {
            last_ckpt = cfg.run_dir / ("checkpoint_epoch" + std::to_string(epoch + 1) + ".bin");
            save_checkpoint(result.model, last_ckpt);
        }
    }

    if (!cfg.run_dir.empty()) {
        std::ofstream csv(cfg.run_dir / "loss_history.csv");
        csv << "epoch,mean_loss\n";
        for (std::size_t e = 0; e < result.loss_history.size(); ++e)
            csv << (e + 1) << "," << std::setprecision(17) << result.loss_history[e] << "\n";
    }
    return result;
}

}  // namespace sr4zct
