#pragma once

#include "pinn/data.hpp"
#include "pinn/model.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinn::optim {

struct NadamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;

    void validate() const;
};

// A named, mutable view of one parameter buffer and its gradient.
struct ParamSlot {
    std::string name;
    std::span<double> value;
    std::span<const double> grad;
};

struct NadamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
};

// One Nesterov-Adam update over every slot; the state is sized on first use.
// With t = step + 1:
//   m <- b1 m + (1 - b1) g,   v <- b2 v + (1 - b2) g^2
//   mhat = m / (1 - b1^(t+1)),   vhat = v / (1 - b2^t)
//   theta <- theta - lr (b1 mhat + (1 - b1) g / (1 - b1^t)) / (sqrt(vhat) + eps)
// Throws numeric_error naming the slot if a gradient is not finite; nothing
// is modified in that case.
void nadam_step(NadamState& state, std::span<ParamSlot> slots, const NadamConfig& config);

// Pairs every buffer of `model` with the matching buffer of `grads`.
std::vector<ParamSlot> slots(model::PinnModel& model, const model::ModelGrads& grads);

struct EpochLosses {
    double train_total = 0.0;
    double train_mse = 0.0;
    double train_pde = 0.0;
    double val_total = 0.0;
    double val_mse = 0.0;
    double val_pde = 0.0;
};

struct TrainingReport {
    std::vector<EpochLosses> epochs;
    double final_rmse_val = 0.0;  // cycles, over the validation split
    std::uint64_t split_seed = 0;
    std::uint64_t init_seed = 0;
    int epoch_count = 0;
    int batch_size = 0;
    std::size_t train_size = 0;
    std::size_t val_size = 0;
    double wall_time = 0.0;  // seconds
};

struct TrainOptions {
    std::uint64_t split_seed = 0;
    int epochs = 30;
    int batch_size = 512;
    NadamConfig nadam;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Seeded permutation; the validation part holds ceil(n / 4) indices.
Split split_dataset(std::size_t n, std::uint64_t seed);
std::size_t validation_count(std::size_t n);

// Minibatch NAdam on the composite cost. The model passed in is the
// initialized starting point; its init seed is recorded as given.
model::PinnModel train(model::PinnModel model, const std::vector<data::AugmentedSample>& dataset,
                       const TrainOptions& options, std::uint64_t init_seed, TrainingReport& report);

// Thrown when a batch cost turns non-finite.
class training_error : public std::runtime_error {
public:
    training_error(const std::string& what, int epoch, std::size_t batch)
        : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
    int epoch() const { return epoch_; }
    std::size_t batch() const { return batch_; }

private:
    int epoch_;
    std::size_t batch_;
};

}  // namespace pinn::optim
