// data.hpp - C-MAPSS ingestion, time augmentation, normalization and a
// synthetic run-to-failure generator.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pinn::data {

inline constexpr int kSettingCount = 3;
inline constexpr int kSensorCount = 21;
inline constexpr int kFeatureColumns = kSettingCount + kSensorCount;  // 24
inline constexpr int kDefaultHorizon = 30;

struct CycleRow {
    int cycle = 0;
    std::vector<double> values;  // settings 1..3 followed by sensors 1..21
};

struct EngineTrajectory {
    int unit = 0;
    std::vector<CycleRow> rows;  // cycles 1..L ascending

    int length() const { return static_cast<int>(rows.size()); }
};

// One training point: operating-condition snapshot at cycle `cycle`, a time
// offset t into the future and the RUL label at that offset.
struct AugmentedSample {
    std::vector<double> oc;
    int t = 0;
    int rul = 0;
    int unit = 0;
    int cycle = 0;
};

struct NormStats {
    std::vector<double> means;
    std::vector<double> stds;
    double rul_max = 1.0;
    std::vector<int> columns;  // indices into CycleRow::values

    bool operator==(const NormStats&) const = default;
};

// Column identifiers: setting1..setting3, s1..s21.
std::string column_name(int column);

// Whitespace-separated rows of unit, cycle, 3 settings, 21 sensors.
// Trajectories come back ordered by unit id, rows by cycle.
std::vector<EngineTrajectory> parse_cmapss(std::string_view text);
std::vector<double> parse_rul_truth(std::string_view text);

std::string read_file(const std::string& path);

std::size_t row_count(const std::vector<EngineTrajectory>& trajectories);

// Drops columns whose population variance over all rows is below 1e-12.
std::vector<int> select_features(const std::vector<EngineTrajectory>& trajectories);

// For every row at cycle c of an engine of length L, emits t = 0..min(horizon, L - c)
// with label (L - c) - t. Output order: unit, cycle, t.
std::vector<AugmentedSample> augment(const std::vector<EngineTrajectory>& trajectories,
                                     const std::vector<int>& columns, int horizon = kDefaultHorizon);

// Closed-form sample count of `augment`.
std::size_t augmented_count(const std::vector<EngineTrajectory>& trajectories, int horizon = kDefaultHorizon);

// Snapshot at the last recorded cycle of each engine, t = 0. `rul` carries
// the truth value when given, otherwise 0.
std::vector<AugmentedSample> last_cycle_samples(const std::vector<EngineTrajectory>& trajectories,
                                                const std::vector<int>& columns,
                                                const std::vector<double>& truth = {});

NormStats fit_norm(const std::vector<AugmentedSample>& samples, const std::vector<int>& columns);

struct NormalizedSample {
    std::vector<double> oc;
    double t = 0.0;
    double rul = 0.0;
};

NormalizedSample apply_norm(const NormStats& stats, const AugmentedSample& sample, double t_scale);
std::vector<double> normalize_oc(const NormStats& stats, const std::vector<double>& oc);

// Augmented-dataset cache: header unit,cycle,t,rul,<feature columns...>.
std::string augmented_csv(const std::vector<AugmentedSample>& samples, const std::vector<int>& columns);

struct SynthSpec {
    int n_engines = 20;
    int min_life = 40;
    int max_life = 80;
    int n_sensors = 4;
    double noise_std = 0.01;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SynthData {
    std::vector<EngineTrajectory> trajectories;  // full run-to-failure
    std::vector<int> lives;
};

// Sensor j of engine e at cycle c reads a_ej + b_ej * (c / L_e) + noise.
// The offsets a_ej carry the engine's life (a_ej = alpha_j + gamma_j * L_e / max_life)
// and the slopes b_ej are the per-sensor beta_j, so RUL = L - c is
// recoverable from a single snapshot. Settings and unused sensors are 0.
SynthData synth_generate(const SynthSpec& spec);

// Cuts each engine at a uniformly drawn cycle in [2, L] and returns the
// truncated trajectories with the true RUL at the cut (C-MAPSS test layout).
std::pair<std::vector<EngineTrajectory>, std::vector<double>>
truncate_for_test(const std::vector<EngineTrajectory>& full, std::uint64_t seed);

}  // namespace pinn::data
