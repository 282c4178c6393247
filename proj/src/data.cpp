#include "pinn/data.hpp"

#include "pinn/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace pinn::data {

namespace {

constexpr double kMinVariance = 1e-12;

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double to_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw parse_error("non-numeric token '" + std::string(tok) + "'", line);
    }
    return v;
}

int to_int(std::string_view tok, std::size_t line) {
    const double v = to_double(tok, line);
    if (v != std::floor(v) || v < 1.0 || v > 1e9) {
        throw parse_error("expected a positive integer, got '" + std::string(tok) + "'", line);
    }
    return static_cast<int>(v);
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        fn(text.substr(pos, nl - pos), line_no);
        pos = nl + 1;
    }
}

}  // namespace

std::string column_name(int column) {
    if (column < kSettingCount) return "setting" + std::to_string(column + 1);
    return "s" + std::to_string(column - kSettingCount + 1);
}

std::vector<EngineTrajectory> parse_cmapss(std::string_view text) {
    std::map<int, EngineTrajectory> units;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const auto tokens = split_ws(line);
        if (tokens.empty()) return;
        if (tokens.size() != 2 + kFeatureColumns) {
            throw parse_error("expected " + std::to_string(2 + kFeatureColumns) + " columns, got " +
                                  std::to_string(tokens.size()),
                              line_no);
        }
        const int unit = to_int(tokens[0], line_no);
        CycleRow row;
        row.cycle = to_int(tokens[1], line_no);
        row.values.reserve(kFeatureColumns);
        for (std::size_t i = 2; i < tokens.size(); ++i) row.values.push_back(to_double(tokens[i], line_no));
        auto& traj = units[unit];
        traj.unit = unit;
        traj.rows.push_back(std::move(row));
    });

    std::vector<EngineTrajectory> out;
    out.reserve(units.size());
    for (auto& [unit, traj] : units) {
        std::stable_sort(traj.rows.begin(), traj.rows.end(),
                         [](const CycleRow& a, const CycleRow& b) { return a.cycle < b.cycle; });
        for (std::size_t i = 0; i < traj.rows.size(); ++i) {
            if (traj.rows[i].cycle != static_cast<int>(i) + 1) {
                throw parse_error("unit " + std::to_string(unit) + ": cycles are not consecutive from 1");
            }
        }
        out.push_back(std::move(traj));
    }
    return out;
}

std::vector<double> parse_rul_truth(std::string_view text) {
    std::vector<double> out;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const auto tokens = split_ws(line);
        if (tokens.empty()) return;
        if (tokens.size() != 1) throw parse_error("expected one value per line", line_no);
        out.push_back(to_double(tokens[0], line_no));
    });
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t row_count(const std::vector<EngineTrajectory>& trajectories) {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.rows.size();
    return n;
}

std::vector<int> select_features(const std::vector<EngineTrajectory>& trajectories) {
    const std::size_t n = row_count(trajectories);
    if (n == 0) throw contract_error("select_features: no rows");

    std::vector<int> keep;
    for (int col = 0; col < kFeatureColumns; ++col) {
        double mean = 0.0;
        for (const auto& t : trajectories) {
            for (const auto& r : t.rows) mean += r.values[col];
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& t : trajectories) {
            for (const auto& r : t.rows) var += (r.values[col] - mean) * (r.values[col] - mean);
        }
        var /= static_cast<double>(n);
        if (var >= kMinVariance) keep.push_back(col);
    }
    if (keep.empty()) throw contract_error("select_features: every column is constant");
    return keep;
}

std::vector<AugmentedSample> augment(const std::vector<EngineTrajectory>& trajectories,
                                     const std::vector<int>& columns, int horizon) {
    if (horizon < 0) throw contract_error("augment: horizon must be >= 0");
    std::vector<AugmentedSample> out;
    out.reserve(augmented_count(trajectories, horizon));
    for (const auto& traj : trajectories) {
        const int life = traj.length();
        for (const auto& row : traj.rows) {
            std::vector<double> oc;
            oc.reserve(columns.size());
            for (int c : columns) oc.push_back(row.values.at(c));
            const int rul0 = life - row.cycle;
            const int last = std::min(horizon, rul0);
            for (int t = 0; t <= last; ++t) {
                out.push_back({oc, t, rul0 - t, traj.unit, row.cycle});
            }
        }
    }
    return out;
}

std::size_t augmented_count(const std::vector<EngineTrajectory>& trajectories, int horizon) {
    std::size_t n = 0;
    for (const auto& traj : trajectories) {
        const int life = traj.length();
        for (int c = 1; c <= life; ++c) n += static_cast<std::size_t>(std::min(horizon, life - c) + 1);
    }
    return n;
}

std::vector<AugmentedSample> last_cycle_samples(const std::vector<EngineTrajectory>& trajectories,
                                                const std::vector<int>& columns,
                                                const std::vector<double>& truth) {
    if (!truth.empty() && truth.size() != trajectories.size()) {
        throw contract_error("truth count " + std::to_string(truth.size()) + " != engine count " +
                             std::to_string(trajectories.size()));
    }
    std::vector<AugmentedSample> out;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const auto& traj = trajectories[i];
        const auto& row = traj.rows.back();
        AugmentedSample s;
        for (int c : columns) s.oc.push_back(row.values.at(c));
        s.t = 0;
        s.rul = truth.empty() ? 0 : static_cast<int>(std::lround(truth[i]));
        s.unit = traj.unit;
        s.cycle = row.cycle;
        out.push_back(std::move(s));
    }
    return out;
}

NormStats fit_norm(const std::vector<AugmentedSample>& samples, const std::vector<int>& columns) {
    if (samples.empty()) throw contract_error("fit_norm: no samples");
    const std::size_t d = columns.size();
    const double n = static_cast<double>(samples.size());

    NormStats stats;
    stats.columns = columns;
    stats.means.assign(d, 0.0);
    stats.stds.assign(d, 0.0);
    double rul_max = 0.0;
    for (const auto& s : samples) {
        if (s.oc.size() != d) throw contract_error("fit_norm: sample width does not match column count");
        for (std::size_t j = 0; j < d; ++j) stats.means[j] += s.oc[j];
        rul_max = std::max(rul_max, static_cast<double>(s.rul));
    }
    for (auto& m : stats.means) m /= n;
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = s.oc[j] - stats.means[j];
            stats.stds[j] += dev * dev;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        stats.stds[j] = std::sqrt(stats.stds[j] / n);
        if (!(stats.stds[j] > 0.0)) {
            throw contract_error("fit_norm: column " + column_name(columns[j]) + " has zero spread");
        }
    }
    stats.rul_max = std::max(1.0, rul_max);
    return stats;
}

std::vector<double> normalize_oc(const NormStats& stats, const std::vector<double>& oc) {
    if (oc.size() != stats.means.size()) {
        throw contract_error("expected " + std::to_string(stats.means.size()) + " OC features, got " +
                             std::to_string(oc.size()));
    }
    std::vector<double> out(oc.size());
    for (std::size_t j = 0; j < oc.size(); ++j) out[j] = (oc[j] - stats.means[j]) / stats.stds[j];
    return out;
}

NormalizedSample apply_norm(const NormStats& stats, const AugmentedSample& sample, double t_scale) {
    return {normalize_oc(stats, sample.oc), static_cast<double>(sample.t) / t_scale,
            static_cast<double>(sample.rul) / stats.rul_max};
}

std::string augmented_csv(const std::vector<AugmentedSample>& samples, const std::vector<int>& columns) {
    std::ostringstream out;
    out << "unit,cycle,t,rul";
    for (int c : columns) out << ',' << column_name(c);
    out << '\n';
    out.precision(9);
    for (const auto& s : samples) {
        out << s.unit << ',' << s.cycle << ',' << s.t << ',' << s.rul;
        for (double v : s.oc) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

void SynthSpec::validate() const {
    if (n_engines < 1) throw contract_error("synthetic spec: n_engines must be >= 1");
    if (min_life < 35) throw contract_error("synthetic spec: min_life must be >= 35");
    if (max_life < min_life) throw contract_error("synthetic spec: max_life < min_life");
    if (n_sensors < 1 || n_sensors > kSensorCount) {
        throw contract_error("synthetic spec: n_sensors must be in [1, 21]");
    }
    if (!(noise_std >= 0.0)) throw contract_error("synthetic spec: noise_std must be >= 0");
}

SynthData synth_generate(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Per-sensor structure shared by every engine.
    std::vector<double> alpha(spec.n_sensors), beta(spec.n_sensors), gamma(spec.n_sensors);
    for (int j = 0; j < spec.n_sensors; ++j) {
        alpha[j] = coef(rng);
        beta[j] = coef(rng) >= 0.0 ? 1.0 + 0.5 * std::abs(coef(rng)) : -1.0 - 0.5 * std::abs(coef(rng));
        gamma[j] = coef(rng);
    }

    std::uniform_int_distribution<int> life_dist(spec.min_life, spec.max_life);
    SynthData out;
    for (int e = 0; e < spec.n_engines; ++e) {
        const int life = life_dist(rng);
        const double life_frac = static_cast<double>(life) / static_cast<double>(spec.max_life);
        EngineTrajectory traj;
        traj.unit = e + 1;
        for (int c = 1; c <= life; ++c) {
            CycleRow row;
            row.cycle = c;
            row.values.assign(kFeatureColumns, 0.0);
            const double progress = static_cast<double>(c) / static_cast<double>(life);
            for (int j = 0; j < spec.n_sensors; ++j) {
                const double a = alpha[j] + gamma[j] * life_frac;
                const double n = spec.noise_std > 0.0 ? spec.noise_std * noise(rng) : 0.0;
                row.values[kSettingCount + j] = a + beta[j] * progress + n;
            }
            traj.rows.push_back(std::move(row));
        }
        out.trajectories.push_back(std::move(traj));
        out.lives.push_back(life);
    }
    return out;
}

std::pair<std::vector<EngineTrajectory>, std::vector<double>>
truncate_for_test(const std::vector<EngineTrajectory>& full, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<EngineTrajectory> cut;
    std::vector<double> truth;
    for (const auto& traj : full) {
        if (traj.length() < 2) throw contract_error("truncate_for_test: engine shorter than 2 cycles");
        std::uniform_int_distribution<int> pick(2, traj.length());
        const int last = pick(rng);
        EngineTrajectory t{traj.unit, {traj.rows.begin(), traj.rows.begin() + last}};
        cut.push_back(std::move(t));
        truth.push_back(static_cast<double>(traj.length() - last));
    }
    return {std::move(cut), std::move(truth)};
}

}  // namespace pinn::data
