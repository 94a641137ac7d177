#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qpk::xordata {

struct DatasetMeta {
    int d = 0;
    int d_prime = 0;
    double noise = 0.0; // standard deviation of the additive Gaussian noise
    int n = 0;
    std::uint64_t seed = 0;
    bool noise_is_variance = false; // alternative reading: noise is sigma^2
};

/// Gaussian XOR mixture rows [x_1+e_1, ..., x_{d'}+e_{d'}, 0, ..., 0] with
/// x_i uniform on {-1, +1} and e_i ~ N(0, sigma). Labels come from the clean
/// signs (the product of the x_i before noise), which are also retained.
struct LabeledDataset {
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    std::vector<std::vector<int>> clean_signs;
    DatasetMeta meta;

    int size() const { return static_cast<int>(points.size()); }
};

/// Deterministic per seed: for each point, d' signs are drawn first, then d'
/// Gaussian noise values, in coordinate order.
LabeledDataset generate(int d, int d_prime, double noise, int n, std::uint64_t seed,
                        bool noise_is_variance = false);

/// Product of the signs of the first d' observed coordinates, sign(0) -> +1.
/// This sees the noisy values, unlike the generation-time labels.
int oracle_label(std::span<const double> x, int d_prime);

double oracle_accuracy(const LabeledDataset& ds);

/// Seed-deterministic shuffle split into round(n * train_fraction) training
/// points and the rest; both sides must end up nonempty.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double train_fraction,
                                                std::uint64_t seed);

/// CSV persistence: header `x_0,...,x_{d-1},label`; meta and clean signs go
/// in a JSON sidecar written by the harness.
std::string dataset_to_csv(const LabeledDataset& ds);
LabeledDataset dataset_from_csv(const std::string& csv);
void save_dataset(const std::filesystem::path& csv_path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::filesystem::path& csv_path);

} // namespace qpk::xordata
