#include "qpk/xordata.hpp"

#include "qpk/errors.hpp"
#include "qpk/io.hpp"
#include "qpk/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace qpk::xordata {

LabeledDataset generate(int d, int d_prime, double noise, int n, std::uint64_t seed,
                        bool noise_is_variance) {
    if (d_prime < 1 || d_prime > d) {
        throw ParameterError("need 1 <= d' <= d, got d'=" + std::to_string(d_prime) +
                             ", d=" + std::to_string(d));
    }
    if (noise < 0.0 || !std::isfinite(noise)) {
        throw ParameterError("noise must be a finite value >= 0");
    }
    if (n < 1) {
        throw ParameterError("dataset size must be >= 1");
    }
    const double sigma = noise_is_variance ? std::sqrt(noise) : noise;

    LabeledDataset ds;
    ds.meta = {d, d_prime, noise, n, seed, noise_is_variance};
    ds.points.reserve(static_cast<std::size_t>(n));
    ds.labels.reserve(static_cast<std::size_t>(n));
    ds.clean_signs.reserve(static_cast<std::size_t>(n));

    rng::Stream stream(seed);
    for (int row = 0; row < n; ++row) {
        std::vector<int> signs(static_cast<std::size_t>(d_prime));
        for (int& s : signs) {
            s = stream.next_sign();
        }
        std::vector<double> point(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < d_prime; ++i) {
            const double eps = sigma == 0.0 ? 0.0 : sigma * stream.next_gaussian();
            point[static_cast<std::size_t>(i)] =
                static_cast<double>(signs[static_cast<std::size_t>(i)]) + eps;
        }
        int label = 1;
        for (const int s : signs) {
            label *= s;
        }
        ds.points.push_back(std::move(point));
        ds.labels.push_back(label);
        ds.clean_signs.push_back(std::move(signs));
    }
    return ds;
}

int oracle_label(std::span<const double> x, int d_prime) {
    if (d_prime < 1 || static_cast<std::size_t>(d_prime) > x.size()) {
        throw ParameterError("oracle needs 1 <= d' <= len(x)");
    }
    double prod = 1.0;
    for (int i = 0; i < d_prime; ++i) {
        prod *= x[static_cast<std::size_t>(i)];
    }
    return prod < 0.0 ? -1 : +1;
}

double oracle_accuracy(const LabeledDataset& ds) {
    if (ds.points.empty()) {
        throw ShapeError("empty dataset");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        if (oracle_label(ds.points[i], ds.meta.d_prime) == ds.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.points.size());
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double train_fraction,
                                                std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw ParameterError("train fraction must lie strictly between 0 and 1");
    }
    const int n = ds.size();
    const int n_train = static_cast<int>(std::lround(train_fraction * n));
    if (n_train < 1 || n_train >= n) {
        throw ParameterError("train fraction " + io::fmtg(train_fraction) + " leaves a side of a " +
                             std::to_string(n) + "-point dataset empty");
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng::Stream stream(seed);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(stream.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    LabeledDataset train;
    LabeledDataset test;
    train.meta = ds.meta;
    test.meta = ds.meta;
    train.meta.n = n_train;
    test.meta.n = n - n_train;
    for (int k = 0; k < n; ++k) {
        const auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(k)]);
        LabeledDataset& side = k < n_train ? train : test;
        side.points.push_back(ds.points[idx]);
        side.labels.push_back(ds.labels[idx]);
        side.clean_signs.push_back(ds.clean_signs[idx]);
    }
    return {std::move(train), std::move(test)};
}

std::string dataset_to_csv(const LabeledDataset& ds) {
    std::ostringstream out;
    const int d = ds.meta.d;
    for (int j = 0; j < d; ++j) {
        out << "x_" << j << ",";
    }
    out << "label\n";
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        for (const double v : ds.points[i]) {
            out << io::fmt17(v) << ",";
        }
        out << ds.labels[i] << "\n";
    }
    return out.str();
}

LabeledDataset dataset_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParameterError("empty dataset CSV");
    }
    const auto header = io::split_csv_line(line);
    if (header.size() < 2 || header.back() != "label") {
        throw ParameterError("malformed dataset header");
    }
    LabeledDataset ds;
    ds.meta.d = static_cast<int>(header.size()) - 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = io::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ShapeError("dataset row width mismatch");
        }
        std::vector<double> point;
        point.reserve(cells.size() - 1);
        for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
            point.push_back(io::parse_double(cells[k]));
        }
        ds.points.push_back(std::move(point));
        ds.labels.push_back(static_cast<int>(io::parse_int(cells.back())));
    }
    ds.meta.n = ds.size();
    return ds;
}

void save_dataset(const std::filesystem::path& csv_path, const LabeledDataset& ds) {
    io::write_file(csv_path, dataset_to_csv(ds));
}

LabeledDataset load_dataset(const std::filesystem::path& csv_path) {
    return dataset_from_csv(io::read_file(csv_path));
}

} // namespace qpk::xordata
