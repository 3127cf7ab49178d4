#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynoframe/linalg.hpp"

namespace df::probe {

// Labeled feature vectors; class ids index into `labels`, which holds the
// distinct label strings in sorted order so the mapping is independent of
// line order in the source file.
struct ProbeDataset {
    std::vector<Vec> x;
    std::vector<size_t> y;
    std::vector<std::string> labels;
    size_t dim = 0;

    size_t size() const { return x.size(); }
    size_t n_classes() const { return labels.size(); }
};

// Lines carry {"label", "vector"} or {"label", "block"}; a block is a list of
// equal-width rows that gets mean-pooled into one vector.
ProbeDataset load_probe_dataset(const std::string& path);

struct SplitSpec {
    double train = 0.7, dev = 0.1, test = 0.2;
};

// "70/10/20"; the three integer percentages must sum to 100.
SplitSpec split_from_string(std::string_view text);

struct SplitIndices {
    std::vector<size_t> train, dev, test;
};

// Seeded shuffle, then train/dev/test take floor(n*train), floor(n*dev), rest.
SplitIndices split_dataset(size_t n, const SplitSpec& spec, uint64_t seed);

struct ProbeConfig {
    double lr = 1e-2;
    double l2 = 1e-4;
    size_t epochs = 500;
};

struct ProbeModel {
    Mat w; // n_classes x dim
    Vec b; // n_classes

    Vec logits(std::span<const double> x) const;
    // argmax; ties resolve to the lowest class id
    size_t predict(std::span<const double> x) const;
};

// Mean cross-entropy over `idx` plus (l2/2)*||w||^2; fills the gradient of
// that objective. Returns the loss.
double probe_loss_and_grad(const ProbeDataset& data, const std::vector<size_t>& idx,
                           const ProbeModel& model, double l2, Mat& gw, Vec& gb);

struct ProbeFit {
    ProbeModel model;
    std::vector<double> epoch_loss;
};

// Full-batch gradient descent from zero weights; the convex objective makes
// the zero start deterministic and seed-free.
ProbeFit fit_probe(const ProbeDataset& data, const std::vector<size_t>& train_idx,
                   const ProbeConfig& cfg);

// Fraction of `idx` classified correctly. Empty index sets are an error so
// callers must decide what an empty split means.
double probe_accuracy(const ProbeModel& model, const ProbeDataset& data,
                      const std::vector<size_t>& idx);

struct Correlation {
    double pearson = 0;
    double spearman = 0;
    size_t n = 0;
};

// Spearman uses average ranks for ties; both coefficients are computed as
// Sxy / sqrt(Sxx * Syy) so clean fixtures come out exact.
Correlation correlate(const std::vector<double>& a, const std::vector<double>& b);

} // namespace df::probe
