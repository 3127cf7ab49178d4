#include "dynoframe/probe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "dynoframe/io.hpp"

namespace df::probe {

using io::json;

ProbeDataset load_probe_dataset(const std::string& path) {
    std::vector<Vec> features;
    std::vector<std::string> raw_labels;
    size_t dim = 0;

    const auto lines = io::load_jsonl(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        const json& line = lines[i];
        const std::string ctx = path + " item " + std::to_string(i + 1);
        if (!line.is_object()) fail(errc::parse_error, ctx + ": expected a JSON object");

        const json label = io::get_field(line, "label", ctx);
        if (label.is_string()) raw_labels.push_back(label.get<std::string>());
        else if (label.is_number_integer()) raw_labels.push_back(std::to_string(label.get<int64_t>()));
        else fail(errc::parse_error, ctx + ": label must be a string or integer");

        Vec v;
        if (line.contains("vector")) {
            const json& arr = line.at("vector");
            if (!arr.is_array() || arr.empty())
                fail(errc::parse_error, ctx + ": vector must be a non-empty array");
            v = arr.get<Vec>();
        } else if (line.contains("block")) {
            const json& block = line.at("block");
            if (!block.is_array() || block.empty())
                fail(errc::parse_error, ctx + ": block must be a non-empty array of rows");
            for (const json& row : block) {
                if (!row.is_array() || row.empty() || (!v.empty() && row.size() != v.size()))
                    fail(errc::parse_error, ctx + ": block rows must share one width");
                const Vec r = row.get<Vec>();
                if (v.empty()) v.assign(r.size(), 0.0);
                axpy(1.0, r, v);
            }
            for (auto& x : v) x /= static_cast<double>(block.size());
        } else {
            fail(errc::parse_error, ctx + ": needs a vector or block field");
        }
        for (double x : v)
            if (!std::isfinite(x)) fail(errc::numeric_error, ctx + ": non-finite feature");
        if (dim == 0) dim = v.size();
        else if (v.size() != dim)
            fail(errc::validation_error, ctx + ": feature width " + std::to_string(v.size()) +
                                             " does not match " + std::to_string(dim));
        features.push_back(std::move(v));
    }
    if (features.empty()) fail(errc::validation_error, path + ": no items");

    ProbeDataset data;
    data.labels = raw_labels;
    std::sort(data.labels.begin(), data.labels.end());
    data.labels.erase(std::unique(data.labels.begin(), data.labels.end()), data.labels.end());
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < data.labels.size(); ++i) index[data.labels[i]] = i;
    data.x = std::move(features);
    for (const auto& l : raw_labels) data.y.push_back(index.at(l));
    data.dim = dim;
    return data;
}

SplitSpec split_from_string(std::string_view text) {
    int parts[3];
    size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        const size_t end = i < 2 ? text.find('/', start) : text.size();
        if (end == std::string_view::npos)
            fail(errc::invalid_argument, "split must look like 70/10/20");
        const auto piece = text.substr(start, end - start);
        const auto result =
            std::from_chars(piece.data(), piece.data() + piece.size(), parts[i]);
        if (result.ec != std::errc() || result.ptr != piece.data() + piece.size() ||
            parts[i] < 0)
            fail(errc::invalid_argument, "split must look like 70/10/20");
        start = end + 1;
    }
    if (parts[0] + parts[1] + parts[2] != 100)
        fail(errc::invalid_argument, "split percentages must sum to 100");
    if (parts[0] == 0) fail(errc::invalid_argument, "train split may not be 0");
    return {parts[0] / 100.0, parts[1] / 100.0, parts[2] / 100.0};
}

SplitIndices split_dataset(size_t n, const SplitSpec& spec, uint64_t seed) {
    if (n == 0) fail(errc::invalid_argument, "cannot split an empty dataset");
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(SplitMix64::mix(seed, 0x73706C6974ULL));
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);

    const size_t n_train = static_cast<size_t>(std::floor(spec.train * static_cast<double>(n)));
    const size_t n_dev = static_cast<size_t>(std::floor(spec.dev * static_cast<double>(n)));
    if (n_train == 0) fail(errc::invalid_argument, "train split is empty at this size");

    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.dev.assign(order.begin() + n_train, order.begin() + n_train + n_dev);
    out.test.assign(order.begin() + n_train + n_dev, order.end());
    return out;
}

Vec ProbeModel::logits(std::span<const double> x) const {
    Vec z = mat_vec(w, x);
    for (size_t c = 0; c < z.size(); ++c) z[c] += b[c];
    return z;
}

size_t ProbeModel::predict(std::span<const double> x) const {
    const Vec z = logits(x);
    size_t best = 0;
    for (size_t c = 1; c < z.size(); ++c)
        if (z[c] > z[best]) best = c;
    return best;
}

double probe_loss_and_grad(const ProbeDataset& data, const std::vector<size_t>& idx,
                           const ProbeModel& model, double l2, Mat& gw, Vec& gb) {
    if (idx.empty()) fail(errc::invalid_argument, "empty index set");
    const size_t K = model.w.rows;
    std::fill(gw.a.begin(), gw.a.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);

    double loss = 0.0;
    Vec p(K);
    for (size_t i : idx) {
        if (i >= data.size()) fail(errc::invalid_argument, "index out of range");
        const Vec z = model.logits(data.x[i]);
        const double mx = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (size_t c = 0; c < K; ++c) {
            p[c] = std::exp(z[c] - mx);
            denom += p[c];
        }
        loss += std::log(denom) - (z[data.y[i]] - mx);
        for (size_t c = 0; c < K; ++c) {
            const double g = p[c] / denom - (c == data.y[i] ? 1.0 : 0.0);
            gb[c] += g;
            double* row = gw.a.data() + c * gw.cols;
            const Vec& x = data.x[i];
            for (size_t d = 0; d < x.size(); ++d) row[d] += g * x[d];
        }
    }
    const double scale = 1.0 / static_cast<double>(idx.size());
    loss *= scale;
    for (auto& v : gw.a) v *= scale;
    for (auto& v : gb) v *= scale;

    for (size_t i = 0; i < gw.a.size(); ++i) {
        loss += 0.5 * l2 * model.w.a[i] * model.w.a[i];
        gw.a[i] += l2 * model.w.a[i];
    }
    return loss;
}

ProbeFit fit_probe(const ProbeDataset& data, const std::vector<size_t>& train_idx,
                   const ProbeConfig& cfg) {
    if (data.n_classes() < 2) fail(errc::invalid_argument, "need at least two classes");
    ProbeFit fit;
    fit.model.w = Mat(data.n_classes(), data.dim);
    fit.model.b = Vec(data.n_classes(), 0.0);

    Mat gw(data.n_classes(), data.dim);
    Vec gb(data.n_classes(), 0.0);
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = probe_loss_and_grad(data, train_idx, fit.model, cfg.l2, gw, gb);
        fit.epoch_loss.push_back(loss);
        for (size_t i = 0; i < gw.a.size(); ++i) fit.model.w.a[i] -= cfg.lr * gw.a[i];
        for (size_t c = 0; c < gb.size(); ++c) fit.model.b[c] -= cfg.lr * gb[c];
    }
    return fit;
}

double probe_accuracy(const ProbeModel& model, const ProbeDataset& data,
                      const std::vector<size_t>& idx) {
    if (idx.empty()) fail(errc::invalid_argument, "empty index set");
    size_t hit = 0;
    for (size_t i : idx) {
        if (i >= data.size()) fail(errc::invalid_argument, "index out of range");
        hit += model.predict(data.x[i]) == data.y[i] ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(idx.size());
}

namespace {

// average ranks, 1-based; tied values share the mean of their positions
Vec average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    Vec ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const Vec& a, const Vec& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if (sxx == 0.0 || syy == 0.0)
        fail(errc::numeric_error, "correlation undefined for a constant series");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

Correlation correlate(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        fail(errc::invalid_argument, "series lengths differ");
    if (a.size() < 2) fail(errc::invalid_argument, "need at least two points");
    for (double v : a)
        if (!std::isfinite(v)) fail(errc::numeric_error, "non-finite value in series");
    for (double v : b)
        if (!std::isfinite(v)) fail(errc::numeric_error, "non-finite value in series");

    Correlation out;
    out.n = a.size();
    out.pearson = pearson(a, b);
    out.spearman = pearson(average_ranks(a), average_ranks(b));
    return out;
}

} // namespace df::probe
