#pragma once

#include <string>
#include <vector>

#include "dynoframe/linalg.hpp"

namespace df::augment {

// Rank-3 tensor indexed (batch, token, feature), row-major flat storage.
// k may be 0 (the empty token block), b and n may not.
struct FeatureBlock {
    size_t b = 0, k = 0, n = 0;
    std::vector<double> data;

    FeatureBlock() = default;
    FeatureBlock(size_t b_, size_t k_, size_t n_);

    double& at(size_t bi, size_t ki, size_t ni) { return data[(bi * k + ki) * n + ni]; }
    double at(size_t bi, size_t ki, size_t ni) const { return data[(bi * k + ki) * n + ni]; }

    const double* token(size_t bi, size_t ki) const { return data.data() + (bi * k + ki) * n; }
    double* token(size_t bi, size_t ki) { return data.data() + (bi * k + ki) * n; }

    static FeatureBlock gaussian(size_t b, size_t k, size_t n, double scale, SplitMix64& rng);
};

// Per-token affine map into the backbone feature width.
struct Projection {
    Mat w;    // n_out x d_in
    Vec bias; // n_out

    static Projection identity(size_t n);
    static Projection gaussian(size_t d_in, size_t n_out, double scale, SplitMix64& rng);

    size_t in_dim() const { return w.cols; }
    size_t out_dim() const { return w.rows; }
};

// Multi-head self-attention parameters. Shapes depend only on (n, heads),
// never on the token count.
struct AttentionBlock {
    size_t n = 0, heads = 0, head_dim = 0;
    std::vector<Mat> wq, wk, wv; // per head, head_dim x n
    Mat wo;                      // n x n

    static AttentionBlock gaussian(size_t n, size_t heads, double scale, SplitMix64& rng);

    size_t param_count() const;
};

enum class FuseMode { augment, replace };

FeatureBlock project(const FeatureBlock& e_vl, const Projection& p);

// Token-axis concatenation: backbone tokens first, projected tokens after.
// No positional encodings are introduced.
FeatureBlock concat_features(const FeatureBlock& e_b, const FeatureBlock& e_p);

// Scaled-dot-product multi-head self-attention over the token axis,
// scale 1/sqrt(head_dim); output shape equals input shape.
FeatureBlock attention_forward(const FeatureBlock& f, const AttentionBlock& blk);

FeatureBlock fuse(const FeatureBlock& e_b, const FeatureBlock& e_vl, const Projection& p,
                  const AttentionBlock& blk, FuseMode mode);

struct CheckResult {
    std::string name;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct AugmentCheckConfig {
    size_t kb = 49, kv = 32, n = 256, heads = 4;
    size_t trials = 100;
    FuseMode mode = FuseMode::augment;
    uint64_t seed = 1;
};

// The invariant suite behind the augment-check command: parameter-count
// invariance, permutation equivariance, concat exactness, projection
// linearity, and the mode's token-count contract.
std::vector<CheckResult> run_augment_checks(const AugmentCheckConfig& cfg);

} // namespace df::augment
