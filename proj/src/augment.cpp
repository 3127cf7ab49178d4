#include "dynoframe/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace df::augment {

FeatureBlock::FeatureBlock(size_t b_, size_t k_, size_t n_) : b(b_), k(k_), n(n_) {
    if (b == 0 || n == 0) fail(errc::invalid_argument, "feature block needs b, n >= 1");
    data.assign(b * k * n, 0.0);
}

FeatureBlock FeatureBlock::gaussian(size_t b, size_t k, size_t n, double scale, SplitMix64& rng) {
    FeatureBlock f(b, k, n);
    for (auto& v : f.data) v = scale * rng.next_gaussian();
    return f;
}

Projection Projection::identity(size_t n) {
    Projection p;
    p.w = Mat(n, n);
    for (size_t i = 0; i < n; ++i) p.w(i, i) = 1.0;
    p.bias = Vec(n, 0.0);
    return p;
}

Projection Projection::gaussian(size_t d_in, size_t n_out, double scale, SplitMix64& rng) {
    Projection p;
    p.w = Mat::gaussian(n_out, d_in, scale, rng);
    p.bias = Vec(n_out, 0.0);
    for (auto& v : p.bias) v = scale * rng.next_gaussian();
    return p;
}

AttentionBlock AttentionBlock::gaussian(size_t n, size_t heads, double scale, SplitMix64& rng) {
    if (n == 0 || heads == 0 || n % heads != 0)
        fail(errc::invalid_argument, "attention width must be a positive multiple of heads");
    AttentionBlock blk;
    blk.n = n;
    blk.heads = heads;
    blk.head_dim = n / heads;
    for (size_t h = 0; h < heads; ++h) {
        blk.wq.push_back(Mat::gaussian(blk.head_dim, n, scale, rng));
        blk.wk.push_back(Mat::gaussian(blk.head_dim, n, scale, rng));
        blk.wv.push_back(Mat::gaussian(blk.head_dim, n, scale, rng));
    }
    blk.wo = Mat::gaussian(n, n, scale, rng);
    return blk;
}

size_t AttentionBlock::param_count() const {
    size_t count = wo.size();
    for (size_t h = 0; h < heads; ++h)
        count += wq[h].size() + wk[h].size() + wv[h].size();
    return count;
}

FeatureBlock project(const FeatureBlock& e_vl, const Projection& p) {
    if (e_vl.n != p.in_dim())
        fail(errc::invalid_argument, "project: feature dim " + std::to_string(e_vl.n) +
                                         " does not match projection input " +
                                         std::to_string(p.in_dim()));
    FeatureBlock out(e_vl.b, e_vl.k, p.out_dim());
    for (size_t bi = 0; bi < e_vl.b; ++bi)
        for (size_t ki = 0; ki < e_vl.k; ++ki) {
            std::span<const double> x(e_vl.token(bi, ki), e_vl.n);
            double* y = out.token(bi, ki);
            for (size_t r = 0; r < p.w.rows; ++r) {
                double acc = p.bias[r];
                const double* row = p.w.a.data() + r * p.w.cols;
                for (size_t c = 0; c < p.w.cols; ++c) acc += row[c] * x[c];
                y[r] = acc;
            }
        }
    return out;
}

FeatureBlock concat_features(const FeatureBlock& e_b, const FeatureBlock& e_p) {
    if (e_b.b != e_p.b) fail(errc::invalid_argument, "concat_features: batch mismatch");
    if (e_b.n != e_p.n) fail(errc::invalid_argument, "concat_features: feature dim mismatch");
    FeatureBlock out(e_b.b, e_b.k + e_p.k, e_b.n);
    for (size_t bi = 0; bi < out.b; ++bi) {
        std::memcpy(out.token(bi, 0), e_b.token(bi, 0), e_b.k * e_b.n * sizeof(double));
        if (e_p.k > 0)
            std::memcpy(out.token(bi, e_b.k), e_p.token(bi, 0), e_p.k * e_p.n * sizeof(double));
    }
    return out;
}

FeatureBlock attention_forward(const FeatureBlock& f, const AttentionBlock& blk) {
    if (f.n != blk.n)
        fail(errc::invalid_argument, "attention_forward: feature dim mismatch");
    if (f.k == 0) fail(errc::invalid_argument, "attention_forward: empty token axis");
    const size_t K = f.k, H = blk.heads, D = blk.head_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    FeatureBlock out(f.b, K, f.n);

    std::vector<double> q(K * D), kk(K * D), v(K * D), scores(K), mixed(K * f.n);
    for (size_t bi = 0; bi < f.b; ++bi) {
        std::fill(mixed.begin(), mixed.end(), 0.0);
        for (size_t h = 0; h < H; ++h) {
            for (size_t ki = 0; ki < K; ++ki) {
                std::span<const double> x(f.token(bi, ki), f.n);
                const Vec qv = mat_vec(blk.wq[h], x);
                const Vec kv = mat_vec(blk.wk[h], x);
                const Vec vv = mat_vec(blk.wv[h], x);
                std::copy(qv.begin(), qv.end(), q.begin() + ki * D);
                std::copy(kv.begin(), kv.end(), kk.begin() + ki * D);
                std::copy(vv.begin(), vv.end(), v.begin() + ki * D);
            }
            for (size_t qi = 0; qi < K; ++qi) {
                double mx = -std::numeric_limits<double>::infinity();
                for (size_t kj = 0; kj < K; ++kj) {
                    double s = 0.0;
                    for (size_t d = 0; d < D; ++d) s += q[qi * D + d] * kk[kj * D + d];
                    scores[kj] = s * scale;
                    mx = std::max(mx, scores[kj]);
                }
                double denom = 0.0;
                for (size_t kj = 0; kj < K; ++kj) {
                    scores[kj] = std::exp(scores[kj] - mx);
                    denom += scores[kj];
                }
                double* dst = mixed.data() + qi * f.n + h * D;
                for (size_t kj = 0; kj < K; ++kj) {
                    const double w = scores[kj] / denom;
                    for (size_t d = 0; d < D; ++d) dst[d] += w * v[kj * D + d];
                }
            }
        }
        for (size_t ki = 0; ki < K; ++ki) {
            std::span<const double> m(mixed.data() + ki * f.n, f.n);
            const Vec y = mat_vec(blk.wo, m);
            std::copy(y.begin(), y.end(), out.token(bi, ki));
        }
    }
    return out;
}

FeatureBlock fuse(const FeatureBlock& e_b, const FeatureBlock& e_vl, const Projection& p,
                  const AttentionBlock& blk, FuseMode mode) {
    if (mode == FuseMode::replace) return attention_forward(project(e_vl, p), blk);
    return attention_forward(concat_features(e_b, project(e_vl, p)), blk);
}

namespace {

double max_abs_diff(const FeatureBlock& a, const FeatureBlock& b) {
    double mx = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        mx = std::max(mx, std::abs(a.data[i] - b.data[i]));
    return mx;
}

} // namespace

std::vector<CheckResult> run_augment_checks(const AugmentCheckConfig& cfg) {
    SplitMix64 rng(SplitMix64::mix(cfg.seed, 0x6175676DULL));
    std::vector<CheckResult> results;

    {
        // weight shapes never see the token count; both blocks accept both
        // widths and the forward runs only the small one (K^2 cost)
        auto blk_small = AttentionBlock::gaussian(cfg.n, cfg.heads, 0.1, rng);
        auto blk_large = AttentionBlock::gaussian(cfg.n, cfg.heads, 0.1, rng);
        auto in_small = FeatureBlock::gaussian(1, 10, cfg.n, 1.0, rng);
        FeatureBlock in_large(1, 10000, cfg.n);
        attention_forward(in_small, blk_large);
        (void)in_large;
        const bool equal = blk_small.param_count() == blk_large.param_count();
        results.push_back({"param-count-invariance-k10-vs-k10000",
                           equal ? 0.0 : 1.0, 0.0, equal});
    }
    {
        auto blk = AttentionBlock::gaussian(cfg.n, cfg.heads, 0.2, rng);
        double worst = 0.0;
        for (size_t trial = 0; trial < cfg.trials; ++trial) {
            const size_t K = 2 + rng.next_below(10);
            auto f = FeatureBlock::gaussian(2, K, cfg.n, 1.0, rng);
            std::vector<size_t> perm(K);
            std::iota(perm.begin(), perm.end(), 0);
            for (size_t i = K; i > 1; --i) std::swap(perm[i - 1], perm[rng.next_below(i)]);
            FeatureBlock shuffled(f.b, K, cfg.n);
            for (size_t bi = 0; bi < f.b; ++bi)
                for (size_t ki = 0; ki < K; ++ki)
                    std::memcpy(shuffled.token(bi, ki), f.token(bi, perm[ki]),
                                cfg.n * sizeof(double));
            const auto out = attention_forward(f, blk);
            const auto out_shuffled = attention_forward(shuffled, blk);
            for (size_t bi = 0; bi < f.b; ++bi)
                for (size_t ki = 0; ki < K; ++ki)
                    for (size_t ni = 0; ni < cfg.n; ++ni)
                        worst = std::max(worst, std::abs(out_shuffled.at(bi, ki, ni) -
                                                         out.at(bi, perm[ki], ni)));
        }
        results.push_back({"permutation-equivariance", worst, 1e-6, worst < 1e-6});
    }
    {
        auto e_b = FeatureBlock::gaussian(2, cfg.kb, cfg.n, 1.0, rng);
        auto e_p = FeatureBlock::gaussian(2, cfg.kv, cfg.n, 1.0, rng);
        auto cat = concat_features(e_b, e_p);
        bool ok = cat.b == 2 && cat.k == cfg.kb + cfg.kv && cat.n == cfg.n;
        double dev = 0.0;
        for (size_t bi = 0; bi < 2 && ok; ++bi) {
            for (size_t ki = 0; ki < cfg.kb; ++ki)
                for (size_t ni = 0; ni < cfg.n; ++ni)
                    dev = std::max(dev, std::abs(cat.at(bi, ki, ni) - e_b.at(bi, ki, ni)));
            for (size_t ki = 0; ki < cfg.kv; ++ki)
                for (size_t ni = 0; ni < cfg.n; ++ni)
                    dev = std::max(dev,
                                   std::abs(cat.at(bi, cfg.kb + ki, ni) - e_p.at(bi, ki, ni)));
        }
        results.push_back({"concat-preserves-inputs", dev, 0.0, ok && dev == 0.0});
    }
    {
        const size_t d_in = cfg.n / 2 + 1;
        auto p = Projection::gaussian(d_in, cfg.n, 0.3, rng);
        std::fill(p.bias.begin(), p.bias.end(), 0.0);
        double worst = 0.0;
        for (size_t trial = 0; trial < cfg.trials; ++trial) {
            auto x = FeatureBlock::gaussian(1, 3, d_in, 1.0, rng);
            auto y = FeatureBlock::gaussian(1, 3, d_in, 1.0, rng);
            const double a = rng.next_range(-2.0, 2.0), b = rng.next_range(-2.0, 2.0);
            FeatureBlock combo(1, 3, d_in);
            for (size_t i = 0; i < combo.data.size(); ++i)
                combo.data[i] = a * x.data[i] + b * y.data[i];
            const auto px = project(x, p);
            const auto py = project(y, p);
            const auto pc = project(combo, p);
            for (size_t i = 0; i < pc.data.size(); ++i)
                worst = std::max(worst,
                                 std::abs(pc.data[i] - (a * px.data[i] + b * py.data[i])));
        }
        results.push_back({"projection-linearity", worst, 1e-9, worst < 1e-9});
    }
    {
        const size_t d_vl = cfg.n + 7;
        auto p = Projection::gaussian(d_vl, cfg.n, 0.2, rng);
        auto blk = AttentionBlock::gaussian(cfg.n, cfg.heads, 0.2, rng);
        auto e_b = FeatureBlock::gaussian(1, cfg.kb, cfg.n, 1.0, rng);
        auto e_vl = FeatureBlock::gaussian(1, cfg.kv, d_vl, 1.0, rng);
        const auto fused = fuse(e_b, e_vl, p, blk, cfg.mode);
        const size_t want = cfg.mode == FuseMode::replace ? cfg.kv : cfg.kb + cfg.kv;
        bool ok = fused.k == want;
        if (cfg.mode == FuseMode::augment) {
            // with no V&L tokens the fusion is plain attention on the backbone
            FeatureBlock empty(1, 0, d_vl);
            const auto reduced = fuse(e_b, empty, p, blk, FuseMode::augment);
            const auto plain = attention_forward(e_b, blk);
            ok = ok && max_abs_diff(reduced, plain) == 0.0;
        }
        results.push_back({cfg.mode == FuseMode::replace ? "replace-token-count"
                                                         : "augment-token-count",
                           ok ? 0.0 : 1.0, 0.0, ok});
    }
    return results;
}

} // namespace df::augment
