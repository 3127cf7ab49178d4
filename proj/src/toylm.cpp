#include "dynoframe/toylm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "dynoframe/io.hpp"

namespace df::toylm {

Vocabulary::Vocabulary() {
    add("<pad>");
    add("<bos>");
    add("<eos>");
}

int Vocabulary::add(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
}

std::optional<int> Vocabulary::id_of(std::string_view token) const {
    auto it = ids_.find(token);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<size_t>(id) >= tokens_.size())
        fail(errc::invalid_argument, "token id out of range: " + std::to_string(id));
    return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
    std::vector<int> out;
    std::string tok;
    auto flush = [&] {
        if (tok.empty()) return;
        auto id = id_of(tok);
        if (!id) fail(errc::invalid_argument, "token not in vocabulary: '" + tok + "'");
        out.push_back(*id);
        tok.clear();
    };
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') flush();
        else tok += c;
    }
    flush();
    return out;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
    std::string out;
    for (int id : ids) {
        if (id == pad_id || id == bos_id || id == eos_id) continue;
        if (!out.empty()) out += ' ';
        out += token(id);
    }
    return out;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < 3 || tokens[0] != "<pad>" || tokens[1] != "<bos>" || tokens[2] != "<eos>")
        fail(errc::parse_error, "vocabulary must start with <pad>, <bos>, <eos>");
    Vocabulary v;
    for (size_t i = 3; i < tokens.size(); ++i)
        if (v.add(tokens[i]) != static_cast<int>(i))
            fail(errc::parse_error, "duplicate token in vocabulary: '" + tokens[i] + "'");
    return v;
}

LoraAdapter LoraAdapter::init(Mat base, uint32_t rank, double alpha, double dropout,
                              SplitMix64& rng) {
    if (rank < 1) fail(errc::invalid_argument, "LoRA rank must be >= 1");
    LoraAdapter a;
    const size_t m = base.rows, n = base.cols;
    a.base = std::move(base);
    a.down = Mat::gaussian(rank, n, 1.0 / std::sqrt(static_cast<double>(n)), rng);
    a.up = Mat(m, rank); // zeros: adapter starts as identity wrapper
    a.alpha = alpha;
    a.dropout = dropout;
    return a;
}

Vec lora_forward(const LoraAdapter& adapter, std::span<const double> x) {
    if (x.size() != adapter.base.cols)
        fail(errc::invalid_argument, "lora_forward: input dimension mismatch");
    Vec y = mat_vec(adapter.base, x);
    const Vec h = mat_vec(adapter.down, x);
    const double s = adapter.scaling();
    for (size_t r = 0; r < adapter.up.rows; ++r) {
        double acc = 0.0;
        const double* row = adapter.up.a.data() + r * adapter.up.cols;
        for (size_t k = 0; k < adapter.up.cols; ++k) acc += row[k] * h[k];
        y[r] += s * acc;
    }
    return y;
}

Mat lora_merge(const LoraAdapter& adapter) {
    Mat w = adapter.base;
    const double s = adapter.scaling();
    for (size_t r = 0; r < w.rows; ++r)
        for (size_t c = 0; c < w.cols; ++c) {
            double acc = 0.0;
            for (size_t k = 0; k < adapter.up.cols; ++k)
                acc += adapter.up(r, k) * adapter.down(k, c);
            w(r, c) += s * acc;
        }
    return w;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Dense apply with optional adapter + dropout mask on the adapter input path.
// mask_out is filled only when dropout fires so the backward pass can reuse it.
Vec dense_apply(const DenseParam& p, std::span<const double> x, SplitMix64* drop_rng,
                std::optional<Vec>* mask_out) {
    if (!p.lora) return mat_vec(p.w, x);
    const LoraAdapter& a = *p.lora;
    Vec y = mat_vec(a.base, x);
    Vec xin(x.begin(), x.end());
    if (drop_rng && a.dropout > 0.0) {
        Vec mask(x.size());
        const double keep = 1.0 - a.dropout;
        for (size_t i = 0; i < mask.size(); ++i)
            mask[i] = drop_rng->next_bernoulli(a.dropout) ? 0.0 : 1.0 / keep;
        for (size_t i = 0; i < xin.size(); ++i) xin[i] *= mask[i];
        if (mask_out) *mask_out = std::move(mask);
    }
    const Vec h = mat_vec(a.down, xin);
    const double s = a.scaling();
    for (size_t r = 0; r < a.up.rows; ++r) {
        double acc = 0.0;
        const double* row = a.up.a.data() + r * a.up.cols;
        for (size_t k = 0; k < a.up.cols; ++k) acc += row[k] * h[k];
        y[r] += s * acc;
    }
    return y;
}

// Backward through a dense apply. Accumulates parameter grads into `g`
// (aligned structural copy) and, when x_grad != nullptr, the input gradient.
void dense_backward(const DenseParam& p, DenseParam& g, std::span<const double> out_grad,
                    std::span<const double> x, const std::optional<Vec>& mask, Vec* x_grad) {
    if (!p.lora) {
        outer_add(g.w, out_grad, x);
        if (x_grad) mat_tvec_add(p.w, out_grad, *x_grad);
        return;
    }
    const LoraAdapter& a = *p.lora;
    LoraAdapter& ga = *g.lora;
    const double s = a.scaling();
    Vec xin(x.begin(), x.end());
    if (mask)
        for (size_t i = 0; i < xin.size(); ++i) xin[i] *= (*mask)[i];
    const Vec h = mat_vec(a.down, xin);          // r
    Vec ug(a.up.cols, 0.0);                      // up^T out_grad
    mat_tvec_add(a.up, out_grad, ug);
    // d up += s * out_grad h^T ; d down += s * ug xin^T
    for (size_t r = 0; r < ga.up.rows; ++r)
        for (size_t k = 0; k < ga.up.cols; ++k) ga.up(r, k) += s * out_grad[r] * h[k];
    for (size_t k = 0; k < ga.down.rows; ++k)
        for (size_t c = 0; c < ga.down.cols; ++c) ga.down(k, c) += s * ug[k] * xin[c];
    if (x_grad) {
        mat_tvec_add(a.base, out_grad, *x_grad);
        Vec adapter_in_grad(x.size(), 0.0);
        mat_tvec_add(a.down, std::span<const double>(ug), adapter_in_grad);
        for (size_t i = 0; i < x.size(); ++i) {
            double gi = s * adapter_in_grad[i];
            if (mask) gi *= (*mask)[i];
            (*x_grad)[i] += gi;
        }
    }
}

DenseParam make_dense(size_t rows, size_t cols, const LoraSpec& spec, SplitMix64& rng) {
    DenseParam p;
    Mat w = Mat::gaussian(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
    if (spec.rank > 0) {
        const double alpha = spec.alpha > 0 ? spec.alpha : 2.0 * spec.rank;
        p.lora = LoraAdapter::init(std::move(w), spec.rank, alpha, spec.dropout, rng);
    } else {
        p.w = std::move(w);
    }
    return p;
}

struct StepTape {
    Vec s_prev, z, r, c, rs; // rs = r (.) s_prev
    std::optional<Vec> mask_wz, mask_uz, mask_wr, mask_ur, mask_wc, mask_uc;
};

} // namespace

DecoderModel::DecoderModel(Vocabulary vocab, size_t d_img, size_t hidden, const LoraSpec& lora,
                           uint64_t seed)
    : vocab_(std::move(vocab)), hidden_(hidden), d_img_(d_img), lora_(lora) {
    if (hidden_ == 0 || d_img_ == 0 || vocab_.size() == 0)
        fail(errc::invalid_argument, "decoder dimensions must be positive");
    if (lora_.rank > 0 && lora_.alpha <= 0) lora_.alpha = 2.0 * lora_.rank;
    SplitMix64 rng(SplitMix64::mix(seed, 0x746F796C6DULL));
    const size_t v = vocab_.size(), h = hidden_;
    embed_ = Mat::gaussian(v, h, 0.1, rng);
    img_ = make_dense(h, d_img_, lora_, rng);
    img_b_ = Vec(h, 0.0);
    wz_ = make_dense(h, h, lora_, rng);
    uz_ = make_dense(h, h, lora_, rng);
    wr_ = make_dense(h, h, lora_, rng);
    ur_ = make_dense(h, h, lora_, rng);
    wc_ = make_dense(h, h, lora_, rng);
    uc_ = make_dense(h, h, lora_, rng);
    bz_ = Vec(h, 0.0);
    br_ = Vec(h, 0.0);
    bc_ = Vec(h, 0.0);
    out_ = make_dense(v, h, lora_, rng);
    out_b_ = Vec(v, 0.0);
}

namespace {

void add_dense_tensors(std::vector<TensorInfo>& out, const std::string& name, DenseParam& p) {
    if (p.lora) {
        out.push_back({name + ".base", &p.lora->base.a, p.lora->base.rows, p.lora->base.cols, false});
        out.push_back({name + ".lora_down", &p.lora->down.a, p.lora->down.rows, p.lora->down.cols, true});
        out.push_back({name + ".lora_up", &p.lora->up.a, p.lora->up.rows, p.lora->up.cols, true});
    } else {
        out.push_back({name, &p.w.a, p.w.rows, p.w.cols, true});
    }
}

} // namespace

std::vector<TensorInfo> DecoderModel::tensors() {
    std::vector<TensorInfo> out;
    out.push_back({"embed", &embed_.a, embed_.rows, embed_.cols, true});
    add_dense_tensors(out, "img.w", img_);
    out.push_back({"img.b", &img_b_, img_b_.size(), 0, true});
    add_dense_tensors(out, "gru.wz", wz_);
    add_dense_tensors(out, "gru.uz", uz_);
    add_dense_tensors(out, "gru.wr", wr_);
    add_dense_tensors(out, "gru.ur", ur_);
    add_dense_tensors(out, "gru.wc", wc_);
    add_dense_tensors(out, "gru.uc", uc_);
    out.push_back({"gru.bz", &bz_, bz_.size(), 0, true});
    out.push_back({"gru.br", &br_, br_.size(), 0, true});
    out.push_back({"gru.bc", &bc_, bc_.size(), 0, true});
    add_dense_tensors(out, "out.w", out_);
    out.push_back({"out.b", &out_b_, out_b_.size(), 0, true});
    return out;
}

std::vector<TensorInfo> DecoderModel::tensors() const {
    return const_cast<DecoderModel*>(this)->tensors();
}

namespace {

// One GRU step; fills the tape when recording for backward.
Vec gru_step(const DecoderModel& m, std::span<const double> x, const Vec& s_prev,
             SplitMix64* drop_rng, StepTape* tape) {
    const size_t h = m.hidden();
    Vec z = dense_apply(m.wz_, x, drop_rng, tape ? &tape->mask_wz : nullptr);
    {
        Vec t = dense_apply(m.uz_, s_prev, drop_rng, tape ? &tape->mask_uz : nullptr);
        for (size_t i = 0; i < h; ++i) z[i] = sigmoid(z[i] + t[i] + m.bz_[i]);
    }
    Vec r = dense_apply(m.wr_, x, drop_rng, tape ? &tape->mask_wr : nullptr);
    {
        Vec t = dense_apply(m.ur_, s_prev, drop_rng, tape ? &tape->mask_ur : nullptr);
        for (size_t i = 0; i < h; ++i) r[i] = sigmoid(r[i] + t[i] + m.br_[i]);
    }
    Vec rs(h);
    for (size_t i = 0; i < h; ++i) rs[i] = r[i] * s_prev[i];
    Vec c = dense_apply(m.wc_, x, drop_rng, tape ? &tape->mask_wc : nullptr);
    {
        Vec t = dense_apply(m.uc_, rs, drop_rng, tape ? &tape->mask_uc : nullptr);
        for (size_t i = 0; i < h; ++i) c[i] = std::tanh(c[i] + t[i] + m.bc_[i]);
    }
    Vec s(h);
    for (size_t i = 0; i < h; ++i) s[i] = (1.0 - z[i]) * s_prev[i] + z[i] * c[i];
    if (tape) {
        tape->s_prev = s_prev;
        tape->z = std::move(z);
        tape->r = std::move(r);
        tape->c = std::move(c);
        tape->rs = std::move(rs);
    }
    return s;
}

double softmax_nll(const Vec& logits, int target, Vec* grad) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    if (grad) {
        grad->resize(logits.size());
        for (size_t i = 0; i < logits.size(); ++i) (*grad)[i] = std::exp(logits[i] - lse);
        (*grad)[static_cast<size_t>(target)] -= 1.0;
    }
    return lse - logits[static_cast<size_t>(target)];
}

} // namespace

std::vector<Vec> DecoderModel::forward_logits(const Vec& image, std::span<const int> targets) const {
    if (image.size() != d_img_)
        fail(errc::invalid_argument, "image embedding dimension mismatch");
    std::vector<Vec> logits;
    logits.reserve(targets.size());
    Vec img_tok = dense_apply(img_, image, nullptr, nullptr);
    for (size_t i = 0; i < hidden_; ++i) img_tok[i] += img_b_[i];
    Vec s(hidden_, 0.0);
    s = gru_step(*this, img_tok, s, nullptr, nullptr);
    int prev = Vocabulary::bos_id;
    for (int target : targets) {
        std::span<const double> e(embed_.a.data() + static_cast<size_t>(prev) * hidden_, hidden_);
        s = gru_step(*this, e, s, nullptr, nullptr);
        Vec l = dense_apply(out_, s, nullptr, nullptr);
        for (size_t i = 0; i < l.size(); ++i) l[i] += out_b_[i];
        logits.push_back(std::move(l));
        prev = target;
    }
    return logits;
}

std::vector<int> DecoderModel::generate(const Vec& image, size_t max_len) const {
    if (max_len < 1) fail(errc::invalid_argument, "max_len must be >= 1");
    if (image.size() != d_img_)
        fail(errc::invalid_argument, "image embedding dimension mismatch");
    std::vector<int> out;
    Vec img_tok = dense_apply(img_, image, nullptr, nullptr);
    for (size_t i = 0; i < hidden_; ++i) img_tok[i] += img_b_[i];
    Vec s(hidden_, 0.0);
    s = gru_step(*this, img_tok, s, nullptr, nullptr);
    int prev = Vocabulary::bos_id;
    for (size_t step = 0; step < max_len; ++step) {
        std::span<const double> e(embed_.a.data() + static_cast<size_t>(prev) * hidden_, hidden_);
        s = gru_step(*this, e, s, nullptr, nullptr);
        Vec l = dense_apply(out_, s, nullptr, nullptr);
        size_t best = 0;
        double best_v = l[0] + out_b_[0];
        for (size_t i = 1; i < l.size(); ++i) {
            const double v = l[i] + out_b_[i];
            if (v > best_v) { // ties keep the lowest id
                best_v = v;
                best = i;
            }
        }
        out.push_back(static_cast<int>(best));
        if (static_cast<int>(best) == Vocabulary::eos_id) break;
        prev = static_cast<int>(best);
    }
    return out;
}

double lm_loss(const std::vector<Vec>& logits, std::span<const int> targets) {
    if (logits.size() != targets.size())
        fail(errc::invalid_argument, "lm_loss: |logits| != |targets|");
    double total = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] == Vocabulary::pad_id) continue;
        if (logits[i].empty()) fail(errc::invalid_argument, "lm_loss: empty logit vector");
        if (targets[i] < 0 || static_cast<size_t>(targets[i]) >= logits[i].size())
            fail(errc::invalid_argument, "lm_loss: target id out of range");
        total += softmax_nll(logits[i], targets[i], nullptr);
    }
    return total;
}

GradSet::GradSet(const DecoderModel& model) : shadow(model) { zero(); }

void GradSet::zero() {
    for (auto& t : shadow.tensors()) std::fill(t.data->begin(), t.data->end(), 0.0);
}

double decoder_loss_and_grads(const DecoderModel& model, std::span<const TrainExample> batch,
                              GradSet* grads, size_t* token_count, SplitMix64* dropout_rng) {
    double total = 0.0;
    size_t tokens = 0;
    DecoderModel* g = grads ? &grads->shadow : nullptr;
    const size_t h = model.hidden();

    for (const auto& ex : batch) {
        if (ex.image.size() != model.d_img())
            fail(errc::invalid_argument, "train example image dimension mismatch");
        // targets: content tokens then EOS; inputs: BOS then content tokens
        std::vector<int> targets(ex.tokens);
        targets.push_back(Vocabulary::eos_id);
        const size_t len = targets.size();

        std::vector<StepTape> tapes(grads ? len + 1 : 0);
        std::optional<Vec> img_apply_mask;
        Vec img_tok =
            dense_apply(model.img_, ex.image, dropout_rng, grads ? &img_apply_mask : nullptr);
        for (size_t i = 0; i < h; ++i) img_tok[i] += model.img_b_[i];

        Vec s(h, 0.0);
        std::vector<Vec> states; // s after each step, for backward
        if (grads) states.reserve(len + 1);
        s = gru_step(model, img_tok, s, dropout_rng, grads ? &tapes[0] : nullptr);
        if (grads) states.push_back(s);

        std::vector<Vec> step_inputs; // own storage for backward
        if (grads) {
            step_inputs.reserve(len + 1);
            step_inputs.push_back(img_tok);
        }

        std::vector<Vec> logit_grads(grads ? len : 0);
        int prev = Vocabulary::bos_id;
        std::vector<int> prev_ids;
        if (grads) prev_ids.reserve(len);
        for (size_t j = 0; j < len; ++j) {
            std::span<const double> e(model.embed_.a.data() + static_cast<size_t>(prev) * h, h);
            s = gru_step(model, e, s, dropout_rng, grads ? &tapes[j + 1] : nullptr);
            if (grads) {
                prev_ids.push_back(prev);
                step_inputs.push_back(Vec(e.begin(), e.end()));
                states.push_back(s);
            }
            Vec l = dense_apply(model.out_, s, nullptr, nullptr);
            for (size_t i = 0; i < l.size(); ++i) l[i] += model.out_b_[i];
            if (targets[j] != Vocabulary::pad_id) {
                total += softmax_nll(l, targets[j], grads ? &logit_grads[j] : nullptr);
                ++tokens;
            } else if (grads) {
                logit_grads[j] = Vec(l.size(), 0.0);
            }
            prev = targets[j];
        }

        if (!grads) continue;

        // backward through time
        Vec ds(h, 0.0);
        for (size_t j = len; j-- > 0;) {
            // output layer at step j (state index j+1)
            const Vec& sj = states[j + 1];
            if (!logit_grads[j].empty()) {
                dense_backward(model.out_, g->out_, logit_grads[j], sj, std::nullopt, &ds);
                for (size_t i = 0; i < logit_grads[j].size(); ++i)
                    g->out_b_[i] += logit_grads[j][i];
            }
            // GRU step j+1: input = embed row of prev_ids[j], s_prev = states[j]
            const StepTape& tp = tapes[j + 1];
            Vec dx(h, 0.0);
            Vec ds_prev(h, 0.0);
            {
                Vec dz(h), dc(h);
                for (size_t i = 0; i < h; ++i) {
                    dz[i] = ds[i] * (tp.c[i] - tp.s_prev[i]);
                    dc[i] = ds[i] * tp.z[i];
                    ds_prev[i] = ds[i] * (1.0 - tp.z[i]);
                }
                Vec dc_pre(h), drs(h);
                for (size_t i = 0; i < h; ++i) dc_pre[i] = dc[i] * (1.0 - tp.c[i] * tp.c[i]);
                // c pre-activation = wc x + uc rs + bc
                std::fill(drs.begin(), drs.end(), 0.0);
                dense_backward(model.wc_, g->wc_, dc_pre, step_inputs[j + 1], tp.mask_wc, &dx);
                dense_backward(model.uc_, g->uc_, dc_pre, tp.rs, tp.mask_uc, &drs);
                for (size_t i = 0; i < h; ++i) g->bc_[i] += dc_pre[i];
                Vec dr(h), dz_pre(h), dr_pre(h);
                for (size_t i = 0; i < h; ++i) {
                    dr[i] = drs[i] * tp.s_prev[i];
                    ds_prev[i] += drs[i] * tp.r[i];
                    dz_pre[i] = dz[i] * tp.z[i] * (1.0 - tp.z[i]);
                    dr_pre[i] = dr[i] * tp.r[i] * (1.0 - tp.r[i]);
                }
                dense_backward(model.wz_, g->wz_, dz_pre, step_inputs[j + 1], tp.mask_wz, &dx);
                dense_backward(model.uz_, g->uz_, dz_pre, tp.s_prev, tp.mask_uz, &ds_prev);
                dense_backward(model.wr_, g->wr_, dr_pre, step_inputs[j + 1], tp.mask_wr, &dx);
                dense_backward(model.ur_, g->ur_, dr_pre, tp.s_prev, tp.mask_ur, &ds_prev);
                for (size_t i = 0; i < h; ++i) {
                    g->bz_[i] += dz_pre[i];
                    g->br_[i] += dr_pre[i];
                }
            }
            // embedding gradient for the input token of step j
            double* erow = g->embed_.a.data() + static_cast<size_t>(prev_ids[j]) * h;
            for (size_t i = 0; i < h; ++i) erow[i] += dx[i];
            ds = std::move(ds_prev);
        }
        // image token step (tape 0, state index 0): input = img_tok
        {
            const StepTape& tp = tapes[0];
            Vec dx(h, 0.0);
            Vec ds_prev(h, 0.0); // initial state grad, discarded
            Vec dz(h), dc(h);
            for (size_t i = 0; i < h; ++i) {
                dz[i] = ds[i] * (tp.c[i] - tp.s_prev[i]);
                dc[i] = ds[i] * tp.z[i];
                ds_prev[i] = ds[i] * (1.0 - tp.z[i]);
            }
            Vec dc_pre(h), drs(h, 0.0);
            for (size_t i = 0; i < h; ++i) dc_pre[i] = dc[i] * (1.0 - tp.c[i] * tp.c[i]);
            dense_backward(model.wc_, g->wc_, dc_pre, step_inputs[0], tp.mask_wc, &dx);
            dense_backward(model.uc_, g->uc_, dc_pre, tp.rs, tp.mask_uc, &drs);
            for (size_t i = 0; i < h; ++i) g->bc_[i] += dc_pre[i];
            Vec dr(h), dz_pre(h), dr_pre(h);
            for (size_t i = 0; i < h; ++i) {
                dr[i] = drs[i] * tp.s_prev[i];
                dz_pre[i] = dz[i] * tp.z[i] * (1.0 - tp.z[i]);
                dr_pre[i] = dr[i] * tp.r[i] * (1.0 - tp.r[i]);
            }
            dense_backward(model.wz_, g->wz_, dz_pre, step_inputs[0], tp.mask_wz, &dx);
            dense_backward(model.uz_, g->uz_, dz_pre, tp.s_prev, tp.mask_uz, nullptr);
            dense_backward(model.wr_, g->wr_, dr_pre, step_inputs[0], tp.mask_wr, &dx);
            dense_backward(model.ur_, g->ur_, dr_pre, tp.s_prev, tp.mask_ur, nullptr);
            for (size_t i = 0; i < h; ++i) {
                g->bz_[i] += dz_pre[i];
                g->br_[i] += dr_pre[i];
            }
            // through the image projection
            dense_backward(model.img_, g->img_, dx, ex.image, img_apply_mask, nullptr);
            for (size_t i = 0; i < h; ++i) g->img_b_[i] += dx[i];
        }
    }
    if (token_count) *token_count = tokens;
    return total;
}

namespace {

struct AdamState {
    std::vector<std::vector<double>> m, v;
};

void adamw_step(DecoderModel& model, GradSet& grads, AdamState& st, const TrainConfig& cfg,
                size_t step, double grad_scale) {
    auto params = model.tensors();
    auto gs = grads.shadow.tensors();
    if (st.m.empty()) {
        st.m.resize(params.size());
        st.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            st.m[i].assign(params[i].data->size(), 0.0);
            st.v[i].assign(params[i].data->size(), 0.0);
        }
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        auto& p = *params[i].data;
        auto& gv = *gs[i].data;
        for (size_t k = 0; k < p.size(); ++k) {
            const double gk = gv[k] * grad_scale;
            st.m[i][k] = cfg.beta1 * st.m[i][k] + (1.0 - cfg.beta1) * gk;
            st.v[i][k] = cfg.beta2 * st.v[i][k] + (1.0 - cfg.beta2) * gk * gk;
            const double mhat = st.m[i][k] / bc1;
            const double vhat = st.v[i][k] / bc2;
            p[k] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) + cfg.weight_decay * p[k]);
        }
    }
}

} // namespace

TrainResult train_decoder(const std::vector<TrainExample>& data, const Vocabulary& vocab,
                          const TrainConfig& config) {
    if (data.empty()) fail(errc::invalid_argument, "train_decoder: empty dataset");
    const size_t d_img = data.front().image.size();
    for (const auto& ex : data)
        if (ex.image.size() != d_img)
            fail(errc::invalid_argument, "train_decoder: inconsistent image dimensions");

    TrainResult result;
    result.model = DecoderModel(vocab, d_img, config.hidden, config.lora, config.seed);
    GradSet grads(result.model);
    AdamState adam;
    SplitMix64 drop_rng(SplitMix64::mix(config.seed, 0x64726F70ULL));
    const bool use_dropout = config.lora.rank > 0 && config.lora.dropout > 0.0;

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const size_t bs = std::max<size_t>(1, config.batch_size);
    size_t step = 0;

    // Per-item losses are re-summed in dataset order at epoch end so the
    // reported trace does not depend on the shuffle (and lr 0 keeps it flat).
    std::vector<double> item_nll(data.size(), 0.0);
    std::vector<size_t> item_tokens(data.size(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        SplitMix64 shuffle_rng(
            SplitMix64::mix(config.seed, 0x65706F00ULL + static_cast<uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

        for (size_t begin = 0; begin < order.size(); begin += bs) {
            const size_t end = std::min(order.size(), begin + bs);
            grads.zero();
            size_t batch_tokens = 0;
            for (size_t k = begin; k < end; ++k) {
                const size_t idx = order[k];
                size_t tokens = 0;
                const double nll =
                    decoder_loss_and_grads(result.model, {&data[idx], 1}, &grads, &tokens,
                                           use_dropout ? &drop_rng : nullptr);
                if (!std::isfinite(nll))
                    fail(errc::numeric_error, "training loss is not finite at epoch " +
                                                  std::to_string(epoch + 1) + ", item " +
                                                  std::to_string(idx));
                item_nll[idx] = nll;
                item_tokens[idx] = tokens;
                batch_tokens += tokens;
            }
            ++step;
            adamw_step(result.model, grads, adam, config, step,
                       batch_tokens > 0 ? 1.0 / static_cast<double>(batch_tokens) : 0.0);
        }
        double epoch_nll = 0.0;
        size_t epoch_tokens = 0;
        for (size_t i = 0; i < data.size(); ++i) {
            epoch_nll += item_nll[i];
            epoch_tokens += item_tokens[i];
        }
        result.epoch_loss.push_back(
            epoch_tokens > 0 ? epoch_nll / static_cast<double>(epoch_tokens) : 0.0);
    }
    return result;
}

// ---- model container (little-endian doubles after a JSON header) ----

namespace {
constexpr char kMagic[4] = {'D', 'F', 'M', 'D'};
constexpr uint32_t kVersion = 1;
} // namespace

void DecoderModel::save(const std::string& path) const {
    auto infos = tensors();
    io::json header;
    header["schema"] = "dynoframe.model/1";
    header["hidden"] = hidden_;
    header["d_img"] = d_img_;
    header["vocab"] = vocab_.snapshot();
    if (lora_.rank > 0)
        header["lora"] = {{"rank", lora_.rank}, {"alpha", lora_.alpha}, {"dropout", lora_.dropout}};
    io::json tl = io::json::array();
    for (const auto& t : infos)
        tl.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    header["tensors"] = tl;
    const std::string hjson = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io_error, "cannot open " + path + " for writing");
    out.write(kMagic, 4);
    const uint32_t ver = kVersion;
    out.write(reinterpret_cast<const char*>(&ver), sizeof ver);
    const uint64_t hlen = hjson.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out.write(hjson.data(), static_cast<std::streamsize>(hjson.size()));
    for (const auto& t : infos)
        out.write(reinterpret_cast<const char*>(t.data->data()),
                  static_cast<std::streamsize>(t.data->size() * sizeof(double)));
    if (!out) fail(errc::io_error, "write failed: " + path);
}

DecoderModel DecoderModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        fail(errc::parse_error, path + ": not a dynoframe model file");
    uint32_t ver = 0;
    in.read(reinterpret_cast<char*>(&ver), sizeof ver);
    if (ver != kVersion)
        fail(errc::parse_error, path + ": unsupported model version " + std::to_string(ver));
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    if (!in || hlen > (1ULL << 30)) fail(errc::parse_error, path + ": bad header length");
    std::string hjson(hlen, '\0');
    in.read(hjson.data(), static_cast<std::streamsize>(hlen));
    const io::json header = io::parse_json(hjson, path + " header");

    const auto vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    LoraSpec lora;
    if (header.contains("lora")) {
        lora.rank = header["lora"]["rank"].get<uint32_t>();
        lora.alpha = header["lora"]["alpha"].get<double>();
        lora.dropout = header["lora"]["dropout"].get<double>();
    }
    DecoderModel model(vocab, header.at("d_img").get<size_t>(), header.at("hidden").get<size_t>(),
                       lora, 0);
    auto infos = model.tensors();
    const auto& tl = header.at("tensors");
    if (tl.size() != infos.size()) fail(errc::parse_error, path + ": tensor list mismatch");
    for (size_t i = 0; i < infos.size(); ++i) {
        if (tl[i].at("name").get<std::string>() != infos[i].name ||
            tl[i].at("rows").get<size_t>() != infos[i].rows ||
            tl[i].at("cols").get<size_t>() != infos[i].cols)
            fail(errc::parse_error, path + ": tensor layout mismatch at '" + infos[i].name + "'");
        in.read(reinterpret_cast<char*>(infos[i].data->data()),
                static_cast<std::streamsize>(infos[i].data->size() * sizeof(double)));
        if (!in) fail(errc::parse_error, path + ": truncated tensor data");
    }
    return model;
}

} // namespace df::toylm
