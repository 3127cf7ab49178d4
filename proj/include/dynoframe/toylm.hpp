#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynoframe/linalg.hpp"

namespace df::toylm {

class Vocabulary {
public:
    static constexpr int pad_id = 0;
    static constexpr int bos_id = 1;
    static constexpr int eos_id = 2;

    Vocabulary();

    int add(const std::string& token); // idempotent, returns id
    std::optional<int> id_of(std::string_view token) const;
    const std::string& token(int id) const;
    size_t size() const { return tokens_.size(); }

    // Whitespace word-level tokenization over the structured vocabulary.
    std::vector<int> encode(std::string_view text) const; // throws on unknown token
    std::string decode(std::span<const int> ids) const;   // reserved ids skipped

    std::vector<std::string> snapshot() const { return tokens_; }
    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

private:
    std::vector<std::string> tokens_;
    std::map<std::string, int, std::less<>> ids_;
};

// Low-rank additive adapter over a frozen base weight:
//   effective = base + (alpha/rank) * up * down
// `up` starts at zero so a fresh adapter is an exact identity wrapper.
struct LoraAdapter {
    Mat base; // m x n, frozen
    Mat down; // A: rank x n
    Mat up;   // B: m x rank, zero-initialized
    double alpha = 0;
    double dropout = 0;

    static LoraAdapter init(Mat base, uint32_t rank, double alpha, double dropout,
                            SplitMix64& rng);

    uint32_t rank() const { return static_cast<uint32_t>(down.rows); }
    double scaling() const { return alpha / static_cast<double>(rank()); }
    size_t trainable_count() const { return down.size() + up.size(); } // r*(m+n)
};

// y = base*x + (alpha/r) * up*(down*x), without materializing up*down.
Vec lora_forward(const LoraAdapter& adapter, std::span<const double> x);
Mat lora_merge(const LoraAdapter& adapter);

// Dense layer weight that may carry a LoRA adapter; when it does, the base
// lives inside the adapter and is excluded from training.
struct DenseParam {
    Mat w;                           // used directly when no adapter
    std::optional<LoraAdapter> lora; // owns the frozen base when present

    size_t out_dim() const { return lora ? lora->base.rows : w.rows; }
    size_t in_dim() const { return lora ? lora->base.cols : w.cols; }
};

struct LoraSpec {
    uint32_t rank = 0;   // 0 disables adapters
    double alpha = 0;    // 0 -> 2*rank
    double dropout = 0.05;
};

struct TensorInfo {
    std::string name;
    std::vector<double>* data;
    size_t rows, cols; // cols == 0 for vectors
    bool trainable;
};

// Single-layer GRU decoder conditioned on one prepended image token.
class DecoderModel {
public:
    DecoderModel() = default;
    DecoderModel(Vocabulary vocab, size_t d_img, size_t hidden, const LoraSpec& lora,
                 uint64_t seed);

    const Vocabulary& vocab() const { return vocab_; }
    size_t hidden() const { return hidden_; }
    size_t d_img() const { return d_img_; }
    const LoraSpec& lora_spec() const { return lora_; }

    // Teacher-forced per-position logits for targets[0..n) given the image.
    std::vector<Vec> forward_logits(const Vec& image, std::span<const int> targets) const;

    // Greedy decoding from BOS until EOS or max_len emitted tokens.
    std::vector<int> generate(const Vec& image, size_t max_len) const;

    void save(const std::string& path) const;
    static DecoderModel load(const std::string& path);

    // Tensor registry: iteration order is the serialization order.
    std::vector<TensorInfo> tensors();
    std::vector<TensorInfo> tensors() const;

    // Everything below is the parameter set; public so the trainer and the
    // gradient-check tests can reach it directly.
    Vocabulary vocab_;
    size_t hidden_ = 0, d_img_ = 0;
    LoraSpec lora_;
    Mat embed_;        // V x h token table
    DenseParam img_;   // h x d_img
    Vec img_b_;
    DenseParam wz_, uz_, wr_, ur_, wc_, uc_; // h x h
    Vec bz_, br_, bc_;
    DenseParam out_; // V x h
    Vec out_b_;
};

// Total negative log-likelihood of `targets` under per-position logits, PAD
// positions masked out. Softmax uses max-subtraction.
double lm_loss(const std::vector<Vec>& logits, std::span<const int> targets);

struct TrainExample {
    Vec image;
    std::vector<int> tokens; // content ids, no BOS/EOS
};

struct TrainConfig {
    int epochs = 30;
    double lr = 1e-4; // documented decoder defaults: lr 1e-4, wd 0.01, eps 1e-8
    double weight_decay = 0.01;
    double adam_eps = 1e-8;
    double beta1 = 0.9;
    double beta2 = 0.999;
    size_t batch_size = 16;
    size_t hidden = 64;
    uint64_t seed = 1;
    LoraSpec lora;
};

struct TrainResult {
    DecoderModel model;
    std::vector<double> epoch_loss; // mean NLL per non-pad token
};

// Mini-batch AdamW over the teacher-forced LM objective. Deterministic per
// seed; aborts with a diagnostic when the loss stops being finite.
TrainResult train_decoder(const std::vector<TrainExample>& data, const Vocabulary& vocab,
                          const TrainConfig& config);

// Accumulated gradients for one batch. A zeroed structural copy of the model
// keeps the tensor registry aligned between parameters and gradients.
struct GradSet {
    explicit GradSet(const DecoderModel& model);
    DecoderModel shadow;
    void zero();
};

// Total NLL over the batch plus gradients (when `grads` non-null). Dropout on
// adapter inputs is active only when a dropout rng is supplied.
double decoder_loss_and_grads(const DecoderModel& model,
                              std::span<const TrainExample> batch, GradSet* grads,
                              size_t* token_count, SplitMix64* dropout_rng = nullptr);

} // namespace df::toylm
