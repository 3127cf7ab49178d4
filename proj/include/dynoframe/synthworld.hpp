#pragma once

#include <map>
#include <string>
#include <vector>

#include "dynoframe/frames.hpp"
#include "dynoframe/linalg.hpp"
#include "dynoframe/metrics.hpp"

namespace df::synthworld {

using frames::BoundingBox;
using frames::GroundedFrame;
using frames::SemanticFrame;
using io::json;

struct RolePool {
    std::string role;
    std::vector<std::string> nouns; // at least one
};

struct VerbSpec {
    std::string verb;
    std::vector<RolePool> roles; // declaration order is the frame role order
};

struct HoiWorld {
    frames::HoiCatalog catalog;
    size_t gt_per_image = 2;
    size_t distractors = 2;
};

// A closed synthetic universe: a lexicon with per-role noun pools, a linear
// embedding model over seeded codebooks, and box/score corruption knobs with
// closed-form expected metric values.
struct WorldSpec {
    std::vector<VerbSpec> verbs;
    size_t d = 96;        // embedding width, >= 8; keep above the total
                          // codebook entry count so verbs stay separable
    double sigma = 0.05;  // embedding noise
    double p_empty = 0.2; // probability a role stays unfilled
    uint64_t codebook_seed = 1;
    double canvas = 1000.0;
    double min_side = 20.0;
    double jitter = 0.0; // box corner perturbation, pixels
    double q_flip = 0.0; // probability a predicted noun is flipped wrong
    HoiWorld hoi;

    frames::Lexicon lexicon() const;
    const VerbSpec& verb_spec(std::string_view verb) const;
    void validate() const;

    static WorldSpec demo(); // built-in world the pipeline runs on
    static WorldSpec load(const std::string& path);
    static WorldSpec from_json(const json& doc, const std::string& ctx);
    json to_json() const;
};

// Unit-normalized Gaussian vectors for every verb and every (role, noun)
// pair. Each vector is seeded from (codebook_seed, key string), so lookups
// never depend on construction or iteration order, and a noun shared by two
// verbs contributes the same direction to both.
class Codebook {
public:
    explicit Codebook(const WorldSpec& world);

    const Vec& verb_vec(std::string_view verb) const;
    const Vec& filler_vec(std::string_view role, std::string_view noun) const;

private:
    std::map<std::string, Vec, std::less<>> vecs_;
};

// Verb uniform over the lexicon; each role empty with probability p_empty,
// otherwise uniform over its pool.
SemanticFrame sample_frame(const WorldSpec& world, SplitMix64& rng);

// Codebook sum for the verb and all filled roles, plus sigma-scaled noise.
Vec embed_frame(const WorldSpec& world, const Codebook& codebook, const SemanticFrame& frame,
                SplitMix64& rng);

struct ItemSample {
    SemanticFrame frame;
    Vec embedding;
};

// Frame plus embedding for item `index` of the world's addressable stream:
// exactly what generate_world_files writes at that index for the same seed.
ItemSample sample_item(const WorldSpec& world, const Codebook& codebook, uint64_t seed,
                       uint64_t index);

struct GroundedPair {
    GroundedFrame truth;      // boxes on every filled role
    GroundedFrame prediction; // jittered boxes, nouns flipped wrong w.p. q_flip
};

GroundedPair sample_grounded(const WorldSpec& world, SplitMix64& rng);

// One image: gt_per_image ground truth pairs plus their exact copies scored
// in (0.5, 1) and `distractors` false positives scored in (0, 0.5).
void sample_hoi_scene(const WorldSpec& world, const std::string& image_id, SplitMix64& rng,
                      std::vector<metrics::HoiInstance>& gts,
                      std::vector<metrics::HoiDetection>& dets);

struct WorldFiles {
    std::string lexicon, catalog, frames, embeddings, sir_gt, gsr_gt, gsr_pred, hoi_gt,
        hoi_det;

    std::vector<std::string> all() const {
        return {lexicon, catalog, frames, embeddings, sir_gt, gsr_gt, gsr_pred, hoi_gt,
                hoi_det};
    }
};

// Writes every dataset file under `prefix` (prefix + "_frames.jsonl", ...).
// Items are sampled on per-index streams, so file contents depend only on
// (world, n, seed).
WorldFiles generate_world_files(const WorldSpec& world, size_t n_items, size_t n_hoi_images,
                                uint64_t seed, const std::string& prefix);

} // namespace df::synthworld
