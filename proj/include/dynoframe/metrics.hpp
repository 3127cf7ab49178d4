#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dynoframe/frames.hpp"
#include "dynoframe/io.hpp"
#include "dynoframe/linalg.hpp"

namespace df::metrics {

using frames::BoundingBox;
using frames::GroundedFrame;
using frames::HoiCatalog;
using frames::Lexicon;
using frames::SemanticFrame;
using io::json;

double iou(const BoundingBox& a, const BoundingBox& b);

enum class Scenario { top1, top5, gtverb };
enum class ValueMode { any_role, per_role };

std::string_view scenario_name(Scenario s);
std::string_view value_mode_name(ValueMode m);
Scenario scenario_from_name(std::string_view s);
ValueMode value_mode_from_name(std::string_view s);

// Ranked verb hypotheses, best first. An empty list is the scored form of an
// unparseable prediction: every metric counts it as fully incorrect.
struct SirPrediction {
    std::string id;
    std::vector<SemanticFrame> hypotheses;
};

// One or more annotator frames sharing the item's verb.
struct SirGroundTruth {
    std::string id;
    std::vector<SemanticFrame> annotators;
};

struct GsrPrediction {
    std::string id;
    std::vector<GroundedFrame> hypotheses;
};

struct GsrGroundTruth {
    std::string id;
    std::vector<GroundedFrame> annotators;
};

struct EvalOptions {
    Scenario scenario = Scenario::top1;
    ValueMode value_mode = ValueMode::per_role;
    int jobs = 1;
    bool per_item = false;
};

// Canonical result container. to_json is byte-stable for fixed inputs;
// volatile run data (timestamps, hashes) belongs in the manifest instead.
struct EvalReport {
    std::string task;
    json attributes = json::object();
    std::map<std::string, double> values;
    json per_item = json::array();
    size_t item_count = 0;

    json to_json() const;
    std::string to_table() const;
    std::string to_csv() const;
};

EvalReport eval_sir(const std::vector<SirPrediction>& preds,
                    const std::vector<SirGroundTruth>& gts, const Lexicon& lexicon,
                    const EvalOptions& opts);

EvalReport eval_gsr(const std::vector<GsrPrediction>& preds,
                    const std::vector<GsrGroundTruth>& gts, const Lexicon& lexicon,
                    const EvalOptions& opts);

struct HoiInstance {
    std::string image_id;
    size_t class_id = 0;
    BoundingBox human, object;
};

struct HoiDetection {
    std::string image_id;
    size_t class_id = 0;
    BoundingBox human, object;
    double score = 0;
    size_t index_in_image = 0; // stable tie-break key under equal scores
};

struct HoiMatch {
    std::vector<size_t> order; // detection indices, descending score
    std::vector<bool> tp;      // parallel to order
};

// Greedy matching for one class: detections in score order claim the
// unmatched ground truth with the highest min(iou_h, iou_o) >= 0.5 in the
// same image; score ties break by (image id, index in image).
HoiMatch match_hoi(const std::vector<HoiDetection>& dets, const std::vector<HoiInstance>& gts);

// Area under the precision-recall curve with precision made monotonically
// non-increasing from the right (all-point interpolation). n_gt must be > 0.
double average_precision(const std::vector<bool>& tp_flags, size_t n_gt);

struct HoiOptions {
    bool zero_gt_as_zero = false; // count zero-GT classes as AP 0 instead of excluding
    int jobs = 1;
    bool per_class = false;
};

EvalReport eval_hoi(const std::vector<HoiDetection>& dets, const std::vector<HoiInstance>& gts,
                    const HoiCatalog& catalog, const HoiOptions& opts);

struct HhiItem {
    std::string id;
    std::string text;
};

struct ScoreOutcome {
    std::map<std::string, double> values;
    bool skipped = false;
    std::string skip_reason;
};

class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string name() const = 0;
    // One outcome per (pred, gt) pair, same order as the input.
    virtual std::vector<ScoreOutcome> score(
        const std::vector<std::pair<std::string, std::string>>& pairs) = 0;
};

std::unique_ptr<Scorer> make_exact_scorer();
std::unique_ptr<Scorer> make_token_f1_scorer();
// Main verb found by lexicon gerund lookup; similarity is the cosine between
// the two verbs' vectors in the supplied table. Items without a resolvable
// verb or vector are skipped and counted.
std::unique_ptr<Scorer> make_verbsim_scorer(const Lexicon& lexicon,
                                            const std::map<std::string, Vec>& embeddings);
// External executable speaking line-delimited JSON: one {"pred","gt"} object
// per input line, one flat {name: number} object per output line.
std::unique_ptr<Scorer> make_exec_scorer(const std::string& command);

// spec: exact | f1 | verbsim | exec:<path>
std::unique_ptr<Scorer> make_scorer(const std::string& spec, const Lexicon* lexicon,
                                    const std::map<std::string, Vec>* embeddings);

struct HhiOptions {
    int jobs = 1;
    bool per_item = false;
};

EvalReport eval_hhi(const std::vector<HhiItem>& preds, const std::vector<HhiItem>& gts,
                    Scorer& scorer, const HhiOptions& opts);

// ---- line-delimited JSON loaders (schemas in docs/schemas.md) ----

std::vector<SirPrediction> load_sir_predictions(const std::string& path, const Lexicon& lexicon);
std::vector<SirGroundTruth> load_sir_ground_truth(const std::string& path, const Lexicon& lexicon);
std::vector<GsrPrediction> load_gsr_predictions(const std::string& path, const Lexicon& lexicon);
std::vector<GsrGroundTruth> load_gsr_ground_truth(const std::string& path, const Lexicon& lexicon);
std::vector<HoiDetection> load_hoi_detections(const std::string& path, const HoiCatalog& catalog);
std::vector<HoiInstance> load_hoi_ground_truth(const std::string& path, const HoiCatalog& catalog);
std::vector<HhiItem> load_hhi_items(const std::string& path);
std::map<std::string, Vec> load_embedding_table(const std::string& path);

} // namespace df::metrics
