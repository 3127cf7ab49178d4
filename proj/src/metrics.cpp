#include "dynoframe/metrics.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "dynoframe/parallel.hpp"
#include "dynoframe/structparse.hpp"

namespace df::metrics {

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double iw = ix2 - ix1, ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::top1: return "top1";
        case Scenario::top5: return "top5";
        case Scenario::gtverb: return "gtverb";
    }
    return "?";
}

std::string_view value_mode_name(ValueMode m) {
    return m == ValueMode::any_role ? "any_role" : "per_role";
}

Scenario scenario_from_name(std::string_view s) {
    if (s == "top1") return Scenario::top1;
    if (s == "top5") return Scenario::top5;
    if (s == "gtverb") return Scenario::gtverb;
    fail(errc::invalid_argument, "unknown scenario '" + std::string(s) +
                                     "' (expected top1, top5, or gtverb)");
}

ValueMode value_mode_from_name(std::string_view s) {
    if (s == "any" || s == "any_role") return ValueMode::any_role;
    if (s == "per-role" || s == "per_role") return ValueMode::per_role;
    fail(errc::invalid_argument,
         "unknown value mode '" + std::string(s) + "' (expected any or per-role)");
}

// ---- report container ----

json EvalReport::to_json() const {
    json doc;
    doc["schema"] = "dynoframe.report/1";
    doc["task"] = task;
    doc["options"] = attributes;
    doc["items"] = item_count;
    doc["metrics"] = json(values);
    if (!per_item.empty()) doc["per_item"] = per_item;
    return doc;
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << "task: " << task << "   items: " << item_count << '\n';
    if (!attributes.empty()) {
        bool first = true;
        for (auto it = attributes.begin(); it != attributes.end(); ++it) {
            if (!first) out << "   ";
            first = false;
            out << it.key() << ": "
                << (it.value().is_string() ? it.value().get<std::string>() : it.value().dump());
        }
        out << '\n';
    }
    size_t width = 6;
    for (const auto& [k, v] : values) width = std::max(width, k.size());
    for (const auto& [k, v] : values) {
        out << k << std::string(width - k.size() + 2, ' ');
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        out << buf << '\n';
    }
    return out.str();
}

namespace {

std::string csv_cell(const json& v) {
    if (v.is_string()) {
        const std::string& s = v.get_ref<const std::string&>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    }
    return v.dump();
}

} // namespace

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    if (per_item.empty()) {
        out << "metric,value\n";
        for (const auto& [k, v] : values) out << k << ',' << json(v).dump() << '\n';
        return out.str();
    }
    std::vector<std::string> cols;
    for (auto it = per_item.front().begin(); it != per_item.front().end(); ++it)
        cols.push_back(it.key());
    for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& row : per_item) {
        for (size_t i = 0; i < cols.size(); ++i) {
            if (i) out << ',';
            if (row.contains(cols[i])) out << csv_cell(row.at(cols[i]));
        }
        out << '\n';
    }
    return out.str();
}

// ---- SiR / GSR ----

namespace {

const std::string& gt_verb(const std::vector<GroundedFrame>& annotators, const std::string& id) {
    if (annotators.empty())
        fail(errc::validation_error, "item '" + id + "': ground truth has no annotator frames");
    const std::string& verb = annotators.front().frame.verb;
    for (const auto& a : annotators)
        if (a.frame.verb != verb)
            fail(errc::validation_error, "item '" + id + "': annotators disagree on the verb");
    return verb;
}

bool noun_matches(const std::optional<std::string>& pred, const std::optional<std::string>& gt) {
    return pred == gt; // covers the both-empty case
}

bool box_matches(const std::optional<BoundingBox>& pred, const std::optional<BoundingBox>& gt) {
    if (!pred && !gt) return true;
    if (!pred || !gt) return false;
    return iou(*pred, *gt) >= 0.5; // inclusive threshold
}

struct ItemScore {
    double verb = 0, value = 0, value_all = 0;
    double grnd_value = 0, grnd_value_all = 0;
};

size_t rank_budget(Scenario s, size_t n_hyp) {
    switch (s) {
        case Scenario::top1: return std::min<size_t>(1, n_hyp);
        case Scenario::top5: return std::min<size_t>(5, n_hyp);
        case Scenario::gtverb: return n_hyp;
    }
    return 0;
}

ItemScore score_item(const GsrPrediction& pred, const GsrGroundTruth& gt,
                     const Lexicon& lexicon, const EvalOptions& opts) {
    ItemScore score;
    const std::string& verb = gt_verb(gt.annotators, gt.id);
    const frames::VerbEntry* entry = lexicon.find(verb);
    if (!entry) fail(errc::validation_error, "item '" + gt.id + "': unknown verb " + verb);

    const size_t budget = rank_budget(opts.scenario, pred.hypotheses.size());
    const GroundedFrame* chosen = nullptr;
    for (size_t i = 0; i < budget; ++i) {
        if (pred.hypotheses[i].frame.verb == verb) {
            chosen = &pred.hypotheses[i];
            break;
        }
    }
    if (!chosen) return score; // verb miss: everything 0
    score.verb = 1.0;

    static const std::optional<BoundingBox> no_box;
    const size_t k = entry->roles.size();
    size_t noun_ok = 0, grnd_ok = 0;
    for (size_t r = 0; r < k; ++r) {
        const auto& pred_noun = chosen->frame.fillers[r].noun;
        const auto& pred_box = r < chosen->boxes.size() ? chosen->boxes[r] : no_box;
        bool n_ok = false, g_ok = false;
        for (const auto& annotator : gt.annotators) {
            if (!noun_matches(pred_noun, annotator.frame.fillers[r].noun)) continue;
            n_ok = true;
            const auto& gt_box = r < annotator.boxes.size() ? annotator.boxes[r] : no_box;
            if (box_matches(pred_box, gt_box)) {
                g_ok = true;
                break;
            }
        }
        noun_ok += n_ok;
        grnd_ok += g_ok;
    }
    if (opts.value_mode == ValueMode::any_role) {
        score.value = noun_ok > 0 ? 1.0 : 0.0;
        score.grnd_value = grnd_ok > 0 ? 1.0 : 0.0;
    } else {
        score.value = static_cast<double>(noun_ok) / static_cast<double>(k);
        score.grnd_value = static_cast<double>(grnd_ok) / static_cast<double>(k);
    }
    score.value_all = noun_ok == k ? 1.0 : 0.0;
    score.grnd_value_all = grnd_ok == k ? 1.0 : 0.0;
    return score;
}

// Pairs predictions and ground truth by id; both sides must cover exactly the
// same ids, each once.
std::vector<std::pair<const GsrPrediction*, const GsrGroundTruth*>> align(
    const std::vector<GsrPrediction>& preds, const std::vector<GsrGroundTruth>& gts) {
    std::map<std::string, const GsrPrediction*> by_id;
    for (const auto& p : preds)
        if (!by_id.emplace(p.id, &p).second)
            fail(errc::validation_error, "duplicate prediction id '" + p.id + "'");
    std::map<std::string, const GsrGroundTruth*> gt_by_id;
    for (const auto& g : gts)
        if (!gt_by_id.emplace(g.id, &g).second)
            fail(errc::validation_error, "duplicate ground truth id '" + g.id + "'");
    if (by_id.size() != gt_by_id.size())
        fail(errc::validation_error,
             "prediction and ground truth item counts differ (" +
                 std::to_string(by_id.size()) + " vs " + std::to_string(gt_by_id.size()) + ")");
    std::vector<std::pair<const GsrPrediction*, const GsrGroundTruth*>> out;
    out.reserve(gts.size());
    for (const auto& [id, g] : gt_by_id) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            fail(errc::validation_error, "no prediction for ground truth id '" + id + "'");
        out.emplace_back(it->second, g);
    }
    return out;
}

void validate_grounded_or_fail(const GroundedFrame& g, const Lexicon& lexicon,
                               const std::string& id, const char* side) {
    auto violations = frames::validate_frame(g.frame, lexicon);
    if (violations.empty()) violations = frames::validate_grounded(g, lexicon);
    if (!violations.empty())
        fail(errc::validation_error, "item '" + id + "' " + side + ": " +
                                         violations.front().message);
}

EvalReport eval_grounded_core(const std::vector<GsrPrediction>& preds,
                              const std::vector<GsrGroundTruth>& gts, const Lexicon& lexicon,
                              const EvalOptions& opts, bool grounded, const char* task) {
    const auto pairs = align(preds, gts);
    for (const auto& [p, g] : pairs) {
        for (const auto& h : p->hypotheses)
            validate_grounded_or_fail(h, lexicon, p->id, "prediction");
        for (const auto& a : g->annotators)
            validate_grounded_or_fail(a, lexicon, g->id, "ground truth");
    }

    std::vector<ItemScore> scores(pairs.size());
    parallel_for(pairs.size(), opts.jobs, [&](size_t i) {
        scores[i] = score_item(*pairs[i].first, *pairs[i].second, lexicon, opts);
    });

    EvalReport report;
    report.task = task;
    report.attributes["scenario"] = std::string(scenario_name(opts.scenario));
    report.attributes["value_mode"] = std::string(value_mode_name(opts.value_mode));
    report.item_count = pairs.size();
    ItemScore total;
    for (const auto& s : scores) {
        total.verb += s.verb;
        total.value += s.value;
        total.value_all += s.value_all;
        total.grnd_value += s.grnd_value;
        total.grnd_value_all += s.grnd_value_all;
    }
    const double n = pairs.empty() ? 1.0 : static_cast<double>(pairs.size());
    report.values["verb"] = total.verb / n;
    report.values["value"] = total.value / n;
    report.values["value_all"] = total.value_all / n;
    if (grounded) {
        report.values["grnd_value"] = total.grnd_value / n;
        report.values["grnd_value_all"] = total.grnd_value_all / n;
    }
    if (opts.per_item) {
        for (size_t i = 0; i < pairs.size(); ++i) {
            json row;
            row["id"] = pairs[i].second->id;
            row["verb"] = scores[i].verb;
            row["value"] = scores[i].value;
            row["value_all"] = scores[i].value_all;
            if (grounded) {
                row["grnd_value"] = scores[i].grnd_value;
                row["grnd_value_all"] = scores[i].grnd_value_all;
            }
            report.per_item.push_back(std::move(row));
        }
    }
    return report;
}

GsrPrediction lift(const SirPrediction& p) {
    GsrPrediction out;
    out.id = p.id;
    for (const auto& h : p.hypotheses) {
        GroundedFrame g;
        g.frame = h;
        g.boxes.assign(h.fillers.size(), std::nullopt);
        out.hypotheses.push_back(std::move(g));
    }
    return out;
}

GsrGroundTruth lift(const SirGroundTruth& g) {
    GsrGroundTruth out;
    out.id = g.id;
    for (const auto& a : g.annotators) {
        GroundedFrame gf;
        gf.frame = a;
        gf.boxes.assign(a.fillers.size(), std::nullopt);
        out.annotators.push_back(std::move(gf));
    }
    return out;
}

} // namespace

EvalReport eval_sir(const std::vector<SirPrediction>& preds,
                    const std::vector<SirGroundTruth>& gts, const Lexicon& lexicon,
                    const EvalOptions& opts) {
    std::vector<GsrPrediction> lifted_preds;
    lifted_preds.reserve(preds.size());
    for (const auto& p : preds) lifted_preds.push_back(lift(p));
    std::vector<GsrGroundTruth> lifted_gts;
    lifted_gts.reserve(gts.size());
    for (const auto& g : gts) lifted_gts.push_back(lift(g));
    return eval_grounded_core(lifted_preds, lifted_gts, lexicon, opts, false, "sir");
}

EvalReport eval_gsr(const std::vector<GsrPrediction>& preds,
                    const std::vector<GsrGroundTruth>& gts, const Lexicon& lexicon,
                    const EvalOptions& opts) {
    return eval_grounded_core(preds, gts, lexicon, opts, true, "gsr");
}

// ---- HOI ----

HoiMatch match_hoi(const std::vector<HoiDetection>& dets, const std::vector<HoiInstance>& gts) {
    if (!dets.empty()) {
        const size_t cls = dets.front().class_id;
        for (const auto& d : dets)
            if (d.class_id != cls)
                fail(errc::invalid_argument, "match_hoi: detections span multiple classes");
        for (const auto& g : gts)
            if (g.class_id != cls)
                fail(errc::invalid_argument, "match_hoi: ground truth class mismatch");
    }

    HoiMatch result;
    result.order.resize(dets.size());
    std::iota(result.order.begin(), result.order.end(), 0);
    std::sort(result.order.begin(), result.order.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        if (dets[a].image_id != dets[b].image_id) return dets[a].image_id < dets[b].image_id;
        return dets[a].index_in_image < dets[b].index_in_image;
    });

    std::map<std::string, std::vector<size_t>> gts_by_image;
    for (size_t i = 0; i < gts.size(); ++i) gts_by_image[gts[i].image_id].push_back(i);
    std::vector<bool> claimed(gts.size(), false);

    result.tp.assign(dets.size(), false);
    for (size_t rank = 0; rank < result.order.size(); ++rank) {
        const HoiDetection& det = dets[result.order[rank]];
        auto it = gts_by_image.find(det.image_id);
        if (it == gts_by_image.end()) continue;
        double best_overlap = -1.0;
        size_t best_gt = gts.size();
        for (size_t gi : it->second) {
            if (claimed[gi]) continue;
            const double overlap =
                std::min(iou(det.human, gts[gi].human), iou(det.object, gts[gi].object));
            if (overlap >= 0.5 && overlap > best_overlap) { // tie keeps the lowest index
                best_overlap = overlap;
                best_gt = gi;
            }
        }
        if (best_gt < gts.size()) {
            claimed[best_gt] = true;
            result.tp[rank] = true;
        }
    }
    return result;
}

double average_precision(const std::vector<bool>& tp_flags, size_t n_gt) {
    if (n_gt == 0)
        fail(errc::invalid_argument, "average_precision: no ground truth instances");
    if (tp_flags.empty()) return 0.0;
    const size_t n = tp_flags.size();
    std::vector<double> precision(n), recall(n);
    size_t tp = 0;
    for (size_t i = 0; i < n; ++i) {
        tp += tp_flags[i] ? 1 : 0;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    }
    for (size_t i = n - 1; i-- > 0;) // monotone non-increasing from the right
        precision[i] = std::max(precision[i], precision[i + 1]);
    double ap = 0.0, prev_recall = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

EvalReport eval_hoi(const std::vector<HoiDetection>& dets, const std::vector<HoiInstance>& gts,
                    const HoiCatalog& catalog, const HoiOptions& opts) {
    const size_t n_classes = catalog.size();
    for (const auto& d : dets)
        if (d.class_id >= n_classes)
            fail(errc::validation_error, "detection references class id " +
                                             std::to_string(d.class_id) + " outside the catalog");
    for (const auto& g : gts)
        if (g.class_id >= n_classes)
            fail(errc::validation_error, "ground truth references class id " +
                                             std::to_string(g.class_id) +
                                             " outside the catalog");

    std::vector<std::vector<HoiDetection>> dets_by_class(n_classes);
    std::vector<std::vector<HoiInstance>> gts_by_class(n_classes);
    for (const auto& d : dets) dets_by_class[d.class_id].push_back(d);
    for (const auto& g : gts) gts_by_class[g.class_id].push_back(g);

    std::vector<double> ap(n_classes, 0.0);
    std::vector<char> included(n_classes, 0);
    parallel_for(n_classes, opts.jobs, [&](size_t c) {
        if (gts_by_class[c].empty()) {
            included[c] = opts.zero_gt_as_zero ? 1 : 0;
            ap[c] = 0.0;
            return;
        }
        included[c] = 1;
        const auto match = match_hoi(dets_by_class[c], gts_by_class[c]);
        ap[c] = average_precision(match.tp, gts_by_class[c].size());
    });

    const auto splits = frames::hoi_splits(catalog);
    auto mean_over = [&](const std::vector<size_t>& ids) -> std::optional<double> {
        double sum = 0.0;
        size_t count = 0;
        for (size_t c : ids)
            if (included[c]) {
                sum += ap[c];
                ++count;
            }
        if (count == 0) return std::nullopt;
        return sum / static_cast<double>(count);
    };

    EvalReport report;
    report.task = "hoi";
    report.attributes["zero_gt_as_zero"] = opts.zero_gt_as_zero;
    report.item_count = gts.size();
    if (auto m = mean_over(splits.full)) report.values["map_full"] = *m;
    if (auto m = mean_over(splits.rare)) report.values["map_rare"] = *m;
    if (auto m = mean_over(splits.nonrare)) report.values["map_nonrare"] = *m;
    auto count_included = [&](const std::vector<size_t>& ids) {
        size_t n = 0;
        for (size_t c : ids) n += included[c] ? 1 : 0;
        return static_cast<double>(n);
    };
    report.values["classes_full"] = count_included(splits.full);
    report.values["classes_rare"] = count_included(splits.rare);
    report.values["classes_nonrare"] = count_included(splits.nonrare);

    if (opts.per_class) {
        std::vector<char> is_rare(n_classes, 0);
        for (size_t c : splits.rare) is_rare[c] = 1;
        for (size_t c = 0; c < n_classes; ++c) {
            json row;
            row["class_id"] = c;
            row["object"] = catalog.at(c).object;
            row["action"] = catalog.at(c).action;
            row["split"] = is_rare[c] ? "rare" : "nonrare";
            row["n_gt"] = gts_by_class[c].size();
            row["n_det"] = dets_by_class[c].size();
            if (included[c]) row["ap"] = ap[c];
            else row["ap"] = nullptr;
            report.per_item.push_back(std::move(row));
        }
    }
    return report;
}

// ---- HHI ----

namespace {

std::vector<std::string> ws_tokens(const std::string& text) {
    return structparse::StructuredText::from(text).tokens;
}

class FunctionScorer : public Scorer {
public:
    FunctionScorer(std::string name,
                   std::function<ScoreOutcome(const std::string&, const std::string&)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}

    std::string name() const override { return name_; }

    std::vector<ScoreOutcome> score(
        const std::vector<std::pair<std::string, std::string>>& pairs) override {
        std::vector<ScoreOutcome> out(pairs.size());
        for (size_t i = 0; i < pairs.size(); ++i) out[i] = fn_(pairs[i].first, pairs[i].second);
        return out;
    }

private:
    std::string name_;
    std::function<ScoreOutcome(const std::string&, const std::string&)> fn_;
};

} // namespace

std::unique_ptr<Scorer> make_exact_scorer() {
    return std::make_unique<FunctionScorer>("exact", [](const std::string& pred,
                                                        const std::string& gt) {
        ScoreOutcome out;
        const auto p = structparse::StructuredText::from(pred).raw;
        const auto g = structparse::StructuredText::from(gt).raw;
        out.values["exact"] = p == g ? 1.0 : 0.0;
        return out;
    });
}

std::unique_ptr<Scorer> make_token_f1_scorer() {
    return std::make_unique<FunctionScorer>("f1", [](const std::string& pred,
                                                     const std::string& gt) {
        ScoreOutcome out;
        const auto pt = ws_tokens(pred);
        const auto gtk = ws_tokens(gt);
        if (pt.empty() && gtk.empty()) {
            out.values["f1"] = 1.0;
            return out;
        }
        std::map<std::string, size_t> counts;
        for (const auto& t : gtk) ++counts[t];
        size_t common = 0;
        for (const auto& t : pt) {
            auto it = counts.find(t);
            if (it != counts.end() && it->second > 0) {
                --it->second;
                ++common;
            }
        }
        if (common == 0 || pt.empty() || gtk.empty()) {
            out.values["f1"] = 0.0;
            return out;
        }
        const double p = static_cast<double>(common) / static_cast<double>(pt.size());
        const double r = static_cast<double>(common) / static_cast<double>(gtk.size());
        out.values["f1"] = 2.0 * p * r / (p + r);
        return out;
    });
}

std::unique_ptr<Scorer> make_verbsim_scorer(const Lexicon& lexicon,
                                            const std::map<std::string, Vec>& embeddings) {
    auto find_verb = [&lexicon](const std::string& text) -> const frames::VerbEntry* {
        for (const auto& tok : ws_tokens(text)) {
            auto matches = lexicon.find_by_gerund(tok);
            if (matches.size() == 1) return matches.front();
        }
        return nullptr;
    };
    return std::make_unique<FunctionScorer>(
        "verbsim", [&lexicon, embeddings, find_verb](const std::string& pred,
                                                     const std::string& gt) {
            ScoreOutcome out;
            const auto* pv = find_verb(pred);
            const auto* gv = find_verb(gt);
            if (!pv || !gv) {
                out.skipped = true;
                out.skip_reason = std::string("no lexicon verb found in ") +
                                  (!pv ? "prediction" : "ground truth");
                return out;
            }
            auto pe = embeddings.find(pv->verb);
            auto ge = embeddings.find(gv->verb);
            if (pe == embeddings.end() || ge == embeddings.end()) {
                out.skipped = true;
                out.skip_reason = "no embedding for verb '" +
                                  (pe == embeddings.end() ? pv->verb : gv->verb) + "'";
                return out;
            }
            const Vec& a = pe->second;
            const Vec& b = ge->second;
            if (a.size() != b.size() || a.empty()) {
                out.skipped = true;
                out.skip_reason = "embedding dimension mismatch";
                return out;
            }
            const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
            if (na == 0.0 || nb == 0.0) {
                out.skipped = true;
                out.skip_reason = "zero-norm embedding";
                return out;
            }
            out.values["verbsim"] = dot(a, b) / (na * nb);
            return out;
        });
}

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += "'";
    return out;
}

class ExecScorer : public Scorer {
public:
    explicit ExecScorer(std::string command) : command_(std::move(command)) {}

    std::string name() const override { return "exec"; }

    std::vector<ScoreOutcome> score(
        const std::vector<std::pair<std::string, std::string>>& pairs) override {
        namespace fs = std::filesystem;
        const auto dir = fs::temp_directory_path();
        const auto in_path = dir / ("dynoframe_scorer_" + std::to_string(::getpid()) + ".jsonl");
        {
            std::string body;
            for (const auto& [pred, gt] : pairs) {
                json line;
                line["pred"] = pred;
                line["gt"] = gt;
                body += line.dump();
                body += '\n';
            }
            io::write_text_file(in_path.string(), body);
        }
        const std::string cmd = command_ + " < " + shell_quote(in_path.string());
        std::FILE* out = ::popen(cmd.c_str(), "r");
        if (!out) {
            fs::remove(in_path);
            fail(errc::io_error, "cannot launch scorer: " + command_);
        }
        std::string output;
        char buf[4096];
        size_t got;
        while ((got = std::fread(buf, 1, sizeof buf, out)) > 0) output.append(buf, got);
        const int status = ::pclose(out);
        fs::remove(in_path);
        if (status != 0)
            fail(errc::io_error,
                 "scorer exited with status " + std::to_string(status) + ": " + command_);

        std::vector<ScoreOutcome> results;
        std::istringstream lines(output);
        std::string line;
        size_t line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const json doc = io::parse_json(line, "scorer output line " + std::to_string(line_no));
            ScoreOutcome outcome;
            if (doc.contains("skip")) {
                outcome.skipped = true;
                outcome.skip_reason = doc["skip"].is_string() ? doc["skip"].get<std::string>()
                                                              : doc["skip"].dump();
            } else {
                for (auto it = doc.begin(); it != doc.end(); ++it) {
                    if (!it.value().is_number())
                        fail(errc::parse_error, "scorer output line " + std::to_string(line_no) +
                                                    ": field '" + it.key() + "' is not a number");
                    outcome.values[it.key()] = it.value().get<double>();
                }
            }
            results.push_back(std::move(outcome));
        }
        if (results.size() != pairs.size())
            fail(errc::validation_error,
                 "scorer returned " + std::to_string(results.size()) + " lines for " +
                     std::to_string(pairs.size()) + " items");
        return results;
    }

private:
    std::string command_;
};

} // namespace

std::unique_ptr<Scorer> make_exec_scorer(const std::string& command) {
    return std::make_unique<ExecScorer>(command);
}

std::unique_ptr<Scorer> make_scorer(const std::string& spec, const Lexicon* lexicon,
                                    const std::map<std::string, Vec>* embeddings) {
    if (spec == "exact") return make_exact_scorer();
    if (spec == "f1") return make_token_f1_scorer();
    if (spec == "verbsim") {
        if (!lexicon || !embeddings)
            fail(errc::invalid_argument,
                 "verbsim scorer needs a lexicon and an embedding table");
        return make_verbsim_scorer(*lexicon, *embeddings);
    }
    if (spec.starts_with("exec:")) {
        const std::string cmd = spec.substr(5);
        if (cmd.empty()) fail(errc::invalid_argument, "exec scorer needs a command path");
        return make_exec_scorer(cmd);
    }
    fail(errc::invalid_argument,
         "unknown scorer '" + spec + "' (expected exact, f1, verbsim, or exec:<path>)");
}

EvalReport eval_hhi(const std::vector<HhiItem>& preds, const std::vector<HhiItem>& gts,
                    Scorer& scorer, const HhiOptions& opts) {
    std::map<std::string, const HhiItem*> pred_by_id;
    for (const auto& p : preds)
        if (!pred_by_id.emplace(p.id, &p).second)
            fail(errc::validation_error, "duplicate prediction id '" + p.id + "'");
    std::map<std::string, const HhiItem*> gt_by_id;
    for (const auto& g : gts)
        if (!gt_by_id.emplace(g.id, &g).second)
            fail(errc::validation_error, "duplicate ground truth id '" + g.id + "'");
    if (pred_by_id.size() != gt_by_id.size())
        fail(errc::validation_error, "prediction and ground truth item counts differ");

    std::vector<std::string> ids;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [id, g] : gt_by_id) {
        auto it = pred_by_id.find(id);
        if (it == pred_by_id.end())
            fail(errc::validation_error, "no prediction for ground truth id '" + id + "'");
        ids.push_back(id);
        pairs.emplace_back(it->second->text, g->text);
    }

    const auto outcomes = scorer.score(pairs);
    if (outcomes.size() != pairs.size())
        fail(errc::internal_error, "scorer returned a mismatched outcome count");

    std::map<std::string, double> sums;
    std::map<std::string, size_t> counts;
    size_t skipped = 0;
    for (const auto& o : outcomes) {
        if (o.skipped) {
            ++skipped;
            continue;
        }
        for (const auto& [k, v] : o.values) {
            sums[k] += v;
            ++counts[k];
        }
    }

    EvalReport report;
    report.task = "hhi";
    report.attributes["scorer"] = scorer.name();
    report.item_count = pairs.size();
    for (const auto& [k, v] : sums)
        report.values[k] = v / static_cast<double>(counts[k]);
    report.values["skipped"] = static_cast<double>(skipped);
    if (opts.per_item) {
        for (size_t i = 0; i < outcomes.size(); ++i) {
            json row;
            row["id"] = ids[i];
            if (outcomes[i].skipped) {
                row["skip"] = outcomes[i].skip_reason;
            } else {
                for (const auto& [k, v] : outcomes[i].values) row[k] = v;
            }
            report.per_item.push_back(std::move(row));
        }
    }
    return report;
}

// ---- loaders ----

namespace {

std::string item_id(const json& obj, const std::string& ctx) {
    const json id = io::get_field(obj, "id", ctx);
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<int64_t>());
    fail(errc::parse_error, ctx + ": id must be a string or integer");
}

void check_schema(const json& obj, std::string_view expected, const std::string& ctx) {
    if (!obj.contains("schema")) return; // optional marker
    if (!obj["schema"].is_string())
        fail(errc::parse_error, ctx + ": schema field must be a string");
    const auto schema = obj["schema"].get<std::string>();
    if (schema != expected)
        fail(errc::parse_error, ctx + ": schema '" + schema + "' does not match expected '" +
                                    std::string(expected) + "'");
}

template <typename T, typename Fn>
std::vector<T> load_lines(const std::string& path, std::string_view schema, Fn&& fn) {
    std::vector<T> out;
    for (const auto& line : io::load_jsonl(path)) {
        const std::string ctx = path + " item " + std::to_string(out.size() + 1);
        if (!line.is_object()) fail(errc::parse_error, ctx + ": expected a JSON object");
        check_schema(line, schema, ctx);
        out.push_back(fn(line, ctx));
    }
    return out;
}

BoundingBox box_field(const json& obj, const char* key, const std::string& ctx) {
    return BoundingBox::from_json(io::get_field(obj, key, ctx), ctx + "." + key);
}

} // namespace

std::vector<SirPrediction> load_sir_predictions(const std::string& path, const Lexicon& lexicon) {
    return load_lines<SirPrediction>(
        path, "dynoframe.sir_pred/1", [&](const json& line, const std::string& ctx) {
            SirPrediction p;
            p.id = item_id(line, ctx);
            for (const auto& h : io::get_field(line, "hypotheses", ctx))
                p.hypotheses.push_back(frames::frame_from_json(h, lexicon, ctx));
            return p;
        });
}

std::vector<SirGroundTruth> load_sir_ground_truth(const std::string& path,
                                                  const Lexicon& lexicon) {
    return load_lines<SirGroundTruth>(
        path, "dynoframe.sir_gt/1", [&](const json& line, const std::string& ctx) {
            SirGroundTruth g;
            g.id = item_id(line, ctx);
            for (const auto& a : io::get_field(line, "annotators", ctx))
                g.annotators.push_back(frames::frame_from_json(a, lexicon, ctx));
            if (g.annotators.empty())
                fail(errc::parse_error, ctx + ": ground truth needs at least one annotator");
            return g;
        });
}

std::vector<GsrPrediction> load_gsr_predictions(const std::string& path, const Lexicon& lexicon) {
    return load_lines<GsrPrediction>(
        path, "dynoframe.gsr_pred/1", [&](const json& line, const std::string& ctx) {
            GsrPrediction p;
            p.id = item_id(line, ctx);
            for (const auto& h : io::get_field(line, "hypotheses", ctx))
                p.hypotheses.push_back(frames::grounded_from_json(h, lexicon, ctx));
            return p;
        });
}

std::vector<GsrGroundTruth> load_gsr_ground_truth(const std::string& path,
                                                  const Lexicon& lexicon) {
    return load_lines<GsrGroundTruth>(
        path, "dynoframe.gsr_gt/1", [&](const json& line, const std::string& ctx) {
            GsrGroundTruth g;
            g.id = item_id(line, ctx);
            for (const auto& a : io::get_field(line, "annotators", ctx))
                g.annotators.push_back(frames::grounded_from_json(a, lexicon, ctx));
            if (g.annotators.empty())
                fail(errc::parse_error, ctx + ": ground truth needs at least one annotator");
            return g;
        });
}

namespace {

size_t class_of(const json& obj, const HoiCatalog& catalog, const std::string& ctx) {
    const std::string object = io::get_string(obj, "object", ctx);
    const std::string action = io::get_string(obj, "action", ctx);
    auto id = catalog.find(object, action);
    if (!id)
        fail(errc::validation_error,
             ctx + ": (" + object + ", " + action + ") is not in the catalog");
    return *id;
}

} // namespace

std::vector<HoiDetection> load_hoi_detections(const std::string& path,
                                              const HoiCatalog& catalog) {
    std::vector<HoiDetection> out;
    load_lines<int>(path, "dynoframe.hoi_det/1", [&](const json& line, const std::string& ctx) {
        const std::string image = item_id(line, ctx);
        size_t index = 0;
        for (const auto& d : io::get_field(line, "detections", ctx)) {
            HoiDetection det;
            det.image_id = image;
            det.class_id = class_of(d, catalog, ctx);
            det.human = box_field(d, "human_box", ctx);
            det.object = box_field(d, "object_box", ctx);
            const json score = io::get_field(d, "score", ctx);
            if (!score.is_number()) fail(errc::parse_error, ctx + ": score must be a number");
            det.score = score.get<double>();
            if (!std::isfinite(det.score) || det.score < 0.0)
                fail(errc::parse_error, ctx + ": score must be finite and >= 0");
            det.index_in_image = index++;
            out.push_back(std::move(det));
        }
        return 0;
    });
    return out;
}

std::vector<HoiInstance> load_hoi_ground_truth(const std::string& path,
                                               const HoiCatalog& catalog) {
    std::vector<HoiInstance> out;
    load_lines<int>(path, "dynoframe.hoi_gt/1", [&](const json& line, const std::string& ctx) {
        const std::string image = item_id(line, ctx);
        for (const auto& g : io::get_field(line, "instances", ctx)) {
            HoiInstance inst;
            inst.image_id = image;
            inst.class_id = class_of(g, catalog, ctx);
            inst.human = box_field(g, "human_box", ctx);
            inst.object = box_field(g, "object_box", ctx);
            out.push_back(std::move(inst));
        }
        return 0;
    });
    return out;
}

std::vector<HhiItem> load_hhi_items(const std::string& path) {
    return load_lines<HhiItem>(path, "dynoframe.hhi/1",
                               [&](const json& line, const std::string& ctx) {
                                   HhiItem item;
                                   item.id = item_id(line, ctx);
                                   item.text = io::get_string(line, "text", ctx);
                                   return item;
                               });
}

std::map<std::string, Vec> load_embedding_table(const std::string& path) {
    const json doc = io::load_json_file(path);
    if (!doc.is_object())
        fail(errc::parse_error, path + ": expected an object mapping verb to vector");
    std::map<std::string, Vec> out;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!it.value().is_array() || it.value().empty())
            fail(errc::parse_error, path + ": entry '" + it.key() + "' is not a vector");
        out[it.key()] = it.value().get<Vec>();
    }
    return out;
}

} // namespace df::metrics
