// Release gate. Each numbered criterion prints exactly one PASS/FAIL line;
// the process exits nonzero if any criterion fails. Thresholds and
// tolerances are pinned here on purpose: loosening one is a release
// decision, not a test edit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

#include "dynoframe/augment.hpp"
#include "dynoframe/frames.hpp"
#include "dynoframe/metrics.hpp"
#include "dynoframe/probe.hpp"
#include "dynoframe/rng.hpp"
#include "dynoframe/runner.hpp"
#include "dynoframe/structparse.hpp"
#include "dynoframe/synthworld.hpp"
#include "dynoframe/toylm.hpp"

using namespace df;

namespace {

int failures = 0;

template <typename Fn> void criterion(int number, const char* title, Fn&& fn) {
    try {
        fn();
        std::printf("PASS  %2d  %s\n", number, title);
    } catch (const std::exception& e) {
        ++failures;
        std::printf("FAIL  %2d  %s\n          %s\n", number, title, e.what());
    }
    std::fflush(stdout);
}

void expect(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

void expect_near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol))
        throw std::runtime_error(what + ": got " + std::to_string(got) + ", want " +
                                 std::to_string(want) + " within " + std::to_string(tol));
}

// ---- random schema machinery --------------------------------------------
//
// Lemmas are fixed-length lowercase words ending in a consonant other than
// 'e'; within one length the inflection rules map distinct lemmas to
// distinct gerunds, so a sampled lexicon never collides.

std::string random_lemma(SplitMix64& rng) {
    static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    static const std::string tail = "bcdfgklmnprst";
    std::string s;
    for (int i = 0; i < 3; ++i) s += letters[rng.next_below(letters.size())];
    s += tail[rng.next_below(tail.size())];
    return s;
}

frames::Lexicon random_lexicon(size_t n_verbs, SplitMix64& rng,
                               std::vector<std::vector<std::string>>* noun_pools) {
    static const std::vector<std::string> role_pool = {
        "AGENT", "ITEM", "TOOL", "PLACE", "SOURCE", "TARGET", "FOOD", "COAGENT"};
    std::set<std::string> used;
    std::vector<frames::VerbEntry> entries;
    while (entries.size() < n_verbs) {
        std::string lemma = random_lemma(rng);
        if (!used.insert(lemma).second) continue;
        frames::VerbEntry entry;
        entry.verb = lemma;
        const size_t n_roles = 1 + rng.next_below(5);
        std::vector<std::string> roles(role_pool.begin(), role_pool.end());
        for (size_t i = roles.size(); i > 1; --i)
            std::swap(roles[i - 1], roles[rng.next_below(i)]);
        roles.resize(n_roles);
        entry.roles = roles;
        entries.push_back(std::move(entry));
        if (noun_pools) {
            std::vector<std::string> nouns;
            const size_t n_nouns = 3 + rng.next_below(6);
            std::set<std::string> seen;
            while (nouns.size() < n_nouns) {
                std::string noun = "n" + random_lemma(rng);
                if (seen.insert(noun).second) nouns.push_back(std::move(noun));
            }
            noun_pools->push_back(std::move(nouns));
        }
    }
    return frames::Lexicon::from_entries(std::move(entries));
}

frames::SemanticFrame random_frame(const frames::Lexicon& lex,
                                   const std::vector<std::vector<std::string>>& pools,
                                   SplitMix64& rng) {
    const size_t pick = rng.next_below(lex.size());
    const auto& entry = lex.entries()[pick];
    frames::SemanticFrame f;
    f.verb = entry.verb;
    for (const auto& role : entry.roles) {
        if (rng.next_bernoulli(0.3))
            f.fillers.push_back({role, std::nullopt});
        else
            f.fillers.push_back({role, pools[pick][rng.next_below(pools[pick].size())]});
    }
    return f;
}

// ---- criterion 3 oracle ---------------------------------------------------

double oracle_ap(const std::vector<bool>& is_tp, size_t n_gt) {
    // all-point interpolation, O(n^2) reference form
    if (n_gt == 0) return 0.0;
    std::vector<double> precision, recall;
    size_t tp = 0;
    for (size_t i = 0; i < is_tp.size(); ++i) {
        if (is_tp[i]) ++tp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }
    double ap = 0.0, prev_recall = 0.0;
    for (size_t i = 0; i < is_tp.size(); ++i) {
        if (!is_tp[i]) continue;
        double best = 0.0;
        for (size_t j = i; j < is_tp.size(); ++j) best = std::max(best, precision[j]);
        ap += (recall[i] - prev_recall) * best;
        prev_recall = recall[i];
    }
    return ap;
}

double iou(const frames::BoundingBox& a, const frames::BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    const double ua = a.area() + b.area() - inter;
    return ua > 0 ? inter / ua : 0.0;
}

frames::BoundingBox random_box(SplitMix64& rng) {
    const double x = rng.next_range(0.0, 80.0), y = rng.next_range(0.0, 80.0);
    return {x, y, x + rng.next_range(5.0, 40.0), y + rng.next_range(5.0, 40.0)};
}

// ---- criterion fixtures ---------------------------------------------------

synthworld::WorldSpec flip_world(double q) {
    synthworld::WorldSpec w;
    synthworld::VerbSpec verb;
    verb.verb = "pack";
    verb.roles = {{"AGENT", {"mover", "clerk"}},
                  {"ITEM", {"box", "jar", "bag"}},
                  {"PLACE", {"van", "shed"}}};
    w.verbs = {verb};
    w.p_empty = 0.0;
    w.q_flip = q;
    return w;
}

std::string scratch_dir(const char* tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("dynoframe_accept_" + std::string(tag) + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir.string();
}

} // namespace

int main() {
    criterion(1, "strict round-trip of 10,000 frames over a random 50-verb schema in < 2 s",
              [] {
                  SplitMix64 rng(2024);
                  std::vector<std::vector<std::string>> pools;
                  const auto lex = random_lexicon(50, rng, &pools);
                  std::vector<frames::SemanticFrame> frames;
                  frames.reserve(10000);
                  for (int i = 0; i < 10000; ++i)
                      frames.push_back(random_frame(lex, pools, rng));

                  const auto start = std::chrono::steady_clock::now();
                  for (const auto& f : frames) {
                      const std::string text = structparse::serialize_frame(f, lex);
                      const auto parsed =
                          structparse::parse_frame(text, lex, structparse::ParseMode::strict);
                      expect(parsed.frame == f, "round trip changed a frame: " + text);
                      expect(parsed.diags.issues.empty(), "strict parse logged an issue");
                  }
                  const std::chrono::duration<double> elapsed =
                      std::chrono::steady_clock::now() - start;
                  expect(elapsed.count() < 2.0,
                         "round trip took " + std::to_string(elapsed.count()) + " s");
              });

    criterion(2, "canonical slice example serializes verbatim and restores the empty role",
              [] {
                  const auto lex = frames::Lexicon::from_json(
                      io::parse_json(R"([{"verb": "slice",
                                          "roles": ["AGENT", "ITEM", "PLACE", "TOOL"]}])",
                                     "slice"),
                      "slice");
                  frames::SemanticFrame f;
                  f.verb = "slice";
                  f.fillers = {{"AGENT", "person"},
                               {"ITEM", std::nullopt},
                               {"PLACE", "table"},
                               {"TOOL", "knife"}};
                  const std::string text = structparse::serialize_frame(f, lex);
                  expect(text == "VERB slicing AGENT person PLACE table TOOL knife",
                         "serialized to '" + text + "'");
                  const auto parsed =
                      structparse::parse_frame(text, lex, structparse::ParseMode::strict);
                  expect(parsed.frame == f, "parse did not restore the frame");
                  expect(!parsed.frame.fillers[1].noun.has_value(), "ITEM should be empty");
              });

    criterion(3, "detection AP matches a brute-force oracle on 1,000 random instances", [] {
        expect_near(metrics::average_precision({true, false, true}, 2), 5.0 / 6.0, 1e-9,
                    "hand case [TP,FP,TP] with 2 ground truths");

        SplitMix64 rng(77);
        const frames::HoiCatalog catalog({{"cup", "hold", 20}});
        for (int trial = 0; trial < 1000; ++trial) {
            // one class, one image: random detections vs random ground truth
            std::vector<metrics::HoiInstance> gts;
            const size_t n_gt = 1 + rng.next_below(4);
            for (size_t g = 0; g < n_gt; ++g)
                gts.push_back({"img", 0, random_box(rng), random_box(rng)});
            std::vector<metrics::HoiDetection> dets;
            const size_t n_det = rng.next_below(8);
            for (size_t d = 0; d < n_det; ++d)
                dets.push_back({"img", 0, random_box(rng), random_box(rng),
                                rng.next_range(0.0, 1.0), d});

            const auto report = metrics::eval_hoi(dets, gts, catalog, {});

            // reference: score-descending greedy match; each detection claims
            // the unclaimed truth with the best min(iou_h, iou_o) >= 0.5
            std::vector<size_t> order(dets.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
                return dets[a].index_in_image < dets[b].index_in_image;
            });
            std::vector<bool> claimed(gts.size(), false);
            std::vector<bool> is_tp;
            for (const size_t d : order) {
                int best_g = -1;
                double best_overlap = 0.5;
                for (size_t g = 0; g < gts.size(); ++g) {
                    if (claimed[g]) continue;
                    const double overlap = std::min(iou(dets[d].human, gts[g].human),
                                                    iou(dets[d].object, gts[g].object));
                    if (overlap >= best_overlap) {
                        best_overlap = overlap;
                        best_g = static_cast<int>(g);
                    }
                }
                if (best_g >= 0) claimed[static_cast<size_t>(best_g)] = true;
                is_tp.push_back(best_g >= 0);
            }
            expect_near(report.values.at("map_full"), oracle_ap(is_tp, gts.size()), 1e-9,
                        "trial " + std::to_string(trial));
        }
    });

    criterion(4, "metric dominance holds on 200 random datasets", [] {
        SplitMix64 rng(4242);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<std::vector<std::string>> pools;
            const auto lex = random_lexicon(4, rng, &pools);
            std::vector<metrics::GsrPrediction> preds;
            std::vector<metrics::GsrGroundTruth> gts;
            const size_t n_items = 5 + rng.next_below(20);
            auto grounded = [&](SplitMix64& r) {
                frames::GroundedFrame g;
                g.frame = random_frame(lex, pools, r);
                for (const auto& filler : g.frame.fillers) {
                    if (filler.noun && r.next_bernoulli(0.8))
                        g.boxes.emplace_back(random_box(r));
                    else
                        g.boxes.emplace_back(std::nullopt);
                }
                return g;
            };
            for (size_t i = 0; i < n_items; ++i) {
                const std::string id = "i" + std::to_string(i);
                metrics::GsrPrediction pred;
                pred.id = id;
                const size_t n_hyp = 1 + rng.next_below(6);
                for (size_t h = 0; h < n_hyp; ++h) pred.hypotheses.push_back(grounded(rng));
                preds.push_back(std::move(pred));
                metrics::GsrGroundTruth gt;
                gt.id = id;
                gt.annotators.push_back(grounded(rng));
                gts.push_back(std::move(gt));
            }

            metrics::EvalOptions top1;
            metrics::EvalOptions top5;
            top5.scenario = metrics::Scenario::top5;
            const auto r1 = metrics::eval_gsr(preds, gts, lex, top1).values;
            const auto r5 = metrics::eval_gsr(preds, gts, lex, top5).values;
            const double eps = 1e-12;
            expect(r1.at("value_all") <= r1.at("value") + eps, "value_all <= value");
            expect(r1.at("value") <= r1.at("verb") + eps, "value <= verb");
            expect(r1.at("grnd_value") <= r1.at("value") + eps, "grnd_value <= value");
            expect(r1.at("grnd_value_all") <= r1.at("value_all") + eps,
                   "grnd_value_all <= value_all");
            expect(r5.at("verb") >= r1.at("verb") - eps, "top5 verb >= top1 verb");
        }
    });

    criterion(5, "noisy world statistic lands within 3 sigma of its closed form", [] {
        const auto world = flip_world(0.5);
        SplitMix64 rng(99);
        std::vector<metrics::GsrPrediction> preds;
        std::vector<metrics::GsrGroundTruth> gts;
        const size_t n = 10000;
        for (size_t i = 0; i < n; ++i) {
            const auto pair = synthworld::sample_grounded(world, rng);
            const std::string id = "i" + std::to_string(i);
            preds.push_back({id, {pair.prediction}});
            gts.push_back({id, {pair.truth}});
        }
        metrics::EvalOptions opts;
        opts.value_mode = metrics::ValueMode::any_role;
        const auto report = metrics::eval_gsr(preds, gts, world.lexicon(), opts);
        const double want = 1.0 - std::pow(0.5, 3); // any of k=3 roles survives
        const double sigma = std::sqrt(want * (1.0 - want) / static_cast<double>(n));
        expect_near(report.values.at("value"), want, 3.0 * sigma, "any-role value");
    });

    criterion(6, "attention fusion invariants hold at both token scales", [] {
        augment::AugmentCheckConfig cfg; // kb=49, kv=32, n=256, heads=4, 100 trials
        for (const auto mode : {augment::FuseMode::augment, augment::FuseMode::replace}) {
            cfg.mode = mode;
            for (const auto& check : augment::run_augment_checks(cfg))
                expect(check.pass, check.name + " deviated by " +
                                       std::to_string(check.max_deviation));
        }

        SplitMix64 rng(5);
        const auto small = augment::AttentionBlock::gaussian(256, 4, 0.1, rng);
        const auto large = augment::AttentionBlock::gaussian(256, 4, 0.1, rng);
        expect(small.param_count() == large.param_count() &&
                   small.param_count() == 4 * 256 * 256,
               "parameter count must depend only on the feature width");

        const auto e_b = augment::FeatureBlock::gaussian(2, 49, 256, 1.0, rng);
        const auto e_vl = augment::FeatureBlock::gaussian(2, 32, 512, 1.0, rng);
        const auto proj = augment::Projection::gaussian(512, 256, 0.1, rng);
        const auto blk = augment::AttentionBlock::gaussian(256, 4, 0.1, rng);
        const auto fused = augment::fuse(e_b, e_vl, proj, blk, augment::FuseMode::augment);
        expect(fused.b == 2 && fused.k == 81 && fused.n == 256,
               "augment output must be (2, 81, 256)");
        const auto replaced = augment::fuse(e_b, e_vl, proj, blk, augment::FuseMode::replace);
        expect(replaced.k == 32, "replace output must keep only the injected tokens");
    });

    criterion(7, "low-rank adapters: identity at init, merge equivalence, counts", [] {
        SplitMix64 rng(31);
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const size_t m = 1 + rng.next_below(6), n = 1 + rng.next_below(6);
            const uint32_t r = 1 + static_cast<uint32_t>(rng.next_below(4));
            auto adapter = toylm::LoraAdapter::init(Mat::gaussian(m, n, 1.0, rng), r,
                                                    rng.next_range(0.5, 4.0), 0.0, rng);

            Vec x(n);
            for (auto& v : x) v = rng.next_range(-1.0, 1.0);
            const Vec fresh = toylm::lora_forward(adapter, x);
            const Vec base_only = mat_vec(adapter.base, x);
            for (size_t i = 0; i < fresh.size(); ++i)
                expect(fresh[i] == base_only[i], "zero-initialized adapter must be exact");

            for (auto& v : adapter.up.a) v = rng.next_range(-1.0, 1.0);
            const Vec factored = toylm::lora_forward(adapter, x);
            const Vec merged = mat_vec(toylm::lora_merge(adapter), x);
            for (size_t i = 0; i < factored.size(); ++i)
                worst = std::max(worst, std::abs(factored[i] - merged[i]));

            expect(adapter.trainable_count() == size_t{r} * (m + n),
                   "trainable count must be r*(m+n)");
        }
        expect(worst < 1e-6, "merge deviated by " + std::to_string(worst));

        SplitMix64 r2(1);
        const auto paper_scale =
            toylm::LoraAdapter::init(Mat::gaussian(8, 8, 1.0, r2), 128, 256.0, 0.0, r2);
        expect(paper_scale.scaling() == 2.0, "alpha/r must be 2 at r=128, alpha=256");
    });

    criterion(8, "analytic gradients agree with central differences", [] {
        toylm::Vocabulary vocab;
        for (const char* t : {"VERB", "packing", "AGENT", "mover", "ITEM", "box"})
            vocab.add(t);
        toylm::DecoderModel model(vocab, 3, 4, toylm::LoraSpec{}, 12);
        SplitMix64 rng(8);
        std::vector<toylm::TrainExample> batch;
        for (int i = 0; i < 2; ++i) {
            toylm::TrainExample ex;
            ex.image = {rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0),
                        rng.next_range(-1.0, 1.0)};
            ex.tokens = vocab.encode("VERB packing AGENT mover");
            batch.push_back(std::move(ex));
        }
        toylm::GradSet grads(model);
        toylm::decoder_loss_and_grads(model, batch, &grads, nullptr);
        auto params = model.tensors();
        auto gs = grads.shadow.tensors();
        const double h = 1e-5;
        double worst = 0.0;
        for (size_t t = 0; t < params.size(); ++t) {
            if (!params[t].trainable) continue;
            auto& p = *params[t].data;
            for (size_t k = 0; k < p.size(); ++k) {
                const double keep = p[k];
                p[k] = keep + h;
                const double lp =
                    toylm::decoder_loss_and_grads(model, batch, nullptr, nullptr);
                p[k] = keep - h;
                const double lm =
                    toylm::decoder_loss_and_grads(model, batch, nullptr, nullptr);
                p[k] = keep;
                const double numeric = (lp - lm) / (2.0 * h);
                const double analytic = (*gs[t].data)[k];
                const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
                worst = std::max(worst, std::abs(analytic - numeric) / scale);
            }
        }
        expect(worst < 1e-4, "decoder gradient relative error " + std::to_string(worst));

        probe::ProbeDataset data;
        data.dim = 3;
        data.labels = {"a", "b", "c"};
        SplitMix64 prng(9);
        std::vector<size_t> idx;
        for (size_t i = 0; i < 12; ++i) {
            data.x.push_back({prng.next_range(-1.0, 1.0), prng.next_range(-1.0, 1.0),
                              prng.next_range(-1.0, 1.0)});
            data.y.push_back(i % 3);
            idx.push_back(i);
        }
        probe::ProbeModel pm;
        pm.w = Mat::gaussian(3, 3, 0.5, prng);
        pm.b = {0.1, -0.2, 0.3};
        Mat gw(3, 3);
        Vec gb(3);
        probe::probe_loss_and_grad(data, idx, pm, 1e-3, gw, gb);
        double worst_probe = 0.0;
        auto loss_with = [&](double* slot, double value) {
            const double keep = *slot;
            *slot = value;
            Mat tw(3, 3);
            Vec tb(3);
            const double loss = probe::probe_loss_and_grad(data, idx, pm, 1e-3, tw, tb);
            *slot = keep;
            return loss;
        };
        for (size_t k = 0; k < pm.w.a.size(); ++k) {
            const double keep = pm.w.a[k];
            const double numeric = (loss_with(&pm.w.a[k], keep + h) -
                                    loss_with(&pm.w.a[k], keep - h)) /
                                   (2.0 * h);
            const double scale = std::max({1.0, std::abs(numeric), std::abs(gw.a[k])});
            worst_probe = std::max(worst_probe, std::abs(gw.a[k] - numeric) / scale);
        }
        for (size_t k = 0; k < pm.b.size(); ++k) {
            const double keep = pm.b[k];
            const double numeric =
                (loss_with(&pm.b[k], keep + h) - loss_with(&pm.b[k], keep - h)) / (2.0 * h);
            const double scale = std::max({1.0, std::abs(numeric), std::abs(gb[k])});
            worst_probe = std::max(worst_probe, std::abs(gb[k] - numeric) / scale);
        }
        expect(worst_probe < 1e-4,
               "probe gradient relative error " + std::to_string(worst_probe));
    });

    criterion(9, "end-to-end pipeline clears its seeded baseline in < 5 min", [] {
        const std::string dir = scratch_dir("pipeline");
        const auto start = std::chrono::steady_clock::now();
        const auto result = runner::pipeline_run(
            {{"n", 1000}, {"hoi_images", 2}, {"seed", 3}, {"epochs", 30}, {"workdir", dir}});
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        const auto& metrics = result.at("report").at("metrics");
        const double strict = metrics.at("strict_parse_rate").get<double>();
        const double value_all = metrics.at("value_all").get<double>();
        std::filesystem::remove_all(dir);
        expect(strict >= 0.95,
               "strict parse rate " + std::to_string(strict) + " below 0.95");
        expect(value_all >= 0.80, "value_all " + std::to_string(value_all) + " below 0.80");
        expect(elapsed.count() < 300.0,
               "pipeline took " + std::to_string(elapsed.count()) + " s");
    });

    criterion(10, "probe separates a separable fixture; rank correlation is exact", [] {
        probe::ProbeDataset data;
        data.dim = 2;
        data.labels = {"left", "right"};
        SplitMix64 rng(3);
        std::vector<size_t> idx;
        for (size_t i = 0; i < 40; ++i) {
            const double cls = i % 2 == 0 ? -1.0 : 1.0;
            data.x.push_back(
                {cls * 2.0 + rng.next_range(-0.5, 0.5), rng.next_range(-0.5, 0.5)});
            data.y.push_back(i % 2);
            idx.push_back(i);
        }
        const auto fit = probe::fit_probe(data, idx, probe::ProbeConfig{});
        expect(probe::probe_accuracy(fit.model, data, idx) == 1.0,
               "separable fixture must reach accuracy 1.0");

        const auto corr = probe::correlate({1.0, 2.0, 3.0}, {1.0, 3.0, 2.0});
        expect(corr.spearman == 0.5, "spearman([1,2,3],[1,3,2]) must be exactly 0.5");
    });

    criterion(11, "identical seeds give byte-identical reports; workers do not matter", [] {
        const std::string dir = scratch_dir("determinism");
        const auto files = synthworld::generate_world_files(synthworld::WorldSpec::demo(),
                                                            300, 10, 17, dir + "/w");
        runner::json opts = {{"pred", files.gsr_pred},
                             {"gt", files.gsr_gt},
                             {"lexicon", files.lexicon},
                             {"jobs", 1}};
        const std::string first = runner::eval_gsr(opts).at("report").dump();
        const std::string second = runner::eval_gsr(opts).at("report").dump();
        opts["jobs"] = 4;
        const std::string fanned = runner::eval_gsr(opts).at("report").dump();

        runner::json hopts = {{"det", files.hoi_det},
                              {"gt", files.hoi_gt},
                              {"catalog", files.catalog},
                              {"jobs", 1}};
        const std::string hoi1 = runner::eval_hoi(hopts).at("report").dump();
        hopts["jobs"] = 4;
        const std::string hoi4 = runner::eval_hoi(hopts).at("report").dump();

        const auto regen = synthworld::generate_world_files(synthworld::WorldSpec::demo(),
                                                            300, 10, 17, dir + "/again");
        const bool same_bytes =
            io::read_text_file(files.gsr_gt) == io::read_text_file(regen.gsr_gt) &&
            io::read_text_file(files.frames) == io::read_text_file(regen.frames);
        std::filesystem::remove_all(dir);

        expect(first == second, "two identical runs must match byte for byte");
        expect(first == fanned, "gsr report must not depend on the worker count");
        expect(hoi1 == hoi4, "hoi report must not depend on the worker count");
        expect(same_bytes, "regenerated world files must be byte-identical");
    });

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
