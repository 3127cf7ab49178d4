#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dynoframe/probe.hpp"
#include "dynoframe/structparse.hpp"
#include "dynoframe/synthworld.hpp"

using namespace df;
using namespace df::synthworld;

namespace {

// one verb, three roles, every role always filled; flips controlled by q
WorldSpec flip_world(double q) {
    WorldSpec w;
    w.verbs.push_back({"pack",
                       {{"AGENT", {"mover", "clerk"}},
                        {"ITEM", {"box", "jar", "bag"}},
                        {"PLACE", {"van", "shed"}}}});
    w.p_empty = 0.0;
    w.q_flip = q;
    return w;
}

// two verbs over identical role pools, so frames can differ only in the verb
WorldSpec twin_world() {
    WorldSpec w;
    const std::vector<RolePool> pools = {{"AGENT", {"cat", "dog"}},
                                         {"PLACE", {"yard", "roof"}}};
    w.verbs.push_back({"walk", pools});
    w.verbs.push_back({"jump", pools});
    w.sigma = 0.0;
    return w;
}

SemanticFrame bare_frame(const WorldSpec& w, const std::string& verb) {
    SemanticFrame f;
    f.verb = verb;
    for (const auto& pool : w.verb_spec(verb).roles)
        f.fillers.push_back({pool.role, std::nullopt});
    return f;
}

std::string temp_prefix(const char* tag) {
    auto dir = std::filesystem::temp_directory_path();
    return (dir / ("dynoframe_world_" + std::string(tag) + "_" +
                   std::to_string(::getpid())))
        .string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void remove_files(const WorldFiles& files) {
    for (const auto& path : files.all()) std::filesystem::remove(path);
}

// builds aligned pred/gt lists from sampled pairs, one annotator and one
// hypothesis per item
void sampled_eval_inputs(const WorldSpec& w, size_t n, uint64_t seed,
                         std::vector<metrics::GsrPrediction>& preds,
                         std::vector<metrics::GsrGroundTruth>& gts) {
    SplitMix64 rng(seed);
    for (size_t i = 0; i < n; ++i) {
        GroundedPair pair = sample_grounded(w, rng);
        const std::string id = "i" + std::to_string(i);
        preds.push_back({id, {pair.prediction}});
        gts.push_back({id, {pair.truth}});
    }
}

} // namespace

TEST_CASE("frame sampling repeats bit-exactly for a fixed seed") {
    const WorldSpec w = WorldSpec::demo();
    SplitMix64 a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(sample_frame(w, a) == sample_frame(w, b));
}

TEST_CASE("empty probability boundaries") {
    WorldSpec w = WorldSpec::demo();

    SUBCASE("p_empty one leaves every role unfilled") {
        w.p_empty = 1.0;
        SplitMix64 rng(3);
        for (int i = 0; i < 1000; ++i)
            for (const auto& f : sample_frame(w, rng).fillers) CHECK(!f.noun);
    }
    SUBCASE("p_empty zero fills every role across ten thousand draws") {
        w.p_empty = 0.0;
        SplitMix64 rng(3);
        for (int i = 0; i < 10000; ++i)
            for (const auto& f : sample_frame(w, rng).fillers) CHECK(f.noun.has_value());
    }
}

TEST_CASE("sampled frames respect the verb's role order and pools") {
    const WorldSpec w = WorldSpec::demo();
    const auto lexicon = w.lexicon();
    SplitMix64 rng(19);
    for (int i = 0; i < 500; ++i) {
        const SemanticFrame f = sample_frame(w, rng);
        CHECK(frames::validate_frame(f, lexicon).empty());
        const VerbSpec& spec = w.verb_spec(f.verb);
        REQUIRE(f.fillers.size() == spec.roles.size());
        for (size_t r = 0; r < spec.roles.size(); ++r) {
            CHECK(f.fillers[r].role == spec.roles[r].role);
            if (f.fillers[r].noun) {
                const auto& pool = spec.roles[r].nouns;
                CHECK(std::find(pool.begin(), pool.end(), *f.fillers[r].noun) != pool.end());
            }
        }
    }
}

TEST_CASE("codebook vectors are unit length and independent of lookup order") {
    const WorldSpec w = WorldSpec::demo();
    const Codebook book(w);
    for (const auto& v : w.verbs) {
        double norm = 0.0;
        for (double x : book.verb_vec(v.verb)) norm += x * x;
        CHECK(std::abs(norm - 1.0) < 1e-12);
    }
    // a second codebook built from the same world holds identical vectors
    const Codebook again(w);
    CHECK(book.verb_vec("slice") == again.verb_vec("slice"));
    CHECK(book.filler_vec("PLACE", "kitchen") == again.filler_vec("PLACE", "kitchen"));
    CHECK_THROWS_AS((void)book.verb_vec("fly"), Error);
    CHECK_THROWS_AS((void)book.filler_vec("AGENT", "ghost"), Error);
}

TEST_CASE("noiseless embeddings are the exact codebook sum") {
    const WorldSpec w = twin_world();
    const Codebook book(w);
    SplitMix64 rng(5);

    SUBCASE("same frame twice gives identical vectors") {
        SemanticFrame f = bare_frame(w, "walk");
        f.fillers[0].noun = "cat";
        CHECK(embed_frame(w, book, f, rng) == embed_frame(w, book, f, rng));
    }
    SUBCASE("a bare verb embeds to its codebook vector") {
        CHECK(embed_frame(w, book, bare_frame(w, "walk"), rng) == book.verb_vec("walk"));
    }
    SUBCASE("frames differing only in verb differ by the verb vectors") {
        const Vec a = embed_frame(w, book, bare_frame(w, "walk"), rng);
        const Vec b = embed_frame(w, book, bare_frame(w, "jump"), rng);
        const Vec& va = book.verb_vec("walk");
        const Vec& vb = book.verb_vec("jump");
        for (size_t i = 0; i < w.d; ++i) CHECK(a[i] - b[i] == va[i] - vb[i]);
    }
    SUBCASE("filled roles add their filler vectors in role order") {
        SemanticFrame f = bare_frame(w, "jump");
        f.fillers[0].noun = "dog";
        f.fillers[1].noun = "roof";
        Vec expected(w.d, 0.0);
        axpy(1.0, book.verb_vec("jump"), expected);
        axpy(1.0, book.filler_vec("AGENT", "dog"), expected);
        axpy(1.0, book.filler_vec("PLACE", "roof"), expected);
        CHECK(embed_frame(w, book, f, rng) == expected);
    }
    SUBCASE("shared fillers cancel in the verb difference") {
        SemanticFrame fa = bare_frame(w, "walk"), fb = bare_frame(w, "jump");
        fa.fillers[0].noun = fb.fillers[0].noun = "cat";
        fa.fillers[1].noun = fb.fillers[1].noun = "yard";
        const Vec a = embed_frame(w, book, fa, rng);
        const Vec b = embed_frame(w, book, fb, rng);
        const Vec& va = book.verb_vec("walk");
        const Vec& vb = book.verb_vec("jump");
        for (size_t i = 0; i < w.d; ++i)
            CHECK(std::abs((a[i] - b[i]) - (va[i] - vb[i])) < 1e-12);
    }
}

TEST_CASE("noise changes embeddings but sigma zero does not consume the stream") {
    WorldSpec w = WorldSpec::demo();
    const Codebook book(w);
    SemanticFrame f = bare_frame(w, "run");
    f.fillers[0].noun = "athlete";

    w.sigma = 0.05;
    SplitMix64 rng(11);
    const Vec noisy1 = embed_frame(w, book, f, rng);
    const Vec noisy2 = embed_frame(w, book, f, rng);
    CHECK(noisy1 != noisy2); // successive draws use fresh noise

    w.sigma = 0.0;
    const uint64_t before = SplitMix64(11).next_u64();
    SplitMix64 probe_rng(11);
    (void)embed_frame(w, book, f, probe_rng);
    CHECK(probe_rng.next_u64() == before);
}

TEST_CASE("a linear probe recovers the verb from noiseless embeddings") {
    WorldSpec w = WorldSpec::demo();
    w.sigma = 0.0;
    const Codebook book(w);

    probe::ProbeDataset data;
    data.dim = w.d;
    std::set<std::string> verbs;
    for (const auto& v : w.verbs) verbs.insert(v.verb);
    data.labels.assign(verbs.begin(), verbs.end());

    SplitMix64 rng(21);
    for (int i = 0; i < 1000; ++i) {
        const SemanticFrame f = sample_frame(w, rng);
        data.x.push_back(embed_frame(w, book, f, rng));
        const size_t cls =
            std::distance(data.labels.begin(),
                          std::lower_bound(data.labels.begin(), data.labels.end(), f.verb));
        data.y.push_back(cls);
    }

    std::vector<size_t> idx(data.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto fit = probe::fit_probe(data, idx, probe::ProbeConfig{});
    CHECK(probe::probe_accuracy(fit.model, data, idx) >= 0.99);
}

TEST_CASE("grounded pairs score perfectly when nothing is corrupted") {
    const WorldSpec w = WorldSpec::demo(); // jitter 0, q_flip 0
    std::vector<metrics::GsrPrediction> preds;
    std::vector<metrics::GsrGroundTruth> gts;
    sampled_eval_inputs(w, 200, 31, preds, gts);

    const auto lexicon = w.lexicon();
    for (auto mode : {metrics::ValueMode::per_role, metrics::ValueMode::any_role}) {
        metrics::EvalOptions opts;
        opts.value_mode = mode;
        const auto report = metrics::eval_gsr(preds, gts, lexicon, opts);
        CHECK(report.values.at("verb") == 1.0);
        CHECK(report.values.at("value") == 1.0);
        CHECK(report.values.at("value_all") == 1.0);
        CHECK(report.values.at("grnd_value") == 1.0);
        CHECK(report.values.at("grnd_value_all") == 1.0);
    }
}

TEST_CASE("flipping every noun zeroes the value but keeps the verb") {
    const WorldSpec w = flip_world(1.0);
    std::vector<metrics::GsrPrediction> preds;
    std::vector<metrics::GsrGroundTruth> gts;
    sampled_eval_inputs(w, 100, 41, preds, gts);

    const auto report = metrics::eval_gsr(preds, gts, w.lexicon(), {});
    CHECK(report.values.at("verb") == 1.0);
    CHECK(report.values.at("value") == 0.0);
    CHECK(report.values.at("value_all") == 0.0);
    CHECK(report.values.at("grnd_value") == 0.0);
}

TEST_CASE("half flips land within three sigmas of the closed form") {
    // three always-filled roles, each flipped with probability one half:
    // P(at least one role survives) = 1 - 0.5^3 = 0.875
    const WorldSpec w = flip_world(0.5);
    const size_t n = 10000;
    std::vector<metrics::GsrPrediction> preds;
    std::vector<metrics::GsrGroundTruth> gts;
    sampled_eval_inputs(w, n, 51, preds, gts);
    const auto lexicon = w.lexicon();

    metrics::EvalOptions opts;
    opts.value_mode = metrics::ValueMode::any_role;
    const auto any = metrics::eval_gsr(preds, gts, lexicon, opts);
    const double band_any = 3.0 * std::sqrt(0.875 * 0.125 / static_cast<double>(n));
    CHECK(std::abs(any.values.at("value") - 0.875) <= band_any);
    // boxes are uncorrupted, so grounding adds no extra misses
    CHECK(any.values.at("grnd_value") == any.values.at("value"));

    opts.value_mode = metrics::ValueMode::per_role;
    const auto per = metrics::eval_gsr(preds, gts, lexicon, opts);
    // item value is Binomial(3, 1/2)/3 with variance 1/12
    const double band_per = 3.0 * std::sqrt(1.0 / 12.0 / static_cast<double>(n));
    CHECK(std::abs(per.values.at("value") - 0.5) <= band_per);
}

TEST_CASE("jittered boxes stay valid on the canvas") {
    WorldSpec w = WorldSpec::demo();
    w.canvas = 300.0;
    w.jitter = 50.0;
    const auto lexicon = w.lexicon();
    SplitMix64 rng(61);
    for (int i = 0; i < 500; ++i) {
        const GroundedPair pair = sample_grounded(w, rng);
        CHECK(frames::validate_grounded(pair.truth, lexicon).empty());
        CHECK(frames::validate_grounded(pair.prediction, lexicon).empty());
        for (const auto& box : pair.prediction.boxes) {
            if (!box) continue;
            CHECK(box->x1 >= 0.0);
            CHECK(box->y1 >= 0.0);
            CHECK(box->x2 <= w.canvas);
            CHECK(box->y2 <= w.canvas);
            CHECK(box->x1 < box->x2);
            CHECK(box->y1 < box->y2);
        }
    }
    // jitter wider than the canvas still produces valid boxes
    w.jitter = 900.0;
    for (int i = 0; i < 200; ++i) {
        const GroundedPair pair = sample_grounded(w, rng);
        CHECK(frames::validate_grounded(pair.prediction, lexicon).empty());
    }
}

TEST_CASE("hoi scenes score a perfect mean precision") {
    WorldSpec w = WorldSpec::demo();
    std::vector<metrics::HoiInstance> gts;
    std::vector<metrics::HoiDetection> dets;
    SplitMix64 rng(71);
    for (int i = 0; i < 30; ++i)
        sample_hoi_scene(w, "img" + std::to_string(i), rng, gts, dets);
    CHECK(gts.size() == 60);
    CHECK(dets.size() == 120);

    const auto report = metrics::eval_hoi(dets, gts, w.hoi.catalog, {});
    CHECK(report.values.at("map_full") == 1.0);
    std::set<size_t> gt_classes;
    for (const auto& g : gts) gt_classes.insert(g.class_id);
    CHECK(report.values.at("classes_full") == static_cast<double>(gt_classes.size()));

    SUBCASE("no distractors changes nothing") {
        w.hoi.distractors = 0;
        std::vector<metrics::HoiInstance> g2;
        std::vector<metrics::HoiDetection> d2;
        SplitMix64 r2(71);
        for (int i = 0; i < 10; ++i) sample_hoi_scene(w, "i" + std::to_string(i), r2, g2, d2);
        CHECK(metrics::eval_hoi(d2, g2, w.hoi.catalog, {}).values.at("map_full") == 1.0);
    }
    SUBCASE("only distractors leaves nothing to score unless zeros are forced") {
        w.hoi.gt_per_image = 0;
        w.hoi.distractors = 3;
        std::vector<metrics::HoiInstance> g2;
        std::vector<metrics::HoiDetection> d2;
        SplitMix64 r2(71);
        for (int i = 0; i < 10; ++i) sample_hoi_scene(w, "i" + std::to_string(i), r2, g2, d2);
        CHECK(g2.empty());
        metrics::HoiOptions opts;
        const auto excluded = metrics::eval_hoi(d2, g2, w.hoi.catalog, opts);
        CHECK(!excluded.values.count("map_full"));
        opts.zero_gt_as_zero = true;
        CHECK(metrics::eval_hoi(d2, g2, w.hoi.catalog, opts).values.at("map_full") == 0.0);
    }
    SUBCASE("a false positive above the only hit halves the precision") {
        CHECK(metrics::average_precision({false, true}, 1) == 0.5);
    }
}

TEST_CASE("copy scores stay above distractor scores") {
    const WorldSpec w = WorldSpec::demo();
    std::vector<metrics::HoiInstance> gts;
    std::vector<metrics::HoiDetection> dets;
    SplitMix64 rng(81);
    for (int i = 0; i < 50; ++i)
        sample_hoi_scene(w, "img" + std::to_string(i), rng, gts, dets);
    for (const auto& det : dets) {
        const bool copy = det.index_in_image < w.hoi.gt_per_image;
        if (copy) {
            CHECK(det.score >= 0.5);
            CHECK(det.score < 1.0);
        } else {
            CHECK(det.score >= 0.0);
            CHECK(det.score < 0.5);
        }
    }
}

TEST_CASE("world files round trip through the dataset loaders") {
    const WorldSpec w = WorldSpec::demo();
    const std::string prefix = temp_prefix("roundtrip");
    const WorldFiles files = generate_world_files(w, 40, 8, 11, prefix);

    const auto lexicon = frames::Lexicon::load(files.lexicon);
    CHECK(lexicon.to_json() == w.lexicon().to_json());
    const auto catalog = frames::HoiCatalog::load(files.catalog);
    CHECK(catalog.size() == w.hoi.catalog.size());

    SUBCASE("frame lines carry a strict-parseable serialization") {
        const auto lines = io::load_jsonl(files.frames);
        CHECK(lines.size() == 40);
        for (const auto& line : lines) {
            const auto frame =
                frames::frame_from_json(line.at("frame"), lexicon, "frames line");
            const std::string text = line.at("text").get<std::string>();
            const auto parsed =
                structparse::parse_frame(text, lexicon, structparse::ParseMode::strict);
            CHECK(parsed.frame == frame);
            CHECK(parsed.diags.issues.empty());
            CHECK(structparse::serialize_frame(frame, lexicon) == text);
        }
    }
    SUBCASE("embeddings load as a probe dataset keyed by verb") {
        const auto data = probe::load_probe_dataset(files.embeddings);
        CHECK(data.size() == 40);
        CHECK(data.dim == w.d);
        for (const auto& label : data.labels) CHECK_NOTHROW((void)w.verb_spec(label));
    }
    SUBCASE("recognition files score perfectly under the default world") {
        const auto sir_gt = metrics::load_sir_ground_truth(files.sir_gt, lexicon);
        CHECK(sir_gt.size() == 40);

        const auto preds = metrics::load_gsr_predictions(files.gsr_pred, lexicon);
        const auto gts = metrics::load_gsr_ground_truth(files.gsr_gt, lexicon);
        const auto report = metrics::eval_gsr(preds, gts, lexicon, {});
        CHECK(report.item_count == 40);
        CHECK(report.values.at("verb") == 1.0);
        CHECK(report.values.at("grnd_value_all") == 1.0);

        const auto hoi_dets = metrics::load_hoi_detections(files.hoi_det, catalog);
        const auto hoi_gts = metrics::load_hoi_ground_truth(files.hoi_gt, catalog);
        CHECK(metrics::eval_hoi(hoi_dets, hoi_gts, catalog, {}).values.at("map_full") == 1.0);
    }
    SUBCASE("regeneration is byte-identical and index-addressable") {
        const std::string prefix2 = temp_prefix("again");
        const WorldFiles again = generate_world_files(w, 40, 8, 11, prefix2);
        const auto a = files.all(), b = again.all();
        for (size_t i = 0; i < a.size(); ++i) CHECK(slurp(a[i]) == slurp(b[i]));
        remove_files(again);

        // a shorter run is a prefix of a longer one: items depend only on index
        const std::string prefix3 = temp_prefix("short");
        const WorldFiles head = generate_world_files(w, 15, 3, 11, prefix3);
        const std::string full = slurp(files.frames);
        const std::string part = slurp(head.frames);
        CHECK(full.substr(0, part.size()) == part);
        remove_files(head);
    }
    remove_files(files);
}

TEST_CASE("world specs survive a json round trip") {
    const WorldSpec w = WorldSpec::demo();
    const io::json doc = w.to_json();
    const WorldSpec back = WorldSpec::from_json(doc, "mem");
    CHECK(back.to_json() == doc);
    CHECK(back.d == w.d);
    CHECK(back.hoi.catalog.size() == w.hoi.catalog.size());
}

TEST_CASE("bad world specs are rejected") {
    CHECK_THROWS_AS((void)WorldSpec::demo().verb_spec("fly"), Error);

    WorldSpec w = WorldSpec::demo();
    SUBCASE("embedding width too small") { w.d = 4; }
    SUBCASE("negative sigma") { w.sigma = -0.1; }
    SUBCASE("empty probability out of range") { w.p_empty = 1.5; }
    SUBCASE("flip probability out of range") { w.q_flip = -0.2; }
    SUBCASE("canvas smaller than the minimum side") { w.canvas = 10.0; }
    SUBCASE("no verbs") { w.verbs.clear(); }
    SUBCASE("empty noun pool") { w.verbs[0].roles[0].nouns.clear(); }
    SUBCASE("uppercase noun") { w.verbs[0].roles[0].nouns[0] = "Chef"; }
    SUBCASE("lowercase role name") { w.verbs[0].roles[0].role = "agent"; }
    SUBCASE("duplicate verb") { w.verbs.push_back(w.verbs[0]); }
    CHECK_THROWS_AS(w.validate(), Error);
}

TEST_CASE("world json parsing rejects malformed documents") {
    const io::json good = WorldSpec::demo().to_json();

    io::json wrong_schema = good;
    wrong_schema["schema"] = "dynoframe.world/9";
    CHECK_THROWS_AS((void)WorldSpec::from_json(wrong_schema, "mem"), Error);

    io::json no_verbs = good;
    no_verbs.erase("verbs");
    CHECK_THROWS_AS((void)WorldSpec::from_json(no_verbs, "mem"), Error);

    io::json bad_seed = good;
    bad_seed["codebook_seed"] = "one";
    CHECK_THROWS_AS((void)WorldSpec::from_json(bad_seed, "mem"), Error);

    CHECK_THROWS_AS((void)WorldSpec::from_json(io::json::array(), "mem"), Error);
}
