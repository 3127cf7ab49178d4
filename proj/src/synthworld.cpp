#include "dynoframe/synthworld.hpp"

#include <algorithm>
#include <cmath>

#include "dynoframe/structparse.hpp"

namespace df::synthworld {

frames::Lexicon WorldSpec::lexicon() const {
    std::vector<frames::VerbEntry> entries;
    for (const auto& v : verbs) {
        frames::VerbEntry e;
        e.verb = v.verb;
        for (const auto& pool : v.roles) e.roles.push_back(pool.role);
        entries.push_back(std::move(e));
    }
    return frames::Lexicon::from_entries(std::move(entries));
}

const VerbSpec& WorldSpec::verb_spec(std::string_view verb) const {
    for (const auto& v : verbs)
        if (v.verb == verb) return v;
    fail(errc::invalid_argument, "verb '" + std::string(verb) + "' is not in the world");
}

void WorldSpec::validate() const {
    if (d < 8) fail(errc::validation_error, "world embedding width must be >= 8");
    if (sigma < 0) fail(errc::validation_error, "world sigma must be >= 0");
    if (p_empty < 0 || p_empty > 1)
        fail(errc::validation_error, "p_empty must lie in [0, 1]");
    if (q_flip < 0 || q_flip > 1) fail(errc::validation_error, "q_flip must lie in [0, 1]");
    if (jitter < 0) fail(errc::validation_error, "jitter must be >= 0");
    if (min_side < 1 || canvas <= min_side)
        fail(errc::validation_error, "canvas must exceed the minimum box side");
    if (verbs.empty()) fail(errc::validation_error, "world needs at least one verb");
    for (const auto& v : verbs)
        for (const auto& pool : v.roles) {
            if (pool.nouns.empty())
                fail(errc::validation_error,
                     "role " + pool.role + " of '" + v.verb + "' has an empty noun pool");
            for (const auto& noun : pool.nouns)
                if (!frames::is_valid_noun(noun))
                    fail(errc::validation_error,
                         "bad noun '" + noun + "' in pool " + v.verb + "/" + pool.role);
        }
    lexicon(); // throws on structural problems (bad roles, duplicate verbs)
}

WorldSpec WorldSpec::demo() {
    WorldSpec w;
    auto verb = [&](std::string name, std::vector<RolePool> roles) {
        w.verbs.push_back({std::move(name), std::move(roles)});
    };
    verb("slice", {{"AGENT", {"person", "chef", "butcher", "cook"}},
                   {"ITEM", {"bread", "apple", "onion", "melon", "cheese"}},
                   {"TOOL", {"knife", "cleaver", "blade", "saw"}},
                   {"PLACE", {"kitchen", "table", "counter", "board"}}});
    verb("eat", {{"AGENT", {"man", "woman", "child", "dog"}},
                 {"FOOD", {"apple", "rice", "soup", "cake", "toast"}},
                 {"PLACE", {"kitchen", "park", "table", "cafe"}}});
    verb("run", {{"AGENT", {"man", "woman", "athlete", "kid"}},
                 {"PLACE", {"park", "track", "street", "beach"}}});
    verb("wash", {{"AGENT", {"person", "worker", "nurse"}},
                  {"ITEM", {"car", "dish", "shirt", "window"}},
                  {"TOOL", {"sponge", "hose", "brush"}},
                  {"PLACE", {"yard", "sink", "garage"}}});
    verb("throw", {{"AGENT", {"boy", "girl", "player", "coach"}},
                   {"ITEM", {"ball", "stone", "stick", "disc"}},
                   {"PLACE", {"field", "yard", "court"}}});
    verb("read", {{"AGENT", {"student", "teacher", "monk"}},
                  {"ITEM", {"book", "letter", "paper", "scroll"}},
                  {"PLACE", {"library", "desk", "bench"}}});

    w.hoi.catalog = frames::HoiCatalog({{"cup", "hold", 3},
                                        {"ball", "throw", 25},
                                        {"bike", "ride", 12},
                                        {"dog", "walk", 8},
                                        {"book", "read", 40},
                                        {"knife", "hold", 2}});
    return w;
}

WorldSpec WorldSpec::from_json(const json& doc, const std::string& ctx) {
    WorldSpec w;
    if (!doc.is_object()) fail(errc::parse_error, ctx + ": world spec must be an object");
    if (doc.contains("schema") &&
        doc.at("schema").get<std::string>() != "dynoframe.world/1")
        fail(errc::parse_error, ctx + ": unknown world schema");

    auto number = [&](const char* key, double fallback) {
        if (!doc.contains(key)) return fallback;
        if (!doc.at(key).is_number()) fail(errc::parse_error, ctx + ": " + key + " must be a number");
        return doc.at(key).get<double>();
    };
    w.d = static_cast<size_t>(number("d", static_cast<double>(w.d)));
    w.sigma = number("sigma", w.sigma);
    w.p_empty = number("p_empty", w.p_empty);
    if (doc.contains("codebook_seed")) {
        if (!doc.at("codebook_seed").is_number_integer())
            fail(errc::parse_error, ctx + ": codebook_seed must be an integer");
        w.codebook_seed = doc.at("codebook_seed").get<uint64_t>();
    }
    w.canvas = number("canvas", w.canvas);
    w.min_side = number("min_side", w.min_side);
    w.jitter = number("jitter", w.jitter);
    w.q_flip = number("q_flip", w.q_flip);

    const json verbs = io::get_field(doc, "verbs", ctx);
    if (!verbs.is_array() || verbs.empty())
        fail(errc::parse_error, ctx + ": verbs must be a non-empty array");
    for (const auto& v : verbs) {
        VerbSpec spec;
        spec.verb = io::get_string(v, "verb", ctx);
        const json roles = io::get_field(v, "roles", ctx + " verb " + spec.verb);
        if (!roles.is_array())
            fail(errc::parse_error, ctx + ": roles of '" + spec.verb + "' must be an array");
        for (const auto& r : roles) {
            RolePool pool;
            pool.role = io::get_string(r, "role", ctx);
            const json nouns = io::get_field(r, "nouns", ctx);
            if (!nouns.is_array())
                fail(errc::parse_error, ctx + ": nouns of " + pool.role + " must be an array");
            for (const auto& noun : nouns) pool.nouns.push_back(noun.get<std::string>());
            spec.roles.push_back(std::move(pool));
        }
        w.verbs.push_back(std::move(spec));
    }

    if (doc.contains("hoi")) {
        const json& hoi = doc.at("hoi");
        w.hoi.catalog = frames::HoiCatalog::from_json(io::get_field(hoi, "classes", ctx),
                                                      ctx + " hoi classes");
        if (hoi.contains("gt_per_image"))
            w.hoi.gt_per_image = hoi.at("gt_per_image").get<size_t>();
        if (hoi.contains("distractors"))
            w.hoi.distractors = hoi.at("distractors").get<size_t>();
    }
    w.validate();
    return w;
}

WorldSpec WorldSpec::load(const std::string& path) {
    return from_json(io::load_json_file(path), path);
}

json WorldSpec::to_json() const {
    json doc;
    doc["schema"] = "dynoframe.world/1";
    doc["d"] = d;
    doc["sigma"] = sigma;
    doc["p_empty"] = p_empty;
    doc["codebook_seed"] = codebook_seed;
    doc["canvas"] = canvas;
    doc["min_side"] = min_side;
    doc["jitter"] = jitter;
    doc["q_flip"] = q_flip;
    json verbs_doc = json::array();
    for (const auto& v : verbs) {
        json roles = json::array();
        for (const auto& pool : v.roles)
            roles.push_back({{"role", pool.role}, {"nouns", pool.nouns}});
        verbs_doc.push_back({{"verb", v.verb}, {"roles", std::move(roles)}});
    }
    doc["verbs"] = std::move(verbs_doc);
    if (hoi.catalog.size() > 0) {
        doc["hoi"] = {{"classes", hoi.catalog.to_json()},
                      {"gt_per_image", hoi.gt_per_image},
                      {"distractors", hoi.distractors}};
    }
    return doc;
}

Codebook::Codebook(const WorldSpec& world) {
    auto insert = [&](const std::string& key) {
        SplitMix64 rng(SplitMix64::mix(world.codebook_seed, fnv1a64(key)));
        Vec v(world.d);
        double norm = 0.0;
        for (auto& x : v) {
            x = rng.next_gaussian();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) norm = 1.0;
        for (auto& x : v) x /= norm;
        vecs_.emplace(key, std::move(v));
    };
    for (const auto& v : world.verbs) {
        insert("verb:" + v.verb);
        for (const auto& pool : v.roles)
            for (const auto& noun : pool.nouns) insert("filler:" + pool.role + "/" + noun);
    }
}

const Vec& Codebook::verb_vec(std::string_view verb) const {
    auto it = vecs_.find("verb:" + std::string(verb));
    if (it == vecs_.end())
        fail(errc::invalid_argument, "no codebook vector for verb '" + std::string(verb) + "'");
    return it->second;
}

const Vec& Codebook::filler_vec(std::string_view role, std::string_view noun) const {
    const std::string key = "filler:" + std::string(role) + "/" + std::string(noun);
    auto it = vecs_.find(key);
    if (it == vecs_.end()) fail(errc::invalid_argument, "no codebook vector for " + key);
    return it->second;
}

namespace {

// every sample gets its own stream so items are addressable by index
SplitMix64 item_rng(uint64_t seed, uint64_t tag, uint64_t index) {
    return SplitMix64(SplitMix64::mix(SplitMix64::mix(seed, tag), index));
}

constexpr uint64_t tag_item = 0x6672616DULL;
constexpr uint64_t tag_grounded = 0x67736466ULL;
constexpr uint64_t tag_hoi = 0x686F6920ULL;

} // namespace

SemanticFrame sample_frame(const WorldSpec& world, SplitMix64& rng) {
    const VerbSpec& verb = world.verbs[rng.next_below(world.verbs.size())];
    SemanticFrame f;
    f.verb = verb.verb;
    for (const auto& pool : verb.roles) {
        frames::RoleFiller filler{pool.role, std::nullopt};
        if (!rng.next_bernoulli(world.p_empty))
            filler.noun = pool.nouns[rng.next_below(pool.nouns.size())];
        f.fillers.push_back(std::move(filler));
    }
    return f;
}

Vec embed_frame(const WorldSpec& world, const Codebook& codebook, const SemanticFrame& frame,
                SplitMix64& rng) {
    Vec out(world.d, 0.0);
    axpy(1.0, codebook.verb_vec(frame.verb), out);
    for (const auto& filler : frame.fillers)
        if (filler.noun) axpy(1.0, codebook.filler_vec(filler.role, *filler.noun), out);
    if (world.sigma > 0)
        for (auto& x : out) x += world.sigma * rng.next_gaussian();
    return out;
}

ItemSample sample_item(const WorldSpec& world, const Codebook& codebook, uint64_t seed,
                       uint64_t index) {
    auto rng = item_rng(seed, tag_item, index);
    ItemSample item;
    item.frame = sample_frame(world, rng);
    item.embedding = embed_frame(world, codebook, item.frame, rng);
    return item;
}

namespace {

BoundingBox random_box(const WorldSpec& world, SplitMix64& rng) {
    const double cap = std::min(world.canvas - world.min_side, 180.0);
    const double w = world.min_side + rng.next_range(0.0, cap);
    const double h = world.min_side + rng.next_range(0.0, cap);
    const double x1 = rng.next_range(0.0, world.canvas - w);
    const double y1 = rng.next_range(0.0, world.canvas - h);
    return BoundingBox::make(x1, y1, x1 + w, y1 + h);
}

BoundingBox jitter_box(const BoundingBox& b, const WorldSpec& world, SplitMix64& rng) {
    if (world.jitter == 0.0) return b;
    auto shift = [&](double v) {
        return std::clamp(v + rng.next_range(-world.jitter, world.jitter), 0.0, world.canvas);
    };
    double x1 = shift(b.x1), y1 = shift(b.y1), x2 = shift(b.x2), y2 = shift(b.y2);
    if (x2 <= x1) x2 = std::min(world.canvas, x1 + 1.0);
    if (x2 <= x1) x1 = x2 - 1.0;
    if (y2 <= y1) y2 = std::min(world.canvas, y1 + 1.0);
    if (y2 <= y1) y1 = y2 - 1.0;
    return BoundingBox::make(x1, y1, x2, y2);
}

} // namespace

GroundedPair sample_grounded(const WorldSpec& world, SplitMix64& rng) {
    GroundedPair pair;
    pair.truth.frame = sample_frame(world, rng);
    pair.prediction.frame = pair.truth.frame;

    for (size_t i = 0; i < pair.truth.frame.fillers.size(); ++i) {
        auto& gt_filler = pair.truth.frame.fillers[i];
        std::optional<BoundingBox> gt_box, pred_box;
        if (gt_filler.noun) {
            gt_box = random_box(world, rng);
            pred_box = jitter_box(*gt_box, world, rng);
            if (rng.next_bernoulli(world.q_flip)) {
                // prefixing keeps the noun valid while guaranteeing a miss
                pair.prediction.frame.fillers[i].noun = "wrong " + *gt_filler.noun;
            }
        }
        pair.truth.boxes.push_back(gt_box);
        pair.prediction.boxes.push_back(pred_box);
    }
    return pair;
}

void sample_hoi_scene(const WorldSpec& world, const std::string& image_id, SplitMix64& rng,
                      std::vector<metrics::HoiInstance>& gts,
                      std::vector<metrics::HoiDetection>& dets) {
    if (world.hoi.catalog.size() == 0)
        fail(errc::invalid_argument, "world has no interaction catalog");
    size_t index = 0;
    std::vector<metrics::HoiInstance> scene;
    for (size_t i = 0; i < world.hoi.gt_per_image; ++i) {
        metrics::HoiInstance inst;
        inst.image_id = image_id;
        inst.class_id = rng.next_below(world.hoi.catalog.size());
        inst.human = random_box(world, rng);
        inst.object = random_box(world, rng);
        scene.push_back(inst);
        gts.push_back(std::move(inst));
    }
    for (const auto& inst : scene) {
        metrics::HoiDetection det;
        det.image_id = image_id;
        det.class_id = inst.class_id;
        det.human = inst.human;
        det.object = inst.object;
        det.score = rng.next_range(0.5, 1.0);
        det.index_in_image = index++;
        dets.push_back(std::move(det));
    }
    for (size_t i = 0; i < world.hoi.distractors; ++i) {
        metrics::HoiDetection det;
        det.image_id = image_id;
        det.class_id = rng.next_below(world.hoi.catalog.size());
        det.human = random_box(world, rng);
        det.object = random_box(world, rng);
        det.score = rng.next_range(0.0, 0.5);
        det.index_in_image = index++;
        dets.push_back(std::move(det));
    }
}

namespace {

json frame_line(const std::string& id, const SemanticFrame& frame, const std::string& text) {
    json line;
    line["schema"] = "dynoframe.frames/1";
    line["id"] = id;
    line["frame"] = frame.to_json();
    line["text"] = text;
    return line;
}

} // namespace

WorldFiles generate_world_files(const WorldSpec& world, size_t n_items, size_t n_hoi_images,
                                uint64_t seed, const std::string& prefix) {
    world.validate();
    if (n_items == 0) fail(errc::invalid_argument, "need at least one item");
    const auto lexicon = world.lexicon();
    const Codebook codebook(world);

    WorldFiles files;
    files.lexicon = prefix + "_lexicon.json";
    files.catalog = prefix + "_catalog.json";
    files.frames = prefix + "_frames.jsonl";
    files.embeddings = prefix + "_embeddings.jsonl";
    files.sir_gt = prefix + "_sir_gt.jsonl";
    files.gsr_gt = prefix + "_gsr_gt.jsonl";
    files.gsr_pred = prefix + "_gsr_pred.jsonl";
    files.hoi_gt = prefix + "_hoi_gt.jsonl";
    files.hoi_det = prefix + "_hoi_det.jsonl";

    io::write_text_file(files.lexicon, lexicon.to_json().dump(2) + "\n");
    io::write_text_file(files.catalog, world.hoi.catalog.to_json().dump(2) + "\n");

    std::string frames_body, embed_body, sir_gt_body, gsr_gt_body, gsr_pred_body;
    for (size_t i = 0; i < n_items; ++i) {
        const std::string id = "item" + std::to_string(i);

        const ItemSample item = sample_item(world, codebook, seed, i);
        const SemanticFrame& frame = item.frame;
        const std::string text = structparse::serialize_frame(frame, lexicon);
        frames_body += frame_line(id, frame, text).dump();
        frames_body += '\n';

        const Vec& embedding = item.embedding;
        json embed_line;
        embed_line["schema"] = "dynoframe.embeddings/1";
        embed_line["id"] = id;
        embed_line["label"] = frame.verb;
        embed_line["vector"] = embedding;
        embed_body += embed_line.dump();
        embed_body += '\n';

        json sir_line;
        sir_line["schema"] = "dynoframe.sir_gt/1";
        sir_line["id"] = id;
        sir_line["annotators"] = json::array({frame.to_json()});
        sir_gt_body += sir_line.dump();
        sir_gt_body += '\n';

        auto grng = item_rng(seed, tag_grounded, i);
        const GroundedPair pair = sample_grounded(world, grng);
        json gt_line;
        gt_line["schema"] = "dynoframe.gsr_gt/1";
        gt_line["id"] = id;
        gt_line["annotators"] = json::array({pair.truth.to_json()});
        gsr_gt_body += gt_line.dump();
        gsr_gt_body += '\n';
        json pred_line;
        pred_line["schema"] = "dynoframe.gsr_pred/1";
        pred_line["id"] = id;
        pred_line["hypotheses"] = json::array({pair.prediction.to_json()});
        gsr_pred_body += pred_line.dump();
        gsr_pred_body += '\n';
    }
    io::write_text_file(files.frames, frames_body);
    io::write_text_file(files.embeddings, embed_body);
    io::write_text_file(files.sir_gt, sir_gt_body);
    io::write_text_file(files.gsr_gt, gsr_gt_body);
    io::write_text_file(files.gsr_pred, gsr_pred_body);

    std::string hoi_gt_body, hoi_det_body;
    for (size_t i = 0; i < n_hoi_images; ++i) {
        const std::string image = "img" + std::to_string(i);
        auto rng = item_rng(seed, tag_hoi, i);
        std::vector<metrics::HoiInstance> gts;
        std::vector<metrics::HoiDetection> dets;
        sample_hoi_scene(world, image, rng, gts, dets);

        json gt_line;
        gt_line["schema"] = "dynoframe.hoi_gt/1";
        gt_line["id"] = image;
        json instances = json::array();
        for (const auto& g : gts) {
            const auto& cls = world.hoi.catalog.at(g.class_id);
            instances.push_back({{"object", cls.object},
                                 {"action", cls.action},
                                 {"human_box", g.human.to_json()},
                                 {"object_box", g.object.to_json()}});
        }
        gt_line["instances"] = std::move(instances);
        hoi_gt_body += gt_line.dump();
        hoi_gt_body += '\n';

        json det_line;
        det_line["schema"] = "dynoframe.hoi_det/1";
        det_line["id"] = image;
        json detections = json::array();
        for (const auto& d : dets) {
            const auto& cls = world.hoi.catalog.at(d.class_id);
            detections.push_back({{"object", cls.object},
                                  {"action", cls.action},
                                  {"human_box", d.human.to_json()},
                                  {"object_box", d.object.to_json()},
                                  {"score", d.score}});
        }
        det_line["detections"] = std::move(detections);
        hoi_det_body += det_line.dump();
        hoi_det_body += '\n';
    }
    io::write_text_file(files.hoi_gt, hoi_gt_body);
    io::write_text_file(files.hoi_det, hoi_det_body);
    return files;
}

} // namespace df::synthworld
