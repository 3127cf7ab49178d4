#include "dynoframe/frames.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dynoframe/io.hpp"
#include "dynoframe/structparse.hpp"

namespace df::frames {

bool is_role_name(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

bool is_valid_noun(std::string_view s) {
    if (s.empty()) return false;
    if (s.front() == ' ' || s.back() == ' ') return false;
    bool prev_space = false;
    for (char c : s) {
        if (c == ' ') {
            if (prev_space) return false;
            prev_space = true;
            continue;
        }
        prev_space = false;
        if (c >= 'A' && c <= 'Z') return false; // uppercase collides with role markers
        if (c == '\t' || c == '\n' || c == '\r') return false;
    }
    return true;
}

const std::optional<std::string>* SemanticFrame::find(std::string_view role) const {
    for (const auto& f : fillers)
        if (f.role == role) return &f.noun;
    return nullptr;
}

json SemanticFrame::to_json() const {
    json fill = json::object();
    for (const auto& f : fillers)
        fill[f.role] = f.noun ? json(*f.noun) : json(nullptr);
    return json{{"verb", verb}, {"fillers", fill}};
}

BoundingBox BoundingBox::make(double x1, double y1, double x2, double y2) {
    const bool finite = std::isfinite(x1) && std::isfinite(y1) &&
                        std::isfinite(x2) && std::isfinite(y2);
    if (!finite || x1 < 0 || y1 < 0 || x1 >= x2 || y1 >= y2)
        fail(errc::validation_error, "invalid bounding box [" + std::to_string(x1) + "," +
                                         std::to_string(y1) + "," + std::to_string(x2) + "," +
                                         std::to_string(y2) + "]");
    return BoundingBox{x1, y1, x2, y2};
}

BoundingBox BoundingBox::from_json(const json& arr, const std::string& ctx) {
    if (!arr.is_array() || arr.size() != 4)
        fail(errc::parse_error, ctx + ": box must be [x1,y1,x2,y2]");
    for (const auto& v : arr)
        if (!v.is_number()) fail(errc::parse_error, ctx + ": box coordinates must be numbers");
    return make(arr[0].get<double>(), arr[1].get<double>(),
                arr[2].get<double>(), arr[3].get<double>());
}

json BoundingBox::to_json() const { return json::array({x1, y1, x2, y2}); }

json GroundedFrame::to_json() const {
    json doc = frame.to_json();
    json bx = json::object();
    for (size_t i = 0; i < frame.fillers.size(); ++i) {
        const auto& b = i < boxes.size() ? boxes[i] : std::nullopt;
        bx[frame.fillers[i].role] = b ? b->to_json() : json(nullptr);
    }
    doc["boxes"] = bx;
    return doc;
}

HoiCatalog::HoiCatalog(std::vector<HoiClassDef> classes) : classes_(std::move(classes)) {
    for (size_t i = 0; i < classes_.size(); ++i) {
        auto key = std::make_pair(classes_[i].object, classes_[i].action);
        if (!index_.emplace(std::move(key), i).second)
            fail(errc::validation_error, "duplicate HOI class (" + classes_[i].object + ", " +
                                             classes_[i].action + ")");
        if (classes_[i].train_count < 0)
            fail(errc::validation_error, "negative train_count for HOI class (" +
                                             classes_[i].object + ", " + classes_[i].action + ")");
    }
}

HoiCatalog HoiCatalog::load(const std::string& path) {
    return from_json(io::load_json_file(path), path);
}

HoiCatalog HoiCatalog::from_json(const json& doc, const std::string& ctx) {
    if (!doc.is_array()) fail(errc::parse_error, ctx + ": catalog must be a JSON array");
    std::vector<HoiClassDef> classes;
    classes.reserve(doc.size());
    size_t n = 0;
    for (const auto& item : doc) {
        const std::string where = ctx + "[" + std::to_string(n++) + "]";
        HoiClassDef def;
        def.object = io::get_string(item, "object", where);
        def.action = io::get_string(item, "action", where);
        const json cnt = io::get_field(item, "train_count", where);
        if (!cnt.is_number_integer())
            fail(errc::parse_error, where + ": train_count must be an integer");
        def.train_count = cnt.get<int64_t>();
        classes.push_back(std::move(def));
    }
    return HoiCatalog(std::move(classes));
}

json HoiCatalog::to_json() const {
    json doc = json::array();
    for (const auto& c : classes_) {
        json item;
        item["object"] = c.object;
        item["action"] = c.action;
        item["train_count"] = c.train_count;
        doc.push_back(std::move(item));
    }
    return doc;
}

std::optional<size_t> HoiCatalog::find(std::string_view object, std::string_view action) const {
    auto it = index_.find(std::make_pair(std::string(object), std::string(action)));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

HoiSplits hoi_splits(const HoiCatalog& catalog) {
    if (catalog.size() == 0)
        fail(errc::invalid_argument, "hoi_splits: empty catalog");
    HoiSplits s;
    for (size_t i = 0; i < catalog.size(); ++i) {
        s.full.push_back(i);
        if (catalog.at(i).train_count < 10)
            s.rare.push_back(i);
        else
            s.nonrare.push_back(i);
    }
    return s;
}

static void check_entry(const VerbEntry& e) {
    if (e.verb.empty()) fail(errc::validation_error, "verb id must be non-empty");
    for (char c : e.verb)
        if (!(c >= 'a' && c <= 'z'))
            fail(errc::validation_error, "verb '" + e.verb + "' must be lowercase ASCII letters");
    if (e.gerund.empty()) fail(errc::validation_error, "verb '" + e.verb + "': gerund is empty");
    if (e.roles.empty())
        fail(errc::validation_error, "verb '" + e.verb + "' has no roles");
    std::set<std::string> seen;
    for (const auto& r : e.roles) {
        if (!is_role_name(r))
            fail(errc::validation_error, "verb '" + e.verb + "': role '" + r + "' not uppercase A-Z");
        if (!seen.insert(r).second)
            fail(errc::validation_error, "verb '" + e.verb + "': duplicate role '" + r + "'");
    }
}

Lexicon Lexicon::from_entries(std::vector<VerbEntry> entries, const Options& opts) {
    Lexicon lex;
    lex.entries_ = std::move(entries);
    for (size_t i = 0; i < lex.entries_.size(); ++i) {
        auto& e = lex.entries_[i];
        if (e.gerund.empty()) e.gerund = structparse::gerund(e.verb);
        check_entry(e);
        if (!lex.by_verb_.emplace(e.verb, i).second)
            fail(errc::validation_error, "duplicate verb '" + e.verb + "'");
        lex.by_gerund_[e.gerund].push_back(i);
    }
    if (!opts.allow_gerund_collisions) {
        for (const auto& [ger, idxs] : lex.by_gerund_) {
            if (idxs.size() > 1) {
                std::string verbs;
                for (size_t k : idxs) verbs += " '" + lex.entries_[k].verb + "'";
                fail(errc::validation_error,
                     "gerund collision on '" + ger + "' between" + verbs +
                         "; set distinct explicit gerunds in the lexicon");
            }
        }
    }
    return lex;
}

Lexicon Lexicon::load(const std::string& path, const Options& opts) {
    return from_json(io::load_json_file(path), path, opts);
}

Lexicon Lexicon::from_json(const json& doc, const std::string& ctx, const Options& opts) {
    if (!doc.is_array()) fail(errc::parse_error, ctx + ": lexicon must be a JSON array");
    std::vector<VerbEntry> entries;
    entries.reserve(doc.size());
    size_t n = 0;
    for (const auto& item : doc) {
        const std::string where = ctx + "[" + std::to_string(n++) + "]";
        VerbEntry e;
        e.verb = io::get_string(item, "verb", where);
        if (item.contains("gerund") && !item.at("gerund").is_null())
            e.gerund = io::get_string(item, "gerund", where);
        const json roles = io::get_field(item, "roles", where);
        if (!roles.is_array()) fail(errc::parse_error, where + ": roles must be an array");
        for (const auto& r : roles) {
            if (!r.is_string()) fail(errc::parse_error, where + ": role names must be strings");
            e.roles.push_back(r.get<std::string>());
        }
        entries.push_back(std::move(e));
    }
    return from_entries(std::move(entries), opts);
}

const VerbEntry* Lexicon::find(std::string_view verb) const {
    auto it = by_verb_.find(verb);
    return it == by_verb_.end() ? nullptr : &entries_[it->second];
}

std::vector<const VerbEntry*> Lexicon::find_by_gerund(std::string_view gerund) const {
    std::vector<const VerbEntry*> out;
    auto it = by_gerund_.find(gerund);
    if (it != by_gerund_.end())
        for (size_t i : it->second) out.push_back(&entries_[i]);
    return out;
}

json Lexicon::to_json() const {
    json arr = json::array();
    for (const auto& e : entries_)
        arr.push_back(json{{"verb", e.verb}, {"gerund", e.gerund}, {"roles", e.roles}});
    return arr;
}

std::vector<Violation> validate_frame(const SemanticFrame& frame, const Lexicon& lexicon) {
    std::vector<Violation> out;
    const VerbEntry* entry = lexicon.find(frame.verb);
    if (!entry) {
        out.push_back({"unknown_verb", "unknown verb '" + frame.verb + "'"});
        return out;
    }
    // element-wise schema comparison: same roles, same order
    std::set<std::string> schema(entry->roles.begin(), entry->roles.end());
    std::set<std::string> present;
    for (const auto& f : frame.fillers) {
        if (!present.insert(f.role).second)
            out.push_back({"extra_role", "duplicate role key '" + f.role + "'"});
        else if (!schema.count(f.role))
            out.push_back({"extra_role", "extraneous role '" + f.role + "' for verb '" +
                                             frame.verb + "'"});
        if (f.noun && !is_valid_noun(*f.noun))
            out.push_back({"bad_noun", "role '" + f.role + "': noun '" + *f.noun +
                                           "' must be non-empty lowercase"});
    }
    for (const auto& r : entry->roles)
        if (!present.count(r))
            out.push_back({"missing_role", "missing role " + r});
    if (out.empty()) {
        for (size_t i = 0; i < entry->roles.size(); ++i) {
            if (frame.fillers[i].role != entry->roles[i]) {
                out.push_back({"role_order", "role order differs from schema at position " +
                                                 std::to_string(i)});
                break;
            }
        }
    }
    return out;
}

SemanticFrame frame_from_json(const json& obj, const Lexicon& lexicon, const std::string& ctx) {
    SemanticFrame frame;
    frame.verb = io::get_string(obj, "verb", ctx);
    const VerbEntry* entry = lexicon.find(frame.verb);
    if (!entry) fail(errc::validation_error, ctx + ": unknown verb '" + frame.verb + "'");
    json fillers = json::object();
    if (obj.contains("fillers")) {
        fillers = obj.at("fillers");
        if (!fillers.is_object()) fail(errc::parse_error, ctx + ": fillers must be an object");
    }
    for (const auto& [key, value] : fillers.items())
        if (std::find(entry->roles.begin(), entry->roles.end(), key) == entry->roles.end())
            fail(errc::validation_error,
                 ctx + ": extraneous role '" + key + "' for verb '" + frame.verb + "'");
    for (const auto& role : entry->roles) {
        RoleFiller f{role, std::nullopt};
        if (fillers.contains(role) && !fillers.at(role).is_null()) {
            const json& v = fillers.at(role);
            if (!v.is_string()) fail(errc::parse_error, ctx + ": filler for " + role + " must be a string or null");
            f.noun = v.get<std::string>();
            if (!is_valid_noun(*f.noun))
                fail(errc::validation_error, ctx + ": noun '" + *f.noun + "' for role " + role +
                                                 " must be non-empty lowercase");
        }
        frame.fillers.push_back(std::move(f));
    }
    return frame;
}

GroundedFrame grounded_from_json(const json& obj, const Lexicon& lexicon, const std::string& ctx) {
    GroundedFrame g;
    g.frame = frame_from_json(obj, lexicon, ctx);
    g.boxes.assign(g.frame.fillers.size(), std::nullopt);
    if (!obj.contains("boxes")) return g;
    const json& boxes = obj.at("boxes");
    if (!boxes.is_object()) fail(errc::parse_error, ctx + ": boxes must be an object");
    for (const auto& [role, value] : boxes.items()) {
        if (value.is_null()) continue;
        bool found = false;
        for (size_t i = 0; i < g.frame.fillers.size(); ++i) {
            if (g.frame.fillers[i].role == role) {
                if (!g.frame.fillers[i].noun)
                    fail(errc::validation_error,
                         ctx + ": box for role " + role + " whose noun is empty");
                g.boxes[i] = BoundingBox::from_json(value, ctx + "." + role);
                found = true;
                break;
            }
        }
        if (!found)
            fail(errc::validation_error, ctx + ": box for unknown role '" + role + "'");
    }
    return g;
}

std::vector<Violation> validate_grounded(const GroundedFrame& g, const Lexicon& lexicon) {
    std::vector<Violation> out = validate_frame(g.frame, lexicon);
    if (g.boxes.size() != g.frame.fillers.size()) {
        out.push_back({"box_shape", "boxes not parallel to fillers"});
        return out;
    }
    for (size_t i = 0; i < g.boxes.size(); ++i)
        if (g.boxes[i] && !g.frame.fillers[i].noun)
            out.push_back({"box_without_noun",
                           "role " + g.frame.fillers[i].role + " has a box but no noun"});
    return out;
}

} // namespace df::frames
