#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dynoframe/error.hpp"

namespace df::frames {

using json = nlohmann::json;

// Role names are uppercase A-Z only; they double as the serialization markers,
// so the charset restriction is what makes parsing unambiguous.
bool is_role_name(std::string_view s);

// Lowercase noun surface form; spaces allowed ("old man"). Empty strings and
// tokens that would collide with role markers are rejected.
bool is_valid_noun(std::string_view s);

struct VerbEntry {
    std::string verb;   // lemma, also the identifier
    std::string gerund; // "-ing" surface form used in structured text
    std::vector<std::string> roles; // fixed order = serialization order
};

struct RoleFiller {
    std::string role;
    std::optional<std::string> noun; // nullopt is the empty role
    bool operator==(const RoleFiller&) const = default;
};

// Verb plus ordered role->noun assignments. The filler key sequence always
// equals the verb's role schema; an absent noun value is the empty role.
struct SemanticFrame {
    std::string verb;
    std::vector<RoleFiller> fillers;

    const std::optional<std::string>* find(std::string_view role) const;
    bool operator==(const SemanticFrame&) const = default;

    json to_json() const;
};

struct BoundingBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    // Throws on degenerate or non-finite boxes (x1 >= x2, y1 >= y2, negatives).
    static BoundingBox make(double x1, double y1, double x2, double y2);
    static BoundingBox from_json(const json& arr, const std::string& ctx);

    double area() const { return (x2 - x1) * (y2 - y1); }
    json to_json() const;
    bool operator==(const BoundingBox&) const = default;
};

// SemanticFrame plus an optional box per filler (parallel to frame.fillers).
// A box may exist only where the noun is present.
struct GroundedFrame {
    SemanticFrame frame;
    std::vector<std::optional<BoundingBox>> boxes;

    json to_json() const;
    bool operator==(const GroundedFrame&) const = default;
};

struct HoiClassDef {
    std::string object;
    std::string action;
    int64_t train_count = 0;
};

class HoiCatalog {
public:
    HoiCatalog() = default;
    explicit HoiCatalog(std::vector<HoiClassDef> classes);

    static HoiCatalog load(const std::string& path);
    static HoiCatalog from_json(const json& doc, const std::string& ctx);

    size_t size() const { return classes_.size(); }
    const HoiClassDef& at(size_t i) const { return classes_.at(i); }
    const std::vector<HoiClassDef>& classes() const { return classes_; }
    std::optional<size_t> find(std::string_view object, std::string_view action) const;

    json to_json() const;

private:
    std::vector<HoiClassDef> classes_;
    std::map<std::pair<std::string, std::string>, size_t> index_;
};

struct HoiSplits {
    std::vector<size_t> full;
    std::vector<size_t> rare;    // train_count < 10
    std::vector<size_t> nonrare; // train_count >= 10
};

HoiSplits hoi_splits(const HoiCatalog& catalog);

// Free-text human-human interaction with optional participant slots.
struct HhiAnnotation {
    std::string text;
    int participants = 0; // number of distinct slot tokens present
    bool operator==(const HhiAnnotation&) const = default;
};

struct Violation {
    std::string kind; // unknown_verb | missing_role | extra_role | role_order | bad_noun
    std::string message;
};

// Duplicate gerunds normally fail the load; tests flip this to reach the
// ambiguous-gerund parse error.
struct LexiconOptions {
    bool allow_gerund_collisions = false;
};

class Lexicon {
public:
    using Options = LexiconOptions;

    Lexicon() = default;

    static Lexicon load(const std::string& path, const Options& opts = {});
    static Lexicon from_json(const json& doc, const std::string& ctx,
                             const Options& opts = {});
    static Lexicon from_entries(std::vector<VerbEntry> entries,
                                const Options& opts = {});

    size_t size() const { return entries_.size(); }
    const std::vector<VerbEntry>& entries() const { return entries_; }
    const VerbEntry* find(std::string_view verb) const;
    // All verbs whose gerund equals `gerund` (collisions possible only when
    // loaded with allow_gerund_collisions).
    std::vector<const VerbEntry*> find_by_gerund(std::string_view gerund) const;

    json to_json() const;

private:
    std::vector<VerbEntry> entries_;
    std::map<std::string, size_t, std::less<>> by_verb_;
    std::map<std::string, std::vector<size_t>, std::less<>> by_gerund_;
};

std::vector<Violation> validate_frame(const SemanticFrame& frame, const Lexicon& lexicon);

// Frame JSON: {"verb": ..., "fillers": {ROLE: noun|null, ...}}. Missing roles
// are normalized to empty against the lexicon schema; unknown or misordered
// input surfaces as validation errors.
SemanticFrame frame_from_json(const json& obj, const Lexicon& lexicon, const std::string& ctx);
GroundedFrame grounded_from_json(const json& obj, const Lexicon& lexicon, const std::string& ctx);

std::vector<Violation> validate_grounded(const GroundedFrame& g, const Lexicon& lexicon);

} // namespace df::frames
