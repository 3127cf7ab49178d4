#include "dynoframe/structparse.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace df::structparse {

namespace {

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool is_all_caps(std::string_view tok) {
    return frames::is_role_name(tok);
}

std::string join(const std::vector<std::string>& toks, size_t from, size_t to) {
    std::string out;
    for (size_t i = from; i < to; ++i) {
        if (i > from) out += ' ';
        out += toks[i];
    }
    return out;
}

} // namespace

std::string gerund(std::string_view lemma) {
    const std::string stem(lemma);
    const size_t n = stem.size();
    if (n == 0) return "ing";
    if (n >= 2 && stem.ends_with("ie"))
        return stem.substr(0, n - 2) + "ying";
    if (stem.back() == 'e') {
        if (stem.ends_with("ee") || stem.ends_with("ye") || stem.ends_with("oe"))
            return stem + "ing";
        return stem.substr(0, n - 1) + "ing";
    }
    if (n >= 3) {
        const char last = stem[n - 1];
        const char mid = stem[n - 2];
        const char first = stem[n - 3];
        const bool doubling = !is_vowel(last) && last != 'w' && last != 'x' && last != 'y' &&
                              is_vowel(mid) && !is_vowel(first);
        if (doubling) return stem + last + "ing";
    }
    return stem + "ing";
}

StructuredText StructuredText::from(std::string_view text) {
    StructuredText st;
    std::string tok;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (!tok.empty()) st.tokens.push_back(std::move(tok));
            tok.clear();
        } else {
            tok += c;
        }
    }
    if (!tok.empty()) st.tokens.push_back(std::move(tok));
    st.raw = join(st.tokens, 0, st.tokens.size());
    return st;
}

std::string serialize_frame(const frames::SemanticFrame& frame, const frames::Lexicon& lexicon) {
    const auto violations = frames::validate_frame(frame, lexicon);
    if (!violations.empty())
        fail(errc::validation_error, "serialize_frame: " + violations.front().message);
    const frames::VerbEntry* entry = lexicon.find(frame.verb);
    std::string out = "VERB " + entry->gerund;
    for (const auto& filler : frame.fillers) {
        if (!filler.noun) continue; // empty roles are omitted from the text
        out += ' ';
        out += filler.role;
        out += ' ';
        out += *filler.noun;
    }
    return out;
}

FrameParse parse_frame(std::string_view text, const frames::Lexicon& lexicon, ParseMode mode) {
    const bool strict = mode == ParseMode::strict;
    const StructuredText st = StructuredText::from(text);
    const auto& toks = st.tokens;

    FrameParse result;
    auto& issues = result.diags.issues;
    auto note = [&](const char* kind, size_t idx, std::string msg) {
        issues.push_back({kind, idx, std::move(msg)});
    };

    if (toks.empty())
        throw ParseError("no-verb-marker", 0, "empty input: expected 'VERB' marker");

    size_t pos = 0;
    std::string ger;
    if (toks[0] == "VERB") {
        if (toks.size() < 2)
            throw ParseError("unknown-gerund", 1, "missing gerund after 'VERB'");
        ger = toks[1];
        pos = 2;
    } else if (strict) {
        throw ParseError("no-verb-marker", 0,
                         "expected 'VERB' marker, found '" + toks[0] + "'");
    } else {
        // repair: the first token may itself be a known gerund
        if (lexicon.find_by_gerund(toks[0]).size() == 1) {
            ger = toks[0];
            pos = 1;
            note("no-verb-marker", 0, "missing 'VERB' marker repaired");
        } else {
            throw ParseError("unparseable", 0, "cannot identify a verb in '" + st.raw + "'");
        }
    }

    const auto candidates = lexicon.find_by_gerund(ger);
    if (candidates.empty()) {
        if (strict)
            throw ParseError("unknown-gerund", pos - 1,
                             "no lexicon verb has gerund '" + ger + "'");
        throw ParseError("unparseable", pos - 1, "no lexicon verb has gerund '" + ger + "'");
    }
    if (candidates.size() > 1) {
        if (strict)
            throw ParseError("ambiguous-gerund", pos - 1,
                             "gerund '" + ger + "' matches multiple verbs");
        throw ParseError("unparseable", pos - 1,
                         "gerund '" + ger + "' matches multiple verbs");
    }
    const frames::VerbEntry& entry = *candidates[0];
    const auto is_schema_role = [&](const std::string& tok) {
        return std::find(entry.roles.begin(), entry.roles.end(), tok) != entry.roles.end();
    };

    std::map<std::string, std::vector<std::string>> assigned;
    std::string open;          // currently open role, empty if none
    size_t open_at = 0;
    bool discard_open = false; // duplicate role in tolerant mode: nouns dropped
    std::vector<std::string> run;

    auto close_open = [&]() {
        if (open.empty()) return;
        if (run.empty()) {
            if (!discard_open) {
                if (strict)
                    throw ParseError("role-without-noun", open_at,
                                     "role " + open + " is not followed by a noun");
                note("role-without-noun", open_at, "role " + open + " has no noun; left empty");
            }
        } else if (!discard_open) {
            assigned[open] = run;
        }
        open.clear();
        run.clear();
        discard_open = false;
    };

    for (size_t i = pos; i < toks.size(); ++i) {
        const std::string& tok = toks[i];
        if (is_all_caps(tok)) {
            if (is_schema_role(tok)) {
                const bool dup = assigned.count(tok) || tok == open;
                if (dup) {
                    if (strict)
                        throw ParseError("duplicate-role", i, "duplicate role " + tok);
                    note("duplicate-role", i, "duplicate role " + tok + "; first kept");
                    close_open();
                    open = tok;
                    open_at = i;
                    discard_open = true;
                } else {
                    close_open();
                    open = tok;
                    open_at = i;
                }
            } else {
                if (strict)
                    throw ParseError("unknown-role", i,
                                     "'" + tok + "' is not a role of verb '" + entry.verb + "'");
                if (!open.empty()) {
                    // fold into the open noun, lowercased so the frame stays
                    // schema-valid
                    std::string low = tok;
                    std::transform(low.begin(), low.end(), low.begin(),
                                   [](unsigned char c) { return std::tolower(c); });
                    run.push_back(std::move(low));
                    note("unknown-role", i, "unknown role '" + tok + "' consumed into noun");
                } else {
                    note("stray-token", i, "unknown role '" + tok + "' before any role; skipped");
                }
            }
        } else {
            if (open.empty()) {
                if (strict)
                    throw ParseError("stray-token", i,
                                     "expected a role marker before '" + tok + "'");
                note("stray-token", i, "noun token '" + tok + "' without a role; skipped");
            } else {
                run.push_back(tok);
            }
        }
    }
    close_open();

    result.frame.verb = entry.verb;
    for (const auto& role : entry.roles) {
        frames::RoleFiller filler{role, std::nullopt};
        auto it = assigned.find(role);
        if (it != assigned.end()) filler.noun = join(it->second, 0, it->second.size());
        result.frame.fillers.push_back(std::move(filler));
    }
    result.diags.recovered = !issues.empty();
    return result;
}

namespace {

constexpr const char* kSlot1 = "[P1]";
constexpr const char* kSlot2 = "[P2]";

} // namespace

std::string serialize_hhi(const frames::HhiAnnotation& annotation) {
    const StructuredText st = StructuredText::from(annotation.text);
    size_t c1 = 0, c2 = 0;
    for (const auto& t : st.tokens) {
        if (t == kSlot1) ++c1;
        if (t == kSlot2) ++c2;
    }
    if (c1 > 1 || c2 > 1)
        throw ParseError("duplicate-slot", 0, "participant slot appears more than once");
    return st.raw;
}

HhiParse parse_hhi(std::string_view text) {
    const StructuredText st = StructuredText::from(text);
    size_t c1 = 0, c2 = 0;
    for (size_t i = 0; i < st.tokens.size(); ++i) {
        if (st.tokens[i] == kSlot1) ++c1;
        if (st.tokens[i] == kSlot2) ++c2;
        if (c1 > 1 || c2 > 1)
            throw ParseError("duplicate-slot", i, "participant slot appears more than once");
    }
    HhiParse out;
    out.annotation.text = st.raw;
    out.annotation.participants = static_cast<int>((c1 > 0) + (c2 > 0));
    if (out.annotation.participants == 0)
        out.diags.issues.push_back({"no-slots", 0, "text contains no participant slots"});
    out.diags.recovered = !out.diags.issues.empty();
    return out;
}

} // namespace df::structparse
