#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dynoframe/frames.hpp"

namespace df::structparse {

// Rule-based present-continuous inflection: ie->ying, final-e drop (kept for
// -ee/-ye/-oe), CVC doubling (final w/x/y excluded), else plain "ing". An
// explicit gerund in the lexicon overrides these rules.
std::string gerund(std::string_view lemma);

// Canonical single-space-joined token string.
struct StructuredText {
    std::string raw;
    std::vector<std::string> tokens;

    static StructuredText from(std::string_view text);
};

struct Issue {
    std::string kind;
    size_t token_index = 0;
    std::string message;
};

struct ParseDiagnostics {
    bool recovered = false; // true iff issues non-empty and a frame was produced
    std::vector<Issue> issues;
};

enum class ParseMode { strict, tolerant };

// Structured-text parse failures; `kind` is one of: no-verb-marker,
// unknown-gerund, ambiguous-gerund, unknown-role, duplicate-role,
// role-without-noun, unparseable, duplicate-slot.
class ParseError : public Error {
public:
    ParseError(std::string kind, size_t token_index, const std::string& message)
        : Error(errc::parse_error, message), kind_(std::move(kind)), token_index_(token_index) {}

    const std::string& kind() const { return kind_; }
    size_t token_index() const { return token_index_; }

private:
    std::string kind_;
    size_t token_index_;
};

struct FrameParse {
    frames::SemanticFrame frame;
    ParseDiagnostics diags;
};

// "VERB <gerund>" followed by "<ROLE> <noun>" pairs in the verb's fixed role
// order; empty roles are omitted. Throws unless validate_frame passes.
std::string serialize_frame(const frames::SemanticFrame& frame, const frames::Lexicon& lexicon);

// Inverse of serialize_frame. Strict mode rejects any deviation from the
// grammar; tolerant mode repairs what it can and logs every repair.
FrameParse parse_frame(std::string_view text, const frames::Lexicon& lexicon, ParseMode mode);

struct HhiParse {
    frames::HhiAnnotation annotation;
    ParseDiagnostics diags;
};

// HHI text uses the literal slot tokens [P1] and [P2], each at most once.
std::string serialize_hhi(const frames::HhiAnnotation& annotation);
HhiParse parse_hhi(std::string_view text);

} // namespace df::structparse
