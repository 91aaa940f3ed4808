#pragma once

// Caption distribution: a rule-cascade tagger over a small custom tag set and a
// tag-sequence pattern engine that hands caption text to subfigure identifiers.

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "exsclaim/json_io.hpp"
#include "exsclaim/log.hpp"
#include "exsclaim/types.hpp"

namespace exsclaim::caption {

enum class Tag { CAP, NC, IN, IR, FULLSTOP, WORD };

inline std::string_view to_string(Tag t) {
    switch (t) {
    case Tag::CAP: return "CAP";
    case Tag::NC: return "NC";
    case Tag::IN: return "IN";
    case Tag::IR: return "IR";
    case Tag::FULLSTOP: return "FULLSTOP";
    case Tag::WORD: return "WORD";
    }
    return "?";
}

inline std::optional<Tag> parse_tag(std::string_view s) {
    if (s == "CAP") return Tag::CAP;
    if (s == "NC") return Tag::NC;
    if (s == "IN") return Tag::IN;
    if (s == "IR") return Tag::IR;
    if (s == "FULLSTOP" || s == ".") return Tag::FULLSTOP;
    if (s == "WORD") return Tag::WORD;
    return std::nullopt;
}

struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct CaptionToken {
    std::string text;
    Tag tag = Tag::WORD;
    CharSpan span;
    /// Opening bracket that only delimits the next token; invisible to pattern literals.
    bool transparent = false;

    friend bool operator==(const CaptionToken&, const CaptionToken&) = default;
};

struct IdentifierGroup {
    std::string raw;
    std::vector<std::string> expanded;
    bool flagged = false;
};

// ------------------------------------------------------------------ word lists

namespace lexicon {

inline bool in(const std::set<std::string_view>& s, std::string_view w) { return s.count(w) > 0; }

inline const std::set<std::string_view>& prepositions() {
    static const std::set<std::string_view> words{
        "of",     "in",      "on",     "at",     "to",      "from",    "with",   "by",
        "for",    "into",    "onto",   "over",   "under",   "between", "through", "after",
        "before", "during",  "along",  "across", "within",  "without", "via",    "versus",
        "vs",     "among",   "upon",   "around", "about",   "against", "toward", "towards",
        "inside", "outside", "above",  "below",  "beneath", "near",    "per",    "throughout"};
    return words;
}

// Linking and participial verbs that join a noun chunk to the rest of a description.
inline const std::set<std::string_view>& linking_verbs() {
    static const std::set<std::string_view> words{
        "denoted",      "denotes",      "corresponds",  "correspond",   "corresponding",
        "shows",        "show",         "showing",      "shown",        "depicts",
        "depicting",    "depicted",     "displays",     "displaying",   "displayed",
        "indicates",    "indicating",   "indicated",    "represents",   "representing",
        "represent",    "represented",  "reveals",      "revealing",    "revealed",
        "illustrates",  "illustrating", "illustrated",  "highlights",   "highlighting",
        "highlighted",  "marked",       "labeled",      "labelled",     "taken",
        "obtained",     "recorded",     "acquired",     "collected",    "measured",
        "is",           "are",          "was",          "were",         "be",
        "been",         "being",        "has",          "have",         "had",
        "exhibits",     "exhibiting",   "demonstrates", "demonstrating", "confirms",
        "confirming",   "presents",     "presenting",   "presented",    "compares",
        "comparing",    "viewed",       "seen",         "see",          "using",
        "used",         "prepared",     "synthesized",  "synthesised",  "grown",
        "deposited",    "annealed",     "calcined",     "loaded",       "treated",
        "observed",     "cf"};
    return words;
}

inline const std::set<std::string_view>& determiners() {
    static const std::set<std::string_view> words{
        "the",  "a",    "an",   "this", "these", "those",   "each",  "every",
        "all",  "both", "some", "several", "many", "their", "its",   "our",
        "his",  "her",  "such", "another", "any", "two",     "three", "four"};
    return words;
}

// Function words that never belong to a noun chunk.
inline const std::set<std::string_view>& function_words() {
    static const std::set<std::string_view> words{
        "and",   "or",   "but",  "nor",  "respectively", "also", "as",   "while", "whereas",
        "which", "who",  "whose", "where", "when",        "then", "than", "it",    "they",
        "we",    "that", "not",  "very", "here",          "there", "only", "etc",  "&",
        "i.e.",  "e.g.", "thus", "however", "further",    "furthermore", "respective"};
    return words;
}

inline const std::set<std::string_view>& abbreviations() {
    static const std::set<std::string_view> words{
        "fig.", "figs.", "e.g.", "i.e.", "al.", "vs.", "ca.", "approx.", "ref.", "refs.",
        "eq.",  "eqs.",  "no.",  "cf.",  "resp.", "dr.", "st."};
    return words;
}

} // namespace lexicon

// ------------------------------------------------------------------ tokenizer

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
inline bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }

// Length of an en/em dash or hyphen at p, 0 otherwise.
inline std::size_t dash_length(std::string_view s, std::size_t p) {
    if (p < s.size() && s[p] == '-') return 1;
    if (p + 3 <= s.size() && s.compare(p, 3, "\xE2\x80\x93") == 0) return 3; // en dash
    if (p + 3 <= s.size() && s.compare(p, 3, "\xE2\x80\x94") == 0) return 3; // em dash
    return 0;
}

/// End offset (one past the closing bracket) of a subfigure identifier body starting
/// at p, directly after an opening bracket; 0 if the text there is not an identifier.
/// Accepts "a)", "A)", "g-i)", "a,b)", "a, b)", "a1)", "a and b)".
inline std::size_t match_identifier(std::string_view s, std::size_t p) {
    const auto n = s.size();
    while (true) {
        if (p >= n || !is_alpha(s[p])) return 0;
        ++p;
        if (p < n && is_digit(s[p])) ++p;
        if (p < n && (is_alpha(s[p]) || is_digit(s[p]))) return 0;
        std::size_t q = p;
        while (q < n && s[q] == ' ') ++q;
        if (q < n && (s[q] == ')' || s[q] == ']')) {
            std::size_t end = q + 1;
            if (end < n && !is_space(s[end]) && std::string_view(".,;:").find(s[end]) == std::string_view::npos)
                return 0;
            return end;
        }
        if (auto d = dash_length(s, q)) {
            q += d;
        } else if (q < n && (s[q] == ',' || s[q] == '&')) {
            ++q;
            while (q < n && s[q] == ' ') ++q;
            if (s.compare(q, 4, "and ") == 0) q += 3; // Oxford comma
        } else if (s.compare(q, 4, "and ") == 0) {
            q += 3;
        } else {
            return 0;
        }
        while (q < n && s[q] == ' ') ++q;
        p = q;
    }
}

enum class RawKind { word, open, close, punct, period, identifier };

struct RawToken {
    RawKind kind;
    std::size_t start;
    std::size_t end;
};

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::vector<RawToken> raw_tokens(std::string_view s) {
    std::vector<RawToken> out;
    const std::string_view breakers = "()[]{},;:\"!?";
    std::size_t pos = 0;
    const auto n = s.size();
    while (pos < n) {
        const char c = s[pos];
        if (is_space(c)) {
            ++pos;
            continue;
        }
        if (c == '(' || c == '[') {
            out.push_back({RawKind::open, pos, pos + 1});
            ++pos;
            if (auto end = match_identifier(s, pos)) {
                out.push_back({RawKind::identifier, pos, end});
                pos = end;
            }
            continue;
        }
        if (c == ')' || c == ']' || c == '}') {
            out.push_back({RawKind::close, pos, pos + 1});
            ++pos;
            continue;
        }
        if (c == '!' || c == '?') {
            out.push_back({RawKind::period, pos, pos + 1});
            ++pos;
            continue;
        }
        if (breakers.find(c) != std::string_view::npos) {
            out.push_back({RawKind::punct, pos, pos + 1});
            ++pos;
            continue;
        }
        std::size_t end = pos;
        while (end < n && !is_space(s[end]) && breakers.find(s[end]) == std::string_view::npos) ++end;
        std::size_t word_end = end;
        std::vector<RawToken> periods;
        while (word_end > pos && s[word_end - 1] == '.' &&
               !lexicon::in(lexicon::abbreviations(), lower(s.substr(pos, word_end - pos)))) {
            periods.push_back({RawKind::period, word_end - 1, word_end});
            --word_end;
        }
        if (word_end > pos) out.push_back({RawKind::word, pos, word_end});
        out.insert(out.end(), periods.rbegin(), periods.rend());
        pos = end;
    }
    return out;
}

// Intermediate word classes before chunking.
enum class WordClass { cap, fullstop, in, ir, det, content, function, punct, open };

} // namespace detail

/// Tokenize a caption and assign the custom tags. Every character belongs to at most
/// one token; the gaps between tokens are whitespace only.
inline std::vector<CaptionToken> tokenize_and_tag(std::string_view caption) {
    using namespace detail;
    const auto raw = raw_tokens(caption);

    struct Classified {
        WordClass cls;
        std::size_t start;
        std::size_t end;
    };
    std::vector<Classified> cls;
    cls.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& r = raw[i];
        const auto text = caption.substr(r.start, r.end - r.start);
        WordClass c = WordClass::punct;
        switch (r.kind) {
        case RawKind::identifier: c = WordClass::cap; break;
        case RawKind::open: c = WordClass::open; break;
        case RawKind::close:
        case RawKind::punct: c = WordClass::punct; break;
        case RawKind::period: {
            // Sentence-final when followed by the end, a capital, a digit, or a bracket.
            bool final = true;
            if (i + 1 < raw.size()) {
                const auto& next = raw[i + 1];
                const char nc = caption[next.start];
                final = next.kind == RawKind::open || next.kind == RawKind::period ||
                        is_upper(nc) || is_digit(nc) || nc == '"' || nc == '\'';
            }
            c = final ? WordClass::fullstop : WordClass::punct;
            break;
        }
        case RawKind::word: {
            const auto w = lower(text);
            if (lexicon::in(lexicon::prepositions(), w)) c = WordClass::in;
            else if (lexicon::in(lexicon::linking_verbs(), w)) c = WordClass::ir;
            else if (lexicon::in(lexicon::determiners(), w)) c = WordClass::det;
            else if (lexicon::in(lexicon::function_words(), w)) c = WordClass::function;
            else c = WordClass::content;
            break;
        }
        }
        cls.push_back({c, r.start, r.end});
    }

    auto make = [&](std::size_t start, std::size_t end, Tag tag, bool transparent = false) {
        return CaptionToken{std::string(caption.substr(start, end - start)), tag, {start, end},
                            transparent};
    };
    auto word_is = [&](std::size_t k, std::initializer_list<std::string_view> options) {
        const auto w = lower(caption.substr(cls[k].start, cls[k].end - cls[k].start));
        return std::find(options.begin(), options.end(), w) != options.end();
    };

    std::vector<CaptionToken> tokens;
    std::size_t i = 0;
    while (i < cls.size()) {
        const auto& c = cls[i];
        if (c.cls == WordClass::cap) {
            // Merge "a) and (b)", "a), (b) and (c)", "a)(b)" into one identifier group.
            std::size_t last = i;
            std::size_t k = i + 1;
            while (true) {
                std::size_t j = k;
                while (j < cls.size() &&
                       ((cls[j].cls == WordClass::punct && word_is(j, {","})) ||
                        ((cls[j].cls == WordClass::function) && word_is(j, {"and", "&", "or"}))))
                    ++j;
                if (j + 1 < cls.size() && cls[j].cls == WordClass::open && cls[j + 1].cls == WordClass::cap) {
                    last = j + 1;
                    k = j + 2;
                    continue;
                }
                break;
            }
            tokens.push_back(make(c.start, cls[last].end, Tag::CAP));
            i = last + 1;
            continue;
        }
        if (c.cls == WordClass::det || c.cls == WordClass::content) {
            std::size_t j = i;
            if (c.cls == WordClass::det) {
                if (i + 1 < cls.size() && cls[i + 1].cls == WordClass::content) {
                    j = i + 1;
                } else {
                    tokens.push_back(make(c.start, c.end, Tag::WORD));
                    ++i;
                    continue;
                }
            }
            while (j + 1 < cls.size() && cls[j + 1].cls == WordClass::content) ++j;
            tokens.push_back(make(c.start, cls[j].end, Tag::NC));
            i = j + 1;
            continue;
        }
        switch (c.cls) {
        case WordClass::fullstop: tokens.push_back(make(c.start, c.end, Tag::FULLSTOP)); break;
        case WordClass::in: tokens.push_back(make(c.start, c.end, Tag::IN)); break;
        case WordClass::ir: tokens.push_back(make(c.start, c.end, Tag::IR)); break;
        case WordClass::open: {
            const bool before_cap = i + 1 < cls.size() && cls[i + 1].cls == WordClass::cap;
            tokens.push_back(make(c.start, c.end, Tag::WORD, before_cap));
            break;
        }
        default: tokens.push_back(make(c.start, c.end, Tag::WORD)); break;
        }
        ++i;
    }
    return tokens;
}

/// The tagged sequence as (text, tag) pairs with bracket delimiters hidden.
inline std::vector<std::pair<std::string, Tag>> tagged_selection(const std::vector<CaptionToken>& tokens) {
    std::vector<std::pair<std::string, Tag>> out;
    for (const auto& t : tokens)
        if (!t.transparent) out.emplace_back(t.text, t.tag);
    return out;
}

// ------------------------------------------------------------------ identifiers

/// Lowercase, bracket- and period-free identifier ("(A)" -> "a").
inline std::string normalize_identifier(std::string_view raw) {
    std::string out;
    for (char c : raw) {
        if (c == '(' || c == ')' || c == '[' || c == ']' || c == '.' || detail::is_space(c)) continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

inline IdentifierGroup expand_identifiers(std::string_view group_text) {
    IdentifierGroup group;
    group.raw = std::string(group_text);

    // Split into pieces on "and", ",", "&"; keep dashes inside pieces.
    std::string cleaned;
    for (std::size_t p = 0; p < group_text.size();) {
        if (auto d = detail::dash_length(group_text, p)) {
            cleaned.push_back('-');
            p += d;
            continue;
        }
        const char c = group_text[p];
        if (c == '(' || c == ')' || c == '[' || c == ']' || c == '.') {
            cleaned.push_back(' ');
        } else if (c == ',' || c == '&') {
            cleaned.push_back('|');
        } else {
            cleaned.push_back(c);
        }
        ++p;
    }
    std::vector<std::string> pieces;
    {
        std::string current;
        auto flush = [&] {
            auto t = jsonio::trim(current);
            if (!t.empty()) pieces.push_back(t);
            current.clear();
        };
        std::size_t p = 0;
        while (p < cleaned.size()) {
            if (cleaned[p] == '|') {
                flush();
                ++p;
                continue;
            }
            const bool boundary_before = p == 0 || cleaned[p - 1] == ' ' || cleaned[p - 1] == '|';
            if (boundary_before && cleaned.compare(p, 3, "and") == 0 &&
                (p + 3 == cleaned.size() || cleaned[p + 3] == ' ' || cleaned[p + 3] == '|')) {
                flush();
                p += 3;
                continue;
            }
            current.push_back(cleaned[p]);
            ++p;
        }
        flush();
    }

    auto push = [&](std::string id) {
        if (id.empty()) return;
        if (std::find(group.expanded.begin(), group.expanded.end(), id) == group.expanded.end())
            group.expanded.push_back(std::move(id));
    };

    for (const auto& piece : pieces) {
        std::string compact;
        for (char c : piece)
            if (!detail::is_space(c)) compact.push_back(c);
        const auto dash = compact.find('-');
        if (dash == std::string::npos) {
            push(normalize_identifier(compact));
            continue;
        }
        const std::string lo_raw = compact.substr(0, dash);
        const std::string hi_raw = compact.substr(dash + 1);
        const auto lo = normalize_identifier(lo_raw);
        const auto hi = normalize_identifier(hi_raw);
        const bool single_letters = lo_raw.size() == 1 && hi_raw.size() == 1 &&
                                    detail::is_alpha(lo_raw[0]) && detail::is_alpha(hi_raw[0]);
        const bool same_case = single_letters && (detail::is_upper(lo_raw[0]) == detail::is_upper(hi_raw[0]));
        if (single_letters && same_case && lo[0] <= hi[0]) {
            for (char ch = lo[0]; ch <= hi[0]; ++ch) push(std::string(1, ch));
            continue;
        }
        // Letter+digit ranges like a1-a3.
        if (lo.size() == 2 && hi.size() == 2 && lo[0] == hi[0] && detail::is_digit(lo[1]) &&
            detail::is_digit(hi[1]) && lo[1] <= hi[1]) {
            for (char d = lo[1]; d <= hi[1]; ++d) push(std::string{lo[0], d});
            continue;
        }
        group.flagged = true;
        log_warning("incoherent identifier range '" + piece + "' in '" + group.raw +
                    "'; keeping endpoints only");
        push(lo);
        push(hi);
    }
    if (group.expanded.empty()) group.flagged = true;
    return group;
}

// ------------------------------------------------------------------ patterns

enum class AtomKind { literal, skip, record };

struct PatternAtom {
    AtomKind kind = AtomKind::literal;
    Tag tag = Tag::WORD;
    friend bool operator==(const PatternAtom&, const PatternAtom&) = default;
};

struct TagPattern {
    std::string name;
    std::vector<PatternAtom> atoms;
    std::string provenance = "invented";
    std::string description;
};

inline std::string atom_text(const PatternAtom& a) {
    if (a.kind == AtomKind::skip) return "!";
    if (a.kind == AtomKind::record) return "*";
    if (a.tag == Tag::FULLSTOP) return ".";
    return std::string(to_string(a.tag));
}

/// Throws ConfigError unless the pattern starts with CAP, ends with a full stop, and has
/// every wildcard followed by a literal.
inline void validate_pattern(const TagPattern& p) {
    const auto where = "pattern '" + p.name + "': ";
    if (p.atoms.size() < 2) throw ConfigError(where + "needs at least CAP and a full stop");
    if (p.atoms.front().kind != AtomKind::literal || p.atoms.front().tag != Tag::CAP)
        throw ConfigError(where + "must begin with CAP");
    if (p.atoms.back().kind != AtomKind::literal || p.atoms.back().tag != Tag::FULLSTOP)
        throw ConfigError(where + "must end with a full stop");
    for (std::size_t i = 0; i + 1 < p.atoms.size(); ++i)
        if (p.atoms[i].kind != AtomKind::literal && p.atoms[i + 1].kind != AtomKind::literal)
            throw ConfigError(where + "adjacent wildcards");
    for (std::size_t i = 1; i + 1 < p.atoms.size(); ++i)
        if (p.atoms[i].kind == AtomKind::literal && p.atoms[i].tag == Tag::FULLSTOP)
            throw ConfigError(where + "full stop only allowed at the end");
    if (p.provenance != "paper" && p.provenance != "invented")
        throw ConfigError(where + "provenance must be 'paper' or 'invented'");
}

inline TagPattern make_pattern(std::string name, std::initializer_list<std::string_view> atoms,
                               std::string provenance, std::string description) {
    TagPattern p{std::move(name), {}, std::move(provenance), std::move(description)};
    for (auto a : atoms) {
        if (a == "!") p.atoms.push_back({AtomKind::skip, Tag::WORD});
        else if (a == "*") p.atoms.push_back({AtomKind::record, Tag::WORD});
        else p.atoms.push_back({AtomKind::literal, *parse_tag(a)});
    }
    validate_pattern(p);
    return p;
}

/// Built-in dictionary; mirrors config/patterns.json.
inline std::vector<TagPattern> default_patterns() {
    return {
        make_pattern("pattern_1", {"CAP", "!", "NC", "IN", "*", "."}, "paper",
                     "skip to a noun chunk followed by a preposition, then record to the full stop"),
        make_pattern("cap_nc_ir", {"CAP", "NC", "IR", "*", "."}, "invented",
                     "noun chunk joined by a linking verb, recorded to the full stop"),
        make_pattern("cap_ir", {"CAP", "IR", "*", "."}, "invented",
                     "description opening with a linking verb"),
        make_pattern("cap_nc", {"CAP", "NC", "."}, "invented", "bare noun chunk description"),
        make_pattern("cap_nc_any", {"CAP", "!", "NC", "*", "."}, "invented",
                     "first noun chunk and anything after it"),
        make_pattern("cap_any", {"CAP", "*", "."}, "invented", "last resort: everything to the full stop"),
    };
}

inline TagPattern pattern_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    TagPattern p;
    p.name = r.str("name");
    p.provenance = r.str_or("provenance", "invented");
    p.description = r.str_or("description", "");
    const auto& atoms = r.array("atoms");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto apath = jsonio::index_path(r.field("atoms"), i);
        if (!atoms[i].is_string()) throw SchemaError(apath, "expected string");
        const auto a = atoms[i].get<std::string>();
        if (a == "!") p.atoms.push_back({AtomKind::skip, Tag::WORD});
        else if (a == "*") p.atoms.push_back({AtomKind::record, Tag::WORD});
        else if (auto t = parse_tag(a)) p.atoms.push_back({AtomKind::literal, *t});
        else throw SchemaError(apath, "unknown atom '" + a + "'");
    }
    validate_pattern(p);
    return p;
}

inline json to_json(const TagPattern& p) {
    json atoms = json::array();
    for (const auto& a : p.atoms) atoms.push_back(atom_text(a));
    return json{{"name", p.name}, {"atoms", atoms}, {"provenance", p.provenance},
                {"description", p.description}};
}

inline std::vector<TagPattern> patterns_from_json(const json& j) {
    jsonio::Reader r(j, "");
    const auto& list = r.array("patterns");
    std::vector<TagPattern> out;
    for (std::size_t i = 0; i < list.size(); ++i)
        out.push_back(pattern_from_json(list[i], jsonio::index_path("patterns", i)));
    if (out.empty()) throw ConfigError("pattern dictionary is empty");
    return out;
}

inline std::vector<TagPattern> load_patterns(const std::string& path) {
    return patterns_from_json(read_json_file(path));
}

// ------------------------------------------------------------------ distribution

namespace detail {

inline bool is_list_separator(const CaptionToken& t) {
    if (t.tag != Tag::WORD) return false;
    const auto w = lower(t.text);
    return w == "," || w == "and" || w == "or" || w == "&";
}

/// True when the CAP at `i` opens a description rather than referring back to one
/// ("denoted in (c)").
inline bool starts_description(const std::vector<CaptionToken>& tokens, std::size_t i) {
    for (std::size_t k = i; k-- > 0;) {
        if (tokens[k].transparent) continue;
        return !(tokens[k].tag == Tag::IN || tokens[k].tag == Tag::IR);
    }
    return true;
}

struct MatchResult {
    bool matched = false;
    std::vector<std::size_t> recorded; // token indices, ascending
    std::size_t end = 0;               // one past the last consumed token
};

inline MatchResult match_at(const std::vector<CaptionToken>& tokens, std::size_t cap,
                            std::size_t limit, const TagPattern& pattern) {
    std::vector<std::size_t> eff;
    for (std::size_t k = cap + 1; k < limit; ++k)
        if (!tokens[k].transparent) eff.push_back(k);

    MatchResult result;
    std::size_t p = 0;
    auto literal_matches = [&](Tag tag, std::size_t at) {
        if (tag == Tag::FULLSTOP) return at == eff.size() || tokens[eff[at]].tag == Tag::FULLSTOP;
        return at < eff.size() && tokens[eff[at]].tag == tag;
    };

    const auto& atoms = pattern.atoms;
    for (std::size_t a = 1; a < atoms.size(); ++a) {
        const auto& atom = atoms[a];
        if (atom.kind == AtomKind::literal) {
            if (!literal_matches(atom.tag, p)) return {};
            if (atom.tag == Tag::FULLSTOP) {
                result.end = p == eff.size() ? limit : eff[p] + 1;
                result.matched = true;
                break;
            }
            result.recorded.push_back(eff[p]);
            ++p;
            continue;
        }
        const auto& next = atoms[a + 1];
        while (!literal_matches(next.tag, p)) {
            if (p >= eff.size() || tokens[eff[p]].tag == Tag::FULLSTOP) return {};
            if (atom.kind == AtomKind::record) result.recorded.push_back(eff[p]);
            ++p;
        }
    }
    if (!result.matched) return {};

    // Drop dangling separators left when a description ends at the next identifier.
    while (!result.recorded.empty() && is_list_separator(tokens[result.recorded.back()]))
        result.recorded.pop_back();
    if (result.recorded.empty()) return {};
    return result;
}

/// Rejoin tokens; adjacent tokens (only transparent ones between) keep original spacing.
inline std::string join_tokens(const std::vector<CaptionToken>& tokens,
                               const std::vector<std::size_t>& indices) {
    std::string out;
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto idx = indices[r];
        if (r > 0) {
            const auto prev = indices[r - 1];
            bool contiguous = true;
            for (std::size_t k = prev + 1; k < idx; ++k)
                if (!tokens[k].transparent) contiguous = false;
            if (contiguous) {
                for (std::size_t k = prev + 1; k < idx; ++k) {
                    if (tokens[k].span.start > tokens[k - 1].span.end) out.push_back(' ');
                    out += tokens[k].text;
                }
                if (tokens[idx].span.start > tokens[idx - 1].span.end) out.push_back(' ');
            } else {
                out.push_back(' ');
            }
        }
        out += tokens[idx].text;
    }
    return out;
}

/// Positional split of "X of A, B, and C, respectively" across N identifiers.
inline std::optional<std::vector<std::string>>
split_respectively(const std::vector<CaptionToken>& tokens, const std::vector<std::size_t>& recorded,
                   std::size_t n_ids) {
    if (n_ids < 2) return std::nullopt;
    std::size_t resp = recorded.size();
    for (std::size_t r = 0; r < recorded.size(); ++r)
        if (lower(tokens[recorded[r]].text) == "respectively") resp = r;
    if (resp == recorded.size()) return std::nullopt;

    std::size_t r = resp;
    while (r > 0 && is_list_separator(tokens[recorded[r - 1]])) --r;
    std::vector<std::size_t> items;
    while (r > 0) {
        const auto& t = tokens[recorded[r - 1]];
        if (t.tag == Tag::NC) {
            items.push_back(r - 1);
            --r;
            std::size_t s = r;
            while (s > 0 && is_list_separator(tokens[recorded[s - 1]])) --s;
            if (s == r) break; // no separator before this item: list starts here
            r = s;
        } else {
            break;
        }
    }
    if (items.size() != n_ids) return std::nullopt;
    std::reverse(items.begin(), items.end());

    std::vector<std::size_t> prefix(recorded.begin(), recorded.begin() + static_cast<long>(items.front()));
    const auto prefix_text = join_tokens(tokens, prefix);
    std::vector<std::string> out;
    for (auto item : items) {
        const auto& text = tokens[recorded[item]].text;
        out.push_back(prefix_text.empty() ? text : prefix_text + " " + text);
    }
    return out;
}

} // namespace detail

/// Hand caption text to subfigure identifiers. At each description-opening CAP the
/// patterns are tried in dictionary order and the first full match wins. A description
/// ends at a full stop or where the next description-opening CAP begins.
inline std::vector<CaptionSegment> distribute_caption(const std::vector<CaptionToken>& tokens,
                                                      const std::vector<TagPattern>& patterns) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i].tag == Tag::CAP && detail::starts_description(tokens, i)) starts.push_back(i);

    std::vector<CaptionSegment> segments;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        const auto cap = starts[s];
        const auto limit = s + 1 < starts.size() ? starts[s + 1] : tokens.size();
        for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
            auto m = detail::match_at(tokens, cap, limit, patterns[pi]);
            if (!m.matched) continue;

            std::vector<std::string> refs;
            for (std::size_t k = cap + 1; k < m.end; ++k)
                if (tokens[k].tag == Tag::CAP)
                    for (auto& id : expand_identifiers(tokens[k].text).expanded)
                        if (std::find(refs.begin(), refs.end(), id) == refs.end()) refs.push_back(id);

            const auto group = expand_identifiers(tokens[cap].text);
            const auto split = detail::split_respectively(tokens, m.recorded, group.expanded.size());
            const auto whole = detail::join_tokens(tokens, m.recorded);
            for (std::size_t g = 0; g < group.expanded.size(); ++g) {
                CaptionSegment seg;
                seg.subfigure_id = group.expanded[g];
                seg.text = split ? (*split)[g] : whole;
                seg.matched_pattern = static_cast<int>(pi);
                seg.pattern_name = patterns[pi].name;
                seg.cross_references = refs;
                segments.push_back(std::move(seg));
            }
            break;
        }
    }
    return segments;
}

/// "(a) TEM images of X." form used when presenting a segment.
inline std::string render_segment(const CaptionSegment& seg) {
    return "(" + seg.subfigure_id + ") " + seg.text + ".";
}

struct TaggedCaption {
    std::vector<CaptionToken> tokens;
    std::map<std::size_t, IdentifierGroup> identifiers; // by token index
};

inline TaggedCaption tag_caption(std::string_view caption) {
    TaggedCaption out;
    out.tokens = tokenize_and_tag(caption);
    for (std::size_t i = 0; i < out.tokens.size(); ++i)
        if (out.tokens[i].tag == Tag::CAP) out.identifiers[i] = expand_identifiers(out.tokens[i].text);
    return out;
}

} // namespace exsclaim::caption
