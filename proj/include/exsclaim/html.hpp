#pragma once

// Lenient HTML DOM and a CSS selector subset, enough for publisher article pages.
//
// Supported selectors: type, #id, .class, [attr], [attr=value] (quoted or bare),
// compound forms of those, descendant and child (>) combinators, and comma lists.

#include <cctype>
#include <map>
#include <optional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "exsclaim/error.hpp"

namespace exsclaim::html {

struct Node {
    std::string tag; // lowercase; empty for text nodes
    std::map<std::string, std::string> attrs;
    std::string text; // text nodes only
    std::vector<std::unique_ptr<Node>> children;
    Node* parent = nullptr;

    bool is_text() const { return tag.empty(); }
    const std::string* attr(const std::string& name) const {
        auto it = attrs.find(name);
        return it == attrs.end() ? nullptr : &it->second;
    }
    bool has_class(std::string_view cls) const {
        auto* c = attr("class");
        if (!c) return false;
        std::size_t i = 0;
        while (i < c->size()) {
            while (i < c->size() && std::isspace(static_cast<unsigned char>((*c)[i]))) ++i;
            std::size_t j = i;
            while (j < c->size() && !std::isspace(static_cast<unsigned char>((*c)[j]))) ++j;
            if (std::string_view(*c).substr(i, j - i) == cls) return true;
            i = j;
        }
        return false;
    }
};

// ------------------------------------------------------------------ entities

namespace detail {

inline void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline const std::map<std::string, unsigned long, std::less<>>& named_entities() {
    static const std::map<std::string, unsigned long, std::less<>> table{
        {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},     {"apos", '\''},
        {"nbsp", 0xA0},    {"ndash", 0x2013}, {"mdash", 0x2014}, {"minus", 0x2212}, {"times", 0xD7},
        {"deg", 0xB0},     {"micro", 0xB5},   {"mu", 0x3BC},     {"Aring", 0xC5},   {"alpha", 0x3B1},
        {"beta", 0x3B2},   {"gamma", 0x3B3},  {"delta", 0x3B4},  {"lambda", 0x3BB}, {"plusmn", 0xB1},
        {"prime", 0x2032}, {"thinsp", 0x2009}, {"hellip", 0x2026}, {"lsquo", 0x2018}, {"rsquo", 0x2019},
        {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"copy", 0xA9}};
    return table;
}

} // namespace detail

inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        const auto semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back('&');
            continue;
        }
        const auto name = s.substr(i + 1, semi - i - 1);
        unsigned long cp = 0;
        bool ok = false;
        if (!name.empty() && name[0] == '#') {
            try {
                std::size_t used = 0;
                const std::string digits(name.substr(name.size() > 1 && (name[1] == 'x' || name[1] == 'X') ? 2 : 1));
                const int base = name.size() > 1 && (name[1] == 'x' || name[1] == 'X') ? 16 : 10;
                cp = std::stoul(digits, &used, base);
                ok = used == digits.size() && cp > 0 && cp <= 0x10FFFF;
            } catch (const std::exception&) {
                ok = false;
            }
        } else if (auto it = detail::named_entities().find(name); it != detail::named_entities().end()) {
            cp = it->second;
            ok = true;
        }
        if (!ok) {
            out.push_back('&');
            continue;
        }
        detail::append_utf8(out, cp);
        i = semi;
    }
    return out;
}

// ------------------------------------------------------------------ text normalisation

/// Flatten Unicode sub/superscript digits and signs to ASCII, turn non-breaking and
/// thin spaces into spaces, collapse whitespace runs, and trim.
inline std::string normalize_text(std::string_view s) {
    std::string flat;
    flat.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        // U+2070..U+209F: superscript/subscript block (3-byte UTF-8, E2 81/82 xx).
        if (c == 0xE2 && i + 2 < s.size()) {
            const auto b1 = static_cast<unsigned char>(s[i + 1]);
            const auto b2 = static_cast<unsigned char>(s[i + 2]);
            const unsigned cp = ((c & 0x0F) << 12) | ((b1 & 0x3F) << 6) | (b2 & 0x3F);
            char mapped = 0;
            if (cp == 0x2070) mapped = '0';
            else if (cp >= 0x2074 && cp <= 0x2079) mapped = static_cast<char>('4' + (cp - 0x2074));
            else if (cp >= 0x2080 && cp <= 0x2089) mapped = static_cast<char>('0' + (cp - 0x2080));
            else if (cp == 0x207A || cp == 0x208A) mapped = '+';
            else if (cp == 0x207B || cp == 0x208B) mapped = '-';
            else if (cp == 0x2009 || cp == 0x200A || cp == 0x2002 || cp == 0x2003) mapped = ' ';
            if (mapped) {
                flat.push_back(mapped);
                i += 3;
                continue;
            }
        }
        // Superscript one/two/three and no-break space live in Latin-1 (C2 xx).
        if (c == 0xC2 && i + 1 < s.size()) {
            const auto b1 = static_cast<unsigned char>(s[i + 1]);
            char mapped = 0;
            if (b1 == 0xB9) mapped = '1';
            else if (b1 == 0xB2) mapped = '2';
            else if (b1 == 0xB3) mapped = '3';
            else if (b1 == 0xA0) mapped = ' ';
            if (mapped) {
                flat.push_back(mapped);
                i += 2;
                continue;
            }
        }
        flat.push_back(s[i]);
        ++i;
    }

    std::string out;
    bool pending_space = false;
    for (char ch : flat) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

// ------------------------------------------------------------------ parser

namespace detail {

inline bool is_void_element(std::string_view t) {
    static constexpr std::string_view v[] = {"area", "base", "br",   "col",   "embed",  "hr",    "img",
                                             "input", "link", "meta", "param", "source", "track", "wbr"};
    for (auto x : v)
        if (x == t) return true;
    return false;
}

inline bool is_raw_text_element(std::string_view t) { return t == "script" || t == "style"; }

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool iequals_at(std::string_view s, std::size_t pos, std::string_view needle) {
    if (pos + needle.size() > s.size()) return false;
    for (std::size_t k = 0; k < needle.size(); ++k)
        if (std::tolower(static_cast<unsigned char>(s[pos + k])) != needle[k]) return false;
    return true;
}

} // namespace detail

class Document {
public:
    explicit Document(std::string_view html) : root_(std::make_unique<Node>()) {
        root_->tag = "#document";
        parse(html);
    }
    const Node& root() const { return *root_; }

private:
    std::unique_ptr<Node> root_;

    static Node* append(Node* parent, std::unique_ptr<Node> child) {
        child->parent = parent;
        parent->children.push_back(std::move(child));
        return parent->children.back().get();
    }

    void add_text(Node* cur, std::string_view raw) {
        if (raw.empty()) return;
        auto t = std::make_unique<Node>();
        t->text = decode_entities(raw);
        append(cur, std::move(t));
    }

    void parse(std::string_view s) {
        Node* cur = root_.get();
        std::size_t i = 0;
        while (i < s.size()) {
            const auto lt = s.find('<', i);
            if (lt == std::string_view::npos) {
                add_text(cur, s.substr(i));
                break;
            }
            add_text(cur, s.substr(i, lt - i));
            i = lt;
            if (s.compare(i, 4, "<!--") == 0) {
                const auto end = s.find("-->", i + 4);
                i = end == std::string_view::npos ? s.size() : end + 3;
                continue;
            }
            if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
                const auto end = s.find('>', i);
                i = end == std::string_view::npos ? s.size() : end + 1;
                continue;
            }
            if (i + 1 < s.size() && s[i + 1] == '/') {
                const auto end = s.find('>', i);
                const auto name = detail::lower(
                    trim_name(s.substr(i + 2, (end == std::string_view::npos ? s.size() : end) - i - 2)));
                i = end == std::string_view::npos ? s.size() : end + 1;
                // Pop to the matching open element; stray closers are ignored.
                for (Node* n = cur; n && n != root_.get(); n = n->parent)
                    if (n->tag == name) {
                        cur = n->parent;
                        break;
                    }
                continue;
            }
            if (i + 1 >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i + 1]))) {
                add_text(cur, "<");
                ++i;
                continue;
            }
            auto node = std::make_unique<Node>();
            std::size_t p = i + 1;
            while (p < s.size() && !std::isspace(static_cast<unsigned char>(s[p])) && s[p] != '>' && s[p] != '/')
                ++p;
            node->tag = detail::lower(s.substr(i + 1, p - i - 1));
            bool self_closing = false;
            // Attributes.
            while (p < s.size() && s[p] != '>') {
                if (std::isspace(static_cast<unsigned char>(s[p]))) {
                    ++p;
                    continue;
                }
                if (s[p] == '/') {
                    self_closing = true;
                    ++p;
                    continue;
                }
                std::size_t q = p;
                while (q < s.size() && !std::isspace(static_cast<unsigned char>(s[q])) && s[q] != '=' &&
                       s[q] != '>' && s[q] != '/')
                    ++q;
                auto name = detail::lower(s.substr(p, q - p));
                p = q;
                while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
                std::string value;
                if (p < s.size() && s[p] == '=') {
                    ++p;
                    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
                    if (p < s.size() && (s[p] == '"' || s[p] == '\'')) {
                        const char quote = s[p];
                        const auto close = s.find(quote, p + 1);
                        const auto stop = close == std::string_view::npos ? s.size() : close;
                        value = decode_entities(s.substr(p + 1, stop - p - 1));
                        p = stop == s.size() ? stop : stop + 1;
                    } else {
                        std::size_t r = p;
                        while (r < s.size() && !std::isspace(static_cast<unsigned char>(s[r])) && s[r] != '>') ++r;
                        value = decode_entities(s.substr(p, r - p));
                        p = r;
                    }
                }
                if (!name.empty()) node->attrs.emplace(std::move(name), std::move(value));
            }
            i = p < s.size() ? p + 1 : s.size();
            const std::string tag = node->tag;
            cur = close_implied(cur, tag);
            Node* added = append(cur, std::move(node));
            if (detail::is_raw_text_element(tag)) {
                // Skip raw content up to the closing tag.
                std::size_t end = i;
                while (end < s.size() && !(s[end] == '<' && end + 1 < s.size() && s[end + 1] == '/' &&
                                           detail::iequals_at(s, end + 2, tag)))
                    ++end;
                add_text(added, s.substr(i, end - i));
                const auto gt = s.find('>', end);
                i = gt == std::string_view::npos ? s.size() : gt + 1;
                continue;
            }
            if (!self_closing && !detail::is_void_element(tag)) cur = added;
        }
    }

    // Implied end tags: a block start closes an open <p>, a new <li> closes an open <li>.
    Node* close_implied(Node* cur, std::string_view tag) const {
        static const std::set<std::string_view> closes_p = {
            "address", "article", "aside", "blockquote", "div", "dl", "figcaption", "figure", "footer",
            "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol",
            "p", "pre", "section", "table", "ul"};
        static const std::set<std::string_view> scope_p = {"button", "caption", "html", "table", "td", "th",
                                                            "template", "object"};
        auto close = [&](std::string_view target, auto extra_boundary) {
            for (Node* n = cur; n && n != root_.get(); n = n->parent) {
                if (n->tag == target) return n->parent;
                if (scope_p.count(n->tag) || extra_boundary(n->tag)) break;
            }
            return cur;
        };
        if (tag == "li") cur = close("li", [](std::string_view t) { return t == "ol" || t == "ul"; });
        if (closes_p.count(tag)) cur = close("p", [](std::string_view) { return false; });
        return cur;
    }

    static std::string_view trim_name(std::string_view s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }
};

// ------------------------------------------------------------------ text extraction

namespace detail {
inline bool is_block(std::string_view t) {
    static constexpr std::string_view v[] = {"address", "article", "aside", "blockquote", "br",  "dd",
                                             "div",     "dl",      "dt",    "figcaption", "figure", "footer",
                                             "h1",      "h2",      "h3",    "h4",         "h5",  "h6",
                                             "header",  "hr",      "li",    "main",       "nav", "ol",
                                             "p",       "section", "table", "td",         "th",  "tr",
                                             "ul"};
    for (auto x : v)
        if (x == t) return true;
    return false;
}

inline void collect_text(const Node& n, std::string& out) {
    if (n.is_text()) {
        out += n.text;
        return;
    }
    if (is_raw_text_element(n.tag)) return;
    const bool block = is_block(n.tag);
    if (block) out.push_back(' ');
    for (const auto& c : n.children) collect_text(*c, out);
    if (block) out.push_back(' ');
}
} // namespace detail

/// Visible text with tags stripped (inline markup such as <sub> joins without spaces).
inline std::string text_content(const Node& n) {
    std::string raw;
    detail::collect_text(n, raw);
    return normalize_text(raw);
}

// ------------------------------------------------------------------ selectors

struct SimpleSelector {
    std::string tag; // empty = any
    std::string id;
    std::vector<std::string> classes;
    std::vector<std::pair<std::string, std::optional<std::string>>> attrs;
};

struct ComplexSelector {
    // parts[0] is the leftmost; combinators[k] joins parts[k] and parts[k+1]: ' ' or '>'.
    std::vector<SimpleSelector> parts;
    std::vector<char> combinators;
};

namespace detail {

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

inline std::vector<ComplexSelector> parse_selector(std::string_view s) {
    std::vector<ComplexSelector> groups(1);
    std::size_t i = 0;
    char pending = 0; // combinator waiting for the next compound
    auto bad = [&](const std::string& why) { return ConfigError("bad selector '" + std::string(s) + "': " + why); };
    auto ident = [&]() {
        std::size_t j = i;
        while (j < s.size() && ident_char(s[j])) ++j;
        if (j == i) throw bad("expected identifier");
        auto out = std::string(s.substr(i, j - i));
        i = j;
        return out;
    };
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!groups.back().parts.empty() && !pending) pending = ' ';
            ++i;
            continue;
        }
        if (c == '>') {
            if (groups.back().parts.empty()) throw bad("dangling '>'");
            pending = '>';
            ++i;
            continue;
        }
        if (c == ',') {
            if (groups.back().parts.empty()) throw bad("empty group");
            groups.emplace_back();
            pending = 0;
            ++i;
            continue;
        }
        SimpleSelector simple;
        bool any = false;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != ',' && s[i] != '>') {
            if (s[i] == '*') {
                ++i;
            } else if (s[i] == '#') {
                ++i;
                simple.id = ident();
            } else if (s[i] == '.') {
                ++i;
                simple.classes.push_back(ident());
            } else if (s[i] == '[') {
                ++i;
                auto name = lower(ident());
                std::optional<std::string> value;
                if (i < s.size() && s[i] == '=') {
                    ++i;
                    if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
                        const char q = s[i];
                        const auto close = s.find(q, i + 1);
                        if (close == std::string_view::npos) throw bad("unterminated quote");
                        value = std::string(s.substr(i + 1, close - i - 1));
                        i = close + 1;
                    } else {
                        const auto close = s.find(']', i);
                        if (close == std::string_view::npos) throw bad("missing ']'");
                        value = std::string(s.substr(i, close - i));
                        i = close;
                    }
                }
                if (i >= s.size() || s[i] != ']') throw bad("missing ']'");
                ++i;
                simple.attrs.emplace_back(std::move(name), std::move(value));
            } else if (ident_char(s[i])) {
                simple.tag = lower(ident());
            } else {
                throw bad(std::string("unexpected '") + s[i] + "'");
            }
            any = true;
        }
        if (!any) throw bad("empty compound");
        auto& g = groups.back();
        if (!g.parts.empty()) g.combinators.push_back(pending ? pending : ' ');
        g.parts.push_back(std::move(simple));
        pending = 0;
    }
    if (groups.back().parts.empty()) throw bad("empty selector");
    return groups;
}

inline bool matches_simple(const Node& n, const SimpleSelector& s) {
    if (n.is_text() || n.tag == "#document") return false;
    if (!s.tag.empty() && n.tag != s.tag) return false;
    if (!s.id.empty()) {
        auto* id = n.attr("id");
        if (!id || *id != s.id) return false;
    }
    for (const auto& c : s.classes)
        if (!n.has_class(c)) return false;
    for (const auto& [name, value] : s.attrs) {
        auto* v = n.attr(name);
        if (!v || (value && *v != *value)) return false;
    }
    return true;
}

// Right-to-left match of parts[0..k] ending at node n; `scope` bounds ancestor search.
inline bool matches_complex(const Node& n, const ComplexSelector& c, std::size_t k, const Node* scope) {
    if (!matches_simple(n, c.parts[k])) return false;
    if (k == 0) return true;
    const char comb = c.combinators[k - 1];
    for (const Node* a = n.parent; a && a != scope; a = a->parent) {
        if (matches_complex(*a, c, k - 1, scope)) return true;
        if (comb == '>') return false;
    }
    return false;
}

inline void select_into(const Node& n, const std::vector<ComplexSelector>& groups, const Node* scope,
                        std::vector<const Node*>& out) {
    for (const auto& child : n.children) {
        const Node& c = *child;
        for (const auto& g : groups)
            if (matches_complex(c, g, g.parts.size() - 1, scope)) {
                out.push_back(&c);
                break;
            }
        select_into(c, groups, scope, out);
    }
}

} // namespace detail

/// Descendants of `scope` matching `selector`, in document order.
inline std::vector<const Node*> select(const Node& scope, std::string_view selector) {
    const auto groups = detail::parse_selector(selector);
    std::vector<const Node*> out;
    detail::select_into(scope, groups, &scope, out);
    return out;
}

inline const Node* select_first(const Node& scope, std::string_view selector) {
    auto all = select(scope, selector);
    return all.empty() ? nullptr : all.front();
}

/// Throws ConfigError when the selector does not parse.
inline void check_selector(std::string_view selector) { (void)detail::parse_selector(selector); }

} // namespace exsclaim::html
