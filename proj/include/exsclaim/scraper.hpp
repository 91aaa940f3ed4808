#pragma once

// Journal scraping: keyword combinations, search-result ranking, article extraction.
//
// Fetching goes through the PageSource interface so the same code serves live
// publisher sites (http_source.hpp) and the local fixture journal (fixture_site.hpp).

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <set>
#include <thread>
#include <tuple>
#include <vector>

#include "exsclaim/html.hpp"
#include "exsclaim/json_io.hpp"
#include "exsclaim/log.hpp"
#include "exsclaim/types.hpp"

namespace exsclaim::scraper {

// ------------------------------------------------------------------ combinations

using Combination = std::vector<std::string>;

/// Cartesian product, first family varying slowest.
inline std::vector<Combination> enumerate_combinations(const std::vector<KeywordFamily>& families) {
    if (families.empty()) throw ConfigError("no keyword families");
    for (std::size_t f = 0; f < families.size(); ++f)
        if (families[f].terms.empty()) throw ConfigError("keyword family " + std::to_string(f) + " is empty");

    std::vector<Combination> out{{}};
    for (const auto& family : families) {
        std::vector<Combination> next;
        next.reserve(out.size() * family.terms.size());
        for (const auto& prefix : out)
            for (const auto& term : family.terms) {
                auto c = prefix;
                c.push_back(term);
                next.push_back(std::move(c));
            }
        out = std::move(next);
    }
    return out;
}

// ------------------------------------------------------------------ URLs

struct UrlParts {
    std::string scheme;
    std::string host; // includes ":port" when present
    std::string path; // starts with '/'
    std::string query;

    std::string origin() const { return scheme + "://" + host; }
};

inline UrlParts split_url(const std::string& url) {
    UrlParts p;
    const auto sep = url.find("://");
    if (sep == std::string::npos) throw ConfigError("not an absolute URL: " + url);
    p.scheme = jsonio::lowercase(url.substr(0, sep));
    const auto rest = url.substr(sep + 3);
    const auto slash = rest.find_first_of("/?");
    p.host = rest.substr(0, slash);
    std::string tail = slash == std::string::npos ? "/" : rest.substr(slash);
    if (tail.front() == '?') tail = "/" + tail;
    const auto q = tail.find('?');
    p.path = tail.substr(0, q);
    if (q != std::string::npos) p.query = tail.substr(q + 1);
    const auto hash = p.query.find('#');
    if (hash != std::string::npos) p.query.resize(hash);
    const auto phash = p.path.find('#');
    if (phash != std::string::npos) p.path.resize(phash);
    return p;
}

inline std::string resolve_url(const std::string& base, const std::string& ref) {
    if (ref.find("://") != std::string::npos) return ref;
    const auto b = split_url(base);
    if (ref.rfind("//", 0) == 0) return b.scheme + ":" + ref;
    if (!ref.empty() && ref.front() == '/') return b.origin() + ref;
    const auto dir = b.path.substr(0, b.path.rfind('/') + 1);
    return b.origin() + dir + ref;
}

inline std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

inline std::string url_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out.push_back(' ');
        } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
                   std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

/// Value of `key` in an application/x-www-form-urlencoded query string.
inline std::optional<std::string> query_param(const std::string& query, const std::string& key) {
    std::size_t i = 0;
    while (i <= query.size()) {
        auto amp = query.find('&', i);
        if (amp == std::string::npos) amp = query.size();
        const auto pair = query.substr(i, amp - i);
        const auto eq = pair.find('=');
        if (url_decode(pair.substr(0, eq)) == key)
            return eq == std::string::npos ? std::string() : url_decode(pair.substr(eq + 1));
        i = amp + 1;
    }
    return std::nullopt;
}

/// "10.1039/C8QI00954J" -> "10-1039-c8qi00954j"
inline std::string doi_slug(std::string_view doi) {
    std::string out;
    bool dash = false;
    for (unsigned char c : doi) {
        if (std::isalnum(c)) {
            if (dash && !out.empty()) out.push_back('-');
            dash = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            dash = true;
        }
    }
    return out;
}

// ------------------------------------------------------------------ fetching

struct FetchResult {
    int status = 0; // 0 = transport failure
    std::string content_type;
    std::string body;
    std::string error;

    bool ok() const { return status >= 200 && status < 300; }
    bool is_html() const {
        return content_type.find("html") != std::string::npos ||
               (content_type.empty() && body.find("<html") != std::string::npos);
    }
};

/// Must be safe to call from several threads at once.
class PageSource {
public:
    virtual ~PageSource() = default;
    virtual FetchResult fetch(const std::string& url) = 0;
};

/// Fetch in parallel, results in input order.
inline std::vector<FetchResult> fetch_all(PageSource& source, const std::vector<std::string>& urls,
                                          unsigned workers) {
    std::vector<FetchResult> out(urls.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < urls.size(); i = next++) out[i] = source.fetch(urls[i]);
    };
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(urls.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return out;
}

// ------------------------------------------------------------------ adapters

struct SelectorRule {
    std::string css;
    std::optional<std::string> attr; // read this attribute instead of the text

    friend bool operator==(const SelectorRule&, const SelectorRule&) = default;
};

struct JournalAdapter {
    JournalFamily family = JournalFamily::fixture;
    std::string base_url;
    std::string search_path; // "{query}" and "{sort}" are substituted
    std::map<SortOrder, std::string> sort_values;
    SelectorRule article_link, title, doi, figure, caption, figure_image, abstract, introduction, open_access;
    std::optional<SelectorRule> full_text;

    std::string search_url(const Combination& combo, SortOrder sort) const {
        std::string q;
        for (const auto& t : combo) q += (q.empty() ? "" : " ") + t;
        auto path = search_path;
        auto sub = [&](const std::string& key, const std::string& value) {
            for (auto p = path.find(key); p != std::string::npos; p = path.find(key, p + value.size()))
                path.replace(p, key.size(), value);
        };
        sub("{query}", url_encode(q));
        auto it = sort_values.find(sort);
        sub("{sort}", it == sort_values.end() ? std::string(to_string(sort)) : it->second);
        return resolve_url(base_url + "/", path);
    }
};

namespace detail {
inline SelectorRule rule_from_json(const json& j, const std::string& path) {
    SelectorRule r;
    if (j.is_string()) {
        r.css = j.get<std::string>();
    } else {
        jsonio::Reader in(j, path);
        r.css = in.str("css");
        r.attr = in.opt_str("attr");
    }
    if (r.css.empty()) throw SchemaError(path, "selector must be non-empty");
    try {
        html::check_selector(r.css);
    } catch (const ConfigError& e) {
        throw SchemaError(path, e.what());
    }
    return r;
}
} // namespace detail

inline JournalAdapter adapter_from_json(const json& j, JournalFamily family, const std::string& path) {
    jsonio::Reader in(j, path);
    JournalAdapter a;
    a.family = family;
    a.base_url = in.str("base_url");
    while (!a.base_url.empty() && a.base_url.back() == '/') a.base_url.pop_back();
    a.search_path = in.str("search_path");
    if (in.has("sort_values"))
        for (auto& [k, v] : in.at("sort_values").items()) {
            auto s = parse_sort_order(k);
            if (!s) throw SchemaError(path + ".sort_values." + k, "unknown sort order");
            a.sort_values[*s] = v.get<std::string>();
        }
    const auto& sel = in.at("selectors");
    const std::string sp = path + ".selectors";
    jsonio::Reader s(sel, sp);
    auto rule = [&](const char* name) { return detail::rule_from_json(s.at(name), sp + "." + name); };
    a.article_link = rule("article_link");
    a.title = rule("title");
    a.doi = rule("doi");
    a.figure = rule("figure");
    a.caption = rule("caption");
    a.figure_image = rule("figure_image");
    a.abstract = rule("abstract");
    a.introduction = rule("introduction");
    a.open_access = rule("open_access");
    if (s.has("full_text")) a.full_text = rule("full_text");
    return a;
}

inline std::map<JournalFamily, JournalAdapter> adapters_from_json(const json& j) {
    jsonio::Reader in(j, "");
    std::map<JournalFamily, JournalAdapter> out;
    for (auto& [name, body] : in.at("adapters").items()) {
        auto family = parse_journal_family(name);
        if (!family) throw SchemaError("adapters." + name, "unknown journal family");
        out.emplace(*family, adapter_from_json(body, *family, "adapters." + name));
    }
    return out;
}

inline std::map<JournalFamily, JournalAdapter> load_adapters(const std::string& path) {
    return adapters_from_json(read_json_file(path));
}

// ------------------------------------------------------------------ search results

struct RankedUrl {
    std::string url;
    int rank = 0;                // 1-based position in the journal's own ordering
    std::size_t combination = 0; // index of the search that produced the best rank

    friend bool operator==(const RankedUrl&, const RankedUrl&) = default;
};

inline std::string extract(const html::Node& n, const SelectorRule& r) {
    if (r.attr) {
        auto* v = n.attr(*r.attr);
        return v ? html::normalize_text(*v) : std::string();
    }
    return html::text_content(n);
}

/// Article links on one search-result page, absolute, in page order.
inline std::vector<std::string> parse_search_page(const JournalAdapter& adapter, const std::string& page_url,
                                                  const std::string& body) {
    html::Document doc(body);
    std::vector<std::string> out;
    for (const auto* n : html::select(doc.root(), adapter.article_link.css)) {
        const auto* href = n->attr(adapter.article_link.attr.value_or("href"));
        if (href && !href->empty()) out.push_back(resolve_url(page_url, *href));
    }
    return out;
}

/// Merge ranked result lists from several searches: keep each URL once with its best
/// (rank, search index), order by that key, truncate to `limit`.
inline std::vector<RankedUrl> merge_rankings(const std::vector<std::vector<std::string>>& per_search,
                                             int limit) {
    if (limit < 1) throw RangeError("article_limit", "must be >= 1");
    std::map<std::string, RankedUrl> best;
    for (std::size_t c = 0; c < per_search.size(); ++c) {
        int rank = 0;
        std::set<std::string> seen_here;
        for (const auto& url : per_search[c]) {
            if (!seen_here.insert(url).second) continue; // repeated on one page
            ++rank;
            auto [it, inserted] = best.emplace(url, RankedUrl{url, rank, c});
            if (!inserted && std::tie(rank, c) < std::tie(it->second.rank, it->second.combination))
                it->second = RankedUrl{url, rank, c};
        }
    }
    std::vector<RankedUrl> out;
    for (auto& [_, r] : best) out.push_back(r);
    std::sort(out.begin(), out.end(), [](const RankedUrl& a, const RankedUrl& b) {
        return std::tie(a.rank, a.combination, a.url) < std::tie(b.rank, b.combination, b.url);
    });
    if (out.size() > static_cast<std::size_t>(limit)) out.resize(static_cast<std::size_t>(limit));
    return out;
}

inline std::vector<RankedUrl> collect_article_urls(const JournalAdapter& adapter, PageSource& source,
                                                   const std::vector<Combination>& combos, int limit,
                                                   SortOrder sort = SortOrder::relevance, unsigned workers = 4) {
    if (limit < 1) throw RangeError("article_limit", "must be >= 1");
    std::vector<std::string> urls;
    for (const auto& c : combos) urls.push_back(adapter.search_url(c, sort));
    const auto pages = fetch_all(source, urls, workers);
    std::vector<std::vector<std::string>> per_search(pages.size());
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (!pages[i].ok()) {
            log_warning("search page failed (" + std::to_string(pages[i].status) + ") " + urls[i] +
                        (pages[i].error.empty() ? "" : ": " + pages[i].error));
            continue;
        }
        per_search[i] = parse_search_page(adapter, urls[i], pages[i].body);
    }
    return merge_rankings(per_search, limit);
}

// ------------------------------------------------------------------ articles

struct RawFigure {
    std::string figure_id;
    int index = 0; // 1-based position within the article
    std::string caption;
    bool caption_missing = false;
    std::string image_url;

    friend bool operator==(const RawFigure&, const RawFigure&) = default;
};

struct ScrapedArticle {
    Article article;
    std::vector<RawFigure> figures;

    friend bool operator==(const ScrapedArticle&, const ScrapedArticle&) = default;
};

struct ScrapeOptions {
    bool open_access_only = true;
    bool full_text = false;
};

inline std::string clean_doi(std::string doi) {
    doi = jsonio::trim(doi);
    for (const std::string prefix : {"https://doi.org/", "http://doi.org/", "http://dx.doi.org/",
                                     "https://dx.doi.org/", "doi:", "DOI:"})
        if (doi.rfind(prefix, 0) == 0) doi = doi.substr(prefix.size());
    return jsonio::trim(doi);
}

/// Pure extraction from an already-fetched article page. Returns nullopt when the
/// article is filtered out (no open-access marker under open_access_only, or no DOI).
inline std::optional<ScrapedArticle> extract_article(const JournalAdapter& adapter, const std::string& url,
                                                     const std::string& body, const ScrapeOptions& opt,
                                                     int relevance_rank = 0) {
    html::Document doc(body);
    const auto& root = doc.root();
    auto first_text = [&](const SelectorRule& r) -> std::optional<std::string> {
        const auto* n = html::select_first(root, r.css);
        if (!n) return std::nullopt;
        auto t = extract(*n, r);
        if (t.empty()) return std::nullopt;
        return t;
    };

    ScrapedArticle out;
    auto& a = out.article;
    a.url = url;
    a.relevance_rank = relevance_rank;
    a.open_access = html::select_first(root, adapter.open_access.css) != nullptr;
    if (opt.open_access_only && !a.open_access) {
        log_info("skipping non-open-access article " + url);
        return std::nullopt;
    }
    a.doi = clean_doi(first_text(adapter.doi).value_or(""));
    if (a.doi.empty()) {
        log_warning("article without DOI skipped: " + url);
        return std::nullopt;
    }
    a.title = first_text(adapter.title).value_or("");
    a.abstract_text = first_text(adapter.abstract);
    a.introduction_text = first_text(adapter.introduction);
    if (opt.full_text && adapter.full_text) a.full_text = first_text(*adapter.full_text);

    const auto slug = doi_slug(a.doi);
    int n = 0;
    for (const auto* fig : html::select(root, adapter.figure.css)) {
        ++n;
        RawFigure f;
        f.index = n;
        f.figure_id = slug + "_fig" + std::to_string(n);
        if (const auto* cap = html::select_first(*fig, adapter.caption.css)) f.caption = extract(*cap, adapter.caption);
        f.caption_missing = f.caption.empty();
        if (f.caption_missing) log_warning("figure " + f.figure_id + " has no caption");
        if (const auto* img = html::select_first(*fig, adapter.figure_image.css)) {
            const auto* src = img->attr(adapter.figure_image.attr.value_or("src"));
            if (src && !src->empty()) f.image_url = resolve_url(url, *src);
        }
        if (f.image_url.empty()) log_warning("figure " + f.figure_id + " has no image URL");
        out.figures.push_back(std::move(f));
    }
    return out;
}

inline std::optional<ScrapedArticle> scrape_article(const JournalAdapter& adapter, PageSource& source,
                                                    const std::string& url, const ScrapeOptions& opt,
                                                    int relevance_rank = 0) {
    const auto page = source.fetch(url);
    if (!page.ok()) {
        log_warning("article fetch failed (" + std::to_string(page.status) + ") " + url);
        return std::nullopt;
    }
    if (!page.is_html()) {
        log_warning("non-HTML response skipped: " + url);
        return std::nullopt;
    }
    return extract_article(adapter, url, page.body, opt, relevance_rank);
}

} // namespace exsclaim::scraper
