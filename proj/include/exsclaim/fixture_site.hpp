#pragma once

// Local stand-in for a publisher site: a directory of HTML pages and figure files
// plus manifest.json mapping search queries to result pages.
//
//   { "searches": { "<terms joined by one space>": "search/x.html", ... },
//     "fallback": "search/empty.html" }
//
// Used directly through `fixture://<host>/...` URLs and over HTTP by `serve-fixture`.

#include <filesystem>
#include <string>

#include "exsclaim/json_io.hpp"
#include "exsclaim/scraper.hpp"

namespace exsclaim::fixture {

inline std::string content_type_for(const std::filesystem::path& p) {
    const auto ext = jsonio::lowercase(p.extension().string());
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".png") return "image/png";
    if (ext == ".json") return "application/json";
    if (ext == ".css") return "text/css";
    if (ext == ".js") return "text/javascript";
    return "application/octet-stream";
}

class FixtureSite {
public:
    explicit FixtureSite(std::filesystem::path root) : root_(std::move(root)) {
        const auto manifest = read_json_file((root_ / "manifest.json").string());
        jsonio::Reader in(manifest, "manifest");
        for (auto& [query, page] : in.at("searches").items()) searches_[normalize(query)] = page.get<std::string>();
        fallback_ = in.str_or("fallback", "");
    }

    const std::filesystem::path& root() const { return root_; }

    /// Serve `path` (with its query string) the way the journal would.
    scraper::FetchResult get(const std::string& path, const std::string& query) const {
        if (path == "/search") {
            const auto q = normalize(scraper::query_param(query, "q").value_or(""));
            auto it = searches_.find(q);
            if (it != searches_.end()) return file(it->second);
            if (!fallback_.empty()) return file(fallback_);
            return {404, "text/plain", "no such search", ""};
        }
        return file(path);
    }

private:
    std::filesystem::path root_;
    std::map<std::string, std::string> searches_;
    std::string fallback_;

    static std::string normalize(const std::string& q) {
        return html::normalize_text(jsonio::lowercase(q));
    }

    scraper::FetchResult file(std::string rel) const {
        while (!rel.empty() && rel.front() == '/') rel.erase(0, 1);
        const auto decoded = scraper::url_decode(rel);
        if (decoded.find("..") != std::string::npos) return {403, "text/plain", "forbidden", ""};
        const auto p = root_ / decoded;
        std::error_code ec;
        if (!std::filesystem::is_regular_file(p, ec)) return {404, "text/plain", "not found", ""};
        return {200, content_type_for(p), read_file(p.string()), ""};
    }
};

/// PageSource over `fixture://<any-host>/<path>?<query>` URLs.
class LocalPageSource : public scraper::PageSource {
public:
    explicit LocalPageSource(std::filesystem::path root) : site_(std::move(root)) {}

    scraper::FetchResult fetch(const std::string& url) override {
        const auto parts = scraper::split_url(url);
        if (parts.scheme != "fixture") return {0, "", "", "unsupported scheme for fixture source: " + url};
        return site_.get(parts.path, parts.query);
    }

private:
    FixtureSite site_;
};

} // namespace exsclaim::fixture
