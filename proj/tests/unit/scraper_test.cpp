#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "httplib.h"

#include "exsclaim/fixture_site.hpp"
#include "exsclaim/html.hpp"
#include "exsclaim/http_source.hpp"
#include "exsclaim/scraper.hpp"

#include "support.hpp"

using namespace exsclaim;
using namespace exsclaim::scraper;

namespace {

JournalAdapter fixture_adapter() {
    return load_adapters((testing_support::source_dir() / "config" / "adapters.json").string())
        .at(JournalFamily::fixture);
}

} // namespace

TEST(Html, ParsesMalformedMarkupAndEntities) {
    html::Document doc(R"(<html><body><div class="a b" id=main><p>Gold &amp; silver&nbsp;&#8211; <b>nano</b>rods<p>second
      <img src="x.png"><script>if (a < b) {}</script></div></body>)");
    const auto ps = html::select(doc.root(), "div#main p");
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_EQ(html::text_content(*ps[0]), "Gold & silver \xE2\x80\x93 nanorods");
    EXPECT_EQ(html::text_content(*ps[1]), "second");
    EXPECT_NE(html::select_first(doc.root(), "div.b"), nullptr);
    EXPECT_EQ(html::select_first(doc.root(), "div.c"), nullptr);
    EXPECT_EQ(*html::select_first(doc.root(), "img")->attr("src"), "x.png");
    EXPECT_EQ(html::select(doc.root(), "script").size(), 1u);
}

TEST(Html, AttributeSelectorsAndGroups) {
    html::Document doc(R"(<meta name="citation_doi" content="10.1/x"><meta name="other" content="y">
      <span class="open-access">OA</span><h1 class="article-title">T</h1>)");
    EXPECT_EQ(*html::select_first(doc.root(), "meta[name=citation_doi]")->attr("content"), "10.1/x");
    EXPECT_EQ(html::select(doc.root(), "h1.article-title, span.open-access").size(), 2u);
}

TEST(Combinations, CartesianProductFirstFamilySlowest) {
    const auto c = enumerate_combinations({{{"tem", "sem"}}, {{"gold", "silver", "copper"}}});
    ASSERT_EQ(c.size(), 6u);
    EXPECT_EQ(c[0], (Combination{"tem", "gold"}));
    EXPECT_EQ(c[2], (Combination{"tem", "copper"}));
    EXPECT_EQ(c[3], (Combination{"sem", "gold"}));
    EXPECT_THROW(enumerate_combinations({}), ConfigError);
    EXPECT_THROW(enumerate_combinations({{{"a"}}, {}}), ConfigError);
}

TEST(Urls, SplitResolveEncode) {
    const auto p = split_url("HTTPS://example.org:8080/a/b.html?q=1#frag");
    EXPECT_EQ(p.scheme, "https");
    EXPECT_EQ(p.host, "example.org:8080");
    EXPECT_EQ(p.path, "/a/b.html");
    EXPECT_EQ(p.query, "q=1");
    EXPECT_EQ(resolve_url("https://h/a/b.html", "c.png"), "https://h/a/c.png");
    EXPECT_EQ(resolve_url("https://h/a/b.html", "/c.png"), "https://h/c.png");
    EXPECT_EQ(resolve_url("https://h/a/b.html", "//cdn/c.png"), "https://cdn/c.png");
    EXPECT_EQ(resolve_url("https://h/a/b.html", "http://o/x"), "http://o/x");
    EXPECT_EQ(url_encode("tem gold/µ"), "tem%20gold%2F%C2%B5");
    EXPECT_EQ(url_decode(url_encode("tem gold/µ")), "tem gold/µ");
    EXPECT_EQ(query_param("q=tem+gold&order=date", "q"), "tem gold");
    EXPECT_EQ(query_param("q=tem&order=date", "order"), "date");
    EXPECT_FALSE(query_param("q=tem", "order"));
    EXPECT_EQ(doi_slug("10.1021/ACS.Nano.5b01234"), "10-1021-acs-nano-5b01234");
    EXPECT_EQ(clean_doi(" https://doi.org/10.1/x "), "10.1/x");
    EXPECT_THROW(split_url("no-scheme"), ConfigError);
}

TEST(Rankings, BestRankThenSearchOrder) {
    const auto r = merge_rankings({{"u1", "u2", "u3"}, {"u4", "u1", "u5"}, {"u6", "u2", "u2", "u7"}}, 10);
    std::vector<std::string> urls;
    for (const auto& x : r) urls.push_back(x.url);
    EXPECT_EQ(urls, (std::vector<std::string>{"u1", "u4", "u6", "u2", "u3", "u5", "u7"}));
    EXPECT_EQ(r[3], (RankedUrl{"u2", 2, 0}));
    EXPECT_EQ(r.back(), (RankedUrl{"u7", 3, 2})); // the repeat of u2 does not count
    EXPECT_EQ(merge_rankings({{"a", "b"}}, 1).size(), 1u);
    EXPECT_THROW(merge_rankings({}, 0), RangeError);
}

TEST(Adapters, ConfigLoadsAndBuildsSearchUrls) {
    const auto adapters = load_adapters((testing_support::source_dir() / "config" / "adapters.json").string());
    EXPECT_EQ(adapters.size(), 3u);
    const auto& a = adapters.at(JournalFamily::fixture);
    EXPECT_EQ(a.search_url({"tem", "gold"}, SortOrder::relevance),
              "fixture://journal/search?q=tem%20gold&order=relevance");
}

TEST(FixtureScrape, RankedArticlesAndFigures) {
    fixture::LocalPageSource source(testing_support::fixture_dir());
    const auto adapter = fixture_adapter();
    const auto combos = enumerate_combinations({{{"tem"}}, {{"nanoparticle", "nanowire", "nanosheet"}}});
    const auto ranked = collect_article_urls(adapter, source, combos, 6);
    ASSERT_EQ(ranked.size(), 6u);

    std::vector<std::string> dois;
    for (const auto& r : ranked)
        if (auto a = scrape_article(adapter, source, r.url, {}, r.rank)) dois.push_back(a->article.doi);
    const auto fixture_expectations = testing_support::expected();
    std::vector<std::string> expected;
    for (const auto& d : fixture_expectations.at("articles")) expected.push_back(d.get<std::string>());
    EXPECT_EQ(dois, expected);

    const auto a1 = scrape_article(adapter, source, "fixture://journal/articles/a1.html", {}, 1);
    ASSERT_TRUE(a1);
    EXPECT_EQ(a1->article.doi, "10.5555/fx.2021.001");
    EXPECT_TRUE(a1->article.abstract_text);
    EXPECT_EQ(a1->article.abstract_text->rfind("Abstract", 0), std::string::npos);
    EXPECT_FALSE(a1->figures.empty());
    EXPECT_EQ(a1->figures[0].figure_id, "10-5555-fx-2021-001_fig1");
    EXPECT_EQ(a1->figures[0].image_url.rfind("fixture://journal/", 0), 0u);
}

TEST(FixtureScrape, PaywalledArticleFilteredUnlessAllowed) {
    fixture::LocalPageSource source(testing_support::fixture_dir());
    const auto adapter = fixture_adapter();
    EXPECT_FALSE(scrape_article(adapter, source, "fixture://journal/articles/p1.html", {}));
    ScrapeOptions open;
    open.open_access_only = false;
    EXPECT_TRUE(scrape_article(adapter, source, "fixture://journal/articles/p1.html", open));
    EXPECT_FALSE(scrape_article(adapter, source, "fixture://journal/articles/missing.html", open));
    EXPECT_EQ(source.fetch("fixture://journal/../etc/passwd").status, 403);
}

TEST(Http, RateLimiterSpacesRequestsPerHost) {
    using namespace std::chrono;
    http::HostRateLimiter limiter(milliseconds(40));
    const auto start = steady_clock::now();
    std::vector<std::thread> threads;
    for (int i = 0; i < 3; ++i) threads.emplace_back([&] { limiter.acquire("h"); });
    for (auto& t : threads) t.join();
    EXPECT_GE(steady_clock::now() - start, milliseconds(80));
    const auto other = steady_clock::now();
    limiter.acquire("other-host");
    EXPECT_LT(steady_clock::now() - other, milliseconds(30));
}

TEST(Http, RoutingRespectsOfflineMode) {
    fixture::LocalPageSource local(testing_support::fixture_dir());
    http::RoutingPageSource offline(&local, nullptr);
    EXPECT_EQ(offline.fetch("fixture://journal/articles/a1.html").status, 200);
    const auto web = offline.fetch("https://example.org/");
    EXPECT_EQ(web.status, 0);
    EXPECT_NE(web.error.find("network access disabled"), std::string::npos);
    http::RoutingPageSource no_fixture(nullptr, nullptr);
    EXPECT_EQ(no_fixture.fetch("fixture://journal/x").status, 0);
}

TEST(Http, RetriesServerErrorsButNotClientErrors) {
    httplib::Server server;
    std::atomic<int> flaky_calls{0}, missing_calls{0};
    std::string agent;
    server.Get("/flaky", [&](const httplib::Request& req, httplib::Response& res) {
        agent = req.get_header_value("User-Agent");
        if (++flaky_calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content("<html>ok</html>", "text/html");
    });
    server.Get("/missing", [&](const httplib::Request&, httplib::Response& res) {
        ++missing_calls;
        res.status = 404;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    http::HttpConfig cfg;
    cfg.min_delay = std::chrono::milliseconds(0);
    cfg.backoff = std::chrono::milliseconds(1);
    cfg.retries = 2;
    cfg.user_agent = "test-agent";
    http::HttpPageSource source(cfg);
    const auto base = "http://127.0.0.1:" + std::to_string(port);
    const auto ok = source.fetch(base + "/flaky");
    EXPECT_EQ(ok.status, 200);
    EXPECT_TRUE(ok.is_html());
    EXPECT_EQ(flaky_calls, 3);
    EXPECT_EQ(agent, "test-agent");
    EXPECT_EQ(source.fetch(base + "/missing").status, 404);
    EXPECT_EQ(missing_calls, 1);
    EXPECT_EQ(source.fetch("ftp://x/y").status, 0);

    server.stop();
    t.join();
}
