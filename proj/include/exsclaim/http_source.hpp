#pragma once

// Live HTTP(S) page source with per-host politeness delay and bounded retries.

#include <chrono>
#include <cstdlib>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "httplib.h"

#include "exsclaim/log.hpp"
#include "exsclaim/scraper.hpp"

namespace exsclaim::http {

inline constexpr const char* default_user_agent = "exsclaim-pipeline/1.0 (research figure mining)";

struct HttpConfig {
    std::chrono::milliseconds min_delay{1000}; // between requests to one host
    std::string user_agent = default_user_agent;
    int retries = 2;                          // on 5xx and transport errors only
    std::chrono::milliseconds backoff{500};   // doubled per attempt
    std::chrono::seconds timeout{30};

    /// Defaults with the EXSCLAIM_USER_AGENT override applied.
    static HttpConfig from_environment() {
        HttpConfig c;
        if (const char* ua = std::getenv("EXSCLAIM_USER_AGENT"); ua && *ua) c.user_agent = ua;
        return c;
    }
};

/// Hands out request slots so that consecutive requests to a host are at least
/// `min_delay` apart, whichever thread makes them.
class HostRateLimiter {
public:
    explicit HostRateLimiter(std::chrono::milliseconds min_delay) : delay_(min_delay) {}

    void acquire(const std::string& host) {
        using clock = std::chrono::steady_clock;
        clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            const auto now = clock::now();
            auto& next = next_[host];
            slot = std::max(now, next);
            next = slot + delay_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::chrono::milliseconds delay_;
    std::mutex mutex_;
    std::map<std::string, std::chrono::steady_clock::time_point> next_;
};

inline bool retryable(int status) { return status == 0 || status >= 500; }

class HttpPageSource : public scraper::PageSource {
public:
    explicit HttpPageSource(HttpConfig cfg = HttpConfig::from_environment())
        : cfg_(std::move(cfg)), limiter_(cfg_.min_delay) {}

    scraper::FetchResult fetch(const std::string& url) override {
        scraper::UrlParts parts;
        try {
            parts = scraper::split_url(url);
        } catch (const ConfigError& e) {
            return {0, "", "", e.what()};
        }
        if (parts.scheme != "http" && parts.scheme != "https")
            return {0, "", "", "unsupported scheme: " + parts.scheme};
        const auto target = parts.path + (parts.query.empty() ? "" : "?" + parts.query);

        scraper::FetchResult result;
        for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(cfg_.backoff * (1 << (attempt - 1)));
            limiter_.acquire(parts.host);
            result = once(parts, target);
            if (!retryable(result.status)) break;
            log_info("retryable failure (" + std::to_string(result.status) + ") for " + url);
        }
        return result;
    }

private:
    HttpConfig cfg_;
    HostRateLimiter limiter_;

    scraper::FetchResult once(const scraper::UrlParts& parts, const std::string& target) const {
        httplib::Client client(parts.origin());
        client.set_follow_location(true);
        client.set_connection_timeout(cfg_.timeout);
        client.set_read_timeout(cfg_.timeout);
        client.set_default_headers({{"User-Agent", cfg_.user_agent}});
        auto res = client.Get(target);
        if (!res) return {0, "", "", httplib::to_string(res.error())};
        return {res->status, res->get_header_value("Content-Type"), res->body, ""};
    }
};

/// Routes fixture:// URLs to a local fixture directory and everything else to HTTP.
class RoutingPageSource : public scraper::PageSource {
public:
    RoutingPageSource(scraper::PageSource* fixture, scraper::PageSource* web) : fixture_(fixture), web_(web) {}

    scraper::FetchResult fetch(const std::string& url) override {
        if (url.rfind("fixture://", 0) == 0) {
            if (!fixture_) return {0, "", "", "no fixture root configured for " + url};
            return fixture_->fetch(url);
        }
        if (!web_) return {0, "", "", "network access disabled for " + url};
        return web_->fetch(url);
    }

private:
    scraper::PageSource* fixture_;
    scraper::PageSource* web_;
};

} // namespace exsclaim::http
