#pragma once

// End-to-end run: scrape -> distribute captions -> separate figures -> resolve scale
// -> assign captions -> (optional) self-label -> write dataset.
//
// Each stage runs over all live figures before the next begins, so the stage order is
// visible in run.log; within a stage figures are processed by a bounded worker pool.
// A figure that throws is logged and dropped; the run continues.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "exsclaim/assigner.hpp"
#include "exsclaim/caption.hpp"
#include "exsclaim/embedding.hpp"
#include "exsclaim/image.hpp"
#include "exsclaim/json_io.hpp"
#include "exsclaim/lda.hpp"
#include "exsclaim/log.hpp"
#include "exsclaim/scale.hpp"
#include "exsclaim/scraper.hpp"
#include "exsclaim/separator.hpp"
#include "exsclaim/text.hpp"

namespace exsclaim::pipeline {

enum class DetectionMode { external_json, rule_based };

struct SelfLabelModels {
    embedding::EmbeddingModel embeddings;
    lda::TopicModel topics;
    std::map<std::size_t, std::string> topic_names; // optional human names by topic index
    std::size_t caption_label_cap = 5;
};

struct RunOptions {
    DetectionMode mode = DetectionMode::rule_based;
    std::string detections_dir;
    std::string out_dir; // overrides query.output_directory when set
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    unsigned fetch_workers = 4;
    bool full_text = false;
    std::vector<caption::TagPattern> patterns = caption::default_patterns();
    const SelfLabelModels* self_label = nullptr;
    std::optional<std::string> timestamp; // fixed created_at, for reproducible output
};

struct RunResult {
    int exit_code = 0;
    ExsclaimDocument document;
    std::size_t figures_found = 0;
    std::size_t figures_failed = 0;
    std::filesystem::path output_dir;
};

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
    };
    const unsigned t = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < t; ++k) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

namespace detail {

struct WorkItem {
    FigureRecord record;
    Image image;
    const Article* article = nullptr;
    bool failed = false;
    std::string error;
};

inline std::string crop_name(const MasterImage& m, std::size_t index) {
    return (m.subfigure_id ? *m.subfigure_id : std::to_string(index)) + ".png";
}

/// Run `stage` on every live item, converting exceptions into per-figure failures.
inline void stage(const char* name, std::vector<WorkItem>& items, unsigned workers,
                  const std::function<void(WorkItem&)>& fn) {
    log_info(std::string("stage: ") + name);
    parallel_for(items.size(), workers, [&](std::size_t i) {
        auto& item = items[i];
        if (item.failed) return;
        try {
            fn(item);
        } catch (const std::exception& e) {
            item.failed = true;
            item.error = e.what();
        }
    });
    for (auto& item : items)
        if (item.failed && !item.error.empty()) {
            log_warning("figure " + item.record.figure_id + " failed in " + name + ": " + item.error);
            item.error.clear();
        }
}

inline HierarchicalLabels self_label(const MasterImage& m, const Article& a, const Query& q, const SelfLabelModels& s) {
    HierarchicalLabels out;
    const auto caption_words = m.caption_segment ? text::preprocess(*m.caption_segment) : std::vector<std::string>{};
    out.caption_labels = embedding::caption_dropout_labels(caption_words, s.embeddings, s.caption_label_cap);
    const auto abstract_words = text::preprocess(a.abstract_text.value_or(""));
    out.abstract_labels = embedding::abstract_labels(caption_words, abstract_words, out.caption_labels, s.embeddings);
    const auto doc = text::preprocess(a.abstract_text.value_or("") + " " + a.introduction_text.value_or(""));
    if (auto best = lda::best_topic(doc, s.topics)) {
        out.topic_confidence = best->confidence;
        if (best->confidence >= q.topic_confidence_threshold) {
            out.topic_index = static_cast<int>(best->topic);
            if (auto it = s.topic_names.find(best->topic); it != s.topic_names.end()) {
                out.topic_label = it->second;
            } else {
                std::string name;
                for (const auto& w : lda::name_topic(best->topic, s.topics, s.embeddings))
                    name += (name.empty() ? "" : " ") + w;
                out.topic_label = name;
            }
        }
    }
    return out;
}

} // namespace detail

inline RunResult run(const Query& query, const RunOptions& opt, scraper::PageSource& source,
                     const scraper::JournalAdapter& adapter) {
    namespace fs = std::filesystem;
    RunResult result;
    result.output_dir = opt.out_dir.empty() ? fs::path(query.output_directory.empty() ? "exsclaim_output"
                                                                                       : query.output_directory)
                                            : fs::path(opt.out_dir);
    const auto& out = result.output_dir;
    fs::create_directories(out);
    // Crops and figures are regenerated on every run so each file maps to one record.
    fs::remove_all(out / "images");
    fs::remove_all(out / "figures");
    fs::create_directories(out / "figures");
    fs::create_directories(out / "images");
    Logger::instance().open_file((out / "run.log").string());
    log_info("run '" + query.name + "' into " + out.string());

    auto& doc = result.document;
    doc.query = query;
    doc.created_at = opt.timestamp.value_or(utc_timestamp());

    // ---- scraper
    log_info("stage: scraper");
    const auto combos = scraper::enumerate_combinations(query.keyword_families);
    const auto ranked =
        scraper::collect_article_urls(adapter, source, combos, query.article_limit, query.sort_order, opt.fetch_workers);
    log_info("found " + std::to_string(ranked.size()) + " article URLs from " + std::to_string(combos.size()) +
             " searches");

    std::vector<std::string> urls;
    for (const auto& r : ranked) urls.push_back(r.url);
    const auto pages = scraper::fetch_all(source, urls, opt.fetch_workers);
    const scraper::ScrapeOptions sopt{query.open_access_only, opt.full_text};
    std::vector<scraper::ScrapedArticle> scraped;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (!pages[i].ok()) {
            log_warning("article fetch failed (" + std::to_string(pages[i].status) + ") " + urls[i]);
            continue;
        }
        if (!pages[i].is_html()) {
            log_warning("non-HTML response skipped: " + urls[i]);
            continue;
        }
        if (auto a = scraper::extract_article(adapter, urls[i], pages[i].body, sopt, ranked[i].rank)) {
            bool dup = false;
            for (const auto& s : scraped) dup = dup || s.article.doi == a->article.doi;
            if (dup) {
                log_warning("duplicate DOI " + a->article.doi + " at " + urls[i] + " skipped");
                continue;
            }
            scraped.push_back(std::move(*a));
        }
    }
    for (const auto& s : scraped) doc.articles.push_back(s.article);

    std::vector<detail::WorkItem> items;
    std::vector<std::string> image_urls;
    for (std::size_t a = 0; a < scraped.size(); ++a)
        for (const auto& f : scraped[a].figures) {
            detail::WorkItem w;
            w.record.figure_id = f.figure_id;
            w.record.article_doi = scraped[a].article.doi;
            w.record.article_url = scraped[a].article.url;
            w.record.figure_url = f.image_url;
            w.record.caption_text = f.caption;
            w.record.caption_missing = f.caption_missing;
            w.record.image_path = "figures/" + f.figure_id + ".png";
            w.article = &doc.articles[a];
            items.push_back(std::move(w));
            image_urls.push_back(f.image_url);
        }
    result.figures_found = items.size();

    if (ranked.empty() || scraped.empty()) log_warning("no articles found for query '" + query.name + "'");

    const auto images = scraper::fetch_all(source, image_urls, opt.fetch_workers);
    detail::stage("figure download", items, opt.workers, [&](detail::WorkItem& w) {
        const auto idx = static_cast<std::size_t>(&w - items.data());
        const auto& img = images[idx];
        if (w.record.figure_url.empty()) throw IoError("no image URL");
        if (!img.ok()) throw IoError("image fetch failed with status " + std::to_string(img.status));
        if (!is_png(img.body)) throw IoError("unsupported image format (PNG expected)");
        const auto path = out / w.record.image_path;
        write_file(path.string(), img.body);
        w.image = load_png(path.string());
        w.record.image_width = w.image.width;
        w.record.image_height = w.image.height;
    });

    // ---- caption distributor
    detail::stage("caption distributor", items, opt.workers, [&](detail::WorkItem& w) {
        if (w.record.caption_text.empty()) return;
        const auto tokens = caption::tokenize_and_tag(w.record.caption_text);
        w.record.caption_segments = caption::distribute_caption(tokens, opt.patterns);
    });

    // ---- figure separator
    separator::MdiConfig mdi_cfg;
    mdi_cfg.high_confidence_threshold = query.high_confidence_threshold;
    detail::stage("figure separator", items, opt.workers, [&](detail::WorkItem& w) {
        if (opt.mode == DetectionMode::external_json) {
            const auto path = fs::path(opt.detections_dir) / (w.record.figure_id + ".json");
            if (!fs::exists(path)) throw IoError("no detections file " + path.string());
            const auto file = detection_file_from_json(read_json_file(path.string()));
            if (file.figure_id != w.record.figure_id) throw SchemaError("figure_id", "detections file is for another figure");
            if (file.image_width != w.image.width || file.image_height != w.image.height)
                throw SchemaError("image_width", "detections file size does not match the image");
            w.record.detections = file.detections;
        } else {
            w.record.detections = separator::rule_based_segment(w.image);
        }
        for (const auto& d : w.record.detections)
            if (!clip(d.box, w.image.width, w.image.height)) throw SchemaError("detections", "box outside image");
        auto mdi = separator::assemble_mdi(w.record.detections, w.image.width, w.image.height, mdi_cfg);
        w.record.masters = std::move(mdi.masters);
        w.record.unmatched_detections = std::move(mdi.unmatched);
    });

    // ---- scale resolver
    detail::stage("scale resolver", items, opt.workers, [&](detail::WorkItem& w) {
        auto outcome = scale::resolve_scales(w.record.detections, w.record.masters, query.scale_label_confidence_threshold);
        w.record.unmatched_detections.insert(w.record.unmatched_detections.end(), outcome.leftovers.begin(),
                                             outcome.leftovers.end());
    });

    // ---- caption assignment
    detail::stage("caption assignment", items, opt.workers, [&](detail::WorkItem& w) {
        auto assigned = assigner::assign_captions(std::move(w.record.masters), w.record.caption_segments);
        w.record.masters = std::move(assigned.masters);
        w.record.orphan_segments = std::move(assigned.orphans);
        assigner::mark_segment_keywords(w.record.caption_segments, query);
        assigner::mark_segment_keywords(w.record.orphan_segments, query);
        for (auto& m : w.record.masters) assigner::mark_keywords(m, query);
    });

    // ---- self-labeling
    if (opt.self_label) {
        detail::stage("self-labeling", items, opt.workers, [&](detail::WorkItem& w) {
            for (auto& m : w.record.masters) m.labels = detail::self_label(m, *w.article, query, *opt.self_label);
        });
    }

    // ---- output
    detail::stage("write crops", items, opt.workers, [&](detail::WorkItem& w) {
        const auto dir = fs::path("images") / w.record.figure_id;
        fs::create_directories(out / dir);
        for (std::size_t i = 0; i < w.record.masters.size(); ++i) {
            auto& m = w.record.masters[i];
            const auto rel = (dir / detail::crop_name(m, i)).generic_string();
            save_png((out / rel).string(), crop(w.image, m.box));
            m.image_path = rel;
        }
    });

    log_info("stage: write dataset");
    for (auto& w : items) {
        if (w.failed) {
            ++result.figures_failed;
            std::error_code ec;
            fs::remove(out / w.record.image_path, ec);
            fs::remove_all(out / "images" / w.record.figure_id, ec);
            continue;
        }
        doc.figures.push_back(std::move(w.record));
    }
    std::sort(doc.figures.begin(), doc.figures.end(),
              [](const FigureRecord& a, const FigureRecord& b) { return a.figure_id < b.figure_id; });
    doc.statistics = compute_statistics(doc.figures);
    for (const auto& p : validate_document(doc)) log_warning("invariant: " + p);
    write_file((out / "exsclaim.json").string(), serialize_document(doc));
    log_info("wrote " + std::to_string(doc.figures.size()) + " figures, " +
             std::to_string(doc.statistics.master_count) + " masters; " + std::to_string(result.figures_failed) +
             " figures failed");

    result.exit_code = (result.figures_found > 0 && doc.figures.empty()) ? 1 : 0;
    Logger::instance().close_file();
    return result;
}

} // namespace exsclaim::pipeline
