#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"

#include "exsclaim/caption.hpp"
#include "exsclaim/embedding.hpp"
#include "exsclaim/eval.hpp"
#include "exsclaim/fixture_site.hpp"
#include "exsclaim/http_source.hpp"
#include "exsclaim/image.hpp"
#include "exsclaim/json_io.hpp"
#include "exsclaim/lda.hpp"
#include "exsclaim/log.hpp"
#include "exsclaim/pipeline.hpp"
#include "exsclaim/scale.hpp"
#include "exsclaim/scraper.hpp"
#include "exsclaim/separator.hpp"
#include "exsclaim/text.hpp"

#ifndef EXSCLAIM_DEFAULT_CONFIG_DIR
#define EXSCLAIM_DEFAULT_CONFIG_DIR "config"
#endif

namespace fs = std::filesystem;
using namespace exsclaim;

namespace {

struct SourceOptions {
    std::string adapters = std::string(EXSCLAIM_DEFAULT_CONFIG_DIR) + "/adapters.json";
    std::string fixture_root;
    std::string base_url;
    int delay_ms = 1000;
    bool offline = false;
};

void add_source_options(CLI::App* cmd, SourceOptions& s) {
    cmd->add_option("--adapters", s.adapters, "Journal adapter config")->check(CLI::ExistingFile);
    cmd->add_option("--fixture-root", s.fixture_root, "Directory served for fixture:// URLs")
        ->envname("EXSCLAIM_FIXTURE_ROOT");
    cmd->add_option("--base-url", s.base_url, "Override the adapter's base URL");
    cmd->add_option("--delay", s.delay_ms, "Minimum milliseconds between requests to one host")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--offline", s.offline, "Refuse network access");
}

/// Owns the page sources for one command.
struct Sources {
    std::unique_ptr<fixture::LocalPageSource> local;
    std::unique_ptr<http::HttpPageSource> web;
    std::unique_ptr<http::RoutingPageSource> router;

    explicit Sources(const SourceOptions& s) {
        if (!s.fixture_root.empty()) local = std::make_unique<fixture::LocalPageSource>(s.fixture_root);
        if (!s.offline) {
            auto cfg = http::HttpConfig::from_environment();
            cfg.min_delay = std::chrono::milliseconds(s.delay_ms);
            web = std::make_unique<http::HttpPageSource>(cfg);
        }
        router = std::make_unique<http::RoutingPageSource>(local.get(), web.get());
    }
};

scraper::JournalAdapter adapter_for(const SourceOptions& s, JournalFamily family) {
    const auto all = scraper::load_adapters(s.adapters);
    auto it = all.find(family);
    if (it == all.end()) throw ConfigError("no adapter for journal family '" + std::string(to_string(family)) + "'");
    auto a = it->second;
    if (!s.base_url.empty()) a.base_url = s.base_url;
    return a;
}

Query load_query(const std::string& path) {
    try {
        return parse_query(read_file(path));
    } catch (const std::exception& e) {
        throw IoError("unreadable query " + path + ": " + e.what());
    }
}

void emit(const json& j, const std::string& out) {
    const auto text = j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_file(out, text);
}

/// Documents for model training: one per non-empty line of each input file.
std::vector<std::string> read_corpus(const std::vector<std::string>& inputs) {
    std::vector<std::string> docs;
    for (const auto& in : inputs) {
        std::istringstream lines(read_file(in));
        for (std::string line; std::getline(lines, line);)
            if (!jsonio::trim(line).empty()) docs.push_back(line);
    }
    return docs;
}

pipeline::SelfLabelModels load_models(const std::string& embeddings, const std::string& lda_path,
                                      const std::string& names, std::size_t cap) {
    pipeline::SelfLabelModels m;
    m.embeddings = embedding::EmbeddingModel::from_text(read_file(embeddings));
    m.topics = lda::topic_model_from_json(read_json_file(lda_path));
    m.caption_label_cap = cap;
    if (!names.empty())
        for (auto& [k, v] : read_json_file(names).items()) m.topic_names[std::stoul(k)] = v.get<std::string>();
    return m;
}

json tokens_json(const std::vector<caption::CaptionToken>& tokens) {
    json out = json::array();
    for (const auto& t : tokens)
        out.push_back({{"text", t.text}, {"tag", std::string(caption::to_string(t.tag))}});
    return out;
}

json masters_json(const std::vector<MasterImage>& masters) {
    json out = json::array();
    for (const auto& m : masters) out.push_back(to_json(m));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mine labeled microscopy images from journal figures"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    // ---- run
    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline for a query");
    std::string query_path, detections_dir, out_dir, patterns_path, embeddings_path, lda_path, names_path, timestamp;
    bool rule_based = false, self_label = false, full_text = false;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::size_t label_cap = 5;
    SourceOptions run_src;
    run_cmd->add_option("query", query_path, "Query JSON file")->required();
    auto* det_opt = run_cmd->add_option("--detections", detections_dir, "Directory of <figure_id>.json detections");
    run_cmd->add_flag("--rule-based", rule_based, "Use the gutter segmenter (default)")->excludes(det_opt);
    run_cmd->add_flag("--self-label", self_label, "Attach caption, abstract and topic labels");
    run_cmd->add_flag("--full-text", full_text, "Keep article full text");
    run_cmd->add_option("--out", out_dir, "Output directory (overrides the query)");
    run_cmd->add_option("--workers", workers, "Figure worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_option("--patterns", patterns_path, "Caption pattern dictionary")->check(CLI::ExistingFile);
    run_cmd->add_option("--embeddings", embeddings_path, "Embedding model file (self-label)");
    run_cmd->add_option("--lda", lda_path, "Topic model file (self-label)");
    run_cmd->add_option("--topic-names", names_path, "JSON map of topic index to name");
    run_cmd->add_option("--caption-labels", label_cap, "Caption label cap")->check(CLI::PositiveNumber);
    run_cmd->add_option("--timestamp", timestamp, "Fixed created_at value");
    add_source_options(run_cmd, run_src);

    // ---- scrape
    auto* scrape_cmd = app.add_subcommand("scrape", "Search and scrape articles only");
    std::string scrape_out;
    SourceOptions scrape_src;
    scrape_cmd->add_option("query", query_path, "Query JSON file")->required();
    scrape_cmd->add_option("--out", scrape_out, "Write JSON here instead of stdout");
    add_source_options(scrape_cmd, scrape_src);

    // ---- caption
    auto* caption_cmd = app.add_subcommand("caption", "Caption tools");
    caption_cmd->require_subcommand(1);
    auto* parse_cmd = caption_cmd->add_subcommand("parse", "Tokenize, tag and distribute a caption");
    std::string caption_text;
    parse_cmd->add_option("text", caption_text, "Caption text")->required();
    parse_cmd->add_option("--patterns", patterns_path, "Caption pattern dictionary")->check(CLI::ExistingFile);

    // ---- separate
    auto* sep_cmd = app.add_subcommand("separate", "Decompose one figure into master images");
    std::string figure_png, det_file, overlay;
    sep_cmd->add_option("figure", figure_png, "Figure PNG")->required()->check(CLI::ExistingFile);
    auto* sep_det = sep_cmd->add_option("--detections", det_file, "Detections JSON")->check(CLI::ExistingFile);
    sep_cmd->add_flag("--rule-based", rule_based, "Use the gutter segmenter")->excludes(sep_det);
    sep_cmd->add_option("--overlay", overlay, "Write an annotated PNG here");
    double sep_high = 0.99, sep_scale = 0.2;
    sep_cmd->add_option("--high-confidence", sep_high, "High-tier threshold");
    sep_cmd->add_option("--scale-confidence", sep_scale, "Scale label confidence threshold");

    // ---- scale
    auto* scale_cmd = app.add_subcommand("scale", "Resolve scale bars from a detections file");
    std::string scale_det;
    scale_cmd->add_option("detections", scale_det, "Detections JSON")->required()->check(CLI::ExistingFile);
    scale_cmd->add_option("--scale-confidence", sep_scale, "Scale label confidence threshold");

    // ---- label
    auto* label_cmd = app.add_subcommand("label", "Self-label masters of an existing dataset");
    std::string doc_path, label_out;
    label_cmd->add_option("dataset", doc_path, "exsclaim.json")->required()->check(CLI::ExistingFile);
    label_cmd->add_option("--embeddings", embeddings_path, "Embedding model file")->required();
    label_cmd->add_option("--lda", lda_path, "Topic model file")->required();
    label_cmd->add_option("--topic-names", names_path, "JSON map of topic index to name");
    label_cmd->add_option("--caption-labels", label_cap, "Caption label cap")->check(CLI::PositiveNumber);
    label_cmd->add_option("--out", label_out, "Output file (default: overwrite the dataset)");

    // ---- train-embeddings
    auto* temb_cmd = app.add_subcommand("train-embeddings", "Train skip-gram embeddings");
    std::vector<std::string> corpus;
    std::string model_out;
    embedding::TrainingConfig tcfg;
    temb_cmd->add_option("corpus", corpus, "Text files, one document per line")->required()->check(CLI::ExistingFile);
    temb_cmd->add_option("--out", model_out, "Model file")->required();
    temb_cmd->add_option("--dim", tcfg.dim);
    temb_cmd->add_option("--window", tcfg.window);
    temb_cmd->add_option("--negative", tcfg.negative);
    temb_cmd->add_option("--min-count", tcfg.min_count);
    temb_cmd->add_option("--epochs", tcfg.epochs);
    temb_cmd->add_option("--lr", tcfg.learning_rate);
    temb_cmd->add_option("--seed", tcfg.seed);

    // ---- train-lda
    auto* tlda_cmd = app.add_subcommand("train-lda", "Train an LDA topic model");
    lda::LdaConfig lcfg;
    double alpha = 0;
    tlda_cmd->add_option("corpus", corpus, "Text files, one document per line")->required()->check(CLI::ExistingFile);
    tlda_cmd->add_option("--out", model_out, "Model file")->required();
    tlda_cmd->add_option("--topics", lcfg.topics);
    auto* alpha_opt = tlda_cmd->add_option("--alpha", alpha, "Document prior (default 50/K)");
    tlda_cmd->add_option("--beta", lcfg.beta);
    tlda_cmd->add_option("--iterations", lcfg.iterations);
    tlda_cmd->add_option("--seed", lcfg.seed);

    // ---- eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a dataset against ground truth");
    std::string truth_dir, eval_out;
    eval_cmd->add_option("dataset", doc_path, "exsclaim.json")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("groundtruth", truth_dir, "Ground-truth directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--out", eval_out, "Report file (default stdout)");

    // ---- serve-fixture
    auto* serve_cmd = app.add_subcommand("serve-fixture", "Serve a fixture journal over HTTP");
    std::string serve_root, host = "127.0.0.1";
    int port = 8080;
    serve_cmd->add_option("root", serve_root, "Fixture directory")->required()->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);

    CLI11_PARSE(app, argc, argv);
    if (verbose) Logger::instance().set_console_level(LogLevel::info);

    try {
        if (*run_cmd) {
            Query query;
            try {
                query = load_query(query_path);
            } catch (const std::exception& e) {
                log_error(e.what());
                return 2;
            }
            pipeline::RunOptions opt;
            opt.mode = detections_dir.empty() ? pipeline::DetectionMode::rule_based : pipeline::DetectionMode::external_json;
            opt.detections_dir = detections_dir;
            opt.out_dir = out_dir;
            opt.workers = workers;
            opt.full_text = full_text;
            if (!patterns_path.empty()) opt.patterns = caption::load_patterns(patterns_path);
            if (!timestamp.empty()) opt.timestamp = timestamp;
            std::optional<pipeline::SelfLabelModels> models;
            if (self_label) {
                if (embeddings_path.empty() || lda_path.empty())
                    throw ConfigError("--self-label needs --embeddings and --lda");
                models = load_models(embeddings_path, lda_path, names_path, label_cap);
                opt.self_label = &*models;
            }
            Sources sources(run_src);
            const auto adapter = adapter_for(run_src, query.journal_family);
            const auto result = pipeline::run(query, opt, *sources.router, adapter);
            std::cout << (result.output_dir / "exsclaim.json").string() << ": " << result.document.figures.size()
                      << " figures, " << result.document.statistics.master_count << " masters, "
                      << result.figures_failed << " failed\n";
            return result.exit_code;
        }

        if (*scrape_cmd) {
            const auto query = load_query(query_path);
            Sources sources(scrape_src);
            const auto adapter = adapter_for(scrape_src, query.journal_family);
            const auto ranked = scraper::collect_article_urls(adapter, *sources.router,
                                                              scraper::enumerate_combinations(query.keyword_families),
                                                              query.article_limit, query.sort_order);
            json out = json::array();
            const scraper::ScrapeOptions sopt{query.open_access_only, false};
            for (const auto& r : ranked) {
                auto a = scraper::scrape_article(adapter, *sources.router, r.url, sopt, r.rank);
                if (!a) continue;
                json figs = json::array();
                for (const auto& f : a->figures)
                    figs.push_back({{"figure_id", f.figure_id}, {"image_url", f.image_url}, {"caption", f.caption}});
                out.push_back({{"article", to_json(a->article)}, {"figures", figs}});
            }
            emit(out, scrape_out);
            return 0;
        }

        if (*caption_cmd) {
            const auto patterns = patterns_path.empty() ? caption::default_patterns() : caption::load_patterns(patterns_path);
            const auto tokens = caption::tokenize_and_tag(caption_text);
            emit({{"tokens", tokens_json(tokens)},
                  {"segments", segments_to_json(caption::distribute_caption(tokens, patterns))}},
                 "");
            return 0;
        }

        if (*sep_cmd) {
            auto image = load_png(figure_png);
            std::vector<Detection> detections;
            if (!det_file.empty()) {
                const auto f = detection_file_from_json(read_json_file(det_file));
                if (f.image_width != image.width || f.image_height != image.height)
                    throw SchemaError("image_width", "detections do not match the image size");
                detections = f.detections;
            } else {
                detections = separator::rule_based_segment(image);
            }
            separator::MdiConfig cfg;
            cfg.high_confidence_threshold = sep_high;
            auto mdi = separator::assemble_mdi(detections, image.width, image.height, cfg);
            auto scales = scale::resolve_scales(detections, mdi.masters, sep_scale);
            mdi.unmatched.insert(mdi.unmatched.end(), scales.leftovers.begin(), scales.leftovers.end());
            if (!overlay.empty()) {
                auto rgb = image.channels == 3 ? image : Image(image.width, image.height, 3);
                if (image.channels != 3)
                    for (int y = 0; y < image.height; ++y)
                        for (int x = 0; x < image.width; ++x)
                            for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = image.at(x, y, 0);
                for (const auto& m : mdi.masters) {
                    draw_outline(rgb, m.box, 220, 30, 30);
                    for (const auto& d : m.dependents) draw_outline(rgb, d, 30, 30, 220);
                    for (const auto& i : m.insets) draw_outline(rgb, i, 30, 160, 30);
                    if (m.scale) draw_outline(rgb, m.scale->bar_box, 230, 150, 0);
                }
                save_png(overlay, rgb);
            }
            emit({{"image_width", image.width},
                  {"image_height", image.height},
                  {"masters", masters_json(mdi.masters)},
                  {"unmatched_detections", detections_to_json(mdi.unmatched)}},
                 "");
            return 0;
        }

        if (*scale_cmd) {
            const auto f = detection_file_from_json(read_json_file(scale_det));
            auto mdi = separator::assemble_mdi(f.detections, f.image_width, f.image_height, {});
            auto out = scale::resolve_scales(f.detections, mdi.masters, sep_scale);
            json scales = json::array();
            for (const auto& m : mdi.masters)
                scales.push_back({{"subfigure_id", opt_json(m.subfigure_id)},
                                  {"box", to_json(m.box)},
                                  {"scale", m.scale ? to_json(*m.scale) : json(nullptr)}});
            emit({{"masters", scales}, {"leftovers", detections_to_json(out.leftovers)}}, "");
            return 0;
        }

        if (*label_cmd) {
            auto doc = parse_document(read_file(doc_path));
            const auto models = load_models(embeddings_path, lda_path, names_path, label_cap);
            std::map<std::string, const Article*> by_doi;
            for (const auto& a : doc.articles) by_doi[a.doi] = &a;
            for (auto& f : doc.figures) {
                auto it = by_doi.find(f.article_doi);
                if (it == by_doi.end()) {
                    log_warning("figure " + f.figure_id + " has no article; skipped");
                    continue;
                }
                for (auto& m : f.masters) m.labels = pipeline::detail::self_label(m, *it->second, doc.query, models);
            }
            write_file(label_out.empty() ? doc_path : label_out, serialize_document(doc));
            return 0;
        }

        if (*temb_cmd) {
            const auto model = embedding::train_embeddings(read_corpus(corpus), tcfg);
            write_file(model_out, model.to_text());
            std::cout << model.size() << " words, dimension " << model.dim() << "\n";
            return 0;
        }

        if (*tlda_cmd) {
            if (*alpha_opt) lcfg.alpha = alpha;
            std::vector<std::vector<std::string>> docs;
            for (const auto& d : read_corpus(corpus)) docs.push_back(text::preprocess(d));
            const auto model = lda::train_lda(docs, lcfg);
            emit(lda::to_json(model), model_out);
            std::cout << model.K << " topics over " << model.V() << " words\n";
            return 0;
        }

        if (*eval_cmd) {
            const auto doc = parse_document(read_file(doc_path));
            const auto report = eval::evaluate(doc, eval::load_groundtruth_dir(truth_dir));
            emit(eval::to_json(report), eval_out);
            return 0;
        }

        if (*serve_cmd) {
            fixture::FixtureSite site(serve_root);
            httplib::Server server;
            server.Get(".*", [&](const httplib::Request& req, httplib::Response& res) {
                std::string query;
                for (const auto& [k, v] : req.params)
                    query += (query.empty() ? "" : "&") + k + "=" + scraper::url_encode(v);
                const auto r = site.get(req.path, query);
                res.status = r.status;
                res.set_content(r.body, r.content_type.empty() ? "text/plain" : r.content_type.c_str());
            });
            std::cout << "serving " << serve_root << " on http://" << host << ":" << port << "\n" << std::flush;
            if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
