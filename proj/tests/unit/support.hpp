#pragma once

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "exsclaim/json_io.hpp"

namespace testing_support {

inline std::filesystem::path fixture_dir() { return EXSCLAIM_FIXTURE_DIR; }
inline std::filesystem::path source_dir() { return EXSCLAIM_SOURCE_DIR; }

inline exsclaim::json expected() { return exsclaim::read_json_file((fixture_dir() / "expected.json").string()); }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("exsclaim-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

private:
    std::filesystem::path path_;
};

struct CommandResult {
    int exit_code = -1;
    std::string output; // stdout only
};

/// Run a shell command, capturing stdout.
inline CommandResult run_command(const std::string& cmd) {
    CommandResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    while (auto n = fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

/// Differences between a fixture run and the hand-authored expectations; empty
/// when they agree. Crop paths are checked against files under `out_dir`.
inline std::vector<std::string> fixture_mismatches(const exsclaim::ExsclaimDocument& doc, const exsclaim::json& want,
                                                   const std::filesystem::path& out_dir) {
    using exsclaim::json;
    std::vector<std::string> bad;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };

    std::vector<std::string> dois;
    for (const auto& a : doc.articles) dois.push_back(a.doi);
    check(dois == want.at("articles").get<std::vector<std::string>>(), "article order");
    check(doc.figures.size() == want.at("figure_count").get<std::size_t>(), "figure count");

    std::set<std::string> referenced;
    for (const auto& f : doc.figures) {
        const auto where = f.figure_id + ": ";
        if (!want.at("figures").contains(f.figure_id)) {
            bad.push_back(where + "unexpected figure");
            continue;
        }
        const auto& wf = want.at("figures").at(f.figure_id);
        check(f.caption_missing == wf.at("caption_missing").get<bool>(), where + "caption_missing");
        const auto& wc = wf.at("caption_text");
        check(wc.is_null() ? f.caption_text.empty() : f.caption_text == wc.get<std::string>(), where + "caption_text");
        check(f.caption_segments.size() == wf.at("segments").get<std::size_t>(), where + "segment count");
        check(f.unmatched_detections.size() == wf.at("unmatched_detections").get<std::size_t>(),
              where + "unmatched detections");
        std::vector<std::string> orphans;
        for (const auto& o : f.orphan_segments) orphans.push_back(o.subfigure_id);
        check(orphans == wf.at("orphans").get<std::vector<std::string>>(), where + "orphans");

        const auto& wm = wf.at("masters");
        if (wm.size() != f.masters.size()) {
            bad.push_back(where + "master count");
            continue;
        }
        for (std::size_t i = 0; i < wm.size(); ++i) {
            const auto& m = f.masters[i];
            const auto& e = wm[i];
            const auto at = where + "master " + std::to_string(i) + " ";
            const auto id = e.at("subfigure_id").is_null() ? std::optional<std::string>()
                                                           : e.at("subfigure_id").get<std::string>();
            check(m.subfigure_id == id, at + "subfigure_id");
            check(std::string(exsclaim::to_string(m.classification)) == e.at("class").get<std::string>(), at + "class");
            const auto seg = e.at("segment").is_null() ? std::optional<std::string>() : e.at("segment").get<std::string>();
            check(m.caption_segment == seg, at + "segment");
            check(m.keywords == e.at("keywords").get<std::vector<std::string>>(), at + "keywords");
            check(std::string(exsclaim::to_string(m.label_category)) == e.at("label_category").get<std::string>(),
                  at + "label_category");
            const auto& ws = e.at("scale");
            if (ws.is_null()) {
                check(!m.scale, at + "unexpected scale");
            } else if (!m.scale) {
                bad.push_back(at + "missing scale");
            } else {
                check(m.scale->bar_length_px == ws.at("bar_length_px").get<int>(), at + "bar length");
                const double nm = ws.at("nm_per_pixel").get<double>();
                check(std::abs(m.scale->nm_per_pixel - nm) <= 1e-9 * nm, at + "nm_per_pixel");
                check(m.scale->label_text == ws.at("label_text").get<std::string>(), at + "scale label");
            }
            const auto crop = e.at("crop").get<std::string>();
            check(m.image_path == crop, at + "crop path");
            check(std::filesystem::is_regular_file(out_dir / crop), at + "crop file missing");
            check(referenced.insert(crop).second, at + "crop referenced twice");
        }
    }

    std::set<std::string> on_disk;
    if (std::filesystem::is_directory(out_dir / "images"))
        for (const auto& e : std::filesystem::recursive_directory_iterator(out_dir / "images"))
            if (e.is_regular_file()) on_disk.insert(std::filesystem::relative(e.path(), out_dir).string());
    check(on_disk == referenced, "crop files on disk differ from referenced crops");

    for (const auto& [name, n] : want.at("label_categories").items()) {
        const auto cat = exsclaim::parse_label_category(name);
        check(cat && doc.statistics.category_counts.at(*cat) == n.get<int>(), "category count " + name);
    }
    for (const auto& [name, n] : want.at("class_counts").items()) {
        const auto cls = exsclaim::parse_image_class(name);
        check(cls && doc.statistics.class_counts.at(*cls).total == n.get<int>(), "class count " + name);
    }
    check(doc.statistics.master_count == want.at("master_count").get<int>(), "master count");
    return bad;
}

} // namespace testing_support
