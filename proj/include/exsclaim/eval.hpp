#pragma once

// Evaluation against ground-truth annotations: confusion matrices at both confidence
// tiers, per-class precision/recall, and scale-bar length error.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "exsclaim/json_io.hpp"
#include "exsclaim/log.hpp"
#include "exsclaim/types.hpp"

namespace exsclaim::eval {

// ------------------------------------------------------------------ ground truth

struct GroundTruthScaleBar {
    BoundingBox line_box;
    int length_px = 0;
    std::string label_text;
    std::optional<BoundingBox> label_box;

    friend bool operator==(const GroundTruthScaleBar&, const GroundTruthScaleBar&) = default;
};

struct GroundTruthMaster {
    BoundingBox box;
    std::optional<std::string> subfigure_id;
    std::optional<BoundingBox> label_box;
    ImageClass image_class = ImageClass::unclear;
    std::vector<BoundingBox> dependents;
    std::vector<BoundingBox> insets;
    std::vector<GroundTruthScaleBar> scale_bars;

    friend bool operator==(const GroundTruthMaster&, const GroundTruthMaster&) = default;
};

struct GroundTruthFigure {
    std::string figure_id;
    int image_width = 0;
    int image_height = 0;
    std::vector<GroundTruthMaster> masters;

    friend bool operator==(const GroundTruthFigure&, const GroundTruthFigure&) = default;
};

inline json to_json(const GroundTruthFigure& g) {
    json masters = json::array();
    for (const auto& m : g.masters) {
        json bars = json::array();
        for (const auto& b : m.scale_bars)
            bars.push_back({{"line_box", exsclaim::to_json(b.line_box)},
                            {"length_px", b.length_px},
                            {"label_text", b.label_text},
                            {"label_box", b.label_box ? exsclaim::to_json(*b.label_box) : json(nullptr)}});
        masters.push_back({{"box", exsclaim::to_json(m.box)},
                           {"subfigure_id", m.subfigure_id ? json(*m.subfigure_id) : json(nullptr)},
                           {"label_box", m.label_box ? exsclaim::to_json(*m.label_box) : json(nullptr)},
                           {"class", std::string(to_string(m.image_class))},
                           {"dependents", boxes_to_json(m.dependents)},
                           {"insets", boxes_to_json(m.insets)},
                           {"scale_bars", bars}});
    }
    return {{"figure_id", g.figure_id},
            {"image_width", g.image_width},
            {"image_height", g.image_height},
            {"masters", masters}};
}

inline GroundTruthFigure groundtruth_from_json(const json& j) {
    jsonio::Reader in(j, "");
    GroundTruthFigure g;
    g.figure_id = in.str("figure_id");
    g.image_width = static_cast<int>(in.integer("image_width"));
    g.image_height = static_cast<int>(in.integer("image_height"));
    const auto& masters = in.array("masters");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < masters.size(); ++i) {
        const auto path = jsonio::index_path("masters", i);
        jsonio::Reader m(masters[i], path);
        GroundTruthMaster gm;
        gm.box = box_from_json(m.at("box"), path + ".box");
        gm.subfigure_id = m.opt_str("subfigure_id");
        if (gm.subfigure_id && !ids.insert(*gm.subfigure_id).second)
            throw SchemaError(path + ".subfigure_id", "duplicate subfigure id '" + *gm.subfigure_id + "'");
        if (m.has("label_box")) gm.label_box = box_from_json(m.at("label_box"), path + ".label_box");
        gm.image_class = m.enumeration<ImageClass>("class", parse_image_class);
        gm.dependents = boxes_from_json(m.array_or_empty("dependents"), path + ".dependents");
        gm.insets = boxes_from_json(m.array_or_empty("insets"), path + ".insets");
        for (const auto& b : gm.dependents)
            if (!gm.box.contains(b)) throw SchemaError(path + ".dependents", "dependent outside its master");
        for (const auto& b : gm.insets)
            if (!gm.box.contains(b)) throw SchemaError(path + ".insets", "inset outside its master");
        const auto& bars = m.array_or_empty("scale_bars");
        for (std::size_t k = 0; k < bars.size(); ++k) {
            const auto bp = jsonio::index_path(path + ".scale_bars", k);
            jsonio::Reader b(bars[k], bp);
            GroundTruthScaleBar bar;
            bar.line_box = box_from_json(b.at("line_box"), bp + ".line_box");
            bar.length_px = static_cast<int>(b.integer("length_px"));
            if (bar.length_px < 0) throw RangeError(bp + ".length_px", "must be >= 0");
            bar.label_text = b.str_or("label_text", "");
            if (b.has("label_box")) bar.label_box = box_from_json(b.at("label_box"), bp + ".label_box");
            gm.scale_bars.push_back(std::move(bar));
        }
        g.masters.push_back(std::move(gm));
    }
    return g;
}

inline GroundTruthFigure load_groundtruth(const std::string& path) { return groundtruth_from_json(read_json_file(path)); }

/// All *.json files in a directory, keyed by figure_id.
inline std::map<std::string, GroundTruthFigure> load_groundtruth_dir(const std::string& dir) {
    std::map<std::string, GroundTruthFigure> out;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto g = load_groundtruth(f.string());
        auto id = g.figure_id;
        if (!out.emplace(id, std::move(g)).second) throw SchemaError(f.string(), "duplicate figure_id " + id);
    }
    return out;
}

// ------------------------------------------------------------------ metrics

inline constexpr std::size_t K = image_class_count;
using Matrix = std::array<std::array<long, K>, K>; // [truth][prediction]

inline std::size_t class_index(ImageClass c) { return static_cast<std::size_t>(c); }

struct Prediction {
    std::string id;
    ImageClass image_class = ImageClass::unclear;
    ConfidenceTier tier = ConfidenceTier::no_threshold_only;
};

struct Truth {
    std::string id;
    ImageClass image_class = ImageClass::unclear;
};

enum class TierFilter { none, high };

struct ConfusionResult {
    Matrix matrix{};
    long counted = 0;
    long abstained = 0; // below-threshold predictions left out of a high-tier matrix
};

inline ConfusionResult confusion_matrix(const std::vector<Prediction>& predictions, const std::vector<Truth>& truths,
                                        TierFilter filter) {
    std::map<std::string, const Truth*> by_id;
    std::vector<std::string> problems;
    for (const auto& t : truths)
        if (!by_id.emplace(t.id, &t).second) problems.push_back("duplicate truth id " + t.id);
    std::set<std::string> seen;
    for (const auto& p : predictions) {
        if (!by_id.count(p.id)) problems.push_back("prediction without truth: " + p.id);
        if (!seen.insert(p.id).second) problems.push_back("duplicate prediction id " + p.id);
    }
    for (const auto& t : truths)
        if (!seen.count(t.id)) problems.push_back("truth without prediction: " + t.id);
    if (!problems.empty()) {
        std::string msg = "alignment failed:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw AlignmentError(msg);
    }

    ConfusionResult r;
    for (const auto& p : predictions) {
        if (filter == TierFilter::high && p.tier != ConfidenceTier::high_threshold) {
            ++r.abstained;
            continue;
        }
        ++r.matrix[class_index(by_id.at(p.id)->image_class)][class_index(p.image_class)];
        ++r.counted;
    }
    return r;
}

struct ClassMetrics {
    std::optional<double> precision; // nullopt when the class was never predicted
    std::optional<double> recall;    // nullopt when the class never occurs in truth
};

inline std::array<ClassMetrics, K> precision_recall(const Matrix& m) {
    std::array<ClassMetrics, K> out;
    for (std::size_t c = 0; c < K; ++c) {
        long col = 0, row = 0;
        for (std::size_t r = 0; r < K; ++r) col += m[r][c];
        for (std::size_t k = 0; k < K; ++k) row += m[c][k];
        if (col > 0) out[c].precision = static_cast<double>(m[c][c]) / static_cast<double>(col);
        if (row > 0) out[c].recall = static_cast<double>(m[c][c]) / static_cast<double>(row);
    }
    return out;
}

struct BarPair {
    std::string id;
    double predicted_px = 0;
    double truth_px = 0;
};

/// Mean |pred - truth| / truth; zero-length truths are skipped. nullopt when no pair counts.
inline std::optional<double> scale_length_error(const std::vector<BarPair>& pairs) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& p : pairs) {
        if (p.truth_px == 0) {
            log_warning("scale bar " + p.id + " has zero ground-truth length; excluded");
            continue;
        }
        sum += std::abs(p.predicted_px - p.truth_px) / p.truth_px;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

// ------------------------------------------------------------------ document alignment

struct Alignment {
    std::vector<Prediction> predictions;
    std::vector<Truth> truths;
    std::vector<BarPair> bars;
    long missed_truths = 0;       // annotated masters with no predicted counterpart
    long spurious_predictions = 0; // predicted masters with no annotated counterpart
};

/// Pair predicted and annotated masters per figure: equal subfigure ids first, then
/// remaining boxes greedily by IoU >= 0.5.
inline Alignment align(const ExsclaimDocument& doc, const std::map<std::string, GroundTruthFigure>& truth) {
    Alignment a;
    for (const auto& fig : doc.figures) {
        auto it = truth.find(fig.figure_id);
        if (it == truth.end()) continue;
        const auto& gt = it->second.masters;
        std::vector<bool> p_used(fig.masters.size()), t_used(gt.size());
        std::vector<std::pair<std::size_t, std::size_t>> matched;
        for (std::size_t p = 0; p < fig.masters.size(); ++p) {
            if (!fig.masters[p].subfigure_id) continue;
            for (std::size_t t = 0; t < gt.size(); ++t)
                if (!t_used[t] && gt[t].subfigure_id == fig.masters[p].subfigure_id) {
                    matched.emplace_back(p, t);
                    p_used[p] = t_used[t] = true;
                    break;
                }
        }
        struct Cand {
            double iou;
            std::size_t p, t;
        };
        std::vector<Cand> cands;
        for (std::size_t p = 0; p < fig.masters.size(); ++p)
            for (std::size_t t = 0; t < gt.size(); ++t)
                if (!p_used[p] && !t_used[t]) {
                    const double v = iou(fig.masters[p].box, gt[t].box);
                    if (v >= 0.5) cands.push_back({v, p, t});
                }
        std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            return x.iou != y.iou ? x.iou > y.iou : std::tie(x.p, x.t) < std::tie(y.p, y.t);
        });
        for (const auto& c : cands)
            if (!p_used[c.p] && !t_used[c.t]) {
                matched.emplace_back(c.p, c.t);
                p_used[c.p] = t_used[c.t] = true;
            }
        for (std::size_t p = 0; p < p_used.size(); ++p) a.spurious_predictions += !p_used[p];
        for (std::size_t t = 0; t < t_used.size(); ++t) a.missed_truths += !t_used[t];

        std::sort(matched.begin(), matched.end());
        for (auto [p, t] : matched) {
            const auto& pm = fig.masters[p];
            const auto id = fig.figure_id + "#" + (gt[t].subfigure_id ? *gt[t].subfigure_id : "m" + std::to_string(t));
            a.predictions.push_back({id, pm.classification, pm.confidence_tier});
            a.truths.push_back({id, gt[t].image_class});
            if (pm.scale && !gt[t].scale_bars.empty())
                a.bars.push_back({id, static_cast<double>(pm.scale->bar_length_px),
                                  static_cast<double>(gt[t].scale_bars.front().length_px)});
        }
    }
    return a;
}

struct Report {
    ConfusionResult no_threshold;
    ConfusionResult high_threshold;
    std::array<ClassMetrics, K> metrics_no_threshold;
    std::array<ClassMetrics, K> metrics_high_threshold;
    std::optional<double> scale_error;
    long missed_truths = 0;
    long spurious_predictions = 0;
    std::map<LabelCategory, int> categories;
};

inline Report evaluate(const ExsclaimDocument& doc, const std::map<std::string, GroundTruthFigure>& truth) {
    const auto a = align(doc, truth);
    Report r;
    r.no_threshold = confusion_matrix(a.predictions, a.truths, TierFilter::none);
    r.high_threshold = confusion_matrix(a.predictions, a.truths, TierFilter::high);
    r.metrics_no_threshold = precision_recall(r.no_threshold.matrix);
    r.metrics_high_threshold = precision_recall(r.high_threshold.matrix);
    r.scale_error = scale_length_error(a.bars);
    r.missed_truths = a.missed_truths;
    r.spurious_predictions = a.spurious_predictions;
    r.categories = compute_statistics(doc.figures).category_counts;
    return r;
}

inline json to_json(const ConfusionResult& c) {
    json rows = json::object();
    for (auto t : all_image_classes) {
        json row = json::object();
        for (auto p : all_image_classes) row[std::string(to_string(p))] = c.matrix[class_index(t)][class_index(p)];
        rows[std::string(to_string(t))] = row;
    }
    return {{"matrix", rows}, {"counted", c.counted}, {"abstained", c.abstained}};
}

inline json to_json(const std::array<ClassMetrics, K>& m) {
    json out = json::object();
    for (auto c : all_image_classes) {
        const auto& x = m[class_index(c)];
        out[std::string(to_string(c))] = {{"precision", x.precision ? json(*x.precision) : json(nullptr)},
                                          {"recall", x.recall ? json(*x.recall) : json(nullptr)}};
    }
    return out;
}

inline json to_json(const Report& r) {
    json cats = json::object();
    for (auto& [c, n] : r.categories) cats[std::string(to_string(c))] = n;
    return {{"no_threshold", {{"confusion", to_json(r.no_threshold)}, {"per_class", to_json(r.metrics_no_threshold)}}},
            {"high_threshold",
             {{"confusion", to_json(r.high_threshold)}, {"per_class", to_json(r.metrics_high_threshold)}}},
            {"scale_length_error", r.scale_error ? json(*r.scale_error) : json(nullptr)},
            {"missed_truths", r.missed_truths},
            {"spurious_predictions", r.spurious_predictions},
            {"label_categories", cats}};
}

} // namespace exsclaim::eval
