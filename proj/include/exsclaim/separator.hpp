#pragma once

// Figure separation into the Master-Dependent-Inset (MDI) decomposition.
//
// Two detection backends feed `assemble_mdi`: detections.schema files produced by an
// external detector, or `rule_based_segment`, which splits a figure along white gutters.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <tuple>
#include <stdexcept>
#include <utility>
#include <vector>

#include "exsclaim/caption.hpp"
#include "exsclaim/image.hpp"
#include "exsclaim/log.hpp"
#include "exsclaim/types.hpp"

namespace exsclaim::separator {

// ------------------------------------------------------------------ classification

/// Argmax over the scores (ties go to the earlier ImageClass) and the confidence tier.
inline std::pair<ImageClass, ConfidenceTier> classify_with_threshold(const ClassScores& scores,
                                                                     double threshold) {
    if (scores.empty()) return {ImageClass::unclear, ConfidenceTier::no_threshold_only};
    // std::map iterates in enum order, so a strict '>' keeps the earliest on ties.
    auto best = scores.begin();
    for (auto it = scores.begin(); it != scores.end(); ++it)
        if (it->second > best->second) best = it;
    const auto tier = best->second >= threshold ? ConfidenceTier::high_threshold
                                                : ConfidenceTier::no_threshold_only;
    return {best->first, tier};
}

// ------------------------------------------------------------------ rule-based backend

struct SegmenterConfig {
    double max_gutter_variance = 25.0;
    double min_gutter_mean = 220.0;
    int min_gutter_thickness = 8;
    int min_image_side = 32;
};

namespace detail {

struct LineStats {
    const Image& gray;
    const SegmenterConfig& cfg;

    bool row_is_gutter(int y, int x0, int x1) const {
        double sum = 0, sq = 0;
        for (int x = x0; x < x1; ++x) {
            const double v = gray.at(x, y);
            sum += v;
            sq += v * v;
        }
        const double n = x1 - x0;
        const double mean = sum / n;
        return mean > cfg.min_gutter_mean && (sq / n - mean * mean) < cfg.max_gutter_variance;
    }
    bool col_is_gutter(int x, int y0, int y1) const {
        double sum = 0, sq = 0;
        for (int y = y0; y < y1; ++y) {
            const double v = gray.at(x, y);
            sum += v;
            sq += v * v;
        }
        const double n = y1 - y0;
        const double mean = sum / n;
        return mean > cfg.min_gutter_mean && (sq / n - mean * mean) < cfg.max_gutter_variance;
    }
};

// Runs [begin, end) of consecutive true flags that are at least `min_len` long.
inline std::vector<std::pair<int, int>> runs(const std::vector<bool>& flags, int min_len) {
    std::vector<std::pair<int, int>> out;
    int i = 0;
    const int n = static_cast<int>(flags.size());
    while (i < n) {
        if (!flags[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j < n && flags[j]) ++j;
        if (j - i >= min_len) out.emplace_back(i, j);
        i = j;
    }
    return out;
}

inline void split_region(const LineStats& stats, BoundingBox r, std::vector<BoundingBox>& out) {
    // Trim gutter margins until stable; trimming columns can turn rows into gutters.
    while (true) {
        const auto before = r;
        int y0 = r.y0, y1 = r.y1;
        while (y0 < y1 && stats.row_is_gutter(y0, r.x0, r.x1)) ++y0;
        while (y1 > y0 && stats.row_is_gutter(y1 - 1, r.x0, r.x1)) --y1;
        if (y0 >= y1) return;
        r.y0 = y0;
        r.y1 = y1;
        int x0 = r.x0, x1 = r.x1;
        while (x0 < x1 && stats.col_is_gutter(x0, r.y0, r.y1)) ++x0;
        while (x1 > x0 && stats.col_is_gutter(x1 - 1, r.y0, r.y1)) --x1;
        if (x0 >= x1) return;
        r.x0 = x0;
        r.x1 = x1;
        if (r == before) break;
    }

    std::vector<bool> rows(static_cast<std::size_t>(r.height()));
    for (int y = r.y0; y < r.y1; ++y) rows[y - r.y0] = stats.row_is_gutter(y, r.x0, r.x1);
    auto row_runs = runs(rows, stats.cfg.min_gutter_thickness);
    if (!row_runs.empty()) {
        int start = r.y0;
        for (auto [b, e] : row_runs) {
            split_region(stats, {r.x0, start, r.x1, r.y0 + b}, out);
            start = r.y0 + e;
        }
        split_region(stats, {r.x0, start, r.x1, r.y1}, out);
        return;
    }

    std::vector<bool> cols(static_cast<std::size_t>(r.width()));
    for (int x = r.x0; x < r.x1; ++x) cols[x - r.x0] = stats.col_is_gutter(x, r.y0, r.y1);
    auto col_runs = runs(cols, stats.cfg.min_gutter_thickness);
    if (!col_runs.empty()) {
        int start = r.x0;
        for (auto [b, e] : col_runs) {
            split_region(stats, {start, r.y0, r.x0 + b, r.y1}, out);
            start = r.x0 + e;
        }
        split_region(stats, {start, r.y0, r.x1, r.y1}, out);
        return;
    }
    out.push_back(r);
}

} // namespace detail

/// Recursive whitespace-gutter split. Leaves become master candidates with uniform
/// {unclear: 1.0} scores; no labels or scale bars come from this backend.
inline std::vector<Detection> rule_based_segment(const Image& image, const SegmenterConfig& cfg = {}) {
    if (image.empty()) throw std::invalid_argument("rule_based_segment: empty image");
    const Image gray = to_gray(image);
    const BoundingBox whole{0, 0, gray.width, gray.height};

    std::vector<BoundingBox> boxes;
    if (gray.width >= cfg.min_image_side && gray.height >= cfg.min_image_side) {
        detail::LineStats stats{gray, cfg};
        detail::split_region(stats, whole, boxes);
    }
    if (boxes.empty()) boxes.push_back(whole);
    std::sort(boxes.begin(), boxes.end(), reading_order_less);

    std::vector<Detection> out;
    for (const auto& b : boxes) {
        Detection d;
        d.box = b;
        d.kind = DetectionKind::master_candidate;
        d.class_scores = {{ImageClass::unclear, 1.0}};
        d.confidence = 1.0;
        out.push_back(std::move(d));
    }
    return out;
}

// ------------------------------------------------------------------ MDI assembly

struct MdiConfig {
    double inset_min_containment = 0.95;
    double inset_max_area_ratio = 0.30;
    /// Dependent reach, in multiples of the governing master's height (vertical gap)
    /// and width (horizontal gap).
    double dependent_reach = 1.5;
    double high_confidence_threshold = 0.99;
    double overlap_tolerance = 0.1;
};

struct MdiResult {
    std::vector<MasterImage> masters;
    std::vector<Detection> unmatched;
};

/// What happened to each input detection; parallel to the input list.
enum class Fate { master, dependent, inset, label, unmatched, ignored };

struct MdiTrace {
    std::vector<Fate> fate;
    std::vector<int> owner; // index into masters for master/dependent/inset/label, else -1
};

inline MdiResult assemble_mdi(const std::vector<Detection>& detections, int image_width,
                              int image_height, const MdiConfig& cfg = {}, MdiTrace* trace = nullptr) {
    const std::size_t n = detections.size();
    std::vector<Fate> fate(n, Fate::ignored);
    std::vector<int> owner_of(n, -1);

    std::vector<std::size_t> candidates, labels;
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = detections[i].kind;
        if (is_candidate_kind(k)) candidates.push_back(i);
        else if (k == DetectionKind::subfigure_label) labels.push_back(i);
    }
    (void)image_width;
    (void)image_height;

    // Step 1: nesting. Each candidate's container is the tightest other candidate
    // holding at least `inset_min_containment` of its area.
    std::vector<long> container(n, -1);
    for (auto c : candidates) {
        const auto& cb = detections[c].box;
        long best = -1;
        for (auto o : candidates) {
            if (o == c) continue;
            const auto& ob = detections[o].box;
            if (ob.area() <= cb.area()) continue;
            if (containment_ratio(cb, ob) < cfg.inset_min_containment) continue;
            if (best < 0 || ob.area() < detections[best].box.area()) best = static_cast<long>(o);
        }
        container[c] = best;
    }
    auto root_of = [&](std::size_t c) {
        std::size_t r = c;
        while (container[r] >= 0) r = static_cast<std::size_t>(container[r]);
        return r;
    };

    // Top-level master candidates, in reading order.
    std::vector<std::size_t> tops;
    for (auto c : candidates)
        if (container[c] < 0 && detections[c].kind == DetectionKind::master_candidate) tops.push_back(c);
    std::sort(tops.begin(), tops.end(), [&](auto a, auto b) {
        return reading_order_less(detections[a].box, detections[b].box);
    });

    struct Building {
        std::size_t source;
        BoundingBox box;
        std::optional<std::string> id;
        std::vector<BoundingBox> dependents;
        std::vector<BoundingBox> insets;
    };
    std::vector<Building> built;
    std::vector<int> built_index(n, -1);
    for (auto t : tops) {
        built_index[t] = static_cast<int>(built.size());
        built.push_back({t, detections[t].box, std::nullopt, {}, {}});
        fate[t] = Fate::master;
    }

    // Step 2: label association. Containment of the label centre beats distance;
    // remaining ties go to reading order.
    {
        struct Option {
            int contained;
            double dist;
            std::size_t label_rank;
            std::size_t master_rank;
            std::size_t label;
        };
        std::vector<std::size_t> label_order = labels;
        std::sort(label_order.begin(), label_order.end(), [&](auto a, auto b) {
            return reading_order_less(detections[a].box, detections[b].box);
        });
        std::vector<Option> options;
        for (std::size_t lr = 0; lr < label_order.size(); ++lr) {
            const auto l = label_order[lr];
            const auto lc = detections[l].box.center();
            for (std::size_t mr = 0; mr < built.size(); ++mr) {
                const auto& mb = built[mr].box;
                options.push_back({mb.contains(lc) ? 0 : 1, distance(lc, mb.center()), lr, mr, l});
            }
        }
        std::sort(options.begin(), options.end(), [](const Option& a, const Option& b) {
            return std::tie(a.contained, a.dist, a.label_rank, a.master_rank) <
                   std::tie(b.contained, b.dist, b.label_rank, b.master_rank);
        });
        std::vector<bool> label_done(n, false);
        std::set<std::string> used_ids;
        for (const auto& o : options) {
            if (label_done[o.label] || built[o.master_rank].id) continue;
            const auto id = caption::normalize_identifier(detections[o.label].text.value_or(""));
            if (id.empty() || used_ids.count(id)) continue;
            built[o.master_rank].id = id;
            used_ids.insert(id);
            label_done[o.label] = true;
            fate[o.label] = Fate::label;
            owner_of[o.label] = static_cast<int>(o.master_rank);
        }
        for (auto l : labels)
            if (!label_done[l]) fate[l] = Fate::unmatched;
    }

    // Nested candidates attach to their top-level ancestor; the role is decided
    // against the direct container.
    for (auto c : candidates) {
        if (container[c] < 0) continue;
        const auto root = root_of(c);
        const auto& direct = detections[static_cast<std::size_t>(container[c])].box;
        const int target = built_index[root];
        if (target < 0) continue; // resolved with its root below
        const bool small = double(detections[c].box.area()) < cfg.inset_max_area_ratio * double(direct.area());
        const bool inset = detections[c].kind == DetectionKind::inset_candidate ||
                           (detections[c].kind != DetectionKind::dependent_candidate && small);
        if (inset) {
            built[target].insets.push_back(detections[c].box);
            fate[c] = Fate::inset;
        } else {
            built[target].dependents.push_back(detections[c].box);
            fate[c] = Fate::dependent;
        }
        owner_of[c] = target;
    }

    // Step 3: top-level dependent candidates join the nearest labelled master within
    // reach, provided the grown master does not collide with another master.
    std::vector<std::size_t> loose;
    for (auto c : candidates)
        if (container[c] < 0 && detections[c].kind != DetectionKind::master_candidate) loose.push_back(c);
    std::sort(loose.begin(), loose.end(), [&](auto a, auto b) {
        return reading_order_less(detections[a].box, detections[b].box);
    });
    for (auto c : loose) {
        const auto& db = detections[c].box;
        int best = -1;
        double best_dist = 0;
        if (detections[c].kind == DetectionKind::dependent_candidate) {
            for (std::size_t m = 0; m < built.size(); ++m) {
                const auto& mb = built[m].box;
                if (!built[m].id) continue;
                if (vertical_gap(mb, db) > cfg.dependent_reach * mb.height()) continue;
                if (horizontal_gap(mb, db) > cfg.dependent_reach * mb.width()) continue;
                const auto grown = united(mb, db);
                bool collides = false;
                for (std::size_t o = 0; o < built.size(); ++o)
                    if (o != m && iou(grown, built[o].box) > cfg.overlap_tolerance) collides = true;
                if (collides) continue;
                const double d = distance(mb.center(), db.center());
                if (best < 0 || d < best_dist) {
                    best = static_cast<int>(m);
                    best_dist = d;
                }
            }
        }
        auto nested_of_c = [&](Fate as_inset_or_dep, int target) {
            for (auto k : candidates)
                if (k != c && container[k] >= 0 && root_of(k) == c) {
                    const bool inset = detections[k].kind == DetectionKind::inset_candidate ||
                                       (detections[k].kind != DetectionKind::dependent_candidate &&
                                        double(detections[k].box.area()) <
                                            cfg.inset_max_area_ratio *
                                                double(detections[static_cast<std::size_t>(container[k])].box.area()));
                    if (target >= 0) {
                        (inset ? built[target].insets : built[target].dependents).push_back(detections[k].box);
                        fate[k] = inset ? Fate::inset : Fate::dependent;
                        owner_of[k] = target;
                    } else {
                        fate[k] = as_inset_or_dep;
                    }
                }
        };
        if (best < 0) {
            fate[c] = Fate::unmatched;
            nested_of_c(Fate::unmatched, -1);
            continue;
        }
        auto& m = built[static_cast<std::size_t>(best)];
        m.box = united(m.box, db);
        m.dependents.push_back(db);
        fate[c] = Fate::dependent;
        owner_of[c] = best;
        nested_of_c(Fate::unmatched, best);
    }

    // Step 4: classification; anything governing a dependent is a parent.
    MdiResult result;
    for (std::size_t m = 0; m < built.size(); ++m) {
        const auto& b = built[m];
        MasterImage master;
        master.box = b.box;
        master.subfigure_id = b.id;
        master.dependents = b.dependents;
        master.insets = b.insets;
        master.class_scores = detections[b.source].class_scores;
        auto [cls, tier] = classify_with_threshold(master.class_scores, cfg.high_confidence_threshold);
        if (!master.dependents.empty()) {
            cls = ImageClass::parent;
        } else if (cls == ImageClass::parent) {
            auto without = master.class_scores;
            without.erase(ImageClass::parent);
            std::tie(cls, tier) = classify_with_threshold(without, cfg.high_confidence_threshold);
        }
        master.classification = cls;
        master.confidence_tier = tier;
        master.label_category = LabelCategory::caption_unassigned;
        result.masters.push_back(std::move(master));
    }

    // Step 5: leftovers.
    for (std::size_t i = 0; i < n; ++i)
        if (fate[i] == Fate::unmatched) result.unmatched.push_back(detections[i]);

    // Masters were built in reading order of their source boxes; re-sort after growth.
    std::vector<std::size_t> order(result.masters.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return reading_order_less(result.masters[a].box, result.masters[b].box);
    });
    std::vector<MasterImage> sorted;
    std::vector<int> remap(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        remap[order[k]] = static_cast<int>(k);
        sorted.push_back(std::move(result.masters[order[k]]));
    }
    result.masters = std::move(sorted);

    if (trace) {
        for (auto& o : owner_of)
            if (o >= 0) o = remap[static_cast<std::size_t>(o)];
        trace->fate = std::move(fate);
        trace->owner = std::move(owner_of);
    }
    return result;
}

// ------------------------------------------------------------------ layout mask

struct LayoutMask {
    int width = 0;
    int height = 0;
    std::vector<BoundingBox> label_boxes;

    /// 1 inside any label box, 0 elsewhere; row-major width*height.
    std::vector<std::uint8_t> rasterize() const {
        std::vector<std::uint8_t> mask(std::size_t(width) * height, 0);
        for (const auto& b : label_boxes)
            for (int y = b.y0; y < b.y1; ++y)
                for (int x = b.x0; x < b.x1; ++x) mask[std::size_t(y) * width + x] = 1;
        return mask;
    }
};

inline LayoutMask build_layout_mask(const std::vector<Detection>& labels, int width, int height) {
    LayoutMask mask{width, height, {}};
    for (const auto& d : labels) {
        if (d.kind != DetectionKind::subfigure_label)
            throw std::invalid_argument("build_layout_mask: expected subfigure_label detections");
        auto clipped = clip(d.box, width, height);
        if (!clipped) {
            log_warning("subfigure label box lies outside the image; dropped from layout mask");
            continue;
        }
        if (!(*clipped == d.box)) log_warning("subfigure label box clipped to image bounds");
        mask.label_boxes.push_back(*clipped);
    }
    return mask;
}

} // namespace exsclaim::separator
