#pragma once

// Scale-bar resolution: label validation, greedy line/label pairing, and
// real-space measurement of the master that contains each pair.

#include <algorithm>
#include <optional>
#include <regex>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "exsclaim/log.hpp"
#include "exsclaim/types.hpp"

namespace exsclaim::scale {

struct ScaleLabelText {
    std::string raw;
    double magnitude = 0.0;
    LengthUnit unit = LengthUnit::nm;
    double recognition_confidence = 0.0;
};

enum class Rejection { low_confidence, malformed, unknown_unit };

inline std::string_view to_string(Rejection r) {
    switch (r) {
    case Rejection::low_confidence: return "low_confidence";
    case Rejection::malformed: return "malformed";
    case Rejection::unknown_unit: return "unknown_unit";
    }
    return "?";
}

using LabelResult = std::variant<ScaleLabelText, Rejection>;

inline std::optional<LengthUnit> parse_unit_alias(const std::string& u) {
    if (u == "\xC3\x85" /* Å */ || u == "\xE2\x84\xAB" /* Å (angstrom sign) */ || u == "A")
        return LengthUnit::angstrom;
    if (u == "nm") return LengthUnit::nm;
    if (u == "\xC2\xB5m" /* µm */ || u == "\xCE\xBCm" /* μm */ || u == "um") return LengthUnit::um;
    if (u == "mm") return LengthUnit::mm;
    return std::nullopt;
}

/// Accepts "<decimal>[ ]<unit>" with a recognised unit alias and enough confidence.
inline LabelResult validate_scale_label(const std::string& raw, double confidence, double threshold) {
    if (confidence < threshold) return Rejection::low_confidence;
    // Unit part: any run of non-space, non-digit bytes (UTF-8 aliases included).
    static const std::regex shape(R"(^\s*((?:\d+(?:\.\d*)?|\.\d+))\s?([^\s\d.][^\s\d]*)\s*$)");
    std::smatch m;
    if (!std::regex_match(raw, m, shape)) return Rejection::malformed;
    const auto unit = parse_unit_alias(m[2].str());
    if (!unit) return Rejection::unknown_unit;
    const double magnitude = std::stod(m[1].str());
    if (!(magnitude > 0)) return Rejection::malformed;
    return ScaleLabelText{raw, magnitude, *unit, confidence};
}

struct Pairing {
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // (line index, label index), emission order
    std::vector<std::size_t> leftover_lines;
    std::vector<std::size_t> leftover_labels;
};

/// Globally-minimum-first matching on Euclidean centre distance. Ties go to the
/// lower (line index, label index).
inline Pairing greedy_pair(const std::vector<BoundingBox>& lines, const std::vector<BoundingBox>& labels) {
    struct Edge {
        double d;
        std::size_t line, label;
    };
    std::vector<Edge> edges;
    edges.reserve(lines.size() * labels.size());
    for (std::size_t i = 0; i < lines.size(); ++i)
        for (std::size_t j = 0; j < labels.size(); ++j)
            edges.push_back({distance(lines[i].center(), labels[j].center()), i, j});
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.d, a.line, a.label) < std::tie(b.d, b.line, b.label);
    });

    Pairing out;
    std::vector<bool> line_used(lines.size()), label_used(labels.size());
    for (const auto& e : edges) {
        if (line_used[e.line] || label_used[e.label]) continue;
        line_used[e.line] = label_used[e.label] = true;
        out.pairs.emplace_back(e.line, e.label);
    }
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (!line_used[i]) out.leftover_lines.push_back(i);
    for (std::size_t j = 0; j < labels.size(); ++j)
        if (!label_used[j]) out.leftover_labels.push_back(j);
    return out;
}

/// Length of a bar line in pixels; bars may be vertical.
inline int bar_length_px(const BoundingBox& line) { return std::max(line.width(), line.height()); }

inline ScaleInfo measure(const BoundingBox& line, const BoundingBox& label_box, const ScaleLabelText& label,
                         const BoundingBox& master) {
    ScaleInfo s;
    s.bar_box = line;
    s.label_box = label_box;
    s.label_text = label.raw;
    s.magnitude = label.magnitude;
    s.unit = label.unit;
    s.label_confidence = label.recognition_confidence;
    s.bar_length_px = bar_length_px(line);
    s.nm_per_pixel = label.magnitude * nm_per_unit(label.unit) / s.bar_length_px;
    s.master_width_nm = master.width() * s.nm_per_pixel;
    s.master_height_nm = master.height() * s.nm_per_pixel;
    return s;
}

struct ResolvedPair {
    Detection line;
    Detection label;
    ScaleLabelText text;
};

struct ScaleOutcome {
    /// Detections that could not be used: rejected labels, unpaired items, pairs
    /// outside every master, and pairs displaced by a more confident one.
    std::vector<Detection> leftovers;
};

/// Attach each pair to the smallest master containing the line centre.
inline ScaleOutcome assign_and_measure(const std::vector<ResolvedPair>& pairs, std::vector<MasterImage>& masters) {
    ScaleOutcome out;
    for (const auto& p : pairs) {
        const auto c = p.line.box.center();
        long target = -1;
        for (std::size_t m = 0; m < masters.size(); ++m)
            if (masters[m].box.contains(c) &&
                (target < 0 || masters[m].box.area() < masters[static_cast<std::size_t>(target)].box.area()))
                target = static_cast<long>(m);
        if (target < 0) {
            out.leftovers.push_back(p.line);
            out.leftovers.push_back(p.label);
            continue;
        }
        auto& master = masters[static_cast<std::size_t>(target)];
        if (master.scale) {
            if (master.scale->label_confidence >= p.text.recognition_confidence) {
                log_warning("second scale pair for one master dropped (lower label confidence)");
                out.leftovers.push_back(p.line);
                out.leftovers.push_back(p.label);
                continue;
            }
            log_warning("scale pair replaced by one with higher label confidence");
            Detection old_line{master.scale->bar_box, DetectionKind::scale_bar_line, std::nullopt, {}, 1.0};
            Detection old_label{master.scale->label_box, DetectionKind::scale_bar_label, master.scale->label_text,
                                {}, master.scale->label_confidence};
            out.leftovers.push_back(old_line);
            out.leftovers.push_back(old_label);
        }
        master.scale = measure(p.line.box, p.label.box, p.text, master.box);
    }
    return out;
}

/// Full scale stage for one figure: validate labels, pair, measure.
inline ScaleOutcome resolve_scales(const std::vector<Detection>& detections, std::vector<MasterImage>& masters,
                                   double label_threshold) {
    ScaleOutcome out;
    std::vector<Detection> lines, labels;
    std::vector<ScaleLabelText> texts;
    for (const auto& d : detections) {
        if (d.kind == DetectionKind::scale_bar_line) {
            lines.push_back(d);
        } else if (d.kind == DetectionKind::scale_bar_label) {
            auto r = validate_scale_label(d.text.value_or(""), d.confidence, label_threshold);
            if (auto* ok = std::get_if<ScaleLabelText>(&r)) {
                labels.push_back(d);
                texts.push_back(*ok);
            } else {
                log_info("scale label '" + d.text.value_or("") + "' rejected: " +
                         std::string(to_string(std::get<Rejection>(r))));
                out.leftovers.push_back(d);
            }
        }
    }
    std::vector<BoundingBox> line_boxes, label_boxes;
    for (const auto& d : lines) line_boxes.push_back(d.box);
    for (const auto& d : labels) label_boxes.push_back(d.box);
    const auto pairing = greedy_pair(line_boxes, label_boxes);

    std::vector<ResolvedPair> resolved;
    for (auto [i, j] : pairing.pairs) resolved.push_back({lines[i], labels[j], texts[j]});
    for (auto i : pairing.leftover_lines) out.leftovers.push_back(lines[i]);
    for (auto j : pairing.leftover_labels) out.leftovers.push_back(labels[j]);

    auto measured = assign_and_measure(resolved, masters);
    out.leftovers.insert(out.leftovers.end(), measured.leftovers.begin(), measured.leftovers.end());
    return out;
}

} // namespace exsclaim::scale
