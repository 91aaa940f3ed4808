#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exsclaim/error.hpp"
#include "exsclaim/geometry.hpp"

namespace exsclaim {

inline constexpr std::string_view pipeline_version = "1.0.0";

// Enum order is significant: argmax ties resolve to the earliest enumerator.
enum class ImageClass { microscopy, diffraction, graph, illustration, photo, parent, unclear };
inline constexpr std::size_t image_class_count = 7;
inline constexpr std::array<ImageClass, image_class_count> all_image_classes{
    ImageClass::microscopy, ImageClass::diffraction,  ImageClass::graph,  ImageClass::illustration,
    ImageClass::photo,      ImageClass::parent,       ImageClass::unclear};

enum class DetectionKind {
    subfigure_label,
    master_candidate,
    dependent_candidate,
    inset_candidate,
    scale_bar_line,
    scale_bar_label
};

inline constexpr bool is_candidate_kind(DetectionKind k) {
    return k == DetectionKind::master_candidate || k == DetectionKind::dependent_candidate ||
           k == DetectionKind::inset_candidate;
}

enum class ConfidenceTier { high_threshold, no_threshold_only };

enum class LabelCategory { single_label, multi_label, label_unassigned, caption_unassigned };
inline constexpr std::array<LabelCategory, 4> all_label_categories{
    LabelCategory::single_label, LabelCategory::multi_label, LabelCategory::label_unassigned,
    LabelCategory::caption_unassigned};

enum class LengthUnit { angstrom, nm, um, mm };

enum class JournalFamily { nature, acs, fixture };

enum class SortOrder { relevance, recent };

namespace detail {
template <class E, std::size_t N>
struct EnumNames {
    std::array<std::pair<E, std::string_view>, N> entries;

    constexpr std::string_view name(E e) const {
        for (const auto& [value, text] : entries)
            if (value == e) return text;
        return "?";
    }
    std::optional<E> parse(std::string_view s) const {
        for (const auto& [value, text] : entries)
            if (text == s) return value;
        return std::nullopt;
    }
};

inline constexpr EnumNames<ImageClass, 7> image_class_names{{{
    {ImageClass::microscopy, "microscopy"},
    {ImageClass::diffraction, "diffraction"},
    {ImageClass::graph, "graph"},
    {ImageClass::illustration, "illustration"},
    {ImageClass::photo, "photo"},
    {ImageClass::parent, "parent"},
    {ImageClass::unclear, "unclear"},
}}};
inline constexpr EnumNames<DetectionKind, 6> detection_kind_names{{{
    {DetectionKind::subfigure_label, "subfigure_label"},
    {DetectionKind::master_candidate, "master_candidate"},
    {DetectionKind::dependent_candidate, "dependent_candidate"},
    {DetectionKind::inset_candidate, "inset_candidate"},
    {DetectionKind::scale_bar_line, "scale_bar_line"},
    {DetectionKind::scale_bar_label, "scale_bar_label"},
}}};
inline constexpr EnumNames<ConfidenceTier, 2> tier_names{{{
    {ConfidenceTier::high_threshold, "high_threshold"},
    {ConfidenceTier::no_threshold_only, "no_threshold_only"},
}}};
inline constexpr EnumNames<LabelCategory, 4> category_names{{{
    {LabelCategory::single_label, "single_label"},
    {LabelCategory::multi_label, "multi_label"},
    {LabelCategory::label_unassigned, "label_unassigned"},
    {LabelCategory::caption_unassigned, "caption_unassigned"},
}}};
inline constexpr EnumNames<LengthUnit, 4> unit_names{{{
    {LengthUnit::angstrom, "angstrom"},
    {LengthUnit::nm, "nm"},
    {LengthUnit::um, "um"},
    {LengthUnit::mm, "mm"},
}}};
inline constexpr EnumNames<JournalFamily, 3> family_names{{{
    {JournalFamily::nature, "nature"},
    {JournalFamily::acs, "acs"},
    {JournalFamily::fixture, "fixture"},
}}};
inline constexpr EnumNames<SortOrder, 2> sort_names{{{
    {SortOrder::relevance, "relevance"},
    {SortOrder::recent, "recent"},
}}};
} // namespace detail

inline std::string_view to_string(ImageClass v) { return detail::image_class_names.name(v); }
inline std::string_view to_string(DetectionKind v) { return detail::detection_kind_names.name(v); }
inline std::string_view to_string(ConfidenceTier v) { return detail::tier_names.name(v); }
inline std::string_view to_string(LabelCategory v) { return detail::category_names.name(v); }
inline std::string_view to_string(LengthUnit v) { return detail::unit_names.name(v); }
inline std::string_view to_string(JournalFamily v) { return detail::family_names.name(v); }
inline std::string_view to_string(SortOrder v) { return detail::sort_names.name(v); }

inline std::optional<ImageClass> parse_image_class(std::string_view s) {
    return detail::image_class_names.parse(s);
}
inline std::optional<DetectionKind> parse_detection_kind(std::string_view s) {
    return detail::detection_kind_names.parse(s);
}
inline std::optional<ConfidenceTier> parse_tier(std::string_view s) {
    return detail::tier_names.parse(s);
}
inline std::optional<LabelCategory> parse_label_category(std::string_view s) {
    return detail::category_names.parse(s);
}
inline std::optional<LengthUnit> parse_length_unit(std::string_view s) {
    return detail::unit_names.parse(s);
}
inline std::optional<JournalFamily> parse_journal_family(std::string_view s) {
    return detail::family_names.parse(s);
}
inline std::optional<SortOrder> parse_sort_order(std::string_view s) {
    return detail::sort_names.parse(s);
}

/// Nanometres per unit.
inline constexpr double nm_per_unit(LengthUnit u) {
    switch (u) {
    case LengthUnit::angstrom: return 0.1;
    case LengthUnit::nm: return 1.0;
    case LengthUnit::um: return 1000.0;
    case LengthUnit::mm: return 1000000.0;
    }
    return 1.0;
}

using ClassScores = std::map<ImageClass, double>;

struct KeywordFamily {
    std::vector<std::string> terms;
    friend bool operator==(const KeywordFamily&, const KeywordFamily&) = default;
};

struct Query {
    std::string name;
    JournalFamily journal_family = JournalFamily::nature;
    int article_limit = 1;
    SortOrder sort_order = SortOrder::relevance;
    std::vector<KeywordFamily> keyword_families;
    bool open_access_only = true;
    double high_confidence_threshold = 0.99;
    double scale_label_confidence_threshold = 0.2;
    double topic_confidence_threshold = 0.80;
    std::string output_directory;

    friend bool operator==(const Query&, const Query&) = default;
};

struct Detection {
    BoundingBox box;
    DetectionKind kind = DetectionKind::master_candidate;
    std::optional<std::string> text;
    ClassScores class_scores;
    double confidence = 1.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct ScaleInfo {
    BoundingBox bar_box;
    BoundingBox label_box;
    std::string label_text;
    double magnitude = 0.0;
    LengthUnit unit = LengthUnit::nm;
    double label_confidence = 0.0;
    int bar_length_px = 0;
    double nm_per_pixel = 0.0;
    double master_width_nm = 0.0;
    double master_height_nm = 0.0;

    friend bool operator==(const ScaleInfo&, const ScaleInfo&) = default;
};

struct HierarchicalLabels {
    std::vector<std::string> caption_labels;
    std::vector<std::string> abstract_labels;
    std::optional<std::string> topic_label;
    std::optional<int> topic_index;
    double topic_confidence = 0.0;

    friend bool operator==(const HierarchicalLabels&, const HierarchicalLabels&) = default;
};

struct MasterImage {
    BoundingBox box;
    std::optional<std::string> subfigure_id;
    ImageClass classification = ImageClass::unclear;
    ClassScores class_scores;
    ConfidenceTier confidence_tier = ConfidenceTier::no_threshold_only;
    std::vector<BoundingBox> dependents;
    std::vector<BoundingBox> insets;
    std::optional<ScaleInfo> scale;
    std::optional<std::string> caption_segment;
    std::vector<std::string> keywords;
    LabelCategory label_category = LabelCategory::caption_unassigned;
    std::optional<HierarchicalLabels> labels;
    std::optional<std::string> image_path;

    friend bool operator==(const MasterImage&, const MasterImage&) = default;
};

/// Category is a pure function of (caption present, keyword count).
inline LabelCategory label_category_for(bool has_caption, std::size_t keyword_count) {
    if (!has_caption) return LabelCategory::caption_unassigned;
    if (keyword_count == 0) return LabelCategory::label_unassigned;
    if (keyword_count == 1) return LabelCategory::single_label;
    return LabelCategory::multi_label;
}

struct CaptionSegment {
    std::string subfigure_id;
    std::string text;
    int matched_pattern = 0;
    std::string pattern_name;
    std::vector<std::string> cross_references;
    std::vector<std::string> keywords;

    friend bool operator==(const CaptionSegment&, const CaptionSegment&) = default;
};

struct FigureRecord {
    std::string figure_id;
    std::string article_doi;
    std::string article_url;
    std::string figure_url;
    std::string image_path;
    std::string caption_text;
    bool caption_missing = false;
    int image_width = 0;
    int image_height = 0;
    std::vector<Detection> detections;
    std::vector<MasterImage> masters;
    std::vector<Detection> unmatched_detections;
    std::vector<CaptionSegment> caption_segments;
    std::vector<CaptionSegment> orphan_segments;

    friend bool operator==(const FigureRecord&, const FigureRecord&) = default;
};

struct Article {
    std::string doi;
    std::string title;
    std::string url;
    std::optional<std::string> abstract_text;
    std::optional<std::string> introduction_text;
    std::optional<std::string> full_text;
    bool open_access = true;
    int relevance_rank = 0;

    friend bool operator==(const Article&, const Article&) = default;
};

struct ClassTierCounts {
    int total = 0;
    int high_threshold = 0;
    friend bool operator==(const ClassTierCounts&, const ClassTierCounts&) = default;
};

struct LabelStatistics {
    std::map<ImageClass, ClassTierCounts> class_counts;
    std::map<LabelCategory, int> category_counts;
    std::map<std::string, int> keyword_counts;
    int master_count = 0;

    friend bool operator==(const LabelStatistics&, const LabelStatistics&) = default;
};

struct ExsclaimDocument {
    Query query;
    std::vector<Article> articles;
    std::vector<FigureRecord> figures;
    LabelStatistics statistics;
    std::string created_at;
    std::string pipeline_version{exsclaim::pipeline_version};

    friend bool operator==(const ExsclaimDocument&, const ExsclaimDocument&) = default;
};

inline LabelStatistics compute_statistics(const std::vector<FigureRecord>& figures) {
    LabelStatistics stats;
    for (ImageClass c : all_image_classes) stats.class_counts[c] = {};
    for (LabelCategory c : all_label_categories) stats.category_counts[c] = 0;
    for (const auto& fig : figures) {
        for (const auto& m : fig.masters) {
            ++stats.master_count;
            auto& counts = stats.class_counts[m.classification];
            ++counts.total;
            if (m.confidence_tier == ConfidenceTier::high_threshold) ++counts.high_threshold;
            ++stats.category_counts[m.label_category];
            for (const auto& k : m.keywords) ++stats.keyword_counts[k];
        }
    }
    return stats;
}

} // namespace exsclaim
