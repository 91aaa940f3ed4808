#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "exsclaim/types.hpp"

namespace exsclaim {

using json = nlohmann::json;

namespace jsonio {

/// Field accessors that report the JSON path of whatever is wrong.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw SchemaError(path_, "expected object");
    }

    std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }
    bool has(std::string_view key) const {
        auto it = j_.find(key);
        return it != j_.end() && !it->is_null();
    }
    const json& at(std::string_view key) const {
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) throw SchemaError(field(key), "required field missing");
        return *it;
    }

    std::string str(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_string()) throw SchemaError(field(key), "expected string");
        return v.get<std::string>();
    }
    std::string str_or(std::string_view key, std::string fallback) const {
        return has(key) ? str(key) : std::move(fallback);
    }
    std::optional<std::string> opt_str(std::string_view key) const {
        if (!has(key)) return std::nullopt;
        return str(key);
    }
    long long integer(std::string_view key) const {
        const auto& v = at(key);
        if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
        if (v.is_number_float()) {
            double d = v.get<double>();
            if (std::floor(d) == d) return static_cast<long long>(d);
        }
        throw SchemaError(field(key), "expected integer");
    }
    double number(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_number()) throw SchemaError(field(key), "expected number");
        return v.get<double>();
    }
    double number_or(std::string_view key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }
    double probability(std::string_view key) const {
        double p = number(key);
        if (!(p >= 0.0 && p <= 1.0)) throw RangeError(field(key), "probability outside [0,1]");
        return p;
    }
    double probability_or(std::string_view key, double fallback) const {
        return has(key) ? probability(key) : fallback;
    }
    bool boolean_or(std::string_view key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_boolean()) throw SchemaError(field(key), "expected boolean");
        return v.get<bool>();
    }
    const json& array(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_array()) throw SchemaError(field(key), "expected array");
        return v;
    }
    const json& array_or_empty(std::string_view key) const {
        static const json empty = json::array();
        return has(key) ? array(key) : empty;
    }
    template <class E, class Parse>
    E enumeration(std::string_view key, Parse parse) const {
        auto s = str(key);
        auto v = parse(s);
        if (!v) throw SchemaError(field(key), "unknown value '" + s + "'");
        return *v;
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
};

inline std::string index_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace jsonio

// ---------------------------------------------------------------- boxes

inline json to_json(const BoundingBox& b) {
    return json{{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}};
}

inline BoundingBox box_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    BoundingBox b{int(r.integer("x0")), int(r.integer("y0")), int(r.integer("x1")),
                  int(r.integer("y1"))};
    if (b.x0 < 0 || b.y0 < 0) throw RangeError(path, "negative coordinate");
    if (b.x0 >= b.x1 || b.y0 >= b.y1) throw RangeError(path, "requires x0 < x1 and y0 < y1");
    return b;
}

inline json boxes_to_json(const std::vector<BoundingBox>& boxes) {
    json a = json::array();
    for (const auto& b : boxes) a.push_back(to_json(b));
    return a;
}

inline std::vector<BoundingBox> boxes_from_json(const json& a, const std::string& path) {
    if (!a.is_array()) throw SchemaError(path, "expected array");
    std::vector<BoundingBox> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(box_from_json(a[i], jsonio::index_path(path, i)));
    return out;
}

inline json to_json(const ClassScores& s) {
    json j = json::object();
    for (const auto& [c, p] : s) j[std::string(to_string(c))] = p;
    return j;
}

inline ClassScores class_scores_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    ClassScores s;
    for (const auto& [k, v] : j.items()) {
        auto c = parse_image_class(k);
        if (!c) throw SchemaError(path + "." + k, "unknown image class");
        if (!v.is_number()) throw SchemaError(path + "." + k, "expected number");
        double p = v.get<double>();
        if (!(p >= 0.0 && p <= 1.0)) throw RangeError(path + "." + k, "probability outside [0,1]");
        s[*c] = p;
    }
    return s;
}

// ---------------------------------------------------------------- query

inline json to_json(const Query& q) {
    json families = json::array();
    for (const auto& f : q.keyword_families) families.push_back(f.terms);
    return json{{"name", q.name},
                {"journal_family", to_string(q.journal_family)},
                {"article_limit", q.article_limit},
                {"sort_order", to_string(q.sort_order)},
                {"keyword_families", families},
                {"open_access_only", q.open_access_only},
                {"high_confidence_threshold", q.high_confidence_threshold},
                {"scale_label_confidence_threshold", q.scale_label_confidence_threshold},
                {"topic_confidence_threshold", q.topic_confidence_threshold},
                {"output_directory", q.output_directory}};
}

inline Query query_from_json(const json& j, const std::string& path = "") {
    jsonio::Reader r(j, path);
    Query q;
    q.name = r.str("name");
    q.journal_family = r.enumeration<JournalFamily>("journal_family", parse_journal_family);
    q.article_limit = static_cast<int>(r.integer("article_limit"));
    if (q.article_limit < 1) throw RangeError(r.field("article_limit"), "must be >= 1");
    q.sort_order = r.has("sort_order") ? r.enumeration<SortOrder>("sort_order", parse_sort_order)
                                       : SortOrder::relevance;
    const auto& families = r.array("keyword_families");
    if (families.empty()) throw SchemaError(r.field("keyword_families"), "must be non-empty");
    for (std::size_t i = 0; i < families.size(); ++i) {
        auto fpath = jsonio::index_path(r.field("keyword_families"), i);
        const json* terms = &families[i];
        if (terms->is_object()) {
            jsonio::Reader fr(*terms, fpath);
            terms = &fr.array("terms");
            fpath += ".terms";
        }
        if (!terms->is_array()) throw SchemaError(fpath, "expected array of terms");
        if (terms->empty()) throw SchemaError(fpath, "family must have at least one term");
        KeywordFamily family;
        std::set<std::string> seen;
        for (std::size_t t = 0; t < terms->size(); ++t) {
            auto tpath = jsonio::index_path(fpath, t);
            if (!(*terms)[t].is_string()) throw SchemaError(tpath, "expected string");
            auto term = jsonio::lowercase(jsonio::trim((*terms)[t].get<std::string>()));
            if (term.empty()) throw SchemaError(tpath, "empty term");
            if (!seen.insert(term).second) throw SchemaError(tpath, "duplicate term '" + term + "'");
            family.terms.push_back(std::move(term));
        }
        q.keyword_families.push_back(std::move(family));
    }
    q.open_access_only = r.boolean_or("open_access_only", true);
    q.high_confidence_threshold = r.probability_or("high_confidence_threshold", 0.99);
    q.scale_label_confidence_threshold = r.probability_or("scale_label_confidence_threshold", 0.2);
    q.topic_confidence_threshold = r.probability_or("topic_confidence_threshold", 0.80);
    q.output_directory = r.str_or("output_directory", "");
    return q;
}

/// Parse query JSON text, filling defaults and normalizing terms.
inline Query parse_query(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    return query_from_json(j);
}

// ---------------------------------------------------------------- detections

inline json to_json(const Detection& d) {
    json j{{"box", to_json(d.box)},
           {"kind", to_string(d.kind)},
           {"confidence", d.confidence}};
    if (d.text) j["text"] = *d.text;
    if (!d.class_scores.empty()) j["class_scores"] = to_json(d.class_scores);
    return j;
}

inline Detection detection_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    Detection d;
    d.box = box_from_json(r.at("box"), r.field("box"));
    d.kind = r.enumeration<DetectionKind>("kind", parse_detection_kind);
    d.text = r.opt_str("text");
    d.confidence = r.probability_or("confidence", 1.0);
    if (r.has("class_scores")) {
        if (!is_candidate_kind(d.kind))
            throw SchemaError(r.field("class_scores"), "only allowed on candidate detections");
        d.class_scores = class_scores_from_json(r.at("class_scores"), r.field("class_scores"));
    }
    if ((d.kind == DetectionKind::subfigure_label || d.kind == DetectionKind::scale_bar_label) &&
        !d.text)
        throw SchemaError(r.field("text"), "required for label detections");
    return d;
}

inline json detections_to_json(const std::vector<Detection>& ds) {
    json a = json::array();
    for (const auto& d : ds) a.push_back(to_json(d));
    return a;
}

inline std::vector<Detection> detections_from_json(const json& a, const std::string& path) {
    if (!a.is_array()) throw SchemaError(path, "expected array");
    std::vector<Detection> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(detection_from_json(a[i], jsonio::index_path(path, i)));
    return out;
}

/// One file of detections.schema: everything an external detector reports for a figure.
struct DetectionFile {
    std::string figure_id;
    int image_width = 0;
    int image_height = 0;
    std::vector<Detection> detections;
};

inline json to_json(const DetectionFile& f) {
    return json{{"figure_id", f.figure_id},
                {"image_width", f.image_width},
                {"image_height", f.image_height},
                {"detections", detections_to_json(f.detections)}};
}

inline DetectionFile detection_file_from_json(const json& j) {
    jsonio::Reader r(j, "");
    DetectionFile f;
    f.figure_id = r.str("figure_id");
    f.image_width = static_cast<int>(r.integer("image_width"));
    f.image_height = static_cast<int>(r.integer("image_height"));
    if (f.image_width <= 0 || f.image_height <= 0)
        throw RangeError("image_width", "image size must be positive");
    f.detections = detections_from_json(r.array("detections"), "detections");
    return f;
}

// ---------------------------------------------------------------- masters

inline json to_json(const ScaleInfo& s) {
    return json{{"bar_box", to_json(s.bar_box)},
                {"label_box", to_json(s.label_box)},
                {"label_text", s.label_text},
                {"magnitude", s.magnitude},
                {"unit", to_string(s.unit)},
                {"label_confidence", s.label_confidence},
                {"bar_length_px", s.bar_length_px},
                {"nm_per_pixel", s.nm_per_pixel},
                {"master_width_nm", s.master_width_nm},
                {"master_height_nm", s.master_height_nm}};
}

inline ScaleInfo scale_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    ScaleInfo s;
    s.bar_box = box_from_json(r.at("bar_box"), r.field("bar_box"));
    s.label_box = box_from_json(r.at("label_box"), r.field("label_box"));
    s.label_text = r.str("label_text");
    s.magnitude = r.number("magnitude");
    s.unit = r.enumeration<LengthUnit>("unit", parse_length_unit);
    s.label_confidence = r.probability_or("label_confidence", 1.0);
    s.bar_length_px = static_cast<int>(r.integer("bar_length_px"));
    s.nm_per_pixel = r.number("nm_per_pixel");
    s.master_width_nm = r.number("master_width_nm");
    s.master_height_nm = r.number("master_height_nm");
    if (s.magnitude <= 0) throw RangeError(r.field("magnitude"), "must be positive");
    if (s.bar_length_px <= 0) throw RangeError(r.field("bar_length_px"), "must be positive");
    return s;
}

inline json to_json(const HierarchicalLabels& l) {
    return json{{"caption_labels", l.caption_labels},
                {"abstract_labels", l.abstract_labels},
                {"topic_label", l.topic_label ? json(*l.topic_label) : json(nullptr)},
                {"topic_index", l.topic_index ? json(*l.topic_index) : json(nullptr)},
                {"topic_confidence", l.topic_confidence}};
}

inline std::vector<std::string> strings_from_json(const json& a, const std::string& path) {
    if (!a.is_array()) throw SchemaError(path, "expected array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_string()) throw SchemaError(jsonio::index_path(path, i), "expected string");
        out.push_back(a[i].get<std::string>());
    }
    return out;
}

inline HierarchicalLabels labels_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    HierarchicalLabels l;
    l.caption_labels = strings_from_json(r.array_or_empty("caption_labels"), r.field("caption_labels"));
    l.abstract_labels =
        strings_from_json(r.array_or_empty("abstract_labels"), r.field("abstract_labels"));
    l.topic_label = r.opt_str("topic_label");
    if (r.has("topic_index")) l.topic_index = static_cast<int>(r.integer("topic_index"));
    l.topic_confidence = r.probability_or("topic_confidence", 0.0);
    return l;
}

inline json opt_json(const std::optional<std::string>& s) {
    return s ? json(*s) : json(nullptr);
}

inline json to_json(const MasterImage& m) {
    return json{{"box", to_json(m.box)},
                {"subfigure_id", opt_json(m.subfigure_id)},
                {"classification", to_string(m.classification)},
                {"class_scores", to_json(m.class_scores)},
                {"confidence_tier", to_string(m.confidence_tier)},
                {"dependents", boxes_to_json(m.dependents)},
                {"insets", boxes_to_json(m.insets)},
                {"scale", m.scale ? to_json(*m.scale) : json(nullptr)},
                {"caption_segment", opt_json(m.caption_segment)},
                {"keywords", m.keywords},
                {"label_category", to_string(m.label_category)},
                {"labels", m.labels ? to_json(*m.labels) : json(nullptr)},
                {"image_path", opt_json(m.image_path)}};
}

inline MasterImage master_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    MasterImage m;
    m.box = box_from_json(r.at("box"), r.field("box"));
    m.subfigure_id = r.opt_str("subfigure_id");
    m.classification = r.enumeration<ImageClass>("classification", parse_image_class);
    if (r.has("class_scores"))
        m.class_scores = class_scores_from_json(r.at("class_scores"), r.field("class_scores"));
    m.confidence_tier = r.enumeration<ConfidenceTier>("confidence_tier", parse_tier);
    m.dependents = boxes_from_json(r.array_or_empty("dependents"), r.field("dependents"));
    m.insets = boxes_from_json(r.array_or_empty("insets"), r.field("insets"));
    if (r.has("scale")) m.scale = scale_from_json(r.at("scale"), r.field("scale"));
    m.caption_segment = r.opt_str("caption_segment");
    m.keywords = strings_from_json(r.array_or_empty("keywords"), r.field("keywords"));
    m.label_category = r.enumeration<LabelCategory>("label_category", parse_label_category);
    if (r.has("labels")) m.labels = labels_from_json(r.at("labels"), r.field("labels"));
    m.image_path = r.opt_str("image_path");
    return m;
}

inline json to_json(const CaptionSegment& s) {
    return json{{"subfigure_id", s.subfigure_id},
                {"text", s.text},
                {"matched_pattern", s.matched_pattern},
                {"pattern_name", s.pattern_name},
                {"cross_references", s.cross_references},
                {"keywords", s.keywords}};
}

inline CaptionSegment segment_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    CaptionSegment s;
    s.subfigure_id = r.str("subfigure_id");
    s.text = r.str("text");
    s.matched_pattern = static_cast<int>(r.integer("matched_pattern"));
    s.pattern_name = r.str_or("pattern_name", "");
    s.cross_references =
        strings_from_json(r.array_or_empty("cross_references"), r.field("cross_references"));
    s.keywords = strings_from_json(r.array_or_empty("keywords"), r.field("keywords"));
    return s;
}

inline json segments_to_json(const std::vector<CaptionSegment>& segs) {
    json a = json::array();
    for (const auto& s : segs) a.push_back(to_json(s));
    return a;
}

inline std::vector<CaptionSegment> segments_from_json(const json& a, const std::string& path) {
    if (!a.is_array()) throw SchemaError(path, "expected array");
    std::vector<CaptionSegment> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(segment_from_json(a[i], jsonio::index_path(path, i)));
    return out;
}

inline json to_json(const FigureRecord& f) {
    json masters = json::array();
    for (const auto& m : f.masters) masters.push_back(to_json(m));
    return json{{"figure_id", f.figure_id},
                {"article_doi", f.article_doi},
                {"article_url", f.article_url},
                {"figure_url", f.figure_url},
                {"image_path", f.image_path},
                {"caption_text", f.caption_text},
                {"caption_missing", f.caption_missing},
                {"image_width", f.image_width},
                {"image_height", f.image_height},
                {"detections", detections_to_json(f.detections)},
                {"masters", masters},
                {"unmatched_detections", detections_to_json(f.unmatched_detections)},
                {"caption_segments", segments_to_json(f.caption_segments)},
                {"orphan_segments", segments_to_json(f.orphan_segments)}};
}

inline FigureRecord figure_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    FigureRecord f;
    f.figure_id = r.str("figure_id");
    f.article_doi = r.str("article_doi");
    f.article_url = r.str_or("article_url", "");
    f.figure_url = r.str_or("figure_url", "");
    f.image_path = r.str_or("image_path", "");
    f.caption_text = r.str_or("caption_text", "");
    f.caption_missing = r.boolean_or("caption_missing", false);
    f.image_width = r.has("image_width") ? static_cast<int>(r.integer("image_width")) : 0;
    f.image_height = r.has("image_height") ? static_cast<int>(r.integer("image_height")) : 0;
    f.detections = detections_from_json(r.array_or_empty("detections"), r.field("detections"));
    const auto& masters = r.array_or_empty("masters");
    for (std::size_t i = 0; i < masters.size(); ++i)
        f.masters.push_back(master_from_json(masters[i], jsonio::index_path(r.field("masters"), i)));
    f.unmatched_detections = detections_from_json(r.array_or_empty("unmatched_detections"),
                                                  r.field("unmatched_detections"));
    f.caption_segments =
        segments_from_json(r.array_or_empty("caption_segments"), r.field("caption_segments"));
    f.orphan_segments =
        segments_from_json(r.array_or_empty("orphan_segments"), r.field("orphan_segments"));
    return f;
}

inline json to_json(const Article& a) {
    return json{{"doi", a.doi},
                {"title", a.title},
                {"url", a.url},
                {"abstract_text", opt_json(a.abstract_text)},
                {"introduction_text", opt_json(a.introduction_text)},
                {"full_text", opt_json(a.full_text)},
                {"open_access", a.open_access},
                {"relevance_rank", a.relevance_rank}};
}

inline Article article_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    Article a;
    a.doi = r.str("doi");
    a.title = r.str_or("title", "");
    a.url = r.str_or("url", "");
    a.abstract_text = r.opt_str("abstract_text");
    a.introduction_text = r.opt_str("introduction_text");
    a.full_text = r.opt_str("full_text");
    a.open_access = r.boolean_or("open_access", true);
    a.relevance_rank = r.has("relevance_rank") ? static_cast<int>(r.integer("relevance_rank")) : 0;
    return a;
}

inline json to_json(const LabelStatistics& s) {
    json classes = json::object();
    for (const auto& [c, counts] : s.class_counts)
        classes[std::string(to_string(c))] = {{"total", counts.total},
                                              {"high_threshold", counts.high_threshold}};
    json categories = json::object();
    for (const auto& [c, n] : s.category_counts) categories[std::string(to_string(c))] = n;
    json keywords = json::object();
    for (const auto& [k, n] : s.keyword_counts) keywords[k] = n;
    return json{{"class_counts", classes},
                {"category_counts", categories},
                {"keyword_counts", keywords},
                {"master_count", s.master_count}};
}

inline LabelStatistics statistics_from_json(const json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    LabelStatistics s;
    s.master_count = static_cast<int>(r.integer("master_count"));
    for (const auto& [k, v] : r.at("class_counts").items()) {
        auto c = parse_image_class(k);
        if (!c) throw SchemaError(r.field("class_counts") + "." + k, "unknown image class");
        jsonio::Reader cr(v, r.field("class_counts") + "." + k);
        s.class_counts[*c] = {static_cast<int>(cr.integer("total")),
                              static_cast<int>(cr.integer("high_threshold"))};
    }
    for (const auto& [k, v] : r.at("category_counts").items()) {
        auto c = parse_label_category(k);
        if (!c) throw SchemaError(r.field("category_counts") + "." + k, "unknown category");
        s.category_counts[*c] = v.get<int>();
    }
    for (const auto& [k, v] : r.at("keyword_counts").items()) s.keyword_counts[k] = v.get<int>();
    return s;
}

// ---------------------------------------------------------------- document

/// Invariant check run before serialization. Returns human-readable violations.
inline std::vector<std::string> validate_document(const ExsclaimDocument& doc) {
    std::vector<std::string> problems;
    std::set<std::string> dois;
    for (const auto& a : doc.articles) dois.insert(a.doi);
    for (const auto& f : doc.figures) {
        if (!dois.count(f.article_doi))
            problems.push_back(f.figure_id + ": article_doi not among articles");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < f.masters.size(); ++i) {
            const auto& m = f.masters[i];
            const auto where = f.figure_id + ".masters[" + std::to_string(i) + "]";
            if (!m.box.valid()) problems.push_back(where + ": invalid box");
            for (const auto& d : m.dependents)
                if (!m.box.contains(d)) problems.push_back(where + ": dependent outside master");
            for (const auto& d : m.insets)
                if (!m.box.contains(d)) problems.push_back(where + ": inset outside master");
            if (m.subfigure_id && !ids.insert(*m.subfigure_id).second)
                problems.push_back(where + ": duplicate subfigure_id " + *m.subfigure_id);
            if (m.label_category != label_category_for(m.caption_segment.has_value(), m.keywords.size()))
                problems.push_back(where + ": label_category inconsistent with caption/keywords");
            for (std::size_t k = i + 1; k < f.masters.size(); ++k)
                if (iou(m.box, f.masters[k].box) > 0.1)
                    problems.push_back(where + ": overlaps master " + std::to_string(k));
        }
    }
    return problems;
}

inline json to_json(const ExsclaimDocument& doc) {
    json articles = json::array();
    for (const auto& a : doc.articles) articles.push_back(to_json(a));
    json figures = json::array();
    for (const auto& f : doc.figures) figures.push_back(to_json(f));
    return json{{"query", to_json(doc.query)},
                {"articles", articles},
                {"figures", figures},
                {"statistics", to_json(doc.statistics)},
                {"created_at", doc.created_at},
                {"pipeline_version", doc.pipeline_version}};
}

inline ExsclaimDocument document_from_json(const json& j) {
    jsonio::Reader r(j, "");
    ExsclaimDocument doc;
    doc.query = query_from_json(r.at("query"), "query");
    const auto& articles = r.array("articles");
    for (std::size_t i = 0; i < articles.size(); ++i)
        doc.articles.push_back(article_from_json(articles[i], jsonio::index_path("articles", i)));
    const auto& figures = r.array("figures");
    for (std::size_t i = 0; i < figures.size(); ++i)
        doc.figures.push_back(figure_from_json(figures[i], jsonio::index_path("figures", i)));
    doc.statistics = statistics_from_json(r.at("statistics"), "statistics");
    doc.created_at = r.str_or("created_at", "");
    doc.pipeline_version = r.str_or("pipeline_version", std::string(pipeline_version));
    return doc;
}

/// Stable text form: object keys sorted, two-space indent, trailing newline.
inline std::string serialize_document(const ExsclaimDocument& doc) {
    return to_json(doc).dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

inline ExsclaimDocument parse_document(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    return document_from_json(j);
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
    std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline json read_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(path, std::string("invalid JSON: ") + e.what());
    }
}

} // namespace exsclaim
