#pragma once

// Joins caption segments to masters, marks query keywords, assigns label categories.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "exsclaim/caption.hpp"
#include "exsclaim/log.hpp"
#include "exsclaim/text.hpp"
#include "exsclaim/types.hpp"

namespace exsclaim::assigner {

struct AssignResult {
    std::vector<MasterImage> masters;
    std::vector<CaptionSegment> orphans;
};

inline AssignResult assign_captions(std::vector<MasterImage> masters, const std::vector<CaptionSegment>& segments) {
    std::map<std::string, const CaptionSegment*> first;
    AssignResult out;
    for (const auto& s : segments) {
        if (first.count(s.subfigure_id)) {
            log_warning("duplicate caption segment for '" + s.subfigure_id + "' orphaned");
            out.orphans.push_back(s);
        } else {
            first[s.subfigure_id] = &s;
        }
    }
    std::set<std::string> used;
    for (auto& m : masters) {
        m.caption_segment.reset();
        if (!m.subfigure_id) continue;
        auto it = first.find(*m.subfigure_id);
        if (it == first.end()) continue;
        m.caption_segment = caption::render_segment(*it->second);
        used.insert(it->first);
    }
    for (const auto& s : segments)
        if (first.at(s.subfigure_id) == &s && !used.count(s.subfigure_id)) out.orphans.push_back(s);
    out.masters = std::move(masters);
    return out;
}

/// Forms of a caption word that may equal a singular query term.
inline std::vector<std::string> singular_forms(const std::string& w) {
    std::vector<std::string> forms{w};
    if (w.size() > 1 && w.back() == 's') forms.push_back(w.substr(0, w.size() - 1));
    if (w.size() > 2 && w.ends_with("es")) forms.push_back(w.substr(0, w.size() - 2));
    return forms;
}

/// Query terms present as whole words (multi-word terms as consecutive words),
/// distinct, in query order.
inline std::vector<std::string> find_keywords(const std::string& segment, const Query& query) {
    const auto words = text::word_tokens(segment);
    std::vector<std::string> found;
    std::set<std::string> seen;
    for (const auto& family : query.keyword_families) {
        for (const auto& term : family.terms) {
            if (seen.count(term)) continue;
            const auto term_words = text::word_tokens(term);
            if (term_words.empty() || term_words.size() > words.size()) continue;
            bool hit = false;
            for (std::size_t i = 0; i + term_words.size() <= words.size() && !hit; ++i) {
                bool all = true;
                for (std::size_t k = 0; k < term_words.size() && all; ++k) {
                    const auto forms = singular_forms(words[i + k]);
                    const auto& tw = term_words[k];
                    // Only the last word of a term may be pluralised ("electron microscopes").
                    if (k + 1 < term_words.size()) all = words[i + k] == tw;
                    else all = std::find(forms.begin(), forms.end(), tw) != forms.end();
                }
                hit = all;
            }
            if (hit) {
                found.push_back(term);
                seen.insert(term);
            }
        }
    }
    return found;
}

inline void mark_keywords(MasterImage& master, const Query& query) {
    master.keywords = master.caption_segment ? find_keywords(*master.caption_segment, query)
                                             : std::vector<std::string>{};
    master.label_category = label_category_for(master.caption_segment.has_value(), master.keywords.size());
}

/// Segment-side keywords, for the caption_segments list on the figure record.
inline void mark_segment_keywords(std::vector<CaptionSegment>& segments, const Query& query) {
    for (auto& s : segments) s.keywords = find_keywords(s.text, query);
}

} // namespace exsclaim::assigner
