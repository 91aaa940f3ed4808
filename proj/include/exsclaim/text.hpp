#pragma once

// Word tokenisation shared by keyword matching and the NLP models.

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace exsclaim::text {

inline bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

/// Lowercased maximal runs of letters/digits (non-ASCII bytes count as letters).
inline std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (is_word_byte(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline const std::set<std::string, std::less<>>& stopwords() {
    static const std::set<std::string, std::less<>> words{
        "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
        "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
        "but", "by", "can", "could", "did", "do", "does", "doing", "down", "due", "during", "each",
        "et", "etc", "few", "fig", "figure", "for", "from", "further", "had", "has", "have", "having",
        "he", "her", "here", "hers", "him", "his", "how", "however", "i", "if", "in", "into", "is",
        "it", "its", "itself", "just", "may", "me", "more", "most", "must", "my", "no", "nor", "not",
        "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "out", "over", "own",
        "per", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their",
        "theirs", "them", "then", "there", "these", "they", "this", "those", "through", "thus", "to",
        "too", "under", "until", "up", "upon", "us", "very", "via", "was", "we", "were", "what",
        "when", "where", "which", "while", "who", "whom", "why", "will", "with", "within", "would",
        "you", "your", "yours"};
    return words;
}

/// Model preprocessing: lowercase, drop digits and punctuation, drop stopwords
/// and single letters.
inline std::vector<std::string> preprocess(std::string_view s) {
    std::vector<std::string> out;
    for (auto& tok : word_tokens(s)) {
        std::string w;
        for (char c : tok)
            if (!std::isdigit(static_cast<unsigned char>(c))) w.push_back(c);
        if (w.size() < 2 || stopwords().count(w)) continue;
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace exsclaim::text
