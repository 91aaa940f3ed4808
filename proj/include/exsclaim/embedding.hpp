#pragma once

// Skip-gram with negative sampling (SGNS) word embeddings, caption word dropout,
// and abstract label selection.
//
// Training is single-threaded and draws every random number from one mt19937_64
// stream through `uniform01`, so a seed reproduces the same vectors on any platform.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "exsclaim/error.hpp"
#include "exsclaim/text.hpp"

namespace exsclaim::embedding {

/// [0,1) from the top 53 bits; std::uniform_real_distribution is not portable.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Row-major |rows| x dim matrix.
struct Matrix {
    std::size_t rows = 0, dim = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t d) : rows(r), dim(d), data(r * d, 0.0) {}
    double* row(std::size_t i) { return data.data() + i * dim; }
    const double* row(std::size_t i) const { return data.data() + i * dim; }
};

inline double dot(const double* a, const double* b, std::size_t d) {
    double s = 0;
    for (std::size_t k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = std::sqrt(dot(a.data(), a.data(), a.size()));
    const double nb = std::sqrt(dot(b.data(), b.data(), b.size()));
    if (na == 0 || nb == 0) return 0.0;
    return dot(a.data(), b.data(), a.size()) / (na * nb);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ------------------------------------------------------------------ objective

/// Negative-sampling loss for one (centre, context) pair:
///   -log s(u_o . v_c) - sum_k log s(-u_k . v_c)
/// `in` holds centre vectors v, `out` holds context vectors u.
inline double sgns_loss(const Matrix& in, const Matrix& out, std::size_t center, std::size_t context,
                        const std::vector<std::size_t>& negatives) {
    const auto* v = in.row(center);
    double loss = -std::log(sigmoid(dot(out.row(context), v, in.dim)));
    for (auto k : negatives) loss -= std::log(sigmoid(-dot(out.row(k), v, in.dim)));
    return loss;
}

struct SgnsGradient {
    std::vector<double> center;                          // d loss / d v_c
    std::map<std::size_t, std::vector<double>> context;  // d loss / d u_j, accumulated per row
};

inline SgnsGradient sgns_gradient(const Matrix& in, const Matrix& out, std::size_t center, std::size_t context,
                                  const std::vector<std::size_t>& negatives) {
    const std::size_t d = in.dim;
    const auto* v = in.row(center);
    SgnsGradient g;
    g.center.assign(d, 0.0);
    auto add = [&](std::size_t j, double coeff) {
        const auto* u = out.row(j);
        for (std::size_t k = 0; k < d; ++k) g.center[k] += coeff * u[k];
        auto& gu = g.context[j];
        if (gu.empty()) gu.assign(d, 0.0);
        for (std::size_t k = 0; k < d; ++k) gu[k] += coeff * v[k];
    };
    add(context, sigmoid(dot(out.row(context), v, d)) - 1.0);
    for (auto j : negatives) add(j, sigmoid(dot(out.row(j), v, d)));
    return g;
}

// ------------------------------------------------------------------ model

struct TrainingConfig {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t negative = 5;
    std::size_t min_count = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
};

class EmbeddingModel {
public:
    EmbeddingModel() = default;
    EmbeddingModel(std::vector<std::string> words, Matrix vectors) : words_(std::move(words)), vectors_(std::move(vectors)) {
        if (vectors_.rows != words_.size()) throw ConfigError("embedding rows do not match vocabulary");
        for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = i;
    }

    std::size_t size() const { return words_.size(); }
    std::size_t dim() const { return vectors_.dim; }
    const std::vector<std::string>& words() const { return words_; }
    const Matrix& matrix() const { return vectors_; }
    bool contains(const std::string& w) const { return index_.count(w) > 0; }
    std::optional<std::size_t> index(const std::string& w) const {
        auto it = index_.find(w);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    std::vector<double> vector(const std::string& w) const {
        auto i = index(w);
        if (!i) throw ConfigError("word not in vocabulary: " + w);
        const auto* r = vectors_.row(*i);
        return {r, r + vectors_.dim};
    }
    double similarity(const std::string& a, const std::string& b) const { return cosine(vector(a), vector(b)); }

    /// The `n` most similar vocabulary words, excluding `w` itself.
    std::vector<std::pair<std::string, double>> nearest(const std::string& w, std::size_t n) const {
        const auto v = vector(w);
        std::vector<std::pair<std::string, double>> all;
        for (const auto& other : words_)
            if (other != w) all.emplace_back(other, cosine(v, vector(other)));
        std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (all.size() > n) all.resize(n);
        return all;
    }

    /// "|V| d" header, then one "word v1 ... vd" line per word (shortest round-trip floats).
    std::string to_text() const {
        std::string out = std::to_string(words_.size()) + " " + std::to_string(vectors_.dim) + "\n";
        char buf[64];
        for (std::size_t i = 0; i < words_.size(); ++i) {
            out += words_[i];
            for (std::size_t k = 0; k < vectors_.dim; ++k) {
                auto [end, ec] = std::to_chars(buf, buf + sizeof buf, vectors_.row(i)[k]);
                out.push_back(' ');
                out.append(buf, end);
            }
            out.push_back('\n');
        }
        return out;
    }

    static EmbeddingModel from_text(const std::string& text) {
        std::istringstream in(text);
        std::size_t n = 0, d = 0;
        if (!(in >> n >> d) || d == 0) throw SchemaError("embedding", "bad header; expected '|V| d'");
        std::vector<std::string> words(n);
        Matrix m(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(in >> words[i])) throw SchemaError("embedding", "truncated at row " + std::to_string(i));
            for (std::size_t k = 0; k < d; ++k) {
                std::string tok;
                if (!(in >> tok)) throw SchemaError("embedding", "truncated at row " + std::to_string(i));
                double v = 0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
                    throw SchemaError("embedding", "bad number '" + tok + "' at row " + std::to_string(i));
                m.row(i)[k] = v;
            }
        }
        return EmbeddingModel(std::move(words), std::move(m));
    }

private:
    std::vector<std::string> words_;
    Matrix vectors_;
    std::map<std::string, std::size_t> index_;
};

// ------------------------------------------------------------------ training

struct Vocabulary {
    std::vector<std::string> words; // sorted by (count desc, word asc)
    std::vector<std::size_t> counts;
    std::map<std::string, std::size_t> index;
};

inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs, std::size_t min_count) {
    std::map<std::string, std::size_t> freq;
    for (const auto& d : docs)
        for (const auto& w : d) ++freq[w];
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [w, c] : freq)
        if (c >= min_count) kept.emplace_back(w, c);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    for (auto& [w, c] : kept) {
        v.index[w] = v.words.size();
        v.words.push_back(w);
        v.counts.push_back(c);
    }
    return v;
}

/// Draws negatives from the unigram distribution raised to 0.75.
class NoiseSampler {
public:
    explicit NoiseSampler(const std::vector<std::size_t>& counts) {
        double total = 0;
        for (auto c : counts) cumulative_.push_back(total += std::pow(static_cast<double>(c), 0.75));
        for (auto& c : cumulative_) c /= total;
    }
    std::size_t draw(std::mt19937_64& rng) const {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

private:
    std::vector<double> cumulative_;
};

/// Train on already-tokenised documents.
inline EmbeddingModel train_on_tokens(const std::vector<std::vector<std::string>>& docs, const TrainingConfig& cfg) {
    if (cfg.dim == 0 || cfg.epochs == 0) throw ConfigError("embedding dim and epochs must be positive");
    const auto vocab = build_vocabulary(docs, cfg.min_count);
    if (vocab.words.empty()) throw ConfigError("vocabulary empty after min-count filtering");

    std::vector<std::vector<std::size_t>> corpus;
    std::size_t total_tokens = 0;
    for (const auto& d : docs) {
        std::vector<std::size_t> ids;
        for (const auto& w : d)
            if (auto it = vocab.index.find(w); it != vocab.index.end()) ids.push_back(it->second);
        total_tokens += ids.size();
        corpus.push_back(std::move(ids));
    }

    std::mt19937_64 rng(cfg.seed);
    const std::size_t V = vocab.words.size();
    Matrix in(V, cfg.dim), out(V, cfg.dim);
    for (auto& x : in.data) x = (uniform01(rng) - 0.5) / static_cast<double>(cfg.dim);
    const NoiseSampler noise(vocab.counts);

    const double total_steps = static_cast<double>(cfg.epochs * std::max<std::size_t>(total_tokens, 1));
    double processed = 0;
    std::vector<std::size_t> negatives;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& doc : corpus) {
            for (std::size_t i = 0; i < doc.size(); ++i, ++processed) {
                const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - processed / total_steps);
                const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
                const std::size_t hi = std::min(doc.size(), i + cfg.window + 1);
                for (std::size_t j = lo; j < hi; ++j) {
                    if (j == i) continue;
                    negatives.clear();
                    for (std::size_t k = 0; k < cfg.negative; ++k) {
                        const auto n = noise.draw(rng);
                        if (n != doc[j]) negatives.push_back(n);
                    }
                    const auto g = sgns_gradient(in, out, doc[i], doc[j], negatives);
                    auto* v = in.row(doc[i]);
                    for (std::size_t k = 0; k < cfg.dim; ++k) v[k] -= lr * g.center[k];
                    for (const auto& [row, gu] : g.context) {
                        auto* u = out.row(row);
                        for (std::size_t k = 0; k < cfg.dim; ++k) u[k] -= lr * gu[k];
                    }
                }
            }
        }
    }
    return EmbeddingModel(vocab.words, std::move(in));
}

inline EmbeddingModel train_embeddings(const std::vector<std::string>& documents, const TrainingConfig& cfg = {}) {
    std::vector<std::vector<std::string>> docs;
    for (const auto& d : documents) docs.push_back(text::preprocess(d));
    bool any = false;
    for (const auto& d : docs) any = any || !d.empty();
    if (!any) throw ConfigError("corpus is empty after preprocessing");
    return train_on_tokens(docs, cfg);
}

// ------------------------------------------------------------------ labels

inline std::vector<double> centroid(const EmbeddingModel& m, const std::vector<std::string>& words) {
    std::vector<double> c(m.dim(), 0.0);
    for (const auto& w : words) {
        const auto* r = m.matrix().row(*m.index(w));
        for (std::size_t k = 0; k < c.size(); ++k) c[k] += r[k];
    }
    for (auto& x : c) x /= static_cast<double>(words.size());
    return c;
}

/// Sorted, de-duplicated in-vocabulary subset.
inline std::vector<std::string> in_vocabulary(const EmbeddingModel& m, const std::vector<std::string>& words) {
    std::set<std::string> s;
    for (const auto& w : words)
        if (m.contains(w)) s.insert(w);
    return {s.begin(), s.end()};
}

/// Iterative word dropout: repeatedly remove the word farthest (cosine distance)
/// from the current group's centroid until `target_k` remain. Ties drop the
/// lexicographically first word. `removed`, when given, receives the drop order.
inline std::vector<std::string> caption_dropout_labels(const std::vector<std::string>& caption_words,
                                                       const EmbeddingModel& model, std::size_t target_k = 5,
                                                       std::vector<std::string>* removed = nullptr) {
    if (target_k == 0) throw ConfigError("target_k must be >= 1");
    auto group = in_vocabulary(model, caption_words);
    while (group.size() > target_k) {
        const auto c = centroid(model, group);
        std::size_t worst = 0;
        double worst_dist = -1;
        for (std::size_t i = 0; i < group.size(); ++i) {
            const double dist = 1.0 - cosine(model.vector(group[i]), c);
            if (dist > worst_dist) {
                worst = i;
                worst_dist = dist;
            }
        }
        if (removed) removed->push_back(group[worst]);
        group.erase(group.begin() + static_cast<long>(worst));
    }
    return group;
}

/// Up to `count` abstract-only words nearest the joint caption+abstract centroid.
inline std::vector<std::string> abstract_labels(const std::vector<std::string>& caption_words,
                                                const std::vector<std::string>& abstract_words,
                                                const std::vector<std::string>& caption_labels,
                                                const EmbeddingModel& model, std::size_t count = 3) {
    auto joint = caption_words;
    joint.insert(joint.end(), abstract_words.begin(), abstract_words.end());
    joint = in_vocabulary(model, joint);
    if (joint.empty()) return {};
    const auto c = centroid(model, joint);

    const std::set<std::string> exclude(caption_labels.begin(), caption_labels.end());
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& w : in_vocabulary(model, abstract_words))
        if (!exclude.count(w)) scored.emplace_back(w, cosine(model.vector(w), c));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < count; ++i) out.push_back(scored[i].first);
    return out;
}

} // namespace exsclaim::embedding
