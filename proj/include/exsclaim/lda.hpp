#pragma once

// Latent Dirichlet Allocation by collapsed Gibbs sampling, fold-in topic assignment,
// and embedding-derived topic names.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "exsclaim/embedding.hpp"
#include "exsclaim/json_io.hpp"

namespace exsclaim::lda {

struct LdaConfig {
    std::size_t topics = 10;
    std::optional<double> alpha; // default 50 / K
    double beta = 0.01;
    std::size_t iterations = 1000;
    std::uint64_t seed = 1;
};

struct TopicModel {
    std::size_t K = 0;
    double alpha = 0, beta = 0;
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> vocabulary; // sorted
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<long>> word_topic; // |V| x K
    std::vector<long> topic_total;             // K
    std::vector<std::vector<long>> doc_topic;  // D x K

    std::size_t V() const { return vocabulary.size(); }

    double phi(std::size_t k, std::size_t w) const {
        return (word_topic[w][k] + beta) / (topic_total[k] + static_cast<double>(V()) * beta);
    }
    std::vector<std::vector<double>> phi_matrix() const {
        std::vector<std::vector<double>> out(K, std::vector<double>(V()));
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t w = 0; w < V(); ++w) out[k][w] = phi(k, w);
        return out;
    }
    std::vector<std::vector<double>> theta_matrix() const {
        std::vector<std::vector<double>> out;
        for (const auto& row : doc_topic) {
            long n = 0;
            for (auto c : row) n += c;
            std::vector<double> t(K);
            for (std::size_t k = 0; k < K; ++k)
                t[k] = (row[k] + alpha) / (static_cast<double>(n) + static_cast<double>(K) * alpha);
            out.push_back(std::move(t));
        }
        return out;
    }
};

inline std::size_t sample_discrete(const std::vector<double>& weights, std::mt19937_64& rng) {
    double total = 0;
    for (double w : weights) total += w;
    double u = embedding::uniform01(rng) * total;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        u -= weights[k];
        if (u < 0) return k;
    }
    return weights.size() - 1;
}

inline TopicModel train_lda(const std::vector<std::vector<std::string>>& docs, const LdaConfig& cfg) {
    if (cfg.topics < 1) throw ConfigError("LDA needs K >= 1");
    const double alpha = cfg.alpha.value_or(50.0 / static_cast<double>(cfg.topics));
    if (!(alpha > 0) || !(cfg.beta > 0)) throw ConfigError("LDA priors must be positive");

    TopicModel m;
    m.K = cfg.topics;
    m.alpha = alpha;
    m.beta = cfg.beta;
    m.iterations = cfg.iterations;
    m.seed = cfg.seed;
    std::set<std::string> vocab;
    for (const auto& d : docs) vocab.insert(d.begin(), d.end());
    if (vocab.empty()) throw ConfigError("LDA corpus is empty");
    m.vocabulary.assign(vocab.begin(), vocab.end());
    for (std::size_t i = 0; i < m.vocabulary.size(); ++i) m.index[m.vocabulary[i]] = i;
    if (m.K > m.V()) throw ConfigError("K (" + std::to_string(m.K) + ") exceeds vocabulary size (" +
                                       std::to_string(m.V()) + ")");

    const std::size_t K = m.K;
    m.word_topic.assign(m.V(), std::vector<long>(K, 0));
    m.topic_total.assign(K, 0);
    m.doc_topic.assign(docs.size(), std::vector<long>(K, 0));

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::vector<std::size_t>> words(docs.size()), z(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d)
        for (const auto& w : docs[d]) {
            const auto wi = m.index.at(w);
            const auto k = static_cast<std::size_t>(embedding::uniform01(rng) * static_cast<double>(K)) % K;
            words[d].push_back(wi);
            z[d].push_back(k);
            ++m.word_topic[wi][k];
            ++m.topic_total[k];
            ++m.doc_topic[d][k];
        }

    const double vbeta = static_cast<double>(m.V()) * m.beta;
    std::vector<double> p(K);
    for (std::size_t it = 0; it < cfg.iterations; ++it)
        for (std::size_t d = 0; d < docs.size(); ++d)
            for (std::size_t i = 0; i < words[d].size(); ++i) {
                const auto w = words[d][i];
                auto k = z[d][i];
                --m.word_topic[w][k];
                --m.topic_total[k];
                --m.doc_topic[d][k];
                for (std::size_t t = 0; t < K; ++t)
                    p[t] = (m.doc_topic[d][t] + m.alpha) * (m.word_topic[w][t] + m.beta) / (m.topic_total[t] + vbeta);
                k = sample_discrete(p, rng);
                z[d][i] = k;
                ++m.word_topic[w][k];
                ++m.topic_total[k];
                ++m.doc_topic[d][k];
            }
    return m;
}

struct TopicAssignment {
    std::size_t topic = 0;
    double confidence = 0.0;
};

struct FoldInConfig {
    std::size_t iterations = 200;
    std::size_t burn_in = 50;
    std::uint64_t seed = 7;
};

/// Held-out topic mixture by Gibbs sampling with the topic-word distributions
/// fixed, averaged over post-burn-in sweeps.
inline std::optional<std::vector<double>> infer_theta(const std::vector<std::string>& doc, const TopicModel& m,
                                                      const FoldInConfig& cfg = {}) {
    std::vector<std::size_t> words;
    for (const auto& w : doc)
        if (auto it = m.index.find(w); it != m.index.end()) words.push_back(it->second);
    if (words.empty()) return std::nullopt;

    const std::size_t K = m.K;
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> z(words.size());
    std::vector<long> n(K, 0);
    for (auto& k : z) {
        k = static_cast<std::size_t>(embedding::uniform01(rng) * static_cast<double>(K)) % K;
        ++n[k];
    }
    std::vector<double> p(K), theta(K, 0.0);
    std::size_t samples = 0;
    const double denom = static_cast<double>(words.size()) + static_cast<double>(K) * m.alpha;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        for (std::size_t i = 0; i < words.size(); ++i) {
            --n[z[i]];
            for (std::size_t t = 0; t < K; ++t) p[t] = (n[t] + m.alpha) * m.phi(t, words[i]);
            z[i] = sample_discrete(p, rng);
            ++n[z[i]];
        }
        if (it >= cfg.burn_in) {
            for (std::size_t t = 0; t < K; ++t) theta[t] += (n[t] + m.alpha) / denom;
            ++samples;
        }
    }
    if (samples == 0) {
        for (std::size_t t = 0; t < K; ++t) theta[t] = (n[t] + m.alpha) / denom;
    } else {
        for (auto& x : theta) x /= static_cast<double>(samples);
    }
    return theta;
}

/// Best topic of the document with its confidence, even below any threshold.
inline std::optional<TopicAssignment> best_topic(const std::vector<std::string>& doc, const TopicModel& m,
                                                 const FoldInConfig& cfg = {}) {
    auto theta = infer_theta(doc, m, cfg);
    if (!theta) return std::nullopt;
    const auto best = static_cast<std::size_t>(std::max_element(theta->begin(), theta->end()) - theta->begin());
    return TopicAssignment{best, (*theta)[best]};
}

inline std::optional<TopicAssignment> assign_topic(const std::vector<std::string>& doc, const TopicModel& m,
                                                   double threshold, const FoldInConfig& cfg = {}) {
    auto a = best_topic(doc, m, cfg);
    if (!a || a->confidence < threshold) return std::nullopt;
    return a;
}

/// Two names for topic k: among its top-20 words by phi, those closest to the
/// phi-weighted centroid of their unit embedding vectors.
inline std::vector<std::string> name_topic(std::size_t k, const TopicModel& m, const embedding::EmbeddingModel& e,
                                           std::size_t top_n = 20, std::size_t count = 2) {
    std::vector<std::size_t> order(m.V());
    for (std::size_t w = 0; w < m.V(); ++w) order[w] = w;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return m.phi(k, a) > m.phi(k, b); });

    std::vector<std::pair<std::string, double>> top; // word, phi
    for (auto w : order) {
        if (top.size() == top_n) break;
        if (e.contains(m.vocabulary[w])) top.emplace_back(m.vocabulary[w], m.phi(k, w));
    }
    if (top.empty()) return {};

    std::vector<double> c(e.dim(), 0.0);
    for (const auto& [w, weight] : top) {
        auto v = e.vector(w);
        const double norm = std::sqrt(embedding::dot(v.data(), v.data(), v.size()));
        if (norm == 0) continue;
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += weight * v[i] / norm;
    }
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [w, _] : top) scored.emplace_back(w, embedding::cosine(e.vector(w), c));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < count; ++i) out.push_back(scored[i].first);
    return out;
}

// ------------------------------------------------------------------ persistence

inline json to_json(const TopicModel& m) {
    json j;
    j["format"] = "exsclaim-lda";
    j["version"] = 1;
    j["topics"] = m.K;
    j["alpha"] = m.alpha;
    j["beta"] = m.beta;
    j["iterations"] = m.iterations;
    j["seed"] = m.seed;
    j["vocabulary"] = m.vocabulary;
    j["word_topic_counts"] = m.word_topic;
    j["doc_topic_counts"] = m.doc_topic;
    return j;
}

inline TopicModel topic_model_from_json(const json& j) {
    jsonio::Reader in(j, "lda");
    if (in.str("format") != "exsclaim-lda") throw SchemaError("lda.format", "not an LDA model file");
    TopicModel m;
    m.K = static_cast<std::size_t>(in.integer("topics"));
    m.alpha = in.number("alpha");
    m.beta = in.number("beta");
    m.iterations = static_cast<std::size_t>(in.integer("iterations"));
    m.seed = in.at("seed").get<std::uint64_t>();
    m.vocabulary = in.at("vocabulary").get<std::vector<std::string>>();
    m.word_topic = in.at("word_topic_counts").get<std::vector<std::vector<long>>>();
    m.doc_topic = in.array_or_empty("doc_topic_counts").get<std::vector<std::vector<long>>>();
    if (m.K < 1 || !(m.alpha > 0) || !(m.beta > 0)) throw SchemaError("lda", "invalid hyperparameters");
    if (m.word_topic.size() != m.vocabulary.size()) throw SchemaError("lda.word_topic_counts", "row count != |V|");
    m.topic_total.assign(m.K, 0);
    for (std::size_t w = 0; w < m.V(); ++w) {
        if (m.word_topic[w].size() != m.K) throw SchemaError("lda.word_topic_counts", "column count != K");
        for (std::size_t k = 0; k < m.K; ++k) m.topic_total[k] += m.word_topic[w][k];
        m.index[m.vocabulary[w]] = w;
    }
    return m;
}

} // namespace exsclaim::lda
