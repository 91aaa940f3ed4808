#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "exsclaim/lda.hpp"

using namespace exsclaim;
using namespace exsclaim::lda;

namespace {

struct Planted {
    std::vector<std::string> left, right;
};

Planted vocabularies() {
    Planted p;
    for (int i = 0; i < 10; ++i) {
        p.left.push_back("metal" + std::to_string(i));
        p.right.push_back("polymer" + std::to_string(i));
    }
    return p;
}

std::vector<std::string> draw(std::mt19937& rng, const Planted& p, double left_share, int length) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::string> doc;
    for (int i = 0; i < length; ++i) doc.push_back((u(rng) < left_share ? p.left : p.right)[rng() % 10]);
    return doc;
}

double mass_on(const TopicModel& m, std::size_t k, const std::vector<std::string>& words) {
    double s = 0;
    for (const auto& w : words) s += m.phi(k, m.index.at(w));
    return s;
}

LdaConfig planted_config() {
    LdaConfig cfg;
    cfg.topics = 2;
    cfg.alpha = 0.1;
    cfg.beta = 0.01;
    cfg.iterations = 200;
    return cfg;
}

} // namespace

TEST(Lda, RecoversPlantedTopicsAndGatesConfidence) {
    const auto p = vocabularies();
    std::mt19937 rng(31);
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 200; ++i) docs.push_back(draw(rng, p, i % 2 ? 1.0 : 0.0, 30));
    const auto model = train_lda(docs, planted_config());

    std::size_t left_topic = 2;
    for (std::size_t k = 0; k < 2; ++k) {
        const double l = mass_on(model, k, p.left), r = mass_on(model, k, p.right);
        EXPECT_GE(std::max(l, r), 0.8) << "topic " << k;
        if (l > r) left_topic = k;
    }
    ASSERT_LT(left_topic, 2u);
    EXPECT_GE(mass_on(model, 1 - left_topic, p.right), 0.8);

    for (int i = 0; i < 20; ++i) {
        const bool left = i % 2;
        const auto a = assign_topic(draw(rng, p, left ? 1.0 : 0.0, 30), model, 0.80);
        ASSERT_TRUE(a) << "pure doc " << i;
        EXPECT_GE(a->confidence, 0.8);
        EXPECT_EQ(a->topic, left ? left_topic : 1 - left_topic);
    }
    for (int i = 0; i < 20; ++i) {
        auto mixed = draw(rng, p, 1.0, 15);
        const auto other = draw(rng, p, 0.0, 15);
        mixed.insert(mixed.end(), other.begin(), other.end());
        EXPECT_FALSE(assign_topic(mixed, model, 0.80)) << "mixed doc " << i;
        EXPECT_TRUE(best_topic(mixed, model));
    }
    EXPECT_FALSE(best_topic({"unknown", "words"}, model));
}

TEST(Lda, PhiAndThetaAreDistributions) {
    const auto p = vocabularies();
    std::mt19937 rng(4);
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 30; ++i) docs.push_back(draw(rng, p, 0.5, 10));
    LdaConfig cfg;
    cfg.topics = 3;
    cfg.iterations = 20;
    const auto m = train_lda(docs, cfg);
    EXPECT_DOUBLE_EQ(m.alpha, 50.0 / 3);
    for (const auto& row : m.phi_matrix()) EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
    for (const auto& row : m.theta_matrix()) EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
    const auto theta = infer_theta(docs[0], m);
    ASSERT_TRUE(theta);
    EXPECT_NEAR(std::accumulate(theta->begin(), theta->end(), 0.0), 1.0, 1e-9);
}

TEST(Lda, JsonRoundTripPreservesInference) {
    const auto p = vocabularies();
    std::mt19937 rng(9);
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 40; ++i) docs.push_back(draw(rng, p, i % 2, 12));
    auto cfg = planted_config();
    cfg.iterations = 30;
    const auto m = train_lda(docs, cfg);
    const auto back = topic_model_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(back.vocabulary, m.vocabulary);
    EXPECT_EQ(back.word_topic, m.word_topic);
    EXPECT_EQ(back.topic_total, m.topic_total);
    EXPECT_EQ(*infer_theta(docs[3], back), *infer_theta(docs[3], m));
    EXPECT_EQ(to_json(train_lda(docs, cfg)), to_json(m));
}

TEST(Lda, InvalidInputsAreRejected) {
    LdaConfig cfg;
    cfg.topics = 5;
    EXPECT_THROW(train_lda({{"a", "b"}}, cfg), ConfigError);
    EXPECT_THROW(train_lda({}, cfg), ConfigError);
    cfg.topics = 1;
    cfg.beta = 0;
    EXPECT_THROW(train_lda({{"a"}}, cfg), ConfigError);
    EXPECT_THROW(topic_model_from_json(json{{"format", "other"}}), SchemaError);
    auto bad = to_json(train_lda({{"a", "b"}}, LdaConfig{1, 0.1, 0.01, 2, 1}));
    bad["word_topic_counts"] = json::array({json::array({1})});
    EXPECT_THROW(topic_model_from_json(bad), SchemaError);
}
