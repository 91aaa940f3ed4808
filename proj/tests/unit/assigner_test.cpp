#include <gtest/gtest.h>

#include "exsclaim/assigner.hpp"

using namespace exsclaim;
using namespace exsclaim::assigner;

namespace {

MasterImage master(std::optional<std::string> id) {
    MasterImage m;
    m.subfigure_id = std::move(id);
    return m;
}

CaptionSegment segment(const std::string& id, const std::string& text) {
    CaptionSegment s;
    s.subfigure_id = id;
    s.text = text;
    return s;
}

Query query(std::vector<std::vector<std::string>> families) {
    Query q;
    q.name = "q";
    for (auto& f : families) q.keyword_families.push_back({std::move(f)});
    return q;
}

} // namespace

TEST(Assign, JoinsByIdentifierAndReportsOrphans) {
    const auto r = assign_captions({master("a"), master("b"), master(std::nullopt)},
                                   {segment("a", "TEM image"), segment("c", "XRD pattern")});
    EXPECT_EQ(r.masters[0].caption_segment, "(a) TEM image.");
    EXPECT_FALSE(r.masters[1].caption_segment);
    EXPECT_FALSE(r.masters[2].caption_segment);
    ASSERT_EQ(r.orphans.size(), 1u);
    EXPECT_EQ(r.orphans[0].subfigure_id, "c");
}

TEST(Assign, DuplicateSegmentsKeepTheFirst) {
    const auto r = assign_captions({master("a")}, {segment("a", "first"), segment("a", "second")});
    EXPECT_EQ(r.masters[0].caption_segment, "(a) first.");
    ASSERT_EQ(r.orphans.size(), 1u);
    EXPECT_EQ(r.orphans[0].text, "second");
}

TEST(Keywords, WholeWordsWithSimplePlurals) {
    const auto q = query({{"tem", "sem"}, {"nanoparticle", "nanowire", "electron microscope"}});
    EXPECT_EQ(find_keywords("TEM images of gold nanoparticles", q), (std::vector<std::string>{"tem", "nanoparticle"}));
    EXPECT_EQ(find_keywords("HRTEM image of nanowires", q), (std::vector<std::string>{"nanowire"}));
    EXPECT_EQ(find_keywords("Two electron microscopes", q), (std::vector<std::string>{"electron microscope"}));
    EXPECT_TRUE(find_keywords("electrons microscope", q).empty());
    EXPECT_TRUE(find_keywords("", q).empty());
}

TEST(Keywords, CategoryFollowsSegmentAndCount) {
    const auto q = query({{"tem"}, {"gold"}});
    auto m = master("a");
    mark_keywords(m, q);
    EXPECT_EQ(m.label_category, LabelCategory::caption_unassigned);
    EXPECT_TRUE(m.keywords.empty());

    m.caption_segment = "(a) XRD pattern.";
    mark_keywords(m, q);
    EXPECT_EQ(m.label_category, LabelCategory::label_unassigned);

    m.caption_segment = "(a) TEM image.";
    mark_keywords(m, q);
    EXPECT_EQ(m.label_category, LabelCategory::single_label);

    m.caption_segment = "(a) TEM image of gold.";
    mark_keywords(m, q);
    EXPECT_EQ(m.label_category, LabelCategory::multi_label);
    EXPECT_EQ(m.keywords, (std::vector<std::string>{"tem", "gold"}));
}

TEST(Keywords, SegmentsGetTheirOwnKeywords) {
    std::vector<CaptionSegment> segs = {segment("a", "TEM of gold"), segment("b", "UV-vis")};
    mark_segment_keywords(segs, query({{"tem"}, {"gold"}}));
    EXPECT_EQ(segs[0].keywords, (std::vector<std::string>{"tem", "gold"}));
    EXPECT_TRUE(segs[1].keywords.empty());
}
