#include <algorithm>
#include <cmath>
#include <tuple>

#include "doctest.h"
#include "facedet/postprocess.hpp"
#include "facedet/rng.hpp"
#include "testutil.hpp"

using facedet::Box;
using facedet::Detection;
using facedet::ScaleRun;

namespace {

bool same_detections(const std::vector<Detection>& a, const std::vector<Detection>& b,
                     double tol = 0.0) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].score - b[i].score) > tol) return false;
        if (std::abs(a[i].box.x1 - b[i].box.x1) > tol) return false;
        if (std::abs(a[i].box.y1 - b[i].box.y1) > tol) return false;
        if (std::abs(a[i].box.x2 - b[i].box.x2) > tol) return false;
        if (std::abs(a[i].box.y2 - b[i].box.y2) > tol) return false;
    }
    return true;
}

std::vector<Detection> dense_random(facedet::Rng& rng, size_t n) {
    std::vector<Detection> dets;
    for (size_t i = 0; i < n; ++i)
        dets.push_back({testutil::random_box(rng, 120.0, 5.0, 60.0), rng.uniform(0.01, 1.0)});
    return dets;
}

}  // namespace

TEST_SUITE("postprocess") {

TEST_CASE("nms keeps the strongest of overlapping boxes") {
    const Detection a{Box(0, 0, 10, 10), 0.9};
    const Detection b{Box(1, 1, 11, 11), 0.8};
    const Detection c{Box(100, 100, 110, 110), 0.7};
    REQUIRE(facedet::iou(a.box, b.box) == doctest::Approx(81.0 / 119.0).epsilon(1e-12));

    const std::vector<Detection> dets = {a, b, c};
    const auto kept = facedet::nms(dets, 0.5);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].score == 0.9);
    CHECK(kept[1].score == 0.7);

    // at a threshold above their overlap both survive
    CHECK(facedet::nms(dets, 0.7).size() == 3);

    const std::vector<Detection> single = {a};
    CHECK(same_detections(facedet::nms(single, 0.5), single));

    const std::vector<Detection> twins = {{Box(0, 0, 10, 10), 0.9}, {Box(0, 0, 10, 10), 0.8}};
    const auto one = facedet::nms(twins, 0.5);
    REQUIRE(one.size() == 1);
    CHECK(one[0].score == 0.9);

    CHECK_THROWS_AS(facedet::nms(dets, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(facedet::nms(dets, 1.0), std::invalid_argument);
}

TEST_CASE("nms tie-breaking: score, then area, then input order") {
    // equal scores: the larger box wins the overlap
    const std::vector<Detection> dets = {{Box(2, 2, 8, 8), 0.5}, {Box(0, 0, 10, 10), 0.5}};
    const auto kept = facedet::nms(dets, 0.3);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].box == Box(0, 0, 10, 10));

    // identical boxes and scores: input order decides, output stable
    const std::vector<Detection> same = {{Box(0, 0, 10, 10), 0.5}, {Box(0, 0, 10, 10), 0.5}};
    const auto first = facedet::nms(same, 0.5);
    REQUIRE(first.size() == 1);
}

TEST_CASE("nms output is a subset and idempotent on dense random instances") {
    facedet::Rng rng(501);
    for (int inst = 0; inst < 100; ++inst) {
        const auto dets = dense_random(rng, 1 + rng.uniform_index(50));
        const auto once = facedet::nms(dets, 0.5);
        CHECK(once.size() <= dets.size());
        for (const auto& k : once) {
            const bool found = std::any_of(dets.begin(), dets.end(), [&](const Detection& d) {
                return d.box == k.box && d.score == k.score;
            });
            CHECK(found);
        }
        // pairwise overlap of survivors stays below the threshold
        for (size_t i = 0; i < once.size(); ++i)
            for (size_t j = i + 1; j < once.size(); ++j)
                CHECK(facedet::iou(once[i].box, once[j].box) < 0.5);
        CHECK(same_detections(facedet::nms(once, 0.5), once));
    }
}

TEST_CASE("vote merges one cluster into its weighted average") {
    const std::vector<Detection> dets = {{Box(0, 0, 10, 10), 0.9}, {Box(1, 1, 11, 11), 0.8}};
    const auto out = facedet::bbox_vote(dets, 0.5);
    REQUIRE(out.size() == 1);
    CHECK(out[0].score == 0.9);
    const double lo = 0.8 / 1.7;  // weighted corner: (0.9*0 + 0.8*1)/1.7
    CHECK(out[0].box.x1 == doctest::Approx(lo).epsilon(1e-12));
    CHECK(out[0].box.y1 == doctest::Approx(lo).epsilon(1e-12));
    CHECK(out[0].box.x2 == doctest::Approx(10.0 + lo).epsilon(1e-12));
    CHECK(out[0].box.y2 == doctest::Approx(10.0 + lo).epsilon(1e-12));
}

TEST_CASE("vote leaves disjoint detections untouched, bit for bit") {
    const std::vector<Detection> dets = {{Box(0.1, 0.2, 10.3, 10.4), 0.9},
                                         {Box(50.5, 50.6, 60.7, 60.8), 0.4},
                                         {Box(200.9, 1.1, 210.2, 11.3), 0.7}};
    const auto out = facedet::bbox_vote(dets, 0.5);
    REQUIRE(out.size() == 3);
    // sorted by score, boxes copied verbatim
    CHECK(out[0].box == dets[0].box);
    CHECK(out[1].box == dets[2].box);
    CHECK(out[2].box == dets[1].box);
}

TEST_CASE("identical boxes collapse keeping the maximum score") {
    const std::vector<Detection> dets = {{Box(0, 0, 10, 10), 0.6}, {Box(0, 0, 10, 10), 0.4}};
    const auto out = facedet::bbox_vote(dets, 0.5);
    REQUIRE(out.size() == 1);
    CHECK(out[0].box == Box(0, 0, 10, 10));
    CHECK(out[0].score == 0.6);
}

TEST_CASE("vote clusters match single-link structure on separable instances") {
    facedet::Rng rng(502);
    for (int inst = 0; inst < 100; ++inst) {
        const auto scene = testutil::separated_clusters(rng, 0.5);
        const auto got =
            testutil::canonical_partition(facedet::vote_clusters(scene.dets, 0.5));
        const auto ref = testutil::single_link_clusters(scene.dets, 0.5);
        CHECK(got == scene.partition);
        CHECK(ref == scene.partition);

        const auto voted = facedet::bbox_vote(scene.dets, 0.5);
        CHECK(voted.size() == scene.partition.size());
        CHECK(same_detections(facedet::bbox_vote(voted, 0.5), voted));
    }
}

TEST_CASE("vote invariants on dense random instances") {
    facedet::Rng rng(503);
    for (int inst = 0; inst < 100; ++inst) {
        const auto dets = dense_random(rng, 1 + rng.uniform_index(40));
        const auto clusters = facedet::vote_clusters(dets, 0.5);
        const auto voted = facedet::bbox_vote(dets, 0.5);
        REQUIRE(clusters.size() == voted.size());

        size_t members = 0;
        for (const auto& c : clusters) members += c.size();
        CHECK(members == dets.size());

        // outputs sorted by score; each equals its cluster's max score and
        // stays inside the member envelope
        for (size_t i = 0; i + 1 < voted.size(); ++i) CHECK(voted[i].score >= voted[i + 1].score);
        std::vector<std::pair<double, Box>> by_score;
        for (const auto& c : clusters) {
            double best = 0.0;
            double x1 = 1e30, y1 = 1e30, x2 = -1e30, y2 = -1e30;
            for (size_t idx : c) {
                best = std::max(best, dets[idx].score);
                x1 = std::min(x1, dets[idx].box.x1);
                y1 = std::min(y1, dets[idx].box.y1);
                x2 = std::max(x2, dets[idx].box.x2);
                y2 = std::max(y2, dets[idx].box.y2);
            }
            by_score.push_back({best, Box(x1, y1, x2, y2)});
        }
        std::sort(by_score.begin(), by_score.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        for (size_t i = 0; i < voted.size(); ++i) {
            CHECK(voted[i].score == by_score[i].first);
            CHECK(voted[i].box.x1 >= by_score[i].second.x1 - 1e-9);
            CHECK(voted[i].box.y1 >= by_score[i].second.y1 - 1e-9);
            CHECK(voted[i].box.x2 <= by_score[i].second.x2 + 1e-9);
            CHECK(voted[i].box.y2 <= by_score[i].second.y2 + 1e-9);
        }
    }
}

TEST_CASE("merge maps runs back to original coordinates") {
    SUBCASE("single unity run reduces to nms then vote") {
        facedet::Rng rng(504);
        const auto dets = dense_random(rng, 30);
        const std::vector<ScaleRun> runs = {{1.0, false, dets}};
        const auto merged = facedet::merge_scales(runs, {200, 200}, 0.5, 0.3, 750);
        const auto direct = facedet::bbox_vote(facedet::nms(dets, 0.3), 0.5);
        CHECK(same_detections(merged, direct, 1e-12));
    }

    SUBCASE("scale two maps halves coordinates") {
        const std::vector<ScaleRun> runs = {{2.0, false, {{Box(0, 0, 20, 20), 0.8}}}};
        const auto merged = facedet::merge_scales(runs, {50, 50}, 0.5, 0.3, 750);
        REQUIRE(merged.size() == 1);
        CHECK(merged[0].box == Box(0, 0, 10, 10));
    }

    SUBCASE("flipped runs un-mirror against the rescaled width") {
        // original frame 100 wide, run at scale 2: mirror frame is 200
        const std::vector<ScaleRun> runs = {{2.0, true, {{Box(20, 40, 60, 80), 0.9}}}};
        const auto merged = facedet::merge_scales(runs, {100, 100}, 0.5, 0.3, 750);
        REQUIRE(merged.size() == 1);
        CHECK(merged[0].box == Box(70, 20, 90, 40));
    }

    SUBCASE("the same physical face from two runs merges to one output") {
        const std::vector<ScaleRun> runs = {
            {1.0, false, {{Box(10, 10, 30, 30), 0.8}}},
            {2.0, false, {{Box(20.4, 20.4, 60.4, 60.4), 0.7}}},
        };
        const auto merged = facedet::merge_scales(runs, {100, 100}, 0.5, 0.3, 750);
        CHECK(merged.size() == 1);
    }

    SUBCASE("order of runs does not matter") {
        facedet::Rng rng(505);
        std::vector<ScaleRun> runs = {{1.0, false, dense_random(rng, 20)},
                                      {2.0, false, dense_random(rng, 20)},
                                      {0.5, true, dense_random(rng, 20)}};
        const auto fwd = facedet::merge_scales(runs, {240, 240}, 0.5, 0.3, 750);
        std::reverse(runs.begin(), runs.end());
        const auto rev = facedet::merge_scales(runs, {240, 240}, 0.5, 0.3, 750);
        REQUIRE(fwd.size() == rev.size());
        auto key = [](const Detection& d) {
            return std::tuple(-d.score, d.box.x1, d.box.y1, d.box.x2, d.box.y2);
        };
        auto a = fwd, b = rev;
        std::sort(a.begin(), a.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
        std::sort(b.begin(), b.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
        CHECK(same_detections(a, b, 1e-9));
    }

    SUBCASE("cap keeps the strongest") {
        const std::vector<ScaleRun> runs = {{1.0, false,
                                             {{Box(0, 0, 10, 10), 0.5},
                                              {Box(50, 50, 60, 60), 0.9},
                                              {Box(100, 100, 110, 110), 0.7}}}};
        const auto merged = facedet::merge_scales(runs, {200, 200}, 0.5, 0.3, 2);
        REQUIRE(merged.size() == 2);
        CHECK(merged[0].score == 0.9);
        CHECK(merged[1].score == 0.7);
    }

    SUBCASE("input validation") {
        CHECK_THROWS_AS(facedet::merge_scales({}, {100, 100}, 0.5, 0.3, 750),
                        std::invalid_argument);
        const std::vector<ScaleRun> bad_scale = {{0.0, false, {}}};
        CHECK_THROWS_AS(facedet::merge_scales(bad_scale, {100, 100}, 0.5, 0.3, 750),
                        std::invalid_argument);
        const std::vector<ScaleRun> flip_no_width = {{1.0, true, {{Box(0, 0, 5, 5), 0.5}}}};
        CHECK_THROWS_AS(facedet::merge_scales(flip_no_width, {0, 0}, 0.5, 0.3, 750),
                        std::invalid_argument);
        const std::vector<ScaleRun> ok = {{1.0, false, {{Box(0, 0, 5, 5), 0.5}}}};
        CHECK_THROWS_AS(facedet::merge_scales(ok, {100, 100}, 0.5, 0.3, 0),
                        std::invalid_argument);
    }
}

}  // TEST_SUITE
