#include <cmath>
#include <set>

#include "doctest.h"
#include "facedet/sampling.hpp"
#include "json.hpp"

using facedet::AnchorScaleSet;
using facedet::Box;
using facedet::Rng;
using facedet::SamplePlan;

TEST_SUITE("sampling") {

TEST_CASE("default scale set") {
    const AnchorScaleSet set = AnchorScaleSet::from_pyramid();
    REQUIRE(set.scales.size() == 12);
    CHECK(set.scales.front() == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(set.scales.back() == doctest::Approx(256.0 * std::sqrt(2.0)).epsilon(1e-12));
    for (size_t i = 1; i < set.scales.size(); ++i) CHECK(set.scales[i] > set.scales[i - 1]);
    // alternating 2S / 2sqrt(2)S pattern: each step is a quarter octave pair
    CHECK(set.scales[1] == doctest::Approx(8.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(set.scales[2] == doctest::Approx(16.0).epsilon(1e-12));

    AnchorScaleSet bad;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.scales = {4.0, 4.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("nearest scale lookup") {
    const AnchorScaleSet set = AnchorScaleSet::from_pyramid();

    auto [i8, s8] = facedet::nearest_anchor_scale(8.0, set);
    CHECK(i8 == 0);
    CHECK(s8 == doctest::Approx(8.0));

    auto [i28, s28] = facedet::nearest_anchor_scale(28.0, set);
    CHECK(i28 == 4);
    CHECK(s28 == doctest::Approx(32.0));

    auto [ibig, sbig] = facedet::nearest_anchor_scale(1000.0, set);
    CHECK(ibig == set.scales.size() - 1);
    CHECK(sbig == doctest::Approx(256.0 * std::sqrt(2.0)));

    // exact midpoint resolves to the smaller index
    AnchorScaleSet two;
    two.scales = {1.0, 3.0};
    CHECK(facedet::nearest_anchor_scale(2.0, two).first == 0);

    CHECK_THROWS_AS(facedet::nearest_anchor_scale(0.0, set), std::invalid_argument);
}

TEST_CASE("random scale window is half a pyramid step each way") {
    const AnchorScaleSet set = AnchorScaleSet::from_pyramid();
    const double target = set.scales[4];
    CHECK(facedet::random_scale_around(set, 4, 0.5) == doctest::Approx(target).epsilon(1e-12));
    CHECK(facedet::random_scale_around(set, 4, 0.0) ==
          doctest::Approx(target * std::exp2(-0.25)).epsilon(1e-12));
    CHECK(facedet::random_scale_around(set, 4, 1.0) ==
          doctest::Approx(target * std::exp2(0.25)).epsilon(1e-12));
    CHECK_THROWS_AS(facedet::random_scale_around(set, 99, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(facedet::random_scale_around(set, 4, 1.5), std::invalid_argument);

    // log-uniform: the mean of log2(s/target) over many draws is ~0
    Rng rng(401);
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
        acc += std::log2(facedet::random_scale_around(set, 4, rng.uniform()) / target);
    CHECK(std::abs(acc / n) < 0.005);
}

TEST_CASE("plans respect their invariants") {
    const AnchorScaleSet set = AnchorScaleSet::from_pyramid();
    Rng rng(402);
    const double train = 640.0;
    for (int t = 0; t < 2000; ++t) {
        const double side = rng.uniform(6.0, 300.0);
        const double x = rng.uniform(0.0, 1500.0);
        const double y = rng.uniform(0.0, 1500.0);
        const Box face(x, y, x + side, y + side * 1.2);
        const std::vector<Box> gts = {face};

        const SamplePlan plan = facedet::data_anchor_sample(face, gts, 1800.0, 1800.0, set,
                                                            train, rng);
        CHECK(plan.s_face == doctest::Approx(facedet::mean_side(face)).epsilon(1e-12));
        CHECK(plan.s_star == plan.s_random / plan.s_face);
        CHECK(plan.s_star * plan.s_face == doctest::Approx(plan.s_random).epsilon(1e-14));
        CHECK(plan.crop.width() == doctest::Approx(train).epsilon(1e-9));
        CHECK(plan.crop.height() == doctest::Approx(train).epsilon(1e-9));

        // the resized face sits inside the crop
        const Box resized = facedet::scale_box(face, plan.s_star);
        CHECK(resized.x1 >= plan.crop.x1 - 1e-9);
        CHECK(resized.y1 >= plan.crop.y1 - 1e-9);
        CHECK(resized.x2 <= plan.crop.x2 + 1e-9);
        CHECK(resized.y2 <= plan.crop.y2 + 1e-9);

        const auto [i_anchor, s_anchor] = facedet::nearest_anchor_scale(plan.s_face, set);
        CHECK(plan.s_anchor == s_anchor);
        CHECK(plan.target_index <= std::min(i_anchor + 1, set.scales.size() - 1));
        CHECK(plan.rng_trace.size() >= 8);   // five geometry draws + three gates
        CHECK(plan.rng_trace.size() <= 11);  // plus up to three photometric values
    }
}

TEST_CASE("in-bounds crops are preferred, padding recorded otherwise") {
    const AnchorScaleSet set = AnchorScaleSet::from_pyramid();

    // a small centered face in a big image: an in-bounds crop position exists
    // whenever the resized image is at least as wide as the crop, so padding
    // may only appear when the rescale shrinks the image below the crop side
    Rng rng(403);
    for (int t = 0; t < 300; ++t) {
        const Box face(800, 800, 856, 856);
        const SamplePlan plan =
            facedet::data_anchor_sample(face, std::vector<Box>{face}, 4000.0, 4000.0, set,
                                        512.0, rng);
        const double rw = 4000.0 * plan.s_star;
        CHECK(plan.padded == (rw < 512.0));
        if (!plan.padded) {
            CHECK(plan.crop.x1 >= -1e-9);
            CHECK(plan.crop.y1 >= -1e-9);
            CHECK(plan.crop.x2 <= rw + 1e-9);
            CHECK(plan.crop.y2 <= rw + 1e-9);
        }
    }

    // image smaller than the crop side: padding is the only option
    Rng rng2(404);
    const Box face(10, 10, 40, 40);
    const SamplePlan plan = facedet::data_anchor_sample(face, std::vector<Box>{face}, 60.0,
                                                        60.0, set, 512.0, rng2);
    CHECK(plan.padded);
    const Box resized = facedet::scale_box(face, plan.s_star);
    CHECK(resized.x1 >= plan.crop.x1 - 1e-9);
    CHECK(resized.x2 <= plan.crop.x2 + 1e-9);
}

TEST_CASE("sampling rejects faces missing from the annotation list") {
    const AnchorScaleSet set = AnchorScaleSet::from_pyramid();
    Rng rng(405);
    const Box face(0, 0, 30, 30);
    const std::vector<Box> others = {Box(50, 50, 80, 80)};
    CHECK_THROWS_AS(facedet::data_anchor_sample(face, others, 100, 100, set, 512.0, rng),
                    std::invalid_argument);
}

TEST_CASE("an oversized face cannot fit the crop") {
    AnchorScaleSet set;
    set.scales = {512.0};  // forces s_random ~ 512 on a tall face
    Rng rng(406);
    const Box face(0, 0, 100, 400);  // aspect 4: height rescales to ~1024
    const std::vector<Box> gts = {face};
    CHECK_THROWS_AS(facedet::data_anchor_sample(face, gts, 2000, 2000, set, 256.0, rng),
                    std::invalid_argument);
}

TEST_CASE("photometric plans gate each component at one half") {
    Rng rng(407);
    int brightness_on = 0, contrast_on = 0, saturation_on = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto plan = facedet::photometric_plan(rng);
        CHECK(plan.brightness_delta >= -32.0);
        CHECK(plan.brightness_delta < 32.0);
        CHECK(plan.contrast_factor >= 0.5);
        CHECK(plan.contrast_factor < 1.5);
        CHECK(plan.saturation_factor >= 0.5);
        CHECK(plan.saturation_factor < 1.5);
        if (plan.brightness_delta != 0.0) ++brightness_on;
        if (plan.contrast_factor != 1.0) ++contrast_on;
        if (plan.saturation_factor != 1.0) ++saturation_on;
    }
    for (int on : {brightness_on, contrast_on, saturation_on}) {
        CHECK(on > n / 2 - 425);  // 6 sigma around n/2
        CHECK(on < n / 2 + 425);
    }
}

TEST_CASE("plan serialization carries the pinned key set") {
    const AnchorScaleSet set = AnchorScaleSet::from_pyramid();
    Rng rng(408);
    const Box face(100, 100, 150, 150);
    SamplePlan plan = facedet::data_anchor_sample(face, std::vector<Box>{face}, 800.0, 800.0,
                                                  set, 512.0, rng);
    plan.seed = 77;

    const std::string line = plan.to_json_line();
    CHECK(line.find('\n') == std::string::npos);
    const auto j = nlohmann::json::parse(line);
    const std::set<std::string> keys = {"s_face", "s_anchor", "s_random", "s_star",
                                        "crop",   "flip",     "photometric", "seed"};
    std::set<std::string> got;
    for (const auto& [k, v] : j.items()) got.insert(k);
    CHECK(got == keys);
    CHECK(j["s_face"].get<double>() == doctest::Approx(50.0));
    CHECK(j["seed"].get<std::uint64_t>() == 77);
    REQUIRE(j["crop"].is_array());
    REQUIRE(j["crop"].size() == 4);
    CHECK(j["crop"][0].get<double>() == doctest::Approx(plan.crop.x1));
    CHECK(j["crop"][3].get<double>() == doctest::Approx(plan.crop.y2));
    CHECK(j["photometric"].contains("brightness"));
    CHECK(j["photometric"].contains("contrast"));
    CHECK(j["photometric"].contains("saturation"));

    // identical draws serialize identically
    Rng again(408);
    SamplePlan rerun = facedet::data_anchor_sample(face, std::vector<Box>{face}, 800.0, 800.0,
                                                   set, 512.0, again);
    rerun.seed = 77;
    CHECK(rerun.to_json_line() == line);
}

TEST_CASE("box transforms follow the plan") {
    SamplePlan plan;
    plan.s_star = 0.5;
    plan.crop = Box(10, 10, 522, 522);
    plan.flip = false;

    SUBCASE("scale then translate") {
        const std::vector<Box> boxes = {Box(20, 20, 40, 40)};
        const auto out = facedet::transform_boxes(boxes, plan);
        REQUIRE(out.size() == 1);
        CHECK(out[0].x1 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(out[0].y1 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(out[0].x2 == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(out[0].y2 == doctest::Approx(10.0).epsilon(1e-12));
    }

    SUBCASE("identity plan keeps boxes") {
        SamplePlan id;
        id.s_star = 1.0;
        id.crop = Box(0, 0, 512, 512);
        const std::vector<Box> boxes = {Box(5, 6, 50, 60)};
        const auto out = facedet::transform_boxes(boxes, id);
        REQUIRE(out.size() == 1);
        CHECK(out[0] == boxes[0]);
    }

    SUBCASE("flip mirrors inside the crop frame") {
        SamplePlan fl;
        fl.s_star = 1.0;
        fl.crop = Box(0, 0, 100, 100);
        fl.flip = true;
        const std::vector<Box> boxes = {Box(10, 20, 30, 40)};
        const auto out = facedet::transform_boxes(boxes, fl);
        REQUIRE(out.size() == 1);
        CHECK(out[0] == Box(70, 20, 90, 40));
    }

    SUBCASE("retained-area rule drops boxes mostly outside") {
        SamplePlan id;
        id.s_star = 1.0;
        id.crop = Box(0, 0, 100, 100);
        // 20 wide, ~29% inside: dropped at the default 0.3 threshold
        const std::vector<Box> mostly_out = {Box(-14.2, 10, 5.8, 30)};
        CHECK(facedet::transform_boxes(mostly_out, id).empty());
        // 31% inside: kept and clipped at x=0
        const std::vector<Box> mostly_in = {Box(-13.8, 10, 6.2, 30)};
        const auto kept = facedet::transform_boxes(mostly_in, id);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].x1 == 0.0);
        CHECK(kept[0].x2 == doctest::Approx(6.2));
    }

    SUBCASE("round trip for interior boxes") {
        SamplePlan rt;
        rt.s_star = 0.75;
        rt.crop = Box(40, 60, 552, 572);
        rt.flip = true;
        // interior in the crop after scaling
        const std::vector<Box> boxes = {Box(100, 120, 300, 350), Box(400, 200, 500, 360)};
        const auto fwd = facedet::transform_boxes(boxes, rt);
        REQUIRE(fwd.size() == 2);
        const auto back = facedet::untransform_boxes(fwd, rt);
        REQUIRE(back.size() == 2);
        for (size_t i = 0; i < 2; ++i) {
            CHECK(back[i].x1 == doctest::Approx(boxes[i].x1).epsilon(1e-9));
            CHECK(back[i].y1 == doctest::Approx(boxes[i].y1).epsilon(1e-9));
            CHECK(back[i].x2 == doctest::Approx(boxes[i].x2).epsilon(1e-9));
            CHECK(back[i].y2 == doctest::Approx(boxes[i].y2).epsilon(1e-9));
        }
    }
}

}  // TEST_SUITE
