#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "xaib/gt.hpp"
#include "xaib/scene.hpp"

using namespace xaib;
using xaib::test::model;
using xaib::test::test_set;

namespace {

const Example& first_of_class(int model_id, int cls) {
    for (const auto& e : test_set(model_id)) {
        if (e.class_label == cls) return e;
    }
    FAIL("no example of the class");
    throw 0;
}

InfluenceMap influence_of(const Example& e) {
    const auto fr = forward(model(e.model_id).network, e.image);
    return backtrack_influence(model(e.model_id), fr.trace, e.class_label);
}

Tensor image_of(const Scene& s, int r0 = 0, int r1 = 0) { return upscale(render_scene(s, default_concept_parts()), r0, r1); }

// One detector at quadrant (0,0), channel 0, with the given influence; the
// input holds that part's own pattern there.
GroundTruth single_part(int part, Influence inf, int r0, int r1) {
    Scene s;
    s.content[0] = 0;
    s.cells[0].at(0, 0) = part;
    const Tensor input = image_of(s, r0, r1);
    InfluenceMap m;
    m.nodes.resize(layer::kCount);
    m.nodes[layer::kConv0].assign(6 * 6 * 36, Influence{});
    m.nodes[layer::kConv0][static_cast<std::size_t>(part * 3)] = inf;
    return render_gt(m, input, default_concept_parts(), r0, r1);
}

}  // namespace

TEST_CASE("class 2 gives full influence to both required instances") {
    for (int id : {1, 3}) {
        const Example& e = first_of_class(id, 2);
        const InfluenceMap m = influence_of(e);
        CHECK(m.concept_level[static_cast<std::size_t>(id)][1].positive == 1.0);
        CHECK(m.concept_level[static_cast<std::size_t>(id)][2].positive == 1.0);
        CHECK(m.concept_level[static_cast<std::size_t>(id)][1].negative == 0.0);
    }
}

TEST_CASE("class 0 uses only the concept at position 0") {
    for (int id = 0; id < 5; ++id) {
        const Example& e = first_of_class(id, 0);
        const InfluenceMap m = influence_of(e);
        for (int other = 0; other < 5; ++other) {
            for (int pos = 0; pos < 9; ++pos) {
                const Influence inf = m.concept_level[static_cast<std::size_t>(other)][static_cast<std::size_t>(pos)];
                if (other == id && pos == 0) {
                    CHECK(inf.positive == 1.0);
                    CHECK(inf.negative == 0.0);
                } else {
                    CHECK_FALSE(inf.any());
                }
            }
        }
    }
}

TEST_CASE("both halves of concept 0 share the influence") {
    Scene s;
    s.content[0] = 0;
    s.cells[0].at(0, 0) = 7;
    s.cells[0].at(1, 0) = 10;
    s.cells[0].at(2, 0) = 4;
    s.cells[0].at(3, 0) = 1;
    const CompiledModel& m0 = model(0);
    const auto fr = forward(m0.network, image_of(s));
    REQUIRE(fr.output == std::vector<double>{1, 0, 0, 0, 0});
    const InfluenceMap m = backtrack_influence(m0, fr.trace, 0);
    const auto& join = m0.term_map[layer::kConv3][0];
    REQUIRE(join.op == TermOp::Or);
    REQUIRE(join.inputs.size() == 2);
    const Tensor& c2 = fr.trace.post[layer::kConv2];
    for (const auto& in : join.inputs) {
        const Influence inf = m.nodes[layer::kConv2][c2.index(0, 0, static_cast<std::size_t>(in.unit))];
        CHECK(inf.positive == 0.5);
    }

    // With only the first half present it receives everything.
    s.cells[0].at(2, 0) = kNoPart;
    s.cells[0].at(3, 0) = kNoPart;
    const auto fr1 = forward(m0.network, image_of(s));
    const InfluenceMap m1 = backtrack_influence(m0, fr1.trace, 0);
    const Tensor& c2b = fr1.trace.post[layer::kConv2];
    CHECK(m1.nodes[layer::kConv2][c2b.index(0, 0, static_cast<std::size_t>(join.inputs[0].unit))].positive == 1.0);
    CHECK_FALSE(m1.nodes[layer::kConv2][c2b.index(0, 0, static_cast<std::size_t>(join.inputs[1].unit))].any());
}

TEST_CASE("noise row and column render as expected") {
    const auto& parts = default_concept_parts();
    for (int part = 0; part < 12; ++part) {
        for (int r = 0; r < 4; ++r) {
            const int r0 = r / 2, r1 = r % 2;
            const auto& p = parts[static_cast<std::size_t>(part)];
            const GroundTruth gt = single_part(part, {1.0, 0.0}, r0, r1);

            // Independent oracle for the normalizer: weight times pixel over the 3x3 pattern.
            double scale = 0.0;
            for (std::size_t k = 0; k < 9; ++k) scale = std::max(scale, std::abs(p.weights[k] * p.pattern[k]));
            REQUIRE(scale > 0.0);
            auto at = [&](int y, int x) {
                return gt.gt3d.at(static_cast<std::size_t>(2 * y + r0), static_cast<std::size_t>(2 * x + r1), 0);
            };
            const int row = p.noise_row;
            CHECK(at(row, 0) * scale == doctest::Approx(0.5));
            CHECK(at(row, 1) == 0.0);
            CHECK(at(row, 2) * scale == doctest::Approx(-0.5));
            for (int y = 0; y < 3; ++y) {
                if (y != row) CHECK(at(y, p.noise_col) == 0.0);
            }
            // Complementary positions stay empty.
            CHECK(gt.gt3d.at(static_cast<std::size_t>(1 - r0), 0, 0) == 0.0);
        }
    }
}

TEST_CASE("negative influence scales by the pixel complement") {
    const auto& p = default_concept_parts()[2];
    const GroundTruth gt = single_part(2, {0.0, 1.0}, 0, 0);
    double scale = 0.0;
    for (std::size_t k = 0; k < 9; ++k) scale = std::max(scale, std::abs(p.weights[k] * (1.0 - p.pattern[k])));
    for (std::size_t k = 0; k < 9; ++k) {
        const double want = -p.weights[k] * (1.0 - p.pattern[k]) / scale;
        CHECK(gt.gt3d.at(2 * (k / 3), 2 * (k % 3), 0) == doctest::Approx(want));
    }
}

TEST_CASE("zero influence renders nothing") {
    const GroundTruth gt = single_part(5, {}, 1, 0);
    CHECK(gt.gt3d.max() == 0.0);
    CHECK(gt.gt3d.min() == 0.0);
}

TEST_CASE("normalize examples") {
    auto norm = [](std::vector<double> v) {
        Tensor t(Shape{1, v.size(), 1}, v);
        const Tensor n = normalize(t);
        return std::vector<double>(n.values().begin(), n.values().end());
    };
    CHECK(norm({-2, 1}) == std::vector<double>{-1, 0.5});
    CHECK(norm({0, 0}) == std::vector<double>{0, 0});
    const auto v = norm({0.3, -0.1, 0.3});
    CHECK(v[0] == 1.0);
    CHECK(v[1] == doctest::Approx(-1.0 / 3.0));
    CHECK(v[2] == 1.0);
}

TEST_CASE("to_2d examples") {
    auto pick = [](double a, double b, double c) { return to_2d(Tensor(Shape{1, 1, 3}, {a, b, c}))[0]; };
    CHECK(pick(0.2, -0.9, 0.5) == -0.9);
    CHECK(pick(0, 0, 0) == 0.0);
    CHECK(pick(0.5, -0.5, 0) == 0.5);
    CHECK(pick(-0.5, 0.5, 0) == -0.5);
}

TEST_CASE("normalize is idempotent") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        Tensor e = xaib::test::toy_tensor(rng, Shape{4, 5, 3});
        const double k = 1.0 + 10.0 * rng.uniform();
        for (auto& v : e.values()) v *= k;
        const Tensor once = normalize(e);
        CHECK(normalize(once) == once);
        CHECK(once.max() <= 1.0);
        CHECK(once.min() >= -1.0);
    }
}

TEST_CASE("invalid inputs are rejected") {
    const Example& e = first_of_class(1, 1);
    const auto fr = forward(model(1).network, e.image);
    CHECK_THROWS_AS(backtrack_influence(model(1), fr.trace, 0), std::invalid_argument);
    CHECK_THROWS_AS(backtrack_influence(model(1), fr.trace, 7), std::out_of_range);
    const InfluenceMap m = backtrack_influence(model(1), fr.trace, 1);
    CHECK_THROWS_AS(render_gt(m, e.image, model(1).parts, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(render_gt(m, e.image, model(1).parts, 0, -1), std::invalid_argument);
    CHECK_THROWS_AS(render_gt(m, Tensor(Shape{18, 18, 3}), model(1).parts, 0, 0), std::invalid_argument);

    // Concept 1 at cells 0 and 3 satisfies classes 0 and 1 at once.
    const Formula& f = builtin_definitions().concepts[1];
    Scene s;
    for (int cell : {0, 3}) {
        s.content[static_cast<std::size_t>(cell)] = 1;
        s.cells[static_cast<std::size_t>(cell)] = placement_for(f, canonical_assignment(f));
    }
    const auto fr2 = forward(model(1).network, image_of(s));
    REQUIRE(fr2.output == std::vector<double>{1, 1, 0, 0, 0});
    bool one_hot = false;
    for (int c = 0; c < 5; ++c) {
        try {
            backtrack_influence(model(1), fr2.trace, c);
            one_hot = true;
        } catch (const std::invalid_argument&) {
        }
    }
    CHECK_FALSE(one_hot);
}

TEST_CASE("ground truth properties over every example") {
    for (int id = 0; id < 5; ++id) {
        for (const auto& e : test_set(id)) {
            CAPTURE(e.id);
            const InfluenceMap m = influence_of(e);
            const Tensor& g3 = e.gt.gt3d;
            const Tensor& g2 = e.gt.gt2d;
            REQUIRE(g3.shape() == Shape{36, 36, 3});
            REQUIRE(g2.shape() == Shape{36, 36, 1});
            CHECK(normalize(g3) == g3);
            CHECK(std::max(std::abs(g3.min()), std::abs(g3.max())) == 1.0);

            std::size_t nz_pixels = 0, nz2 = 0;
            for (std::size_t y = 0; y < 36; ++y) {
                for (std::size_t x = 0; x < 36; ++x) {
                    bool any = false;
                    double best = 0.0;
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        const double v = g3.at(y, x, ch);
                        if (v == 0.0) continue;
                        any = true;
                        if (std::abs(v) > std::abs(best)) best = v;
                        // Only the upscaled content positions carry values.
                        CHECK(static_cast<int>(y % 2) == e.r0);
                        CHECK(static_cast<int>(x % 2) == e.r1);
                        // Inside a cell whose concept instance received influence.
                        const std::size_t cell = ((y / 2) / 6) * 3 + (x / 2) / 6;
                        bool influenced = false;
                        for (const auto& row : m.concept_level) influenced = influenced || row[cell].any();
                        CHECK(influenced);
                    }
                    nz_pixels += any;
                    nz2 += g2.at(y, x, 0) != 0.0;
                    CHECK(g2.at(y, x, 0) == best);
                }
            }
            CHECK(nz_pixels == nz2);
            CHECK(nz2 > 0);
        }
    }
}

TEST_CASE("sign coherence for purely positive instances") {
    const auto& parts = default_concept_parts();
    for (int id = 0; id < 5; ++id) {
        for (const auto& e : test_set(id)) {
            const InfluenceMap m = influence_of(e);
            const auto& det = m.nodes[layer::kConv0];
            // Count detectors touching each 18x18 pixel-channel and remember the last one.
            std::vector<int> touch(18 * 18 * 3, 0), who(18 * 18 * 3, -1);
            for (std::size_t q = 0; q < 36; ++q) {
                for (std::size_t o = 0; o < 36; ++o) {
                    if (!det[q * 36 + o].any()) continue;
                    for (std::size_t k = 0; k < 9; ++k) {
                        const std::size_t y = 3 * (q / 6) + k / 3, x = 3 * (q % 6) + k % 3;
                        const std::size_t idx = (y * 18 + x) * 3 + o % 3;
                        ++touch[idx];
                        who[idx] = static_cast<int>(q * 36 + o);
                    }
                }
            }
            for (std::size_t idx = 0; idx < touch.size(); ++idx) {
                if (touch[idx] != 1) continue;
                const Influence inf = det[static_cast<std::size_t>(who[idx])];
                if (inf.negative != 0.0) continue;
                const std::size_t y = idx / 54, x = (idx / 3) % 18, ch = idx % 3;
                const double in = e.image.at(2 * y + static_cast<std::size_t>(e.r0), 2 * x + static_cast<std::size_t>(e.r1), ch);
                if (in <= 0.0) continue;
                const std::size_t o = static_cast<std::size_t>(who[idx]) % 36;
                const std::size_t k = (y % 3) * 3 + x % 3;
                const double w = parts[o / 3].weights[k];
                const double g = e.gt.gt3d.at(2 * y + static_cast<std::size_t>(e.r0), 2 * x + static_cast<std::size_t>(e.r1), ch);
                CHECK((g > 0.0) == (w > 0.0));
                CHECK((g < 0.0) == (w < 0.0));
            }
        }
    }
}
