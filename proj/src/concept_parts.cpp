#include "xaib/concept_parts.hpp"

#include <stdexcept>

#include "xaib/rng.hpp"

namespace xaib {

double ConceptPartSpec::response(const std::array<double, 9>& patch) const {
    double s = bias;
    for (std::size_t i = 0; i < 9; ++i) s += patch[i] * weights[i];
    return s;
}

namespace {

constexpr double kHalf = 0.5;

double dot(const std::array<double, 9>& a, const std::array<double, 9>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < 9; ++i) s += a[i] * b[i];
    return s;
}

// Fixed noise cells of a layout plus the indices of the four free cells.
ConceptPartSpec layout(int noise_row, int noise_col, std::array<int, 4>& free) {
    ConceptPartSpec s;
    s.noise_row = noise_row;
    s.noise_col = noise_col;
    const double row_p[3] = {kHalf, 1.0, kHalf};
    const double row_w[3] = {1.0, 0.0, -1.0};
    for (int x = 0; x < 3; ++x) {
        s.pattern[noise_row * 3 + x] = row_p[x];
        s.weights[noise_row * 3 + x] = row_w[x];
    }
    const double col_w[2] = {1.0, -1.0};
    int k = 0, f = 0;
    for (int y = 0; y < 3; ++y) {
        if (y == noise_row) continue;
        s.pattern[y * 3 + noise_col] = 0.0;
        s.weights[y * 3 + noise_col] = col_w[k++];
        for (int x = 0; x < 3; ++x) {
            if (x != noise_col) free[f++] = y * 3 + x;
        }
    }
    return s;
}

std::vector<ConceptPartSpec> candidates(int noise_row, int noise_col) {
    static constexpr double kPixel[3] = {0.0, kHalf, 1.0};
    static constexpr double kWeight[5] = {-1.0, -kHalf, 0.0, 1.0, 2.0};
    std::array<int, 4> free{};
    const ConceptPartSpec base = layout(noise_row, noise_col, free);
    std::vector<ConceptPartSpec> out;
    for (int pc = 0; pc < 81; ++pc) {
        std::array<double, 4> p{};
        for (int i = 0, v = pc; i < 4; ++i, v /= 3) p[i] = kPixel[v % 3];
        if (p == std::array<double, 4>{}) continue;
        for (int wc = 0; wc < 625; ++wc) {
            std::array<double, 4> w{};
            for (int i = 0, v = wc; i < 4; ++i, v /= 5) w[i] = kWeight[v % 5];
            double s = 0.0;
            bool ok = true;
            for (int i = 0; i < 4; ++i) {
                s += p[i] * w[i];
                // Lit pixels carry positive weight, dark pixels non-positive.
                if ((p[i] > 0.0) != (w[i] > 0.0)) ok = false;
            }
            if (!ok || s != 2.0) continue;
            ConceptPartSpec c = base;
            for (int i = 0; i < 4; ++i) {
                c.pattern[free[i]] = p[i];
                c.weights[free[i]] = w[i];
            }
            out.push_back(c);
        }
    }
    return out;
}

bool compatible(const ConceptPartSpec& a, const ConceptPartSpec& b) {
    return a.pattern != b.pattern && dot(a.pattern, b.weights) + b.bias <= 0.0 &&
           dot(b.pattern, a.weights) + a.bias <= 0.0;
}

}  // namespace

const std::vector<ConceptPartSpec>& default_concept_parts() {
    // Output of search_concept_parts(kConceptPartsSearchSeed), frozen as cp-v1.
    static const std::vector<ConceptPartSpec> parts = {
    {0, {0.5, 1, 0.5, 0, 0, 1, 0, 0, 0},
        {1, 0, -1, 1, 0, 2, -1, -0.5, -1}, -1.0, 0, 0},
    {1, {0.5, 1, 0.5, 0.5, 1, 0, 0.5, 0, 0},
        {1, 0, -1, 1, 1, 1, 1, 0, -1}, -1.0, 0, 2},
    {2, {0, 0, 1, 0, 0, 1, 0.5, 1, 0.5},
        {1, -1, 1, -1, -0.5, 1, 1, 0, -1}, -1.0, 2, 0},
    {3, {1, 0, 0, 0, 0, 0, 0.5, 1, 0.5},
        {2, -0.5, 1, -1, -1, -1, 1, 0, -1}, -1.0, 2, 2},
    {4, {0.5, 1, 0.5, 0, 0, 0, 0, 0, 1},
        {1, 0, -1, 1, -1, -1, -1, -1, 2}, -1.0, 0, 0},
    {5, {0.5, 1, 0.5, 0, 1, 0, 0, 0, 0},
        {1, 0, -1, -1, 2, 1, -1, 0, -1}, -1.0, 0, 2},
    {6, {0, 0, 0, 0, 1, 0, 0.5, 1, 0.5},
        {1, -1, -1, -1, 2, 0, 1, 0, -1}, -1.0, 2, 0},
    {7, {0, 0, 0, 1, 0, 0, 0.5, 1, 0.5},
        {-1, -1, 1, 2, 0, -1, 1, 0, -1}, -1.0, 2, 2},
    {8, {0.5, 1, 0.5, 0, 1, 0, 0, 0, 1},
        {1, 0, -1, 1, 1, 0, -1, 0, 1}, -1.0, 0, 0},
    {9, {0.5, 1, 0.5, 1, 0, 0, 0, 0, 0},
        {1, 0, -1, 2, 0, 1, -1, -0.5, -1}, -1.0, 0, 2},
    {10, {0, 0, 0, 0, 0, 1, 0.5, 1, 0.5},
        {1, -1, -1, -1, -1, 2, 1, 0, -1}, -1.0, 2, 0},
    {11, {0, 1, 0, 0, 0, 0, 0.5, 1, 0.5},
        {-1, 2, 1, -1, -1, -1, 1, 0, -1}, -1.0, 2, 2},
    };
    return parts;
}

std::vector<ConceptPartSpec> search_concept_parts(std::uint64_t seed) {
    const int layouts[4][2] = {{0, 0}, {0, 2}, {2, 0}, {2, 2}};
    std::vector<std::vector<ConceptPartSpec>> pools;
    for (const auto& l : layouts) pools.push_back(candidates(l[0], l[1]));

    Rng rng(seed);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<ConceptPartSpec> chosen;
        for (int id = 0; id < kNumConceptParts; ++id) {
            auto pool = pools[id % 4];
            for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
            bool placed = false;
            for (auto& c : pool) {
                bool ok = true;
                for (const auto& d : chosen) ok = ok && compatible(c, d);
                if (ok) {
                    c.id = id;
                    chosen.push_back(c);
                    placed = true;
                    break;
                }
            }
            if (!placed) break;
        }
        if (chosen.size() == kNumConceptParts) return chosen;
    }
    throw std::runtime_error("concept part search failed");
}

std::vector<std::string> check_concept_parts(std::span<const ConceptPartSpec> parts) {
    std::vector<std::string> errs;
    auto err = [&](int id, const std::string& what) { errs.push_back("cp " + std::to_string(id) + ": " + what); };
    if (parts.size() != kNumConceptParts) errs.push_back("expected 12 concept parts");
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.id != static_cast<int>(i)) err(p.id, "ids must be 0..11 in order");
        if (p.bias != -1.0) err(p.id, "bias must be -1");
        for (double v : p.pattern) {
            if (v != 0.0 && v != kHalf && v != 1.0) err(p.id, "pattern value outside {0, 1/2, 1}");
        }
        for (double v : p.weights) {
            if (v != -1.0 && v != -kHalf && v != 0.0 && v != 1.0 && v != 2.0) {
                err(p.id, "weight outside {-1, -1/2, 0, 1, 2}");
            }
        }
        if (p.noise_row != 0 && p.noise_row != 2) err(p.id, "noise row must be top or bottom");
        if (p.noise_col != 0 && p.noise_col != 2) err(p.id, "noise column must be left or right");
        if (p.noise_row == 0 || p.noise_row == 2) {
            const int r = p.noise_row * 3;
            if (p.pattern[r] != kHalf || p.pattern[r + 1] != 1.0 || p.pattern[r + 2] != kHalf ||
                p.weights[r] != 1.0 || p.weights[r + 1] != 0.0 || p.weights[r + 2] != -1.0) {
                err(p.id, "noise row is not [1/2, 1, 1/2] with weights [1, 0, -1]");
            }
            if (p.noise_col == 0 || p.noise_col == 2) {
                double expect_w = 1.0;
                for (int y = 0; y < 3; ++y) {
                    if (y == p.noise_row) continue;
                    if (p.pattern[y * 3 + p.noise_col] != 0.0 || p.weights[y * 3 + p.noise_col] != expect_w) {
                        err(p.id, "noise column is not [0; 0] with weights [1; -1]");
                    }
                    expect_w = -1.0;
                }
            }
        }
        if (p.response(p.pattern) != 1.0) err(p.id, "detector does not respond with exactly 1 to its pattern");
        if (p.response({}) > 0.0) err(p.id, "detector responds to the empty patch");
        for (std::size_t j = 0; j < parts.size(); ++j) {
            if (j != i && p.response(parts[j].pattern) > 0.0) {
                err(p.id, "detector responds to pattern of cp " + std::to_string(j));
            }
        }
    }
    return errs;
}

}  // namespace xaib
