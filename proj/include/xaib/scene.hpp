#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "xaib/concept_parts.hpp"
#include "xaib/formula.hpp"
#include "xaib/tensor.hpp"

namespace xaib {

inline constexpr int kNoPart = -1;
inline constexpr int kNoConcept = -1;

// Part id (or kNoPart) in each quadrant/channel slot of one 6x6 concept cell.
struct CellPlacement {
    std::array<int, 12> slots;

    CellPlacement() { slots.fill(kNoPart); }
    int& at(int pos, int ch) { return slots[static_cast<std::size_t>(pos * 3 + ch)]; }
    int at(int pos, int ch) const { return slots[static_cast<std::size_t>(pos * 3 + ch)]; }
    friend bool operator==(const CellPlacement&, const CellPlacement&) = default;
};

// 3x3 grid of concept cells; `content[k]` names what cell k was rendered from.
struct Scene {
    std::array<int, 9> content;
    std::array<CellPlacement, 9> cells;

    Scene() { content.fill(kNoConcept); }
};

// Presence vectors are indexed like atoms(f).
std::vector<std::vector<bool>> satisfying_assignments(const Formula& definition);
// Satisfying assignment with the most parts present; ties go to the lowest bit mask.
std::vector<bool> canonical_assignment(const Formula& definition);

CellPlacement placement_for(const Formula& definition, const std::vector<bool>& presence);
// Truth of every concept-part atom of `f` under a placement.
Assignment part_assignment(const Formula& f, const CellPlacement& cell);

Tensor render_cell(const CellPlacement& cell, std::span<const ConceptPartSpec> parts);
Tensor render_scene(const Scene& scene, std::span<const ConceptPartSpec> parts);

// upscaled(2y + r0, 2x + r1, :) = img(y, x, :); all other elements are zero.
Tensor upscale(const Tensor& img, int r0, int r1);

// Pixel origin of quadrant `pos` of grid cell `cell` in the 18x18 image.
inline int cell_quadrant_y(int cell, int pos) { return 6 * (cell / 3) + 3 * (pos / 2); }
inline int cell_quadrant_x(int cell, int pos) { return 6 * (cell % 3) + 3 * (pos % 2); }

}  // namespace xaib
