#include "xaib/scene.hpp"

#include <bit>
#include <stdexcept>

namespace xaib {

namespace {

Assignment presence_assignment(const std::vector<Atom>& as, unsigned mask) {
    Assignment a;
    for (std::size_t i = 0; i < as.size(); ++i) a[as[i]] = (mask >> i) & 1u;
    return a;
}

}  // namespace

std::vector<std::vector<bool>> satisfying_assignments(const Formula& definition) {
    const auto as = atoms(definition);
    std::vector<std::vector<bool>> out;
    for (unsigned mask = 0; mask < (1u << as.size()); ++mask) {
        if (!evaluate(definition, presence_assignment(as, mask))) continue;
        std::vector<bool> p(as.size());
        for (std::size_t i = 0; i < as.size(); ++i) p[i] = (mask >> i) & 1u;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<bool> canonical_assignment(const Formula& definition) {
    const auto as = atoms(definition);
    int best_count = -1;
    unsigned best = 0;
    for (unsigned mask = 0; mask < (1u << as.size()); ++mask) {
        if (!evaluate(definition, presence_assignment(as, mask))) continue;
        const int n = std::popcount(mask);
        if (n > best_count) {
            best_count = n;
            best = mask;
        }
    }
    if (best_count < 0) throw std::invalid_argument("concept formula is unsatisfiable");
    std::vector<bool> p(as.size());
    for (std::size_t i = 0; i < as.size(); ++i) p[i] = (best >> i) & 1u;
    return p;
}

CellPlacement placement_for(const Formula& definition, const std::vector<bool>& presence) {
    const auto as = atoms(definition);
    if (presence.size() != as.size()) throw std::invalid_argument("presence vector does not match formula atoms");
    CellPlacement cell;
    for (std::size_t i = 0; i < as.size(); ++i) {
        if (as[i].kind != Atom::Kind::ConceptPart) throw std::invalid_argument("concept atoms must be concept parts");
        if (!presence[i]) continue;
        int& slot = cell.at(as[i].pos, as[i].ch);
        if (slot != kNoPart && slot != as[i].id) {
            throw std::invalid_argument("two parts requested for one slot");
        }
        slot = as[i].id;
    }
    return cell;
}

Assignment part_assignment(const Formula& f, const CellPlacement& cell) {
    Assignment a;
    for (const Atom& atom : atoms(f)) a[atom] = cell.at(atom.pos, atom.ch) == atom.id;
    return a;
}

Tensor render_cell(const CellPlacement& cell, std::span<const ConceptPartSpec> parts) {
    Tensor t(Shape{6, 6, 3});
    for (int pos = 0; pos < 4; ++pos) {
        for (int ch = 0; ch < 3; ++ch) {
            const int id = cell.at(pos, ch);
            if (id == kNoPart) continue;
            const auto& pattern = parts[static_cast<std::size_t>(id)].pattern;
            for (int dy = 0; dy < 3; ++dy) {
                for (int dx = 0; dx < 3; ++dx) {
                    t.at(3 * (pos / 2) + dy, 3 * (pos % 2) + dx, ch) = pattern[dy * 3 + dx];
                }
            }
        }
    }
    return t;
}

Tensor render_scene(const Scene& scene, std::span<const ConceptPartSpec> parts) {
    Tensor img(Shape{18, 18, 3});
    for (int k = 0; k < 9; ++k) {
        const Tensor cell = render_cell(scene.cells[k], parts);
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 6; ++x) {
                for (int ch = 0; ch < 3; ++ch) img.at(6 * (k / 3) + y, 6 * (k % 3) + x, ch) = cell.at(y, x, ch);
            }
        }
    }
    return img;
}

Tensor upscale(const Tensor& img, int r0, int r1) {
    if ((r0 != 0 && r0 != 1) || (r1 != 0 && r1 != 1)) throw std::invalid_argument("upscale offsets must be 0 or 1");
    Tensor out(Shape{img.h() * 2, img.w() * 2, img.c()});
    for (std::size_t y = 0; y < img.h(); ++y) {
        for (std::size_t x = 0; x < img.w(); ++x) {
            for (std::size_t ch = 0; ch < img.c(); ++ch) {
                out.at(2 * y + static_cast<std::size_t>(r0), 2 * x + static_cast<std::size_t>(r1), ch) =
                    img.at(y, x, ch);
            }
        }
    }
    return out;
}

}  // namespace xaib
