#pragma once

#include <cstdint>

#include "qs/mesh.hpp"

namespace qs {

// Cell-center membership masks for the standard target domains.

DomainMask full_mask(const GridSpec& g);
DomainMask disc_mask(const GridSpec& g, Point center, double radius);
DomainMask annulus_mask(const GridSpec& g, Point center, double inner, double outer);
DomainMask rectangle_mask(const GridSpec& g, Point lo, Point hi);

/// Square [c - half, c + half]^2 with one column of cells removed, running from
/// the centre row to the top edge of the square.
DomainMask slit_square_mask(const GridSpec& g, Point center, double half);

/// Union of `blobs` random discs (radii in [0.1, 0.35] of the shorter side).
DomainMask random_blob_mask(const GridSpec& g, std::uint64_t seed, int blobs = 3);

}  // namespace qs
