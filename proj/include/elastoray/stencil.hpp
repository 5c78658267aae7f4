#pragma once

#include "elastoray/grid.hpp"

namespace elastoray {

// Fourth-order finite-difference operators on nodal fields. Output nodes are
// masked out wherever the stencil footprint leaves the grid or touches an
// invalid input node; composed operators therefore grow the invalid ring.

// d/dx_axis with the centered 5-point stencil (needs 2 nodes on each side).
GridField d1_central4(const GridField& f, int comp, int axis);

// d/dx_axis with a 1-node masked ring: centered where possible, 4th-order
// offset stencils at nodes one layer from the grid face.
GridField d1_ring1(const GridField& f, int comp, int axis);

// d^2/dx_axis^2, centered 5-point.
GridField d2_central4(const GridField& f, int comp, int axis);

// d^2/(dx_a dx_b); for a == b this is d2_central4, otherwise the tensor
// product of two centered first-derivative stencils.
GridField d2_mixed4(const GridField& f, int comp, int a, int b);

// Sum of the three pure second derivatives.
GridField laplacian4(const GridField& f, int comp = 0);

// Componentwise gradient of a scalar field (centered stencils, 2-node ring).
void gradient4(const GridField& f, GridField& out3);

// Stencil taps of d1_ring1 at a node: linear-index deltas and coefficients
// (spacing folded in). Returns false where no 4th-order stencil fits.
// Exposed so matrix assemblies can mirror the derivative operators exactly.
bool d1_ring1_taps(const Grid3& grid, size_t node, int axis,
                   std::array<std::pair<long, double>, 5>& taps);

}  // namespace elastoray
