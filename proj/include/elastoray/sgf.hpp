#pragma once

#include <string>

#include "elastoray/grid.hpp"

namespace elastoray {

struct SgfError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SGF: a minimal structured-grid field container.
//
//   SGF1
//   dims nx ny nz
//   origin ox oy oz
//   spacing h
//   ncomp k
//   mask 0|1
//   <blank line>
//   payload: nx*ny*nz*k little-endian IEEE doubles, node-major (x fastest,
//   then y, then z), components fastest within a node; when the mask flag is
//   set, nx*ny*nz mask bytes follow the doubles.
//
// write_sgf(read_sgf(path)) reproduces the input byte for byte.
void write_sgf(const GridField& field, const std::string& path);
GridField read_sgf(const std::string& path);

}  // namespace elastoray
