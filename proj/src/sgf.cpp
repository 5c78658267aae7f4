#include "elastoray/sgf.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "SGF payload layout assumes a little-endian host");
static_assert(sizeof(double) == 8);

namespace elastoray {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Header size arithmetic with overflow guards.
size_t payload_bytes(const Grid3& g, int ncomp, bool with_mask) {
    unsigned long long nodes = 1ULL;
    for (int a = 0; a < 3; ++a) {
        unsigned long long d = static_cast<unsigned long long>(g.dims[a]);
        if (d == 0 || (nodes != 0 && d > (1ULL << 62) / nodes))
            throw SgfError("dims overflow or degenerate dims in SGF header");
        nodes *= d;
    }
    unsigned long long total = nodes * static_cast<unsigned long long>(ncomp);
    if (total > (1ULL << 58)) throw SgfError("dims overflow in SGF header");
    return static_cast<size_t>(total * 8ULL + (with_mask ? nodes : 0ULL));
}

}  // namespace

void write_sgf(const GridField& field, const std::string& path) {
    field.grid.validate();
    bool with_mask = !field.mask.empty();
    std::ostringstream header;
    header << "SGF1\n"
           << "dims " << field.grid.dims[0] << ' ' << field.grid.dims[1] << ' '
           << field.grid.dims[2] << '\n'
           << "origin " << fmt_double(field.grid.origin.x) << ' ' << fmt_double(field.grid.origin.y)
           << ' ' << fmt_double(field.grid.origin.z) << '\n'
           << "spacing " << fmt_double(field.grid.spacing) << '\n'
           << "ncomp " << field.ncomp << '\n'
           << "mask " << (with_mask ? 1 : 0) << '\n'
           << '\n';

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SgfError("cannot open for writing: " + path);
    std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (with_mask)
        out.write(reinterpret_cast<const char*>(field.mask.data()),
                  static_cast<std::streamsize>(field.mask.size()));
    if (!out) throw SgfError("write failed: " + path);
}

GridField read_sgf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SgfError("cannot open: " + path);

    auto read_line = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line)) throw SgfError(std::string("truncated header: missing ") + what);
        return line;
    };

    if (read_line("magic") != "SGF1") throw SgfError("magic mismatch: not an SGF1 file: " + path);

    GridField f;
    int mask_flag = 0;
    {
        std::istringstream ls(read_line("dims"));
        std::string key;
        ls >> key >> f.grid.dims[0] >> f.grid.dims[1] >> f.grid.dims[2];
        if (key != "dims" || !ls) throw SgfError("malformed dims line");
        if (f.grid.dims[0] < 1 || f.grid.dims[1] < 1 || f.grid.dims[2] < 1)
            throw SgfError("degenerate dims in SGF header");
    }
    {
        std::istringstream ls(read_line("origin"));
        std::string key;
        ls >> key >> f.grid.origin.x >> f.grid.origin.y >> f.grid.origin.z;
        if (key != "origin" || !ls) throw SgfError("malformed origin line");
    }
    {
        std::istringstream ls(read_line("spacing"));
        std::string key;
        ls >> key >> f.grid.spacing;
        if (key != "spacing" || !ls || !(f.grid.spacing > 0.0))
            throw SgfError("malformed spacing line");
    }
    {
        std::istringstream ls(read_line("ncomp"));
        std::string key;
        ls >> key >> f.ncomp;
        if (key != "ncomp" || !ls || f.ncomp < 1) throw SgfError("malformed ncomp line");
    }
    {
        std::istringstream ls(read_line("mask"));
        std::string key;
        ls >> key >> mask_flag;
        if (key != "mask" || !ls || (mask_flag != 0 && mask_flag != 1))
            throw SgfError("malformed mask line");
    }
    if (!read_line("separator").empty()) throw SgfError("expected blank line before payload");

    size_t expect = payload_bytes(f.grid, f.ncomp, mask_flag != 0);
    size_t nodes = f.grid.node_count();
    f.values.resize(nodes * static_cast<size_t>(f.ncomp));
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    size_t got = static_cast<size_t>(in.gcount());
    if (mask_flag) {
        f.mask.resize(nodes);
        in.read(reinterpret_cast<char*>(f.mask.data()), static_cast<std::streamsize>(nodes));
        got += static_cast<size_t>(in.gcount());
    }
    if (got != expect) {
        std::ostringstream msg;
        msg << "truncated payload in " << path << ": expected " << expect << " bytes, got " << got;
        throw SgfError(msg.str());
    }
    // Must be at EOF now.
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1)
        throw SgfError("trailing bytes after payload in " + path);
    return f;
}

}  // namespace elastoray
