#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "elastoray/sgf.hpp"

using namespace elastoray;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::filesystem::path tmp(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("write/read round trip is byte identical") {
    Grid3 g{{0.1, -0.2, 0.3}, 0.25, {3, 3, 3}};
    GridField f(g, 6, true);
    for (size_t n = 0; n < g.node_count(); ++n) {
        for (int c = 0; c < 6; ++c) f.at(n, c) = 0.5 * static_cast<double>(n) + 0.125 * c;
        f.mask[n] = n % 4 == 0 ? 0 : 1;
    }
    auto p1 = tmp("sgf_rt_1.sgf"), p2 = tmp("sgf_rt_2.sgf");
    write_sgf(f, p1.string());
    GridField r = read_sgf(p1.string());
    CHECK(r.ncomp == 6);
    CHECK(r.grid.dims == g.dims);
    CHECK(r.values == f.values);
    CHECK(r.mask == f.mask);
    write_sgf(r, p2.string());
    CHECK(slurp(p1.string()) == slurp(p2.string()));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("degenerate dims rejected") {
    auto p = tmp("sgf_bad_dims.sgf");
    std::ofstream out(p, std::ios::binary);
    out << "SGF1\ndims 0 1 1\norigin 0 0 0\nspacing 1\nncomp 1\nmask 0\n\n";
    out.close();
    CHECK_THROWS_AS(read_sgf(p.string()), SgfError);
    std::filesystem::remove(p);
}

TEST_CASE("magic mismatch rejected") {
    auto p = tmp("sgf_bad_magic.sgf");
    std::ofstream out(p, std::ios::binary);
    out << "SGX1\ndims 1 1 1\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_sgf(p.string()), doctest::Contains("magic mismatch"), SgfError);
    std::filesystem::remove(p);
}

TEST_CASE("truncated payload names expected and actual sizes") {
    Grid3 g{{0, 0, 0}, 1.0, {2, 2, 2}};
    GridField f(g, 1);
    for (size_t n = 0; n < 8; ++n) f.at(n, 0) = static_cast<double>(n);
    auto p = tmp("sgf_trunc.sgf");
    write_sgf(f, p.string());
    std::string bytes = slurp(p.string());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
    out.close();
    CHECK_THROWS_WITH_AS(read_sgf(p.string()), doctest::Contains("expected 64 bytes, got 56"),
                         SgfError);
    std::filesystem::remove(p);
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(read_sgf("/nonexistent/f.sgf"), SgfError);
}
