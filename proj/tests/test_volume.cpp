/*
 * morphoscope — deformation-based morphometry toolkit
 *
 * Copyright 2026 the morphoscope authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <catch2/catch_amalgamated.hpp>

#include "morpho/svf.hpp"
#include "morpho/volume.hpp"
#include "oracles.hpp"

using namespace morpho;

namespace {

Grid3 grid(int n) { return Grid3{{n, n, n}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}}; }

ScalarVolume ramp_x(const Grid3& g, double slope = 1.0) {
    ScalarVolume vol(g);
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) vol.at(x, y, z) = slope * x;
    return vol;
}

VectorField3 translation(const Grid3& g, const Vec3& t) {
    VectorField3 phi = identity_deformation(g);
    for (Vec3& v : phi.vectors) v += t;
    return phi;
}

} // namespace

TEST_CASE("sample_trilinear on a constant volume", "[volume]") {
    ScalarVolume vol(grid(8), 0.7);
    CHECK(sample_trilinear(vol, {3.2, 1.5, 0.0}) == Catch::Approx(0.7).margin(1e-15));
    CHECK(sample_trilinear(vol, {-4.0, 9.9, 3.0}) == Catch::Approx(0.7).margin(1e-15));
}

TEST_CASE("sample_trilinear reproduces node values exactly", "[volume]") {
    Grid3 g = grid(6);
    ScalarVolume vol(g);
    Rng rng(11);
    for (double& v : vol.values) v = rng.uniform01();
    for (int z = 0; z < 6; ++z)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                const double got = sample_trilinear(
                    vol, {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)});
                CHECK(got == vol.at(x, y, z)); // bit-exact at nodes
            }
}

TEST_CASE("sample_trilinear on a linear ramp", "[volume]") {
    ScalarVolume vol = ramp_x(grid(8));
    CHECK(sample_trilinear(vol, {1.5, 0.0, 0.0}) == Catch::Approx(1.5).margin(1e-12));
    CHECK(sample_trilinear(vol, {5.25, 3.0, 2.0}) == Catch::Approx(5.25).margin(1e-12));
    // clamped past the far face
    CHECK(sample_trilinear(vol, {12.0, 0.0, 0.0}) == Catch::Approx(7.0).margin(1e-12));
}

TEST_CASE("warp with identity is bit-exact", "[volume]") {
    Grid3 g = grid(8);
    ScalarVolume vol(g);
    Rng rng(5);
    for (double& v : vol.values) v = rng.uniform01();
    const ScalarVolume out = warp(vol, identity_deformation(g));
    CHECK(out.values == vol.values);
}

TEST_CASE("warp by +1x on a ramp clamps at the boundary", "[volume]") {
    Grid3 g = grid(8);
    const ScalarVolume vol = ramp_x(g);
    const ScalarVolume out = warp(vol, translation(g, {1.0, 0.0, 0.0}));
    for (int x = 0; x < 8; ++x)
        CHECK(out.at(x, 3, 3) == Catch::Approx(std::min(x + 1.0, 7.0)).margin(1e-12));
}

TEST_CASE("warp leaves constants unchanged", "[volume]") {
    Grid3 g = grid(8);
    ScalarVolume vol(g, 0.42);
    VectorField3 phi = identity_deformation(g);
    Rng rng(3);
    for (Vec3& v : phi.vectors)
        v += Vec3{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const ScalarVolume out = warp(vol, phi);
    for (double v : out.values) CHECK(v == Catch::Approx(0.42).margin(1e-12));
}

TEST_CASE("warp rejects grid mismatch", "[volume]") {
    ScalarVolume vol(grid(8));
    VectorField3 phi = identity_deformation(grid(9));
    CHECK_THROWS_AS(warp(vol, phi), validation_error);
}

TEST_CASE("compose with identity returns the other operand", "[volume]") {
    Grid3 g = grid(8);
    VectorField3 phi = translation(g, {0.5, -0.25, 1.0});
    const VectorField3 left = compose(identity_deformation(g), phi);
    for (std::size_t i = 0; i < phi.vectors.size(); ++i) {
        CHECK(left.vectors[i].x == Catch::Approx(phi.vectors[i].x).margin(1e-12));
        CHECK(left.vectors[i].y == Catch::Approx(phi.vectors[i].y).margin(1e-12));
        CHECK(left.vectors[i].z == Catch::Approx(phi.vectors[i].z).margin(1e-12));
    }
}

TEST_CASE("composed translations add in the interior", "[volume]") {
    Grid3 g = grid(10);
    const VectorField3 a = translation(g, {1.0, 0.0, 0.0});
    const VectorField3 b = translation(g, {2.0, 0.0, 0.0});
    const VectorField3 ab = compose(a, b);
    for (int x = 0; x < 6; ++x) // interior along +x
        CHECK(ab.at(x, 4, 4).x == Catch::Approx(x + 3.0).margin(1e-12));
}

TEST_CASE("compose is associative up to interpolation error on smooth fields", "[volume]") {
    Grid3 g = grid(32);
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const VectorField3 va = testing::smooth_bump_field(g, seed, 0.25);
        const VectorField3 vb = testing::smooth_bump_field(g, seed + 100, 0.1875);
        const VectorField3 vc = testing::smooth_bump_field(g, seed + 200, 0.125);
        const VectorField3 a = exponential(Svf(va));
        const VectorField3 b = exponential(Svf(vb));
        const VectorField3 c = exponential(Svf(vc));
        const VectorField3 left = compose(compose(a, b), c);
        const VectorField3 right = compose(a, compose(b, c));
        CHECK(testing::max_deformation_difference(left, right) < 1e-3);
    }
}

TEST_CASE("compose of a flow with its inverse is close to identity", "[volume]") {
    Grid3 g = grid(32);
    const VectorField3 v = testing::smooth_bump_field(g, 77, 2.0);
    const VectorField3 fwd = exponential(Svf(v));
    const VectorField3 bwd = inverse_deformation(Svf(v));
    const VectorField3 round = compose(fwd, bwd);
    CHECK(testing::max_deformation_difference(round, identity_deformation(g)) < 0.1);
}

TEST_CASE("spatial_gradient of a constant volume is zero", "[volume]") {
    ScalarVolume vol(grid(8), 3.0);
    const VectorField3 gradient = spatial_gradient(vol);
    for (const Vec3& v : gradient.vectors) {
        CHECK(v.x == 0.0);
        CHECK(v.y == 0.0);
        CHECK(v.z == 0.0);
    }
}

TEST_CASE("spatial_gradient is exact for linear volumes", "[volume]") {
    Grid3 g = grid(8);
    const ScalarVolume vol = ramp_x(g, 2.0);
    const VectorField3 gradient = spatial_gradient(vol);
    for (int z = 0; z < 8; ++z)
        for (int y = 0; y < 8; ++y)
            for (int x = 1; x < 7; ++x) {
                CHECK(gradient.at(x, y, z).x == Catch::Approx(2.0).margin(1e-12));
                CHECK(gradient.at(x, y, z).y == Catch::Approx(0.0).margin(1e-12));
            }
}

TEST_CASE("spatial_gradient central difference on x^2", "[volume]") {
    Grid3 g = grid(8);
    ScalarVolume vol(g);
    for (int z = 0; z < 8; ++z)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) vol.at(x, y, z) = static_cast<double>(x) * x;
    // (16 - 4) / 2 = 6 at x = 3
    CHECK(spatial_gradient(vol).at(3, 4, 4).x == Catch::Approx(6.0).margin(1e-12));
}

TEST_CASE("warp_nearest carries labels through a translation", "[volume]") {
    Grid3 g = grid(8);
    LabelVolume labels(g);
    labels.at(4, 4, 4) = 17;
    const LabelVolume out = warp_nearest(labels, translation(g, {1.0, 0.0, 0.0}));
    CHECK(out.at(3, 4, 4) == 17);
    CHECK(out.at(4, 4, 4) == 0);
}
