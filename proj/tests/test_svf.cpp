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
} // namespace

TEST_CASE("exp of the zero field is the identity bit-exact", "[svf]") {
    Grid3 g = grid(16);
    const VectorField3 phi = exponential(Svf(VectorField3(g, FieldKind::velocity)));
    const VectorField3 ident = identity_deformation(g);
    for (std::size_t i = 0; i < phi.vectors.size(); ++i) {
        CHECK(phi.vectors[i].x == ident.vectors[i].x);
        CHECK(phi.vectors[i].y == ident.vectors[i].y);
        CHECK(phi.vectors[i].z == ident.vectors[i].z);
    }
}

TEST_CASE("constant velocity integrates to a translation", "[svf]") {
    Grid3 g = grid(16);
    VectorField3 v(g, FieldKind::velocity);
    for (Vec3& w : v.vectors) w = {0.5, 0.0, 0.0};
    const VectorField3 phi = exponential(Svf(std::move(v)));
    for (int z = 2; z < 14; ++z)
        for (int y = 2; y < 14; ++y)
            for (int x = 2; x < 13; ++x) {
                const Vec3 d = phi.at(x, y, z) -
                               Vec3{static_cast<double>(x), static_cast<double>(y),
                                    static_cast<double>(z)};
                CHECK(d.x == Catch::Approx(0.5).margin(1e-6));
                CHECK(d.y == Catch::Approx(0.0).margin(1e-6));
                CHECK(d.z == Catch::Approx(0.0).margin(1e-6));
            }
}

TEST_CASE("exp rejects non-finite fields", "[svf]") {
    Grid3 g = grid(8);
    VectorField3 v(g, FieldKind::velocity);
    v.vectors[10].x = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(exponential(Svf(std::move(v))), numerical_error);
}

TEST_CASE("exp matches the dense Euler oracle on smooth fields", "[svf]") {
    Grid3 g = grid(32);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const double amp = 0.30 + 0.05 * static_cast<double>(seed % 6);
        const VectorField3 v = testing::smooth_bump_field(g, seed, amp);
        const VectorField3 ss = exponential(Svf(v));
        const VectorField3 euler = testing::euler_flow(v, 1024);
        CHECK(testing::max_deformation_difference(ss, euler) < 1e-2);
    }
}

TEST_CASE("inverse composes to identity within 0.1 voxel at max displacement 2", "[svf]") {
    Grid3 g = grid(32);
    for (std::uint64_t seed : {10u, 11u, 12u}) {
        const VectorField3 v = testing::smooth_bump_field(g, seed, 2.0);
        const VectorField3 fwd = exponential(Svf(v));
        const VectorField3 bwd = inverse_deformation(Svf(v));
        const VectorField3 round = compose(fwd, bwd);
        CHECK(testing::max_deformation_difference(round, identity_deformation(g)) < 0.1);
    }
}

TEST_CASE("inverse of zero and of translations", "[svf]") {
    Grid3 g = grid(16);
    const VectorField3 ident = inverse_deformation(Svf(VectorField3(g, FieldKind::velocity)));
    CHECK(testing::max_deformation_difference(ident, identity_deformation(g)) == 0.0);

    VectorField3 v(g, FieldKind::velocity);
    for (Vec3& w : v.vectors) w = {1.0, 0.0, 0.0};
    const VectorField3 bwd = inverse_deformation(Svf(std::move(v)));
    for (int x = 3; x < 13; ++x) {
        const Vec3 d = bwd.at(x, 8, 8) - Vec3{static_cast<double>(x), 8.0, 8.0};
        CHECK(d.x == Catch::Approx(-1.0).margin(1e-6));
    }
}

TEST_CASE("group property: exp(v) o exp(v) matches exp(2v)", "[svf]") {
    Grid3 g = grid(32);
    for (std::uint64_t seed : {30u, 31u, 32u}) {
        const VectorField3 v = testing::smooth_bump_field(g, seed, 1.0);
        VectorField3 v2 = v;
        for (Vec3& w : v2.vectors) w *= 2.0;
        const VectorField3 once = exponential(Svf(v));
        const VectorField3 twice = compose(once, once);
        const VectorField3 direct = exponential(Svf(std::move(v2)));
        CHECK(testing::max_deformation_difference(twice, direct) < 5e-2);
    }
}

TEST_CASE("jacobian determinant of identity is one", "[svf]") {
    const ScalarVolume det = jacobian_determinant(identity_deformation(grid(12)));
    for (double v : det.values) CHECK(v == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("jacobian determinant of uniform scaling", "[svf]") {
    Grid3 g = grid(16);
    VectorField3 phi(g, FieldKind::deformation);
    const Vec3 c{7.5, 7.5, 7.5};
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const Vec3 p{static_cast<double>(x), static_cast<double>(y),
                             static_cast<double>(z)};
                phi.at(x, y, z) = c + (p - c) * 1.1;
            }
    const ScalarVolume det = jacobian_determinant(phi);
    for (int z = 1; z < 15; ++z)
        for (int y = 1; y < 15; ++y)
            for (int x = 1; x < 15; ++x)
                CHECK(det.at(x, y, z) == Catch::Approx(1.331).margin(1e-9));
}

TEST_CASE("flows of smooth bounded fields stay diffeomorphic", "[svf]") {
    Grid3 g = grid(32);
    for (std::uint64_t seed : {40u, 41u, 42u, 43u}) {
        const VectorField3 v = testing::smooth_bump_field(g, seed, 2.0);
        CHECK(min_jacobian(exponential(Svf(v))) > 0.0);
    }
}

TEST_CASE("svf algebra: scale, add, norm_map", "[svf]") {
    Grid3 g = grid(8);
    VectorField3 f(g, FieldKind::velocity);
    for (Vec3& w : f.vectors) w = {30.0, 0.0, 0.0};
    Svf v(std::move(f));

    const Svf yearly = scale(v, 1.0 / 30.0);
    CHECK(yearly.field.vectors[0].x == Catch::Approx(1.0).margin(1e-15));

    const Svf zero = add(v, scale(v, -1.0));
    for (const Vec3& w : zero.field.vectors) CHECK(w.norm() == 0.0);

    VectorField3 p(g, FieldKind::velocity);
    for (Vec3& w : p.vectors) w = {3.0, 4.0, 0.0};
    CHECK(norm_map(Svf(std::move(p))).values[17] == Catch::Approx(5.0).margin(1e-15));
}

TEST_CASE("svf add rejects grid mismatch", "[svf]") {
    Svf a(VectorField3(grid(8), FieldKind::velocity));
    Svf b(VectorField3(grid(9), FieldKind::velocity));
    CHECK_THROWS_AS(add(a, b), validation_error);
}
