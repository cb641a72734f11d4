// SPDX-License-Identifier: Apache-2.0
//
// isacsim — deterministic ray-traced channel simulation and radio sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Scene parsing, validation, animation sampling, surface velocities, and
// the frame-geometry intersection queries.

#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <random>
#include <string>

#include "isac/scene.hpp"
#include "oracles.hpp"

using namespace isac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::string kMinimalScene = R"({
  "frame_rate": 30,
  "num_frames": 1,
  "materials": [
    {"name": "m", "permittivity_real": 2.5, "backscatter_coeff": 0.3}
  ],
  "objects": [
    {
      "id": "plate",
      "material": "m",
      "vertices": [[5, -0.5, 1.0], [5, 0.5, 1.0], [5, 0.5, 2.0], [5, -0.5, 2.0]],
      "triangles": [[0, 1, 2], [0, 2, 3]]
    }
  ],
  "tx": {"position": [0, 0, 1.5]},
  "rx": {"position": [0, 1, 1.5]}
})";

SceneObject closed_box(const std::string& id, const Vec3& center, double hw) {
    SceneObject obj;
    obj.id = id;
    obj.material_index = 0;
    for (int i = 0; i < 8; ++i) {
        Vec3 v{center.x + ((i & 1) ? hw : -hw), center.y + ((i & 2) ? hw : -hw),
               center.z + ((i & 4) ? hw : -hw)};
        obj.vertices.push_back(v);
    }
    obj.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                     {1, 3, 5}, {3, 7, 5}, {3, 2, 7}, {2, 6, 7}, {2, 0, 6}, {0, 4, 6}};
    return obj;
}

} // namespace

TEST_CASE("minimal scene parses into one two-triangle object", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    REQUIRE(s.objects.size() == 1);
    REQUIRE(s.objects[0].triangles.size() == 2);
    REQUIRE(s.objects[0].vertices.size() == 4);
    REQUIRE(s.materials.size() == 1);
    CHECK(s.materials[0].permittivity_real == 2.5);
    CHECK(s.materials[0].backscatter_coeff == 0.3);
    CHECK(s.materials[0].permeability_real == 1.0);
    CHECK(s.frame_rate == 30.0);
    CHECK(s.num_frames == 1);
    CHECK(s.find_object("plate") != nullptr);
    CHECK(s.find_object("nope") == nullptr);
    CHECK(s.material_of(s.objects[0]).name == "m");
}

TEST_CASE("serialize then parse is the identity", "[scene]") {
    Scene s1 = parse_scene_text(kMinimalScene);
    std::string t1 = serialize_scene(s1);
    Scene s2 = parse_scene_text(t1);
    CHECK(s1 == s2);
    CHECK(serialize_scene(s2) == t1);
}

TEST_CASE("fixture scenes survive a serialize round trip", "[scene]") {
    for (const char* name : {"/two_path.json", "/factory.json", "/los.json"}) {
        Scene s1 = parse_scene(std::string(ISAC_SCENE_DIR) + name);
        Scene s2 = parse_scene_text(serialize_scene(s1));
        CHECK(s1 == s2);
    }
}

TEST_CASE("factory fixture has a full floor plan", "[scene]") {
    Scene s = parse_scene(std::string(ISAC_SCENE_DIR) + "/factory.json");
    CHECK(s.objects.size() >= 6);
    CHECK(s.materials.size() >= 3);
    CHECK(s.num_frames == 30);
    REQUIRE(s.find_object("agv") != nullptr);
    CHECK(s.find_object("agv")->keyframes.size() >= 2);
    CHECK(s.rx.array.count == 4);
}

TEST_CASE("parser rejects malformed documents", "[scene]") {
    CHECK_THROWS_AS(parse_scene_text("not json"), ParseError);
    CHECK_THROWS_AS(parse_scene_text("{}"), ParseError); // missing required keys

    // Unknown material reference.
    std::string bad_mat = kMinimalScene;
    bad_mat.replace(bad_mat.find("\"material\": \"m\""), 15, "\"material\": \"x\"");
    CHECK_THROWS_AS(parse_scene_text(bad_mat), ParseError);

    // Triangle with the wrong arity.
    std::string bad_tri = kMinimalScene;
    bad_tri.replace(bad_tri.find("[0, 1, 2]"), 9, "[0, 1]");
    CHECK_THROWS_AS(parse_scene_text(bad_tri), ParseError);

    CHECK_THROWS_AS(parse_scene("/nonexistent/path.json"), ParseError);
}

TEST_CASE("validation rejects non-increasing keyframe indices", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    s.num_frames = 4;
    Keyframe k1, k2;
    k1.frame = 1;
    k2.frame = 0;
    s.objects[0].keyframes = {k1, k2};
    CHECK_THROWS_AS(validate_scene(s), ValidationError);
    s.objects[0].keyframes = {k2, k1};
    CHECK_NOTHROW(validate_scene(s));
}

TEST_CASE("validation rejects degenerate geometry and bad fields", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);

    SECTION("degenerate triangle") {
        s.objects[0].vertices[1] = s.objects[0].vertices[0];
        CHECK_THROWS_AS(validate_scene(s), ValidationError);
    }
    SECTION("triangle index out of range") {
        s.objects[0].triangles[0] = {0, 1, 9};
        CHECK_THROWS_AS(validate_scene(s), ValidationError);
    }
    SECTION("permittivity below vacuum") {
        s.materials[0].permittivity_real = 0.5;
        CHECK_THROWS_AS(validate_scene(s), ValidationError);
    }
    SECTION("backscatter coefficient above one") {
        s.materials[0].backscatter_coeff = 1.5;
        CHECK_THROWS_AS(validate_scene(s), ValidationError);
    }
    SECTION("non-positive frame count") {
        s.num_frames = 0;
        CHECK_THROWS_AS(validate_scene(s), ValidationError);
    }
    SECTION("empty antenna array") {
        s.rx.array.count = 0;
        CHECK_THROWS_AS(validate_scene(s), ValidationError);
    }
}

TEST_CASE("validation rejects endpoints inside a closed mesh", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    s.objects.push_back(closed_box("shell", s.tx.position, 0.2));
    CHECK_THROWS_AS(validate_scene(s), ValidationError);

    // The same box away from both endpoints is fine.
    s.objects.back() = closed_box("shell", {9, 9, 9}, 0.2);
    CHECK_NOTHROW(validate_scene(s));
}

TEST_CASE("surface velocity of a static object is exactly zero", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    s.num_frames = 2;
    Vec3 v = surface_velocity(s, "plate", {5, 0, 1.5}, 0);
    CHECK(v.x == 0.0);
    CHECK(v.y == 0.0);
    CHECK(v.z == 0.0);
}

TEST_CASE("surface velocity of a linear translation", "[scene]") {
    // 0.1 m per frame along +x at 30 frames/s -> 3 m/s.
    Scene s = parse_scene_text(kMinimalScene);
    s.num_frames = 11;
    Keyframe k0, k1;
    k0.frame = 0;
    k1.frame = 10;
    k1.transform.translation = {1.0, 0.0, 0.0};
    s.objects[0].keyframes = {k0, k1};
    Vec3 v = surface_velocity(s, "plate", {5, 0.2, 1.3}, 4);
    CHECK_THAT(v.x, WithinAbs(3.0, 1e-9));
    CHECK_THAT(v.y, WithinAbs(0.0, 1e-12));
    CHECK_THAT(v.z, WithinAbs(0.0, 1e-12));
}

TEST_CASE("surface velocity of a rotating point one metre off axis", "[scene]") {
    // One degree per frame at 30 frames/s: tangential speed ~0.5236 m/s.
    Scene s = parse_scene_text(kMinimalScene);
    s.num_frames = 2;
    Keyframe k0, k1;
    k0.frame = 0;
    k1.frame = 1;
    k1.transform.rotation = Quat::from_axis_angle({0, 0, 1}, deg2rad(1.0));
    s.objects[0].keyframes = {k0, k1};
    Vec3 v = surface_velocity(s, "plate", {1, 0, 0}, 0);
    CHECK_THAT(v.norm(), WithinAbs(0.5236, 1e-3));
    // Finite differencing yields the chord, so x picks up -(1 - cos 1deg) * rate.
    CHECK_THAT(v.x, WithinAbs(-30.0 * (1.0 - std::cos(deg2rad(1.0))), 1e-9));
    CHECK(v.y > 0.5);
}

TEST_CASE("surface velocity rejects bad lookups", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    s.num_frames = 2;
    CHECK_THROWS_AS(surface_velocity(s, "ghost", {0, 0, 0}, 0), UnknownObjectError);
    CHECK_THROWS_AS(surface_velocity(s, "plate", {0, 0, 0}, 1), FrameOutOfRangeError);
    CHECK_THROWS_AS(surface_velocity(s, "plate", {0, 0, 0}, -1), FrameOutOfRangeError);
}

TEST_CASE("intersect_ray hits a wall five metres down the x axis", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    auto hit = intersect_ray(s, {0, 0, 1.5}, {1, 0, 0}, 0);
    REQUIRE(hit.has_value());
    CHECK_THAT(hit->distance, WithinAbs(5.0, 1e-9));
    CHECK(hit->object_id == "plate");
    // Normal is oriented back toward the ray origin.
    CHECK_THAT(hit->normal.x, WithinAbs(-1.0, 1e-12));

    CHECK_FALSE(intersect_ray(s, {0, 0, 1.5}, {-1, 0, 0}, 0).has_value());
    CHECK_FALSE(intersect_ray(s, {0, 0, 1.5}, {0, 0, 1}, 0).has_value());
}

TEST_CASE("hits a centimetre from a border are flagged near an edge", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    Vec3 origin{0, 0, 1.5};
    Vec3 toward_edge = (Vec3{5, 0.49, 1.5} - origin).normalized();

    auto near = intersect_ray(s, origin, toward_edge, 0, 0.05);
    REQUIRE(near.has_value());
    CHECK(near->near_edge);
    CHECK_THAT(std::abs(near->edge_dir.z), WithinAbs(1.0, 1e-9)); // border runs vertically

    auto far = intersect_ray(s, origin, toward_edge, 0, 0.001);
    REQUIRE(far.has_value());
    CHECK_FALSE(far->near_edge);

    auto center = intersect_ray(s, origin, {1, 0, 0}, 0, 0.05);
    REQUIRE(center.has_value());
    CHECK_FALSE(center->near_edge);
}

TEST_CASE("intersect_ray agrees with an exhaustive triangle scan", "[scene]") {
    Scene s = testutil::base_scene({0, 0, 0}, {0.5, 0, 0});
    s.objects.push_back(testutil::axis_plate("px", 0, 4.0, -2, 2, -2, 2));
    s.objects.push_back(testutil::axis_plate("py", 1, 3.0, -2, 2, -2, 2));
    s.objects.push_back(testutil::axis_plate("pz", 2, -2.5, -3, 3, -3, 3));
    s.objects.push_back(closed_box("box", {2, 2, 0}, 0.7));
    validate_scene(s);

    std::mt19937 rng(20240817);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int hits = 0;
    for (int i = 0; i < 300; ++i) {
        Vec3 dir{unit(rng), unit(rng), unit(rng)};
        if (dir.norm() < 1e-3) continue;
        dir = dir.normalized();

        std::optional<double> best;
        std::string best_id;
        for (const auto& obj : s.objects) {
            for (std::size_t t = 0; t < obj.triangles.size(); ++t) {
                Triangle tri{obj.vertices[obj.triangles[t][0]],
                             obj.vertices[obj.triangles[t][1]],
                             obj.vertices[obj.triangles[t][2]]};
                auto d = ray_triangle({0, 0, 0}, dir, tri);
                if (d && (!best || *d < *best)) {
                    best = *d;
                    best_id = obj.id;
                }
            }
        }

        auto hit = intersect_ray(s, {0, 0, 0}, dir, 0);
        REQUIRE(hit.has_value() == best.has_value());
        if (hit) {
            ++hits;
            CHECK_THAT(hit->distance, WithinAbs(*best, 1e-12));
            CHECK(hit->object_id == best_id);
        }
    }
    CHECK(hits > 50); // the scan actually exercised hits
}

TEST_CASE("animated transforms interpolate and clamp", "[scene]") {
    Scene s = parse_scene_text(kMinimalScene);
    s.num_frames = 21;
    Keyframe k0, k1;
    k0.frame = 5;
    k1.frame = 15;
    k1.transform.translation = {2.0, 0.0, 0.0};
    s.objects[0].keyframes = {k0, k1};

    CHECK(s.objects[0].transform_at(0).translation.x == 0.0);   // clamped low
    CHECK(s.objects[0].transform_at(20).translation.x == 2.0);  // clamped high
    CHECK_THAT(s.objects[0].transform_at(10).translation.x, WithinAbs(1.0, 1e-12));
    CHECK_THAT(s.objects[0].transform_at(7.5).translation.x, WithinAbs(0.5, 1e-12));
}
