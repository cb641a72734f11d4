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
// Scene description: triangle-mesh world with materials, radio endpoints and
// keyframed rigid-body animation. Scenes are immutable after parsing; all
// queries are pure and safe to call from many threads.
//
// The on-disk format is a JSON document (see docs/scene-format.md).

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isac/common.hpp"
#include "isac/geometry.hpp"
#include "isac/vec.hpp"

namespace isac {

enum class AntennaPattern { Isotropic, Dipole, Patch };

/// Electromagnetic surface properties of a mesh material.
struct Material {
    std::string name;
    double permittivity_real = 1.0;  // eps_r, >= 1 for physical dielectrics
    double permeability_real = 1.0;  // mu_r
    double roughness_stddev = 0.0;   // meters, >= 0
    double scatter_exponent = 4.0;   // > 0, angular spread shape
    double backscatter_coeff = 0.0;  // in [0, 1]
    bool penetrable = false;
    double refractive_index_ratio = 1.0; // n_outside / n_inside, used when penetrable

    bool operator==(const Material&) const = default;
};

struct Keyframe {
    int frame = 0;
    RigidTransform transform;

    bool operator==(const Keyframe&) const = default;
};

struct SceneObject {
    std::string id;
    std::vector<Vec3> vertices;                  // local space, meters
    std::vector<std::array<int, 3>> triangles;   // indices into vertices
    int material_index = 0;
    std::vector<Keyframe> keyframes;             // strictly increasing frame indices

    bool operator==(const SceneObject&) const = default;

    std::size_t triangle_count() const { return triangles.size(); }

    Triangle local_triangle(std::size_t i) const {
        const auto& t = triangles[i];
        return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
    }

    /// Rigid transform at an integer frame. Keyframes are interpolated
    /// (lerp translation, slerp rotation) and clamped outside their range.
    RigidTransform transform_at(double frame) const {
        if (keyframes.empty()) return {};
        if (frame <= keyframes.front().frame) return keyframes.front().transform;
        if (frame >= keyframes.back().frame) return keyframes.back().transform;
        for (std::size_t i = 1; i < keyframes.size(); ++i) {
            if (frame <= keyframes[i].frame) {
                const Keyframe& k0 = keyframes[i - 1];
                const Keyframe& k1 = keyframes[i];
                double u = (frame - k0.frame) / double(k1.frame - k0.frame);
                return interpolate(k0.transform, k1.transform, u);
            }
        }
        return keyframes.back().transform;
    }
};

/// Uniform linear array geometry. spacing_m == 0 means "half a wavelength",
/// resolved against the carrier at run time.
struct ArraySpec {
    int count = 1;
    double spacing_m = 0.0;
    Vec3 axis{0, 1, 0}; // unit vector along the element line, world frame

    bool operator==(const ArraySpec&) const = default;
};

struct RadioEndpoint {
    Vec3 position;
    Quat orientation; // local +x is boresight, +z the dipole axis
    ArraySpec array;
    AntennaPattern pattern = AntennaPattern::Isotropic;

    bool operator==(const RadioEndpoint&) const = default;

    /// World position of array element m (element 0 sits at `position`).
    Vec3 element_position(int m, double spacing_m) const {
        return position + array.axis * (spacing_m * m);
    }
};

struct Scene {
    std::vector<Material> materials;
    std::vector<SceneObject> objects;
    RadioEndpoint tx;
    RadioEndpoint rx;
    double frame_rate = 30.0; // frames per second
    int num_frames = 1;

    bool operator==(const Scene&) const = default;

    const SceneObject* find_object(const std::string& id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }

    int object_index(const std::string& id) const {
        for (std::size_t i = 0; i < objects.size(); ++i)
            if (objects[i].id == id) return int(i);
        return -1;
    }

    const Material& material_of(const SceneObject& obj) const {
        return materials[obj.material_index];
    }
};

// --------------------------------------------------------------------------
// Queries

/// Velocity of a surface point of an object, by forward finite difference
/// between consecutive frames. `point` is in world space at `frame`.
inline Vec3 surface_velocity(const Scene& scene, const std::string& object_id,
                             const Vec3& point, int frame) {
    const SceneObject* obj = scene.find_object(object_id);
    if (!obj) throw UnknownObjectError("unknown object: " + object_id);
    if (frame < 0 || frame > scene.num_frames - 2)
        throw FrameOutOfRangeError("frame " + std::to_string(frame) +
                                   " outside [0, " + std::to_string(scene.num_frames - 2) + "]");
    RigidTransform t0 = obj->transform_at(frame);
    RigidTransform t1 = obj->transform_at(frame + 1);
    Vec3 local = t0.inverse().apply(point);
    return (t1.apply(local) - t0.apply(local)) * scene.frame_rate;
}

struct Hit {
    Vec3 point;
    Vec3 normal;        // unit, oriented toward the ray origin
    std::string object_id;
    int object_index = -1;
    double distance = 0.0;
    bool near_edge = false;
    Vec3 edge_dir;      // unit direction of the nearest sharp edge (valid if near_edge)
    Vec3 edge_point;    // point on that edge closest to the hit
};

namespace detail {

/// Edges that qualify as diffraction edges: mesh boundary edges plus edges
/// whose adjacent faces meet at a dihedral angle above ~30 degrees.
inline std::vector<std::pair<Vec3, Vec3>> sharp_edges(const SceneObject& obj) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> edge_tris;
    for (std::size_t t = 0; t < obj.triangles.size(); ++t) {
        const auto& tri = obj.triangles[t];
        for (int e = 0; e < 3; ++e) {
            int a = tri[e], b = tri[(e + 1) % 3];
            edge_tris[{std::min(a, b), std::max(a, b)}].push_back(t);
        }
    }
    constexpr double kCosDihedral = 0.86602540378443865; // cos(30 deg)
    std::vector<std::pair<Vec3, Vec3>> edges;
    for (const auto& [key, tris] : edge_tris) {
        bool sharp = tris.size() == 1;
        if (tris.size() == 2) {
            Vec3 n0 = obj.local_triangle(tris[0]).normal();
            Vec3 n1 = obj.local_triangle(tris[1]).normal();
            sharp = std::abs(n0.dot(n1)) < kCosDihedral;
        }
        if (sharp) edges.emplace_back(obj.vertices[key.first], obj.vertices[key.second]);
    }
    return edges;
}

} // namespace detail

/// Immutable world-space snapshot of a scene at one animation frame:
/// transformed triangles plus per-object diffraction edges. Build once per
/// frame and share between threads.
class FrameGeometry {
  public:
    FrameGeometry(const Scene& scene, int frame, double edge_margin)
        : scene_(&scene), frame_(frame), edge_margin_(edge_margin) {
        for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
            const SceneObject& obj = scene.objects[oi];
            RigidTransform tf = obj.transform_at(frame);
            for (std::size_t t = 0; t < obj.triangles.size(); ++t) {
                Triangle lt = obj.local_triangle(t);
                world_tris_.push_back({Triangle{tf.apply(lt.a), tf.apply(lt.b), tf.apply(lt.c)},
                                       int(oi)});
            }
            std::vector<std::pair<Vec3, Vec3>> edges;
            for (const auto& [a, b] : detail::sharp_edges(obj))
                edges.emplace_back(tf.apply(a), tf.apply(b));
            world_edges_.push_back(std::move(edges));
        }
    }

    const Scene& scene() const { return *scene_; }
    int frame() const { return frame_; }
    double edge_margin() const { return edge_margin_; }

    /// Nearest intersection along the ray past the self-intersection offset.
    std::optional<Hit> intersect(const Vec3& origin, const Vec3& dir) const {
        double best_t = std::numeric_limits<double>::infinity();
        int best_tri = -1;
        for (std::size_t i = 0; i < world_tris_.size(); ++i) {
            if (auto t = ray_triangle(origin, dir, world_tris_[i].tri)) {
                if (*t < best_t) {
                    best_t = *t;
                    best_tri = int(i);
                }
            }
        }
        if (best_tri < 0) return std::nullopt;

        const auto& wt = world_tris_[best_tri];
        Hit hit;
        hit.point = origin + dir * best_t;
        hit.distance = best_t;
        hit.object_index = wt.object_index;
        hit.object_id = scene_->objects[wt.object_index].id;
        Vec3 n = wt.tri.normal();
        hit.normal = n.dot(dir) < 0.0 ? n : -n;

        double best_edge = std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : world_edges_[wt.object_index]) {
            double d = point_segment_distance(hit.point, a, b);
            if (d < best_edge) {
                best_edge = d;
                hit.edge_dir = (b - a).normalized();
                hit.edge_point = a + (b - a) * std::clamp(
                    (hit.point - a).dot(b - a) / std::max((b - a).norm2(), 1e-300), 0.0, 1.0);
            }
        }
        hit.near_edge = best_edge <= edge_margin_;
        return hit;
    }

    /// True when the straight segment between two points is unobstructed.
    bool segment_clear(const Vec3& from, const Vec3& to) const {
        Vec3 d = to - from;
        double len = d.norm();
        if (len <= kRayEpsilon) return true;
        Vec3 dir = d / len;
        for (const auto& wt : world_tris_) {
            if (auto t = ray_triangle(from, dir, wt.tri)) {
                if (*t < len - kRayEpsilon) return false;
            }
        }
        return true;
    }

    std::size_t triangle_count() const { return world_tris_.size(); }

  private:
    struct WorldTri {
        Triangle tri;
        int object_index;
    };

    const Scene* scene_;
    int frame_;
    double edge_margin_;
    std::vector<WorldTri> world_tris_;
    std::vector<std::vector<std::pair<Vec3, Vec3>>> world_edges_;
};

/// One-shot intersection query; builds a throwaway frame snapshot.
/// Prefer FrameGeometry when casting many rays at the same frame.
inline std::optional<Hit> intersect_ray(const Scene& scene, const Vec3& origin,
                                        const Vec3& dir, int frame,
                                        double edge_margin = 0.0) {
    return FrameGeometry(scene, frame, edge_margin).intersect(origin, dir);
}

// --------------------------------------------------------------------------
// Parsing and serialization

namespace detail {

using json = nlohmann::json;

inline Vec3 parse_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3)
        throw ParseError(what + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Quat parse_rotation(const json& j, const std::string& what) {
    if (j.contains("rotation")) {
        const json& q = j.at("rotation");
        if (!q.is_array() || q.size() != 4)
            throw ParseError(what + ".rotation: expected [w, x, y, z]");
        return Quat{q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                    q[3].get<double>()}.normalized();
    }
    if (j.contains("rotation_axis")) {
        Vec3 axis = parse_vec3(j.at("rotation_axis"), what + ".rotation_axis");
        double deg = j.value("rotation_deg", 0.0);
        return Quat::from_axis_angle(axis, deg2rad(deg));
    }
    return {};
}

inline AntennaPattern parse_pattern(const std::string& s) {
    if (s == "isotropic") return AntennaPattern::Isotropic;
    if (s == "dipole") return AntennaPattern::Dipole;
    if (s == "patch") return AntennaPattern::Patch;
    throw ParseError("unknown antenna pattern: " + s);
}

inline std::string pattern_name(AntennaPattern p) {
    switch (p) {
        case AntennaPattern::Isotropic: return "isotropic";
        case AntennaPattern::Dipole: return "dipole";
        case AntennaPattern::Patch: return "patch";
    }
    return "isotropic";
}

inline RadioEndpoint parse_endpoint(const json& j, const std::string& what) {
    RadioEndpoint ep;
    ep.position = parse_vec3(j.at("position"), what + ".position");
    ep.orientation = parse_rotation(j, what);
    ep.pattern = parse_pattern(j.value("pattern", std::string("isotropic")));
    if (j.contains("array")) {
        const json& a = j.at("array");
        ep.array.count = a.value("count", 1);
        ep.array.spacing_m = a.value("spacing_m", 0.0);
        if (a.contains("axis"))
            ep.array.axis = parse_vec3(a.at("axis"), what + ".array.axis").normalized();
    }
    return ep;
}

inline json endpoint_to_json(const RadioEndpoint& ep) {
    json j;
    j["position"] = {ep.position.x, ep.position.y, ep.position.z};
    j["rotation"] = {ep.orientation.w, ep.orientation.x, ep.orientation.y, ep.orientation.z};
    j["pattern"] = pattern_name(ep.pattern);
    j["array"] = {{"count", ep.array.count},
                  {"spacing_m", ep.array.spacing_m},
                  {"axis", {ep.array.axis.x, ep.array.axis.y, ep.array.axis.z}}};
    return j;
}

/// Closed meshes (every edge shared by exactly two faces) support a parity
/// test; open meshes cannot contain a point.
inline bool mesh_is_closed(const SceneObject& obj) {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : obj.triangles)
        for (int e = 0; e < 3; ++e) {
            int a = tri[e], b = tri[(e + 1) % 3];
            ++edge_count[{std::min(a, b), std::max(a, b)}];
        }
    for (const auto& [k, c] : edge_count)
        if (c != 2) return false;
    return !obj.triangles.empty();
}

inline bool point_inside_closed_mesh(const SceneObject& obj, const RigidTransform& tf,
                                     const Vec3& p) {
    // Parity of crossings along an arbitrary direction.
    Vec3 dir = Vec3{0.5773502691896258, 0.5773502691896258, 0.5773502691896258};
    int crossings = 0;
    for (std::size_t t = 0; t < obj.triangles.size(); ++t) {
        Triangle lt = obj.local_triangle(t);
        Triangle wt{tf.apply(lt.a), tf.apply(lt.b), tf.apply(lt.c)};
        if (ray_triangle(p, dir, wt, 0.0)) ++crossings;
    }
    return (crossings % 2) == 1;
}

} // namespace detail

/// Validate every scene invariant; throws ValidationError naming the object
/// and field on the first violation.
inline void validate_scene(const Scene& scene) {
    if (scene.frame_rate <= 0.0)
        throw ValidationError("scene.frame_rate must be > 0");
    if (scene.num_frames < 1)
        throw ValidationError("scene.num_frames must be >= 1");

    for (const auto& m : scene.materials) {
        if (m.permittivity_real < 1.0)
            throw ValidationError("material " + m.name + ": permittivity_real must be >= 1");
        if (m.roughness_stddev < 0.0)
            throw ValidationError("material " + m.name + ": roughness_stddev must be >= 0");
        if (m.backscatter_coeff < 0.0 || m.backscatter_coeff > 1.0)
            throw ValidationError("material " + m.name + ": backscatter_coeff must be in [0, 1]");
        if (m.scatter_exponent <= 0.0)
            throw ValidationError("material " + m.name + ": scatter_exponent must be > 0");
    }

    for (const auto& obj : scene.objects) {
        if (obj.triangles.empty())
            throw ValidationError("object " + obj.id + ": mesh is empty");
        if (obj.material_index < 0 || obj.material_index >= int(scene.materials.size()))
            throw ValidationError("object " + obj.id + ": material out of range");
        for (const auto& tri : obj.triangles)
            for (int k : tri)
                if (k < 0 || k >= int(obj.vertices.size()))
                    throw ValidationError("object " + obj.id + ": triangle index out of range");
        for (std::size_t t = 0; t < obj.triangles.size(); ++t)
            if (obj.local_triangle(t).area() <= 1e-12)
                throw ValidationError("object " + obj.id + ": degenerate triangle " +
                                      std::to_string(t));
        for (std::size_t i = 1; i < obj.keyframes.size(); ++i)
            if (obj.keyframes[i].frame <= obj.keyframes[i - 1].frame)
                throw ValidationError("object " + obj.id +
                                      ": keyframe indices must be strictly increasing");
    }

    for (const auto& obj : scene.objects) {
        if (!detail::mesh_is_closed(obj)) continue;
        RigidTransform tf = obj.transform_at(0);
        if (detail::point_inside_closed_mesh(obj, tf, scene.tx.position))
            throw ValidationError("tx position is inside object " + obj.id);
        if (detail::point_inside_closed_mesh(obj, tf, scene.rx.position))
            throw ValidationError("rx position is inside object " + obj.id);
    }

    if (scene.tx.array.count < 1 || scene.rx.array.count < 1)
        throw ValidationError("array count must be >= 1");
}

inline Scene parse_scene_text(const std::string& text) {
    detail::json doc;
    try {
        doc = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw ParseError(std::string("scene document: ") + e.what());
    }

    Scene scene;
    try {
        scene.frame_rate = doc.at("frame_rate").get<double>();
        scene.num_frames = doc.at("num_frames").get<int>();

        std::map<std::string, int> material_index;
        for (const auto& jm : doc.value("materials", detail::json::array())) {
            Material m;
            m.name = jm.at("name").get<std::string>();
            m.permittivity_real = jm.value("permittivity_real", 1.0);
            m.permeability_real = jm.value("permeability_real", 1.0);
            m.roughness_stddev = jm.value("roughness_stddev_m", 0.0);
            m.scatter_exponent = jm.value("scatter_exponent", 4.0);
            m.backscatter_coeff = jm.value("backscatter_coeff", 0.0);
            m.penetrable = jm.value("penetrable", false);
            m.refractive_index_ratio = jm.value("refractive_index_ratio", 1.0);
            material_index[m.name] = int(scene.materials.size());
            scene.materials.push_back(m);
        }

        for (const auto& jo : doc.value("objects", detail::json::array())) {
            SceneObject obj;
            obj.id = jo.at("id").get<std::string>();
            std::string mat = jo.at("material").get<std::string>();
            auto it = material_index.find(mat);
            if (it == material_index.end())
                throw ParseError("object " + obj.id + ": unknown material " + mat);
            obj.material_index = it->second;
            for (const auto& v : jo.at("vertices"))
                obj.vertices.push_back(detail::parse_vec3(v, "object " + obj.id + ".vertices"));
            for (const auto& t : jo.at("triangles")) {
                if (!t.is_array() || t.size() != 3)
                    throw ParseError("object " + obj.id + ": triangle must be [i, j, k]");
                obj.triangles.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
            }
            for (const auto& k : jo.value("keyframes", detail::json::array())) {
                Keyframe kf;
                kf.frame = k.at("frame").get<int>();
                if (k.contains("translation"))
                    kf.transform.translation =
                        detail::parse_vec3(k.at("translation"), "keyframe translation");
                kf.transform.rotation = detail::parse_rotation(k, "keyframe");
                obj.keyframes.push_back(kf);
            }
            scene.objects.push_back(std::move(obj));
        }

        scene.tx = detail::parse_endpoint(doc.at("tx"), "tx");
        scene.rx = detail::parse_endpoint(doc.at("rx"), "rx");
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("scene document: ") + e.what());
    }

    validate_scene(scene);
    return scene;
}

inline Scene parse_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scene file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene_text(ss.str());
}

inline std::string serialize_scene(const Scene& scene) {
    detail::json doc;
    doc["frame_rate"] = scene.frame_rate;
    doc["num_frames"] = scene.num_frames;
    doc["materials"] = detail::json::array();
    for (const auto& m : scene.materials) {
        doc["materials"].push_back({{"name", m.name},
                                    {"permittivity_real", m.permittivity_real},
                                    {"permeability_real", m.permeability_real},
                                    {"roughness_stddev_m", m.roughness_stddev},
                                    {"scatter_exponent", m.scatter_exponent},
                                    {"backscatter_coeff", m.backscatter_coeff},
                                    {"penetrable", m.penetrable},
                                    {"refractive_index_ratio", m.refractive_index_ratio}});
    }
    doc["objects"] = detail::json::array();
    for (const auto& obj : scene.objects) {
        detail::json jo;
        jo["id"] = obj.id;
        jo["material"] = scene.materials[obj.material_index].name;
        jo["vertices"] = detail::json::array();
        for (const auto& v : obj.vertices) jo["vertices"].push_back({v.x, v.y, v.z});
        jo["triangles"] = detail::json::array();
        for (const auto& t : obj.triangles) jo["triangles"].push_back({t[0], t[1], t[2]});
        jo["keyframes"] = detail::json::array();
        for (const auto& k : obj.keyframes) {
            jo["keyframes"].push_back(
                {{"frame", k.frame},
                 {"translation",
                  {k.transform.translation.x, k.transform.translation.y,
                   k.transform.translation.z}},
                 {"rotation",
                  {k.transform.rotation.w, k.transform.rotation.x, k.transform.rotation.y,
                   k.transform.rotation.z}}});
        }
        doc["objects"].push_back(jo);
    }
    doc["tx"] = detail::endpoint_to_json(scene.tx);
    doc["rx"] = detail::endpoint_to_json(scene.rx);
    return doc.dump(2);
}

} // namespace isac
