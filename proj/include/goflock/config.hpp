#pragma once
/**
 * @file config.hpp
 * @brief Experiment specification and its JSON (de)serialization.
 *
 * Every configuration struct maps to a JSON object whose keys are the C++
 * field names. Vectors are `[x, y, z]` arrays, primitives are objects tagged
 * with `"type": "box" | "cylinder" | "sphere"`. Missing keys keep their
 * defaults; unknown keys are rejected so that typos surface as config errors.
 */

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goflock/navigation.hpp"
#include "goflock/sim.hpp"
#include "goflock/world.hpp"

namespace goflock {

/// One controller configuration evaluated by a suite.
struct Variant {
    ControllerKind controller{ControllerKind::goflock};
    AvoidanceMode mode{AvoidanceMode::full};
    bool operator==(const Variant&) const = default;

    /// "goflock", "siphon", ... or "goflock/w2_only" for reduced modes.
    std::string label() const {
        if (controller == ControllerKind::goflock && mode != AvoidanceMode::full) {
            return to_string(controller) + "/" + to_string(mode);
        }
        return to_string(controller);
    }
};

struct ExperimentSpec {
    std::string name{"experiment"};
    ScenarioConfig scenario{};
    std::vector<Variant> variants{Variant{}};
    int runs{1};
    std::uint64_t seed_base{0};
    NavGains gains{};
    SimConfig sim{};
    std::string output_dir{"out"};
    bool write_trajectories{true};
    bool operator==(const ExperimentSpec&) const = default;

    void validate() const {
        if (runs < 1) throw std::invalid_argument("runs must be >= 1");
        if (variants.empty()) throw std::invalid_argument("at least one controller variant is required");
        if (scenario.agent_count < 1) throw std::invalid_argument("agent_count must be >= 1");
        gains.validate();
        sim.validate();
    }
};

/// Malformed or inconsistent configuration document.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Leaf types
// ---------------------------------------------------------------------------

inline void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }
inline void from_json(const json& j, Vec3& v) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a [x, y, z] array, got " + j.dump());
    v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline void to_json(json& j, const AxisAlignedBox& b) { j = json{{"min", b.min}, {"max", b.max}}; }
inline void from_json(const json& j, AxisAlignedBox& b) {
    b.min = j.at("min").get<Vec3>();
    b.max = j.at("max").get<Vec3>();
}

inline void to_json(json& j, const Primitive& p) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                j = json{{"type", "box"}, {"min", s.min}, {"max", s.max}};
            } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                j = json{{"type", "cylinder"}, {"cx", s.cx},       {"cy", s.cy},
                         {"radius", s.radius}, {"z_min", s.z_min}, {"z_max", s.z_max}};
            } else {
                j = json{{"type", "sphere"}, {"center", s.center}, {"radius", s.radius}};
            }
        },
        p);
}
inline void from_json(const json& j, Primitive& p) {
    const auto type = j.at("type").get<std::string>();
    if (type == "box") {
        p = AxisAlignedBox{j.at("min").get<Vec3>(), j.at("max").get<Vec3>()};
    } else if (type == "cylinder") {
        p = VerticalCylinder{j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("radius").get<double>(),
                             j.at("z_min").get<double>(), j.at("z_max").get<double>()};
    } else if (type == "sphere") {
        p = Sphere{j.at("center").get<Vec3>(), j.at("radius").get<double>()};
    } else {
        throw ConfigError("unknown primitive type: " + type);
    }
}

inline void to_json(json& j, ScenarioKind k) { j = to_string(k); }
inline void from_json(const json& j, ScenarioKind& k) { k = scenario_kind_from_string(j.get<std::string>()); }
inline void to_json(json& j, ControllerKind k) { j = to_string(k); }
inline void from_json(const json& j, ControllerKind& k) { k = controller_from_string(j.get<std::string>()); }
inline void to_json(json& j, AvoidanceMode m) { j = to_string(m); }
inline void from_json(const json& j, AvoidanceMode& m) { m = avoidance_from_string(j.get<std::string>()); }

// ---------------------------------------------------------------------------
// Aggregates (missing keys keep defaults)
// ---------------------------------------------------------------------------

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SlabParams, center_x, center_y, width, thickness)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FieldParams, x_min, x_max, y_min, y_max, diagonal, gap, jitter)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ForestParams, x_min, x_max, y_min, y_max, coverage, trunk_radius_min,
                                                trunk_radius_max, foliage_radius_min, foliage_radius_max,
                                                canopy_z_min, canopy_z_max, gap_min)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScenarioConfig, kind, seed, layout_seed, agent_count, world_bounds, start_region,
                                                goal, goal_jitter, agent_spacing, lattice_vertical, position_jitter,
                                                min_agent_separation, start_clearance, slab, field, forest,
                                                custom_primitives)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NavGains, phi_n, phi_g, phi_o, tau, beta, sigma_s, k_nbr, phi_max,
                                                phi_s, projection_distance, coincidence_distance)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CameraIntrinsics, width, height, hfov, max_range)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PerceptionConfig, camera, resolution, window, inflation, sense_radius)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimConfig, dt, perception_period, alpha, max_duration, goal_radius,
                                                collision_radius, halt_on_collision, solid_obstacles, stuck_window, stuck_displacement,
                                                perception)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Variant, controller, mode)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentSpec, name, scenario, variants, runs, seed_base, gains, sim,
                                                output_dir, write_trajectories)

namespace detail {

/// Reject keys of `doc` that do not appear in `reference` (the serialized
/// default), recursing into nested objects and into arrays of objects.
inline void check_keys(const json& doc, const json& reference, const std::string& path) {
    if (doc.is_object() && reference.is_object()) {
        for (const auto& [key, value] : doc.items()) {
            const std::string here = path.empty() ? key : path + "." + key;
            if (!reference.contains(key)) throw ConfigError("unknown configuration key: " + here);
            check_keys(value, reference.at(key), here);
        }
    } else if (doc.is_array() && reference.is_array() && !reference.empty() && reference.front().is_object() &&
               !reference.front().contains("type")) {
        for (std::size_t i = 0; i < doc.size(); ++i) {
            check_keys(doc[i], reference.front(), path + "[" + std::to_string(i) + "]");
        }
    }
}

}  // namespace detail

inline json to_json_document(const ExperimentSpec& spec) { return json(spec); }

/// Parse and validate a spec. Throws ConfigError on any problem.
inline ExperimentSpec spec_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    detail::check_keys(doc, json(ExperimentSpec{}), "");
    ExperimentSpec spec;
    try {
        spec = doc.get<ExperimentSpec>();
        spec.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

inline std::string save_spec(const ExperimentSpec& spec) { return json(spec).dump(2) + "\n"; }

inline ExperimentSpec load_spec(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return spec_from_json(doc);
}

inline ExperimentSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_spec(ss.str());
}

namespace detail {

/// JSON Schema fragment inferred from a default value.
inline json schema_for(const json& value) {
    if (value.is_boolean()) return {{"type", "boolean"}, {"default", value}};
    if (value.is_number_integer()) return {{"type", "integer"}, {"default", value}};
    if (value.is_number()) return {{"type", "number"}, {"default", value}};
    if (value.is_string()) return {{"type", "string"}, {"default", value}};
    if (value.is_array()) {
        if (value.size() == 3 && value[0].is_number()) {
            return {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 3}, {"maxItems", 3},
                    {"default", value}};
        }
        json s{{"type", "array"}, {"default", value}};
        if (!value.empty()) s["items"] = schema_for(value.front());
        return s;
    }
    json props = json::object();
    for (const auto& [k, v] : value.items()) props[k] = schema_for(v);
    return {{"type", "object"}, {"properties", props}, {"additionalProperties", false}};
}

}  // namespace detail

/// JSON Schema for the experiment configuration, with defaults and the
/// accepted enumeration values filled in.
inline json config_schema() {
    json s = detail::schema_for(json(ExperimentSpec{}));
    s["$schema"] = "https://json-schema.org/draft/2020-12/schema";
    s["title"] = "goflock experiment configuration";
    auto& props = s["properties"];
    props["scenario"]["properties"]["kind"]["enum"] = {"single_slab", "random_field", "forest", "custom"};
    auto& variant = props["variants"]["items"]["properties"];
    variant["controller"]["enum"] = {"goflock", "baseline", "siphon"};
    variant["mode"]["enum"] = {"full", "none", "w2_only", "w34_only"};
    props["scenario"]["properties"]["custom_primitives"]["items"] = {
        {"type", "object"},
        {"description",
         "{\"type\":\"box\",\"min\":[..],\"max\":[..]} | {\"type\":\"cylinder\",\"cx\",\"cy\",\"radius\",\"z_min\","
         "\"z_max\"} | {\"type\":\"sphere\",\"center\":[..],\"radius\"}"}};
    return s;
}

}  // namespace goflock
