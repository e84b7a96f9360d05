#include "fiberplan/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fiberplan {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error("scenario: " + where + ": " + what);
}

void expect_keys(const json& obj, const std::string& where,
                 const std::set<std::string>& required, const std::set<std::string>& optional) {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!required.count(key) && !optional.count(key)) fail(where, "unknown key '" + key + "'");
    }
    for (const std::string& key : required)
        if (!obj.contains(key)) fail(where, "missing key '" + key + "'");
}

Point2 parse_point(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail(where, "expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

ShapePrimitive parse_primitive(const json& j, const std::string& where) {
    ShapePrimitive p;
    const std::string type = j.value("type", "");
    if (type == "rectangle") {
        expect_keys(j, where, {"type", "width", "height"}, {"center", "corner_radius"});
        p.kind = ShapePrimitive::Kind::Rectangle;
        p.width = j.at("width").get<double>();
        p.height = j.at("height").get<double>();
    } else if (type == "trapezoid") {
        expect_keys(j, where, {"type", "short_side", "long_side", "height"},
                    {"center", "axis", "corner_radius"});
        p.kind = ShapePrimitive::Kind::Trapezoid;
        p.short_side = j.at("short_side").get<double>();
        p.long_side = j.at("long_side").get<double>();
        p.height = j.at("height").get<double>();
        if (j.contains("axis")) p.axis = parse_point(j.at("axis"), where + ".axis");
    } else if (type == "circle") {
        expect_keys(j, where, {"type", "radius"}, {"center", "corner_radius"});
        p.kind = ShapePrimitive::Kind::Circle;
        p.radius = j.at("radius").get<double>();
    } else if (type == "polygon") {
        expect_keys(j, where, {"type", "points"}, {"center", "corner_radius"});
        p.kind = ShapePrimitive::Kind::Polygon;
        for (std::size_t i = 0; i < j.at("points").size(); ++i)
            p.points.push_back(parse_point(j.at("points")[i], where + ".points"));
    } else {
        fail(where, "unknown primitive type '" + type + "'");
    }
    if (j.contains("center")) p.center = parse_point(j.at("center"), where + ".center");
    p.corner_radius = j.value("corner_radius", 0.0);
    return p;
}

json primitive_to_json(const ShapePrimitive& p) {
    json j;
    switch (p.kind) {
        case ShapePrimitive::Kind::Rectangle:
            j["type"] = "rectangle";
            j["width"] = p.width;
            j["height"] = p.height;
            break;
        case ShapePrimitive::Kind::Trapezoid:
            j["type"] = "trapezoid";
            j["short_side"] = p.short_side;
            j["long_side"] = p.long_side;
            j["height"] = p.height;
            j["axis"] = {p.axis.x, p.axis.y};
            break;
        case ShapePrimitive::Kind::Circle:
            j["type"] = "circle";
            j["radius"] = p.radius;
            break;
        case ShapePrimitive::Kind::Polygon:
            j["type"] = "polygon";
            j["points"] = json::array();
            for (const Point2& v : p.points) j["points"].push_back({v.x, v.y});
            break;
    }
    j["center"] = {p.center.x, p.center.y};
    j["corner_radius"] = p.corner_radius;
    return j;
}

DofMask parse_mask(const std::string& s, const std::string& where) {
    if (s == "x") return DofMask::X;
    if (s == "y") return DofMask::Y;
    if (s == "both") return DofMask::Both;
    fail(where, "mask must be x, y or both");
}

std::string mask_to_string(DofMask m) {
    switch (m) {
        case DofMask::X: return "x";
        case DofMask::Y: return "y";
        case DofMask::Both: return "both";
    }
    return "both";
}

OffsetSide parse_side(const std::string& s, const std::string& where) {
    if (s == "inner") return OffsetSide::Inner;
    if (s == "outer") return OffsetSide::Outer;
    if (s == "all_walls") return OffsetSide::AllWalls;
    fail(where, "concentric type must be inner, outer or all_walls");
}

std::string side_to_string(OffsetSide s) {
    switch (s) {
        case OffsetSide::Inner: return "inner";
        case OffsetSide::Outer: return "outer";
        case OffsetSide::AllWalls: return "all_walls";
    }
    return "inner";
}

} // namespace

std::string Strategy::label() const {
    switch (kind) {
        case StrategyKind::Optimized: return "optimized";
        case StrategyKind::Greedy: return "greedy";
        case StrategyKind::FieldOptGreedy: return "field_opt_greedy";
        case StrategyKind::Concentric:
            return "concentric_" + side_to_string(concentric_type) + "_" + std::to_string(rings);
    }
    return "optimized";
}

void ScenarioFile::validate() const {
    material.validate();
    objective.validate();
    plan.validate();
    if (load_cases.empty()) fail("load_cases", "at least one load case required");
    for (const LoadCase& lc : load_cases)
        if (lc.dirichlet.empty()) fail("load_cases", "empty load case");
    if (mesh_target_edge <= 0) fail("plan.mesh_target_edge_mm", "must be positive");
    if (subsequence_target_edge && *subsequence_target_edge <= 0)
        fail("plan.subsequence_target_edge_mm", "must be positive");
    if (field_spacing <= 0) fail("field.spacing_mm", "must be positive");
    if (strategy.kind == StrategyKind::Concentric && strategy.rings < 1)
        fail("strategy.rings", "must be >= 1");
}

ScenarioFile parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("scenario: invalid JSON: ") + e.what());
    }
    expect_keys(root, "root", {"name", "seed", "shape", "material", "load_cases", "strategy"},
                {"objective", "plan", "field", "output_dir"});

    ScenarioFile s;
    s.name = root.at("name").get<std::string>();
    s.seed = root.at("seed").get<std::uint64_t>();

    const json& shape = root.at("shape");
    expect_keys(shape, "shape", {"outer"}, {"holes"});
    s.shape.outer = parse_primitive(shape.at("outer"), "shape.outer");
    if (shape.contains("holes")) {
        for (std::size_t i = 0; i < shape.at("holes").size(); ++i)
            s.shape.holes.push_back(
                parse_primitive(shape.at("holes")[i], "shape.holes[" + std::to_string(i) + "]"));
    }

    const json& mat = root.at("material");
    expect_keys(mat, "material", {},
                {"E_plastic_GPa", "E_fiber_GPa", "nu", "w_fiber_mm", "h_object_mm", "h_fiber_mm",
                 "l_min_mm", "d_min_mm"});
    s.material.E_plastic = mat.value("E_plastic_GPa", s.material.E_plastic);
    s.material.E_fiber = mat.value("E_fiber_GPa", s.material.E_fiber);
    s.material.nu = mat.value("nu", s.material.nu);
    s.material.w_fiber = mat.value("w_fiber_mm", s.material.w_fiber);
    s.material.h_object = mat.value("h_object_mm", s.material.h_object);
    s.material.h_fiber = mat.value("h_fiber_mm", s.material.h_fiber);
    s.material.l_min = mat.value("l_min_mm", s.material.l_min);
    s.material.d_min = mat.value("d_min_mm", s.material.d_min);

    for (std::size_t ci = 0; ci < root.at("load_cases").size(); ++ci) {
        const json& jc = root.at("load_cases")[ci];
        const std::string where = "load_cases[" + std::to_string(ci) + "]";
        if (!jc.is_array()) fail(where, "expected an array of dirichlet regions");
        LoadCase lc;
        for (std::size_t ri = 0; ri < jc.size(); ++ri) {
            const json& jr = jc[ri];
            expect_keys(jr, where, {"tag", "displacement"}, {"mask"});
            DirichletRegion region;
            region.tag = jr.at("tag").get<std::string>();
            region.displacement = parse_point(jr.at("displacement"), where + ".displacement");
            region.mask = parse_mask(jr.value("mask", "both"), where + ".mask");
            lc.dirichlet.push_back(region);
        }
        s.load_cases.push_back(std::move(lc));
    }

    if (root.contains("objective")) {
        const json& jo = root.at("objective");
        expect_keys(jo, "objective", {}, {"w_lap", "w_min_l", "w_bdy"});
        s.objective.w_lap = jo.value("w_lap", s.objective.w_lap);
        s.objective.w_min_l = jo.value("w_min_l", s.objective.w_min_l);
        s.objective.w_bdy = jo.value("w_bdy", s.objective.w_bdy);
    }

    const json& js = root.at("strategy");
    expect_keys(js, "strategy", {"kind"}, {"type", "rings"});
    const std::string kind = js.at("kind").get<std::string>();
    if (kind == "optimized") s.strategy.kind = StrategyKind::Optimized;
    else if (kind == "greedy") s.strategy.kind = StrategyKind::Greedy;
    else if (kind == "field_opt_greedy") s.strategy.kind = StrategyKind::FieldOptGreedy;
    else if (kind == "concentric") s.strategy.kind = StrategyKind::Concentric;
    else fail("strategy.kind", "unknown strategy '" + kind + "'");
    if (js.contains("type")) s.strategy.concentric_type = parse_side(js.at("type"), "strategy.type");
    s.strategy.rings = js.value("rings", 1);

    if (root.contains("plan")) {
        const json& jp = root.at("plan");
        expect_keys(jp, "plan", {},
                    {"n_paths", "max_iterations", "per_round_iterations", "gradient_tolerance",
                     "upsample_rounds", "mesh_target_edge_mm", "subsequence_target_edge_mm",
                     "max_subsequence_candidates", "walk"});
        s.plan.n_paths = jp.value("n_paths", s.plan.n_paths);
        s.plan.max_iterations = jp.value("max_iterations", s.plan.max_iterations);
        s.plan.per_round_iterations = jp.value("per_round_iterations", s.plan.per_round_iterations);
        s.plan.gradient_tolerance = jp.value("gradient_tolerance", s.plan.gradient_tolerance);
        s.plan.upsample_rounds = jp.value("upsample_rounds", s.plan.upsample_rounds);
        s.mesh_target_edge = jp.value("mesh_target_edge_mm", s.mesh_target_edge);
        if (jp.contains("subsequence_target_edge_mm") &&
            !jp.at("subsequence_target_edge_mm").is_null())
            s.subsequence_target_edge = jp.at("subsequence_target_edge_mm").get<double>();
        s.max_subsequence_candidates =
            jp.value("max_subsequence_candidates", s.max_subsequence_candidates);
        if (jp.contains("walk")) {
            const json& jw = jp.at("walk");
            expect_keys(jw, "plan.walk", {},
                        {"step_mm", "clearance_mm", "max_retries", "rotation_range_rad",
                         "max_length_mm", "restarts", "downsample_keep"});
            s.plan.walk.step = jw.value("step_mm", s.plan.walk.step);
            s.plan.walk.clearance = jw.value("clearance_mm", s.plan.walk.clearance);
            s.plan.walk.max_retries = jw.value("max_retries", s.plan.walk.max_retries);
            s.plan.walk.rotation_range = jw.value("rotation_range_rad", s.plan.walk.rotation_range);
            s.plan.walk.max_length = jw.value("max_length_mm", s.plan.walk.max_length);
            s.plan.walk.restarts = jw.value("restarts", s.plan.walk.restarts);
            s.plan.walk.downsample_keep = jw.value("downsample_keep", s.plan.walk.downsample_keep);
        }
    }
    s.plan.rng_seed = s.seed;
    s.plan.walk.rng_seed = s.seed;

    if (root.contains("field")) {
        const json& jf = root.at("field");
        expect_keys(jf, "field", {}, {"alpha_stress", "alpha_smooth", "spacing_mm"});
        s.field.alpha_stress = jf.value("alpha_stress", s.field.alpha_stress);
        s.field.alpha_smooth = jf.value("alpha_smooth", s.field.alpha_smooth);
        s.field_spacing = jf.value("spacing_mm", s.field_spacing);
    }
    s.output_dir = root.value("output_dir", s.output_dir);
    s.validate();
    return s;
}

ScenarioFile load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("scenario: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string serialize_scenario(const ScenarioFile& s) {
    json root;
    root["name"] = s.name;
    root["seed"] = s.seed;
    root["shape"]["outer"] = primitive_to_json(s.shape.outer);
    root["shape"]["holes"] = json::array();
    for (const ShapePrimitive& h : s.shape.holes)
        root["shape"]["holes"].push_back(primitive_to_json(h));
    root["material"] = {{"E_plastic_GPa", s.material.E_plastic},
                        {"E_fiber_GPa", s.material.E_fiber},
                        {"nu", s.material.nu},
                        {"w_fiber_mm", s.material.w_fiber},
                        {"h_object_mm", s.material.h_object},
                        {"h_fiber_mm", s.material.h_fiber},
                        {"l_min_mm", s.material.l_min},
                        {"d_min_mm", s.material.d_min}};
    root["load_cases"] = json::array();
    for (const LoadCase& lc : s.load_cases) {
        json jc = json::array();
        for (const DirichletRegion& r : lc.dirichlet)
            jc.push_back({{"tag", r.tag},
                          {"displacement", {r.displacement.x, r.displacement.y}},
                          {"mask", mask_to_string(r.mask)}});
        root["load_cases"].push_back(jc);
    }
    root["objective"] = {{"w_lap", s.objective.w_lap},
                         {"w_min_l", s.objective.w_min_l},
                         {"w_bdy", s.objective.w_bdy}};
    json js;
    switch (s.strategy.kind) {
        case StrategyKind::Optimized: js["kind"] = "optimized"; break;
        case StrategyKind::Greedy: js["kind"] = "greedy"; break;
        case StrategyKind::FieldOptGreedy: js["kind"] = "field_opt_greedy"; break;
        case StrategyKind::Concentric:
            js["kind"] = "concentric";
            js["type"] = side_to_string(s.strategy.concentric_type);
            js["rings"] = s.strategy.rings;
            break;
    }
    root["strategy"] = js;
    root["plan"] = {{"n_paths", s.plan.n_paths},
                    {"max_iterations", s.plan.max_iterations},
                    {"per_round_iterations", s.plan.per_round_iterations},
                    {"gradient_tolerance", s.plan.gradient_tolerance},
                    {"upsample_rounds", s.plan.upsample_rounds},
                    {"mesh_target_edge_mm", s.mesh_target_edge},
                    {"max_subsequence_candidates", s.max_subsequence_candidates},
                    {"walk",
                     {{"step_mm", s.plan.walk.step},
                      {"clearance_mm", s.plan.walk.clearance},
                      {"max_retries", s.plan.walk.max_retries},
                      {"rotation_range_rad", s.plan.walk.rotation_range},
                      {"max_length_mm", s.plan.walk.max_length},
                      {"restarts", s.plan.walk.restarts},
                      {"downsample_keep", s.plan.walk.downsample_keep}}}};
    if (s.subsequence_target_edge)
        root["plan"]["subsequence_target_edge_mm"] = *s.subsequence_target_edge;
    root["field"] = {{"alpha_stress", s.field.alpha_stress},
                     {"alpha_smooth", s.field.alpha_smooth},
                     {"spacing_mm", s.field_spacing}};
    root["output_dir"] = s.output_dir;
    return root.dump(2) + "\n";
}

Evaluator make_evaluator(const ScenarioFile& s) {
    Domain domain = build_domain(s.shape);
    Mesh opt_mesh = mesh(domain, s.mesh_target_edge);
    std::optional<Mesh> subseq;
    if (s.subsequence_target_edge) subseq = mesh(domain, *s.subsequence_target_edge);
    Evaluator ev(std::move(domain), std::move(opt_mesh), s.material, s.load_cases, s.objective,
                 std::move(subseq));
    ev.max_subsequence_candidates = s.max_subsequence_candidates;
    ev.length_budget = s.plan.walk.max_length;
    return ev;
}

} // namespace fiberplan
