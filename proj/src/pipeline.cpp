#include "assetgen/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "assetgen/corpus.hpp"
#include "assetgen/errors.hpp"
#include "assetgen/image_io.hpp"
#include "assetgen/mesh_io.hpp"
#include "assetgen/primitives.hpp"
#include "assetgen/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace assetgen
{
    std::vector<CameraView> ViewSpec::cameras() const
    {
        return standard_views(count, radius, fov_deg, resolution);
    }

    void PipelineConfig::propagate_seed()
    {
        noise.seed = seed;
        refine.seed = seed;
        metrics.seed = seed;
    }

    std::string to_string(Command c)
    {
        switch (c)
        {
        case Command::Supervise: return "supervise";
        case Command::Refine: return "refine";
        case Command::Texture: return "texture";
        case Command::Eval: return "eval";
        case Command::Place: return "place";
        case Command::Pipeline: return "pipeline";
        case Command::Ablate: return "ablate";
        }
        return "unknown";
    }

    namespace
    {
        // Typed lookups into a parsed TOML document that remember which keys were read,
        // so anything left over can be reported as unknown with its location.
        class Reader
        {
        public:
            Reader(const toml::table& root, std::string source) : root_(root), source_(std::move(source)) {}

            [[noreturn]] void fail(const toml::node* node, const std::string& key, const std::string& what) const
            {
                std::ostringstream s;
                s << source_;
                if (node)
                {
                    s << ":" << node->source().begin.line << ":" << node->source().begin.column;
                }
                s << ": " << key << ": " << what;
                throw ConfigError(s.str());
            }

            const toml::node* find(const std::string& key)
            {
                known_.insert(key);
                const toml::node* n = &root_;
                std::string rest = key;
                while (n)
                {
                    const size_t dot = rest.find('.');
                    const std::string head = rest.substr(0, dot);
                    const toml::table* t = n->as_table();
                    n = t ? t->get(head) : nullptr;
                    if (dot == std::string::npos)
                    {
                        break;
                    }
                    rest = rest.substr(dot + 1);
                }
                return n;
            }

            double number(const std::string& key, double fallback, double lo, double hi)
            {
                const toml::node* n = find(key);
                if (!n)
                {
                    return fallback;
                }
                double v = 0.0;
                if (const auto* f = n->as_floating_point())
                {
                    v = f->get();
                }
                else if (const auto* i = n->as_integer())
                {
                    v = static_cast<double>(i->get());
                }
                else
                {
                    fail(n, key, "expected a number");
                }
                if (!(v >= lo && v <= hi))
                {
                    fail(n, key, "value " + fmt(v) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
                }
                return v;
            }

            int64_t integer(const std::string& key, int64_t fallback, int64_t lo, int64_t hi)
            {
                const toml::node* n = find(key);
                if (!n)
                {
                    return fallback;
                }
                const auto* i = n->as_integer();
                if (!i)
                {
                    fail(n, key, "expected an integer");
                }
                if (i->get() < lo || i->get() > hi)
                {
                    fail(n, key, "value " + std::to_string(i->get()) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
                }
                return i->get();
            }

            bool boolean(const std::string& key, bool fallback)
            {
                const toml::node* n = find(key);
                if (!n)
                {
                    return fallback;
                }
                const auto* b = n->as_boolean();
                if (!b)
                {
                    fail(n, key, "expected true or false");
                }
                return b->get();
            }

            std::string string(const std::string& key, const std::string& fallback)
            {
                const toml::node* n = find(key);
                if (!n)
                {
                    return fallback;
                }
                const auto* s = n->as_string();
                if (!s)
                {
                    fail(n, key, "expected a string");
                }
                return s->get();
            }

            Vec3 vec3(const std::string& key, const Vec3& fallback)
            {
                const toml::node* n = find(key);
                if (!n)
                {
                    return fallback;
                }
                const toml::array* a = n->as_array();
                if (!a || a->size() != 3)
                {
                    fail(n, key, "expected an array of 3 numbers");
                }
                Vec3 v;
                for (size_t k = 0; k < 3; ++k)
                {
                    const auto d = (*a)[k].value<double>();
                    if (!d || !std::isfinite(*d))
                    {
                        fail(a->get(k), key, "expected an array of 3 numbers");
                    }
                    v[static_cast<int>(k)] = *d;
                }
                return v;
            }

            // Locates the node for errors raised after reading (cross-field checks).
            const toml::node* node(const std::string& key) { return find(key); }

            void reject_unknown() const { walk(root_, ""); }

        private:
            static std::string fmt(double v)
            {
                std::ostringstream s;
                s << v;
                return s.str();
            }

            void walk(const toml::table& t, const std::string& prefix) const
            {
                for (auto&& [k, v] : t)
                {
                    const std::string key = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
                    if (known_.count(key))
                    {
                        continue;
                    }
                    const bool is_parent = std::any_of(known_.begin(), known_.end(), [&](const std::string& s) { return s.rfind(key + ".", 0) == 0; });
                    if (is_parent && v.is_table())
                    {
                        walk(*v.as_table(), key);
                        continue;
                    }
                    std::ostringstream s;
                    s << source_ << ":" << k.source().begin.line << ":" << k.source().begin.column << ": unknown key '" << key << "'";
                    throw ConfigError(s.str());
                }
            }

            const toml::table& root_;
            std::string source_;
            std::set<std::string> known_;
        };

        fs::path resolve(const std::string& p, const fs::path& base)
        {
            if (p.empty())
            {
                return {};
            }
            const fs::path path(p);
            return (path.is_absolute() ? path : base / path).lexically_normal();
        }
    } // namespace

    PipelineConfig parse_config(const std::string& text, const std::string& source_name, const fs::path& base_dir)
    {
        toml::table root;
        try
        {
            root = toml::parse(text, source_name);
        }
        catch (const toml::parse_error& e)
        {
            std::ostringstream s;
            s << source_name << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
            throw ConfigError(s.str());
        }
        Reader r(root, source_name);
        PipelineConfig c;
        constexpr double inf = std::numeric_limits<double>::infinity();
        c.seed = static_cast<uint64_t>(r.integer("seed", 0, 0, std::numeric_limits<int64_t>::max()));
        c.output = resolve(r.string("output", "runs"), base_dir);

        c.reference = resolve(r.string("reference.path", ""), base_dir);
        c.normalize_reference = r.boolean("reference.normalize", true);
        c.colorize_reference = r.boolean("reference.colorize", true);

        c.mesh = resolve(r.string("input.mesh", ""), base_dir);
        c.supervision = resolve(r.string("input.supervision", ""), base_dir);
        c.initial = resolve(r.string("input.initial", ""), base_dir);

        c.views.count = static_cast<int>(r.integer("views.count", 6, 4, 8));
        if (c.views.count == 5 || c.views.count == 7)
        {
            r.fail(r.node("views.count"), "views.count", "expected 4, 6 or 8");
        }
        c.views.radius = r.number("views.radius", 2.0, 1e-3, 1e3);
        c.views.fov_deg = r.number("views.fov_deg", 40.0, 1.0, 170.0);
        c.views.resolution = static_cast<int>(r.integer("views.resolution", 256, 8, 4096));
        c.views.color_scale = static_cast<int>(r.integer("views.color_scale", 2, 1, 8));

        c.noise.normal_sigma_deg = r.number("noise.normal_sigma_deg", 0.0, 0.0, 90.0);
        c.noise.mask_radius = static_cast<int>(r.integer("noise.mask_radius", 0, -64, 64));
        c.noise.color_shift = r.number("noise.color_shift", 0.0, 0.0, 1.0);

        const std::string mode = r.string("init.mode", "sphere");
        try
        {
            c.init = parse_init_mode(mode);
        }
        catch (const ConfigError& e)
        {
            r.fail(r.node("init.mode"), "init.mode", e.what());
        }

        RefinementConfig& f = c.refine;
        f.iterations = static_cast<int>(r.integer("refine.iterations", f.iterations, 1, 100000));
        f.lambda_mask = r.number("refine.lambda_mask", f.lambda_mask, 0.0, inf);
        f.lambda_lap = r.number("refine.lambda_lap", f.lambda_lap, 0.0, inf);
        f.step_size = r.number("refine.step_size", f.step_size, 1e-12, inf);
        const std::string opt = r.string("refine.optimizer", to_string(f.optimizer));
        try
        {
            f.optimizer = parse_optimizer(opt);
        }
        catch (const ConfigError& e)
        {
            r.fail(r.node("refine.optimizer"), "refine.optimizer", e.what());
        }
        f.beta1 = r.number("refine.beta1", f.beta1, 0.0, 0.999999999);
        f.beta2 = r.number("refine.beta2", f.beta2, 0.0, 0.999999999);
        f.epsilon = r.number("refine.epsilon", f.epsilon, 0.0, inf);
        f.inner_steps = static_cast<int>(r.integer("refine.inner_steps", f.inner_steps, 1, 100000));
        f.gradient_smoothing = r.number("refine.gradient_smoothing", f.gradient_smoothing, 0.0, inf);
        f.edge_length_start = r.number("refine.edge_length_start", f.edge_length_start, 1e-6, inf);
        f.edge_length_end = r.number("refine.edge_length_end", f.edge_length_end, 1e-6, inf);
        f.schedule_iterations = static_cast<int>(r.integer("refine.schedule_iterations", f.schedule_iterations, 1, 100000));
        f.remesh = r.boolean("refine.remesh", f.remesh);

        c.texture.seam_iterations = static_cast<int>(r.integer("texture.seam_iterations", c.texture.seam_iterations, 0, 1000));
        c.texture.depth_epsilon = r.number("texture.depth_epsilon", c.texture.depth_epsilon, 0.0, 1.0);

        c.metrics.samples = static_cast<size_t>(r.integer("metrics.samples", static_cast<int64_t>(c.metrics.samples), 1, 10000000));
        c.metrics.tau = r.number("metrics.tau", c.metrics.tau, 1e-12, inf);
        c.metrics.voxel_resolution = static_cast<int>(r.integer("metrics.voxel_resolution", c.metrics.voxel_resolution, 2, 1024));

        PlaceParams& p = c.place;
        p.scene = resolve(r.string("place.scene", ""), base_dir);
        p.asset = resolve(r.string("place.asset", ""), base_dir);
        p.asset_scale = r.number("place.asset_scale", p.asset_scale, 1e-9, inf);
        p.n_poses = static_cast<size_t>(r.integer("place.n_poses", static_cast<int64_t>(p.n_poses), 0, 100000));
        p.clearance = r.number("place.clearance", p.clearance, 0.0, inf);
        p.max_frames = static_cast<int>(r.integer("place.max_frames", p.max_frames, 0, 100000));
        p.ground_spacing = r.number("place.ground_spacing", p.ground_spacing, 1e-3, inf);
        CameraView& cam = p.camera;
        cam.azimuth_deg = r.number("place.camera.azimuth_deg", -90.0, -inf, inf);
        cam.elevation_deg = r.number("place.camera.elevation_deg", 35.0, -89.0, 89.0);
        cam.radius = r.number("place.camera.radius", 14.0, 1e-3, inf);
        cam.fov_deg = r.number("place.camera.fov_deg", 50.0, 1.0, 170.0);
        cam.width = static_cast<int>(r.integer("place.camera.width", 320, 8, 8192));
        cam.height = static_cast<int>(r.integer("place.camera.height", 240, 8, 8192));
        p.auto_look_at = !r.node("place.camera.look_at");
        cam.look_at = r.vec3("place.camera.look_at", Vec3::Zero());

        c.ablate_iterations = static_cast<int>(r.integer("ablate.iterations", c.ablate_iterations, 1, 100000));

        if (f.edge_length_end > f.edge_length_start)
        {
            r.fail(r.node("refine.edge_length_end"), "refine.edge_length_end", "must not exceed refine.edge_length_start");
        }
        r.reject_unknown();
        c.propagate_seed();
        return c;
    }

    PipelineConfig load_config(const fs::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw DataError("cannot open config file " + path.string());
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), path.string(), fs::absolute(path).parent_path());
    }

    namespace
    {
        toml::table resolved_table(const PipelineConfig& c, bool with_output)
        {
            const RefinementConfig& f = c.refine;
            const PlaceParams& p = c.place;
            toml::table camera{{"azimuth_deg", p.camera.azimuth_deg}, {"elevation_deg", p.camera.elevation_deg},
                {"radius", p.camera.radius}, {"fov_deg", p.camera.fov_deg}, {"width", p.camera.width}, {"height", p.camera.height}};
            if (!p.auto_look_at)
            {
                camera.insert("look_at", toml::array{p.camera.look_at.x(), p.camera.look_at.y(), p.camera.look_at.z()});
            }
            toml::table t{
                {"seed", static_cast<int64_t>(c.seed)},
                {"reference", toml::table{{"path", c.reference.string()}, {"normalize", c.normalize_reference}, {"colorize", c.colorize_reference}}},
                {"input", toml::table{{"mesh", c.mesh.string()}, {"supervision", c.supervision.string()}, {"initial", c.initial.string()}}},
                {"views", toml::table{{"count", c.views.count}, {"radius", c.views.radius}, {"fov_deg", c.views.fov_deg},
                              {"resolution", c.views.resolution}, {"color_scale", c.views.color_scale}}},
                {"noise", toml::table{{"normal_sigma_deg", c.noise.normal_sigma_deg}, {"mask_radius", c.noise.mask_radius},
                              {"color_shift", c.noise.color_shift}}},
                {"init", toml::table{{"mode", to_string(c.init)}}},
                {"refine", toml::table{{"iterations", f.iterations}, {"lambda_mask", f.lambda_mask}, {"lambda_lap", f.lambda_lap},
                               {"step_size", f.step_size}, {"optimizer", to_string(f.optimizer)}, {"beta1", f.beta1}, {"beta2", f.beta2},
                               {"epsilon", f.epsilon}, {"inner_steps", f.inner_steps}, {"gradient_smoothing", f.gradient_smoothing},
                               {"edge_length_start", f.edge_length_start}, {"edge_length_end", f.edge_length_end},
                               {"schedule_iterations", f.schedule_iterations}, {"remesh", f.remesh}}},
                {"texture", toml::table{{"seam_iterations", c.texture.seam_iterations}, {"depth_epsilon", c.texture.depth_epsilon}}},
                {"metrics", toml::table{{"samples", static_cast<int64_t>(c.metrics.samples)}, {"tau", c.metrics.tau},
                                {"voxel_resolution", c.metrics.voxel_resolution}}},
                {"place", toml::table{{"scene", p.scene.string()}, {"asset", p.asset.string()}, {"asset_scale", p.asset_scale},
                              {"n_poses", static_cast<int64_t>(p.n_poses)}, {"clearance", p.clearance}, {"max_frames", p.max_frames},
                              {"ground_spacing", p.ground_spacing}, {"camera", camera}}},
                {"ablate", toml::table{{"iterations", c.ablate_iterations}}},
            };
            if (with_output)
            {
                t.insert("output", c.output.string());
            }
            return t;
        }

        std::string toml_text(const toml::table& t)
        {
            std::ostringstream s;
            s << t << "\n";
            return s.str();
        }

        uint64_t fnv1a(const std::string& s)
        {
            uint64_t h = 1469598103934665603ull;
            for (unsigned char ch : s)
            {
                h = (h ^ ch) * 1099511628211ull;
            }
            return h;
        }

        void require_path(const fs::path& p, const std::string& what)
        {
            if (p.empty())
            {
                throw DataError(what + " is not set in the config");
            }
            if (!fs::exists(p))
            {
                throw DataError(what + " not found: " + p.string());
            }
        }

        void write_text(const fs::path& path, const std::string& text)
        {
            std::ofstream out(path, std::ios::binary);
            out << text;
            if (!out)
            {
                throw DataError("cannot write " + path.string());
            }
        }

        std::string json_text(const json& j)
        {
            return j.dump(2) + "\n";
        }

        json finite_or_null(double v)
        {
            return std::isfinite(v) ? json(v) : json(nullptr);
        }

        void log(const std::string& stage, const std::string& msg)
        {
            std::cerr << "[" << stage << "] " << msg << std::endl;
        }

        TriangleMesh load_reference(const PipelineConfig& c)
        {
            require_path(c.reference, "reference mesh");
            TriangleMesh ref = load_mesh(c.reference);
            if (c.normalize_reference)
            {
                ref = normalize_to_unit(ref).mesh;
            }
            if (c.colorize_reference && !ref.has_colors())
            {
                ref = with_procedural_colors(ref);
            }
            return ref;
        }

        SupervisionSet make_supervision(const PipelineConfig& c, const TriangleMesh* reference)
        {
            if (!c.supervision.empty())
            {
                log("supervise", "importing " + c.supervision.string());
                return import_supervision(c.supervision);
            }
            if (!reference)
            {
                throw DataError("supervision needs reference.path or input.supervision");
            }
            return render_supervision(*reference, c.views.cameras(), c.noise, c.views.color_scale);
        }

        TriangleMesh make_initial(const PipelineConfig& c, const TriangleMesh* reference)
        {
            if (!c.initial.empty())
            {
                return load_mesh(c.initial);
            }
            if (!reference)
            {
                throw DataError("initial mesh needs reference.path or input.initial");
            }
            TriangleMesh plain = *reference;
            plain.colors.clear();
            return make_coarse_initial(plain, c.init, c.seed);
        }

        TriangleMesh strip_colors(TriangleMesh m)
        {
            m.colors.clear();
            return m;
        }

        RefinementResult run_refinement(const PipelineConfig& c, const SupervisionSet& sup, const TriangleMesh& initial,
            const TriangleMesh* reference, const fs::path& run_dir)
        {
            const TriangleMesh plain_ref = reference ? strip_colors(*reference) : TriangleMesh{};
            RefineOptions options;
            options.reference = reference ? &plain_ref : nullptr;
            options.chamfer_samples = c.metrics.samples;
            const auto start = std::chrono::steady_clock::now();
            options.on_iteration = [&](const TriangleMesh&, const TraceRow& row) {
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                std::ostringstream s;
                s << "iteration " << row.iteration + 1 << "/" << c.refine.iterations << " loss " << row.loss.l_total << " faces "
                  << row.face_count;
                if (row.chamfer >= 0.0)
                {
                    s << " chamfer " << row.chamfer;
                }
                s << " (" << secs << " s)";
                log("refine", s.str());
            };
            RefinementResult r = refine(initial, sup, c.refine, options);
            save_mesh(initial, run_dir / "initial.ply");
            save_mesh(r.mesh, run_dir / "refined.ply");
            write_trace_csv(run_dir / "trace.csv", r.trace, reference != nullptr);
            return r;
        }

        struct TextureOutcome
        {
            TextureResult result;
            ImageReport fused;
            ImageReport naive;
        };

        TextureOutcome run_texture(const PipelineConfig& c, const TriangleMesh& mesh, const SupervisionSet& sup, const fs::path& run_dir)
        {
            TextureOutcome out;
            out.result = texture_pipeline(mesh, sup, c.texture);
            out.fused = evaluate_images(render_colors(out.result.mesh, sup), sup.colors);
            out.naive = evaluate_images(render_colors(naive_average_texture(mesh, sup), sup), sup.colors);
            SaveOptions options;
            options.vertex_view_ids = &out.result.assignment.view;
            save_mesh(out.result.mesh, run_dir / "textured.ply", options);
            const json report{{"vertex_count", out.result.mesh.vertex_count()}, {"visible_vertices", out.result.visible_vertices},
                {"psnr", finite_or_null(out.fused.psnr)}, {"ssim", out.fused.ssim}, {"naive_psnr", finite_or_null(out.naive.psnr)},
                {"naive_ssim", out.naive.ssim}, {"views", out.fused.views_evaluated}};
            write_text(run_dir / "texture_report.json", json_text(report));
            log("texture", "psnr " + std::to_string(out.fused.psnr) + " dB (naive " + std::to_string(out.naive.psnr) + " dB)");
            return out;
        }

        json geometry_json(const GeometryReport& g)
        {
            return {{"chamfer", g.chamfer}, {"volume_iou", finite_or_null(g.volume_iou)}, {"f_score", g.f_score}, {"tau", g.tau},
                {"samples", g.samples_used}};
        }

        std::string report_csv(const GeometryReport& g, const ImageReport* images)
        {
            std::ostringstream s;
            auto num = [&](double v) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.10g", v);
                s << buf;
            };
            s << "chamfer,volume_iou,f_score,tau,psnr,ssim\n";
            num(g.chamfer);
            s << ",";
            num(g.volume_iou);
            s << ",";
            num(g.f_score);
            s << ",";
            num(g.tau);
            s << ",";
            if (images)
            {
                num(images->psnr);
                s << ",";
                num(images->ssim);
            }
            else
            {
                s << ",";
            }
            s << "\n";
            return s.str();
        }

        Vec3 track_color(size_t k)
        {
            static const Vec3 palette[] = {Vec3(0.7, 0.1, 0.1), Vec3(0.1, 0.25, 0.7), Vec3(0.8, 0.7, 0.1), Vec3(0.2, 0.6, 0.2),
                Vec3(0.5, 0.2, 0.6), Vec3(0.9, 0.9, 0.9)};
            return palette[k % 6];
        }

        void append(TriangleMesh& dst, const TriangleMesh& src)
        {
            const int base = static_cast<int>(dst.vertices.size());
            dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
            dst.colors.insert(dst.colors.end(), src.colors.begin(), src.colors.end());
            for (const Face& f : src.faces)
            {
                dst.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
            }
        }

        TriangleMesh colored_ground(const SceneDescription& scene, double spacing)
        {
            const Vec2 pad = Vec2::Constant(4.0);
            TriangleMesh g = ground_mesh(scene.surface, {scene.region.min - pad, scene.region.max + pad}, spacing);
            g.colors.resize(g.vertex_count());
            for (size_t i = 0; i < g.vertex_count(); ++i)
            {
                const Vec3& v = g.vertices[i];
                const double stripe = 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * v.x()) * std::cos(2.0 * std::numbers::pi * v.y());
                g.colors[i] = Vec3::Constant(0.25 + 0.15 * stripe);
            }
            return g;
        }

        TriangleMesh obstacles_at(const SceneDescription& scene, int t)
        {
            TriangleMesh out;
            for (size_t k = 0; k < scene.tracks.size(); ++k)
            {
                const ObstacleTrack& tr = scene.tracks[k];
                if (t < tr.first_timestep || t > tr.last_timestep())
                {
                    continue;
                }
                const OrientedRect& r = tr.footprints[static_cast<size_t>(t - tr.first_timestep)];
                const double height = 1.5;
                TriangleMesh box = make_box(Vec3(r.half_extents.x(), r.half_extents.y(), 0.5 * height), 1);
                const Vec2 below = r.center.cwiseMax(scene.surface.domain_min()).cwiseMin(scene.surface.domain_max());
                const Vec3 shift(r.center.x(), r.center.y(), scene.surface.height_at(below) + 0.5 * height);
                const Mat3 rot = Eigen::AngleAxisd(r.yaw, Vec3::UnitZ()).toRotationMatrix();
                for (Vec3& v : box.vertices)
                {
                    v = rot * v + shift;
                }
                box.colors.assign(box.vertex_count(), track_color(k));
                append(out, box);
            }
            return out;
        }

        void run_place(const PipelineConfig& c, const TriangleMesh& asset_in, const std::string& asset_id, const fs::path& run_dir)
        {
            require_path(c.place.scene, "place.scene");
            const SceneDescription scene = load_scene(c.place.scene);
            TriangleMesh asset = asset_in;
            for (Vec3& v : asset.vertices)
            {
                v *= c.place.asset_scale;
            }
            if (!asset.has_colors())
            {
                asset.colors.assign(asset.vertex_count(), Vec3(0.9, 0.45, 0.05));
            }
            PlacementSampler sampler;
            sampler.clearance = c.place.clearance;
            const PlacementSearch search = find_collision_free(scene.surface, scene.tracks, snapped_box_footprint(asset, scene.surface),
                scene.region, c.place.n_poses, c.seed, sampler);
            std::vector<Placement> placements;
            TriangleMesh merged;
            for (const Pose2& pose : search.poses)
            {
                Placement p = snap_to_ground(asset, pose.xy, pose.yaw, scene.surface, asset_id);
                p.first_timestep = scene.first_timestep();
                p.last_timestep = scene.last_timestep();
                append(merged, posed_mesh(asset, p));
                placements.push_back(std::move(p));
            }
            write_text(run_dir / "placements.json", placements_to_json(placements));
            const json report{{"requested", c.place.n_poses}, {"placed", placements.size()}, {"saturated", search.saturated},
                {"attempts", search.attempts}, {"clearance", c.place.clearance}};
            write_text(run_dir / "place_report.json", json_text(report));
            log("place", std::to_string(placements.size()) + " of " + std::to_string(c.place.n_poses) + " placed" +
                             (search.saturated ? " (saturated)" : ""));

            CameraView cam = c.place.camera;
            if (c.place.auto_look_at)
            {
                const Vec2 mid = 0.5 * (scene.region.min + scene.region.max);
                cam.look_at = Vec3(mid.x(), mid.y(), scene.surface.height_at(mid));
            }
            cam.validate();
            const fs::path frames = run_dir / "frames";
            fs::create_directories(frames);
            const TriangleMesh ground = colored_ground(scene, c.place.ground_spacing);
            ViewMaps assets;
            if (merged.empty())
            {
                assets.width = cam.width;
                assets.height = cam.height;
                assets.mask = ImageF(cam.width, cam.height, 0.0);
                assets.depth = ImageF(cam.width, cam.height, std::numeric_limits<double>::infinity());
                assets.color = ImageRGB(cam.width, cam.height, Vec3::Zero());
            }
            else
            {
                assets = rasterize(merged, cam);
            }
            const int last = std::min(scene.last_timestep(), scene.first_timestep() + c.place.max_frames - 1);
            for (int t = scene.first_timestep(); t <= last; ++t)
            {
                TriangleMesh bg = ground;
                append(bg, obstacles_at(scene, t));
                const ViewMaps bm = rasterize(bg, cam);
                ImageRGB color(cam.width, cam.height, Vec3(0.55, 0.65, 0.8));
                for (size_t i = 0; i < color.size(); ++i)
                {
                    if (bm.covered(i))
                    {
                        color[i] = bm.color[i];
                    }
                }
                const ImageRGB out = composite(color, bm.depth, assets);
                ImageF depth = bm.depth;
                for (size_t i = 0; i < depth.size(); ++i)
                {
                    depth[i] = std::min(depth[i], assets.depth[i]);
                }
                char name[64];
                std::snprintf(name, sizeof name, "frame_%04d", t);
                write_png_srgb(frames / (std::string(name) + ".png"), out);
                write_pfm(frames / (std::string(name) + "_depth.pfm"), depth);
            }
        }
    } // namespace

    std::string to_toml(const PipelineConfig& config)
    {
        return toml_text(resolved_table(config, true));
    }

    void validate_for(const PipelineConfig& c, Command command)
    {
        c.refine.validate();
        c.noise.validate();
        const bool needs_reference = command == Command::Supervise || command == Command::Eval || command == Command::Pipeline ||
                                     command == Command::Ablate || (command == Command::Refine && (c.supervision.empty() || c.initial.empty())) ||
                                     (command == Command::Texture && c.supervision.empty());
        if (needs_reference)
        {
            require_path(c.reference, "reference mesh (reference.path)");
        }
        if (!c.supervision.empty())
        {
            require_path(c.supervision, "supervision directory (input.supervision)");
        }
        if (!c.initial.empty())
        {
            require_path(c.initial, "initial mesh (input.initial)");
        }
        if (command == Command::Texture || command == Command::Eval)
        {
            require_path(c.mesh, "input mesh (input.mesh)");
        }
        if (command == Command::Place)
        {
            require_path(c.place.scene, "scene file (place.scene)");
            if (c.place.asset.empty())
            {
                require_path(c.reference, "asset (place.asset or reference.path)");
            }
        }
        if (!c.place.asset.empty())
        {
            require_path(c.place.asset, "asset mesh (place.asset)");
        }
        if (command == Command::Pipeline && !c.place.scene.empty())
        {
            require_path(c.place.scene, "scene file (place.scene)");
        }
    }

    fs::path make_run_dir(const fs::path& base, Command command)
    {
        const std::time_t now = std::time(nullptr);
        std::tm utc{};
        gmtime_r(&now, &utc);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &utc);
        const std::string stem = to_string(command) + "-" + stamp;
        fs::create_directories(base);
        for (int k = 0;; ++k)
        {
            const fs::path dir = base / (k == 0 ? stem : stem + "-" + std::to_string(k));
            if (fs::create_directory(dir))
            {
                return dir;
            }
        }
    }

    void write_run_metadata(const fs::path& run_dir, const PipelineConfig& config, Command command)
    {
        const std::string resolved = toml_text(resolved_table(config, false));
        write_text(run_dir / "config.toml", resolved);
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(resolved)));
        const json meta{{"tool", "assetgen"}, {"version", kToolVersion}, {"command", to_string(command)}, {"config_hash", hash}};
        write_text(run_dir / "run.json", json_text(meta));
    }

    void cmd_supervise(const PipelineConfig& c, const fs::path& run_dir)
    {
        const TriangleMesh ref = load_reference(c);
        const SupervisionSet sup = make_supervision(c, &ref);
        export_supervision(sup, run_dir / "supervision");
        save_mesh(ref, run_dir / "reference.ply");
        log("supervise", std::to_string(sup.views.size()) + " views written");
    }

    void cmd_refine(const PipelineConfig& c, const fs::path& run_dir)
    {
        std::optional<TriangleMesh> ref;
        if (!c.reference.empty())
        {
            ref = load_reference(c);
        }
        const SupervisionSet sup = make_supervision(c, ref ? &*ref : nullptr);
        const TriangleMesh initial = make_initial(c, ref ? &*ref : nullptr);
        const RefinementResult r = run_refinement(c, sup, initial, ref ? &*ref : nullptr, run_dir);
        json summary{{"iterations", r.trace.size()}, {"vertex_count", r.mesh.vertex_count()}, {"face_count", r.mesh.face_count()},
            {"final_loss", r.trace.back().loss.l_total}};
        if (ref)
        {
            const TriangleMesh plain = strip_colors(*ref);
            summary["initial_chamfer"] = chamfer_distance(initial, plain, c.metrics.samples, c.metrics.seed);
            summary["chamfer"] = r.trace.back().chamfer;
        }
        write_text(run_dir / "refine_report.json", json_text(summary));
    }

    void cmd_texture(const PipelineConfig& c, const fs::path& run_dir)
    {
        std::optional<TriangleMesh> ref;
        if (c.supervision.empty())
        {
            ref = load_reference(c);
            if (!ref->has_colors())
            {
                throw DataError("texturing needs a colored reference or supervision with color images");
            }
        }
        const SupervisionSet sup = make_supervision(c, ref ? &*ref : nullptr);
        run_texture(c, load_mesh(c.mesh), sup, run_dir);
    }

    void cmd_eval(const PipelineConfig& c, const fs::path& run_dir)
    {
        const TriangleMesh ref = load_reference(c);
        const TriangleMesh mesh = load_mesh(c.mesh);
        const GeometryReport g = evaluate_geometry(strip_colors(mesh), strip_colors(ref), c.metrics);
        json report = geometry_json(g);
        std::optional<ImageReport> images;
        if (mesh.has_colors() && ref.has_colors())
        {
            const SupervisionSet sup = render_supervision(ref, c.views.cameras(), NoiseSpec{}, c.views.color_scale);
            images = evaluate_images(render_colors(mesh, sup), sup.colors);
            report["psnr"] = finite_or_null(images->psnr);
            report["ssim"] = images->ssim;
        }
        write_text(run_dir / "report.json", json_text(report));
        write_text(run_dir / "report.csv", report_csv(g, images ? &*images : nullptr));
        log("eval", "chamfer " + std::to_string(g.chamfer) + " f-score " + std::to_string(g.f_score));
    }

    void cmd_place(const PipelineConfig& c, const fs::path& run_dir)
    {
        const fs::path asset_path = c.place.asset.empty() ? c.reference : c.place.asset;
        TriangleMesh asset = c.place.asset.empty() ? load_reference(c) : load_mesh(asset_path);
        run_place(c, asset, asset_path.stem().string(), run_dir);
    }

    void cmd_pipeline(const PipelineConfig& c, const fs::path& run_dir)
    {
        const TriangleMesh ref = load_reference(c);
        const SupervisionSet sup = make_supervision(c, &ref);
        export_supervision(sup, run_dir / "supervision");
        save_mesh(ref, run_dir / "reference.ply");
        const TriangleMesh initial = make_initial(c, &ref);
        const RefinementResult r = run_refinement(c, sup, initial, &ref, run_dir);

        json report;
        const TriangleMesh plain = strip_colors(ref);
        report["initial_chamfer"] = chamfer_distance(initial, plain, c.metrics.samples, c.metrics.seed);
        const GeometryReport g = evaluate_geometry(r.mesh, plain, c.metrics);
        report.update(geometry_json(g));
        std::optional<ImageReport> images;
        TriangleMesh asset = r.mesh;
        if (sup.has_colors())
        {
            const TextureOutcome t = run_texture(c, r.mesh, sup, run_dir);
            images = t.fused;
            report["psnr"] = finite_or_null(t.fused.psnr);
            report["ssim"] = t.fused.ssim;
            report["naive_psnr"] = finite_or_null(t.naive.psnr);
            asset = t.result.mesh;
        }
        report["iterations"] = r.trace.size();
        write_text(run_dir / "report.json", json_text(report));
        write_text(run_dir / "report.csv", report_csv(g, images ? &*images : nullptr));
        log("eval", "chamfer " + std::to_string(report["initial_chamfer"].get<double>()) + " -> " + std::to_string(g.chamfer));

        if (!c.place.scene.empty())
        {
            const TriangleMesh placed = c.place.asset.empty() ? asset : load_mesh(c.place.asset);
            run_place(c, placed, c.place.asset.empty() ? "refined" : c.place.asset.stem().string(), run_dir);
        }
    }

    std::vector<AblationRow> ablate_iterations(const TriangleMesh& reference, const SupervisionSet& supervision,
        const TriangleMesh& initial, const PipelineConfig& c)
    {
        const TriangleMesh plain = strip_colors(reference);
        std::vector<AblationRow> rows;
        auto score = [&](int it, const TriangleMesh& m) {
            AblationRow row;
            row.iteration = it;
            row.chamfer = chamfer_distance(m, plain, c.metrics.samples, c.metrics.seed);
            row.f_score = f_score(m, plain, c.metrics.tau, c.metrics.samples, c.metrics.seed);
            rows.push_back(row);
            log("ablate", "iteration " + std::to_string(it) + " chamfer " + std::to_string(row.chamfer));
        };
        score(0, initial);
        RefinementConfig rc = c.refine;
        rc.iterations = c.ablate_iterations;
        RefineOptions options;
        options.on_iteration = [&](const TriangleMesh& m, const TraceRow& row) { score(row.iteration + 1, m); };
        refine(initial, supervision, rc, options);
        return rows;
    }

    std::string ablation_csv(const std::vector<AblationRow>& rows)
    {
        std::ostringstream s;
        s << "iteration,chamfer,f_score\n";
        char buf[96];
        for (const AblationRow& r : rows)
        {
            std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g\n", r.iteration, r.chamfer, r.f_score);
            s << buf;
        }
        return s.str();
    }

    void cmd_ablate_iterations(const PipelineConfig& c, const fs::path& run_dir)
    {
        const TriangleMesh ref = load_reference(c);
        const SupervisionSet sup = make_supervision(c, &ref);
        const TriangleMesh initial = make_initial(c, &ref);
        write_text(run_dir / "ablation.csv", ablation_csv(ablate_iterations(ref, sup, initial, c)));
    }

    void run_command(Command command, const PipelineConfig& config, const fs::path& run_dir)
    {
        switch (command)
        {
        case Command::Supervise: cmd_supervise(config, run_dir); break;
        case Command::Refine: cmd_refine(config, run_dir); break;
        case Command::Texture: cmd_texture(config, run_dir); break;
        case Command::Eval: cmd_eval(config, run_dir); break;
        case Command::Place: cmd_place(config, run_dir); break;
        case Command::Pipeline: cmd_pipeline(config, run_dir); break;
        case Command::Ablate: cmd_ablate_iterations(config, run_dir); break;
        }
    }
} // namespace assetgen
