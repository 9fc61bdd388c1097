#include "assetgen/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "assetgen/errors.hpp"
#include "assetgen/parallel.hpp"

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace assetgen
{
    using BgPoint = bg::model::point<double, 3, bg::cs::cartesian>;

    struct PointIndex::Tree
    {
        bgi::rtree<BgPoint, bgi::rstar<16>> rtree;
    };

    namespace
    {
        BgPoint to_bg(const Vec3& p) { return BgPoint(p.x(), p.y(), p.z()); }

        void require_surface(const TriangleMesh& m, const char* which)
        {
            if (m.faces.empty() || surface_area(m) <= 0.0)
            {
                throw DataError(std::string("mesh ") + which + " has no surface to sample");
            }
        }

        std::vector<double> nearest_distances(const std::vector<Vec3>& queries, const PointIndex& index)
        {
            std::vector<double> out(queries.size());
            parallel_for(queries.size(), [&](size_t i) { out[i] = index.nearest_distance(queries[i]); });
            return out;
        }

        double mean(const std::vector<double>& v)
        {
            double s = 0.0;
            for (double x : v)
            {
                s += x;
            }
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        }

        double hit_fraction(const std::vector<double>& distances, double tau)
        {
            size_t hits = 0;
            for (double d : distances)
            {
                hits += d <= tau ? 1 : 0;
            }
            return distances.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(distances.size());
        }

        double harmonic(double precision, double recall)
        {
            return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        }

        struct SampledPair
        {
            std::vector<double> a_to_b;
            std::vector<double> b_to_a;
        };

        SampledPair sample_pair(const TriangleMesh& a, const TriangleMesh& b, size_t samples, uint64_t seed)
        {
            require_surface(a, "a");
            require_surface(b, "b");
            const std::vector<Vec3> pa = sample_surface(a, samples, seed);
            const std::vector<Vec3> pb = sample_surface(b, samples, seed);
            return {nearest_distances(pa, PointIndex(pb)), nearest_distances(pb, PointIndex(pa))};
        }

        // Edge function of p against the directed edge (a, b), evaluated with the endpoints
        // in a canonical order so both triangles sharing an edge get exactly opposite values.
        double edge_function(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p)
        {
            const bool swap = std::tie(b.x(), b.y()) < std::tie(a.x(), a.y());
            const Eigen::Vector2d& s = swap ? b : a;
            const Eigen::Vector2d& t = swap ? a : b;
            const double w = (t.x() - s.x()) * (p.y() - s.y()) - (t.y() - s.y()) * (p.x() - s.x());
            return swap ? -w : w;
        }

        // Points exactly on an edge belong to exactly one of the two triangles sharing it.
        bool owns_edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
        {
            const double dy = b.y() - a.y();
            return dy < 0.0 || (dy == 0.0 && b.x() - a.x() > 0.0);
        }

        bool inside_edge(double w, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
        {
            return w > 0.0 || (w == 0.0 && owns_edge(a, b));
        }
    } // namespace

    std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t count, uint64_t seed)
    {
        std::vector<double> cumulative(mesh.faces.size());
        double total = 0.0;
        for (size_t f = 0; f < mesh.faces.size(); ++f)
        {
            total += face_area(mesh, static_cast<int>(f));
            cumulative[f] = total;
        }
        std::vector<Vec3> out;
        if (total <= 0.0)
        {
            return out;
        }
        out.reserve(count);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (size_t i = 0; i < count; ++i)
        {
            const double pick = u01(rng) * total;
            const size_t f = std::min<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                mesh.faces.size() - 1);
            const double s = std::sqrt(u01(rng));
            const double t = u01(rng);
            const Face& face = mesh.faces[f];
            out.push_back((1.0 - s) * mesh.vertices[face[0]] + s * (1.0 - t) * mesh.vertices[face[1]] + s * t * mesh.vertices[face[2]]);
        }
        return out;
    }

    PointIndex::PointIndex(const std::vector<Vec3>& points) : tree_(std::make_unique<Tree>()), size_(points.size())
    {
        std::vector<BgPoint> pts;
        pts.reserve(points.size());
        for (const Vec3& p : points)
        {
            pts.push_back(to_bg(p));
        }
        tree_->rtree = bgi::rtree<BgPoint, bgi::rstar<16>>(pts.begin(), pts.end());
    }

    PointIndex::~PointIndex() = default;
    PointIndex::PointIndex(PointIndex&&) noexcept = default;
    PointIndex& PointIndex::operator=(PointIndex&&) noexcept = default;

    double PointIndex::nearest_distance(const Vec3& query) const
    {
        if (size_ == 0)
        {
            return std::numeric_limits<double>::infinity();
        }
        std::vector<BgPoint> hit;
        tree_->rtree.query(bgi::nearest(to_bg(query), 1), std::back_inserter(hit));
        const Vec3 q(bg::get<0>(hit[0]), bg::get<1>(hit[0]), bg::get<2>(hit[0]));
        return (q - query).norm();
    }

    double chamfer_distance(const TriangleMesh& a, const TriangleMesh& b, size_t samples, uint64_t seed)
    {
        const SampledPair d = sample_pair(a, b, samples, seed);
        return 0.5 * (mean(d.a_to_b) + mean(d.b_to_a));
    }

    double f_score(const TriangleMesh& a, const TriangleMesh& b, double tau, size_t samples, uint64_t seed)
    {
        if (!(tau > 0.0))
        {
            throw ConfigError("f-score threshold must be positive");
        }
        const SampledPair d = sample_pair(a, b, samples, seed);
        return harmonic(hit_fraction(d.a_to_b, tau), hit_fraction(d.b_to_a, tau));
    }

    std::vector<uint8_t> voxelize(const TriangleMesh& mesh, const Vec3& lo, const Vec3& hi, int resolution)
    {
        if (resolution < 1)
        {
            throw ConfigError("voxel resolution must be at least 1");
        }
        const int n = resolution;
        const Vec3 cell = (hi - lo) / static_cast<double>(n);
        auto center = [&](int axis, int i) { return lo[axis] + (i + 0.5) * cell[axis]; };
        const size_t total = static_cast<size_t>(n) * n * n;
        std::vector<uint8_t> votes(total, 0);

        for (int axis = 0; axis < 3; ++axis)
        {
            const int u = (axis + 1) % 3;
            const int v = (axis + 2) % 3;
            // hits[j + n*k]: ray through centers (u_j, v_k) parallel to `axis`
            std::vector<std::vector<double>> hits(static_cast<size_t>(n) * n);
            for (const Face& f : mesh.faces)
            {
                std::array<Eigen::Vector2d, 3> p;
                std::array<double, 3> depth;
                for (int k = 0; k < 3; ++k)
                {
                    const Vec3& x = mesh.vertices[f[k]];
                    p[k] = Eigen::Vector2d(x[u], x[v]);
                    depth[k] = x[axis];
                }
                double area = edge_function(p[0], p[1], p[2]);
                if (area == 0.0)
                {
                    continue;
                }
                if (area < 0.0)
                {
                    std::swap(p[1], p[2]);
                    std::swap(depth[1], depth[2]);
                    area = -area;
                }
                const double umin = std::min({p[0].x(), p[1].x(), p[2].x()});
                const double umax = std::max({p[0].x(), p[1].x(), p[2].x()});
                const double vmin = std::min({p[0].y(), p[1].y(), p[2].y()});
                const double vmax = std::max({p[0].y(), p[1].y(), p[2].y()});
                const int j0 = std::max(0, static_cast<int>(std::floor((umin - lo[u]) / cell[u] - 0.5)));
                const int j1 = std::min(n - 1, static_cast<int>(std::ceil((umax - lo[u]) / cell[u] - 0.5)));
                const int k0 = std::max(0, static_cast<int>(std::floor((vmin - lo[v]) / cell[v] - 0.5)));
                const int k1 = std::min(n - 1, static_cast<int>(std::ceil((vmax - lo[v]) / cell[v] - 0.5)));
                for (int k = k0; k <= k1; ++k)
                {
                    for (int j = j0; j <= j1; ++j)
                    {
                        const Eigen::Vector2d q(center(u, j), center(v, k));
                        const double w0 = edge_function(p[1], p[2], q);
                        const double w1 = edge_function(p[2], p[0], q);
                        const double w2 = edge_function(p[0], p[1], q);
                        if (inside_edge(w0, p[1], p[2]) && inside_edge(w1, p[2], p[0]) && inside_edge(w2, p[0], p[1]))
                        {
                            hits[static_cast<size_t>(j) + static_cast<size_t>(n) * k].push_back(
                                (w0 * depth[0] + w1 * depth[1] + w2 * depth[2]) / area);
                        }
                    }
                }
            }
            parallel_for(hits.size(), [&](size_t ray) {
                std::vector<double>& h = hits[ray];
                std::sort(h.begin(), h.end());
                const int j = static_cast<int>(ray % n);
                const int k = static_cast<int>(ray / n);
                size_t crossed = 0;
                for (int i = 0; i < n; ++i)
                {
                    const double c = center(axis, i);
                    while (crossed < h.size() && h[crossed] < c)
                    {
                        ++crossed;
                    }
                    if (crossed % 2 == 1)
                    {
                        std::array<int, 3> idx{};
                        idx[axis] = i;
                        idx[u] = j;
                        idx[v] = k;
                        votes[static_cast<size_t>(idx[0]) + static_cast<size_t>(n) * (idx[1] + static_cast<size_t>(n) * idx[2])]++;
                    }
                }
            });
        }
        std::vector<uint8_t> occupied(total);
        for (size_t i = 0; i < total; ++i)
        {
            occupied[i] = votes[i] >= 2 ? 1 : 0;
        }
        return occupied;
    }

    double volume_iou(const TriangleMesh& a, const TriangleMesh& b, int resolution)
    {
        for (const TriangleMesh* m : {&a, &b})
        {
            const ManifoldReport r = validate_manifold(*m);
            if (m->faces.empty() || r.boundary_edges != 0)
            {
                throw DataError("volume IoU needs closed meshes (" + std::string(m == &a ? "a" : "b") + ": " + r.summary() + ")");
            }
        }
        const BoundingBox ba = bounding_box(a);
        const BoundingBox bb = bounding_box(b);
        Vec3 lo = ba.min.cwiseMin(bb.min);
        Vec3 hi = ba.max.cwiseMax(bb.max);
        const Vec3 pad = Vec3::Constant(1e-3 * (hi - lo).maxCoeff());
        lo -= pad;
        hi += pad;
        const std::vector<uint8_t> va = voxelize(a, lo, hi, resolution);
        const std::vector<uint8_t> vb = voxelize(b, lo, hi, resolution);
        size_t inter = 0;
        size_t uni = 0;
        for (size_t i = 0; i < va.size(); ++i)
        {
            inter += (va[i] & vb[i]);
            uni += (va[i] | vb[i]);
        }
        return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }

    GeometryReport evaluate_geometry(const TriangleMesh& a, const TriangleMesh& b, const GeometryParams& params)
    {
        if (!(params.tau > 0.0) || params.samples == 0)
        {
            throw ConfigError("geometry metrics need tau > 0 and at least one sample");
        }
        const SampledPair d = sample_pair(a, b, params.samples, params.seed);
        GeometryReport r;
        r.chamfer = 0.5 * (mean(d.a_to_b) + mean(d.b_to_a));
        r.f_score = harmonic(hit_fraction(d.a_to_b, params.tau), hit_fraction(d.b_to_a, params.tau));
        r.samples_used = params.samples;
        r.tau = params.tau;
        const bool closed = validate_manifold(a).boundary_edges == 0 && validate_manifold(b).boundary_edges == 0;
        r.volume_iou = closed ? volume_iou(a, b, params.voxel_resolution) : std::numeric_limits<double>::quiet_NaN();
        return r;
    }

    namespace
    {
        void require_same_size(const ImageRGB& a, const ImageRGB& b)
        {
            if (!a.same_shape(b) || a.empty())
            {
                throw DataError("image metrics need two non-empty images of equal size");
            }
        }

        double squared_error_sum(const ImageRGB& a, const ImageRGB& b)
        {
            double s = 0.0;
            for (size_t p = 0; p < a.size(); ++p)
            {
                s += (a[p] - b[p]).squaredNorm();
            }
            return s;
        }

        double psnr_from_mse(double mse)
        {
            return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
        }

        constexpr int kWindow = 11;

        std::array<double, kWindow> gaussian_window()
        {
            std::array<double, kWindow> w{};
            double s = 0.0;
            for (int i = 0; i < kWindow; ++i)
            {
                const double x = i - kWindow / 2;
                w[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
                s += w[i];
            }
            for (double& x : w)
            {
                x /= s;
            }
            return w;
        }

        // Separable 'valid' Gaussian filter.
        std::vector<double> filter_valid(const std::vector<double>& img, int w, int h)
        {
            static const auto g = gaussian_window();
            const int ow = w - kWindow + 1;
            const int oh = h - kWindow + 1;
            std::vector<double> rows(static_cast<size_t>(ow) * h);
            for (int y = 0; y < h; ++y)
            {
                for (int x = 0; x < ow; ++x)
                {
                    double s = 0.0;
                    for (int i = 0; i < kWindow; ++i)
                    {
                        s += g[i] * img[static_cast<size_t>(y) * w + x + i];
                    }
                    rows[static_cast<size_t>(y) * ow + x] = s;
                }
            }
            std::vector<double> out(static_cast<size_t>(ow) * oh);
            for (int y = 0; y < oh; ++y)
            {
                for (int x = 0; x < ow; ++x)
                {
                    double s = 0.0;
                    for (int i = 0; i < kWindow; ++i)
                    {
                        s += g[i] * rows[static_cast<size_t>(y + i) * ow + x];
                    }
                    out[static_cast<size_t>(y) * ow + x] = s;
                }
            }
            return out;
        }
    } // namespace

    double psnr(const ImageRGB& a, const ImageRGB& b)
    {
        require_same_size(a, b);
        return psnr_from_mse(squared_error_sum(a, b) / (3.0 * static_cast<double>(a.size())));
    }

    double ssim(const ImageRGB& a, const ImageRGB& b)
    {
        require_same_size(a, b);
        if (a.width < kWindow || a.height < kWindow)
        {
            throw DataError("SSIM needs images of at least 11x11 pixels");
        }
        const double c1 = 0.01 * 0.01;
        const double c2 = 0.03 * 0.03;
        const int w = a.width;
        const int h = a.height;
        double total = 0.0;
        for (int ch = 0; ch < 3; ++ch)
        {
            std::vector<double> x(a.size()), y(a.size()), xx(a.size()), yy(a.size()), xy(a.size());
            for (size_t p = 0; p < a.size(); ++p)
            {
                x[p] = a[p][ch];
                y[p] = b[p][ch];
                xx[p] = x[p] * x[p];
                yy[p] = y[p] * y[p];
                xy[p] = x[p] * y[p];
            }
            const auto mx = filter_valid(x, w, h);
            const auto my = filter_valid(y, w, h);
            const auto sxx = filter_valid(xx, w, h);
            const auto syy = filter_valid(yy, w, h);
            const auto sxy = filter_valid(xy, w, h);
            double sum = 0.0;
            for (size_t i = 0; i < mx.size(); ++i)
            {
                const double vx = sxx[i] - mx[i] * mx[i];
                const double vy = syy[i] - my[i] * my[i];
                const double cxy = sxy[i] - mx[i] * my[i];
                sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
            }
            total += sum / static_cast<double>(mx.size());
        }
        return total / 3.0;
    }

    ImageReport evaluate_images(const std::vector<ImageRGB>& rendered, const std::vector<ImageRGB>& reference)
    {
        if (rendered.size() != reference.size() || rendered.empty())
        {
            throw DataError("image metrics need matching, non-empty view lists");
        }
        ImageReport r;
        double se = 0.0;
        double count = 0.0;
        double ssim_sum = 0.0;
        for (size_t i = 0; i < rendered.size(); ++i)
        {
            require_same_size(rendered[i], reference[i]);
            se += squared_error_sum(rendered[i], reference[i]);
            count += 3.0 * static_cast<double>(rendered[i].size());
            ssim_sum += ssim(rendered[i], reference[i]);
        }
        r.psnr = psnr_from_mse(se / count);
        r.ssim = ssim_sum / static_cast<double>(rendered.size());
        r.views_evaluated = rendered.size();
        return r;
    }
} // namespace assetgen
