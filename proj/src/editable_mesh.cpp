#include "editable_mesh.hpp"

#include <algorithm>
#include <map>

namespace assetgen::detail
{
    namespace
    {
        constexpr double kMinArea = 1e-12;

        Vec3 raw_normal(const Vec3& a, const Vec3& b, const Vec3& c)
        {
            return (b - a).cross(c - a);
        }
    } // namespace

    EditableMesh::EditableMesh(const TriangleMesh& mesh)
        : pos(mesh.vertices), faces(mesh.faces), face_alive(mesh.faces.size(), 1), vert_alive(mesh.vertices.size(), 1),
          vface(mesh.vertices.size()), boundary(mesh.vertices.size(), 0), original_vertices(mesh.vertices.size()),
          live_faces_(mesh.faces.size()), live_vertices_(mesh.vertices.size())
    {
        std::map<std::pair<int, int>, int> edge_count;
        for (size_t f = 0; f < faces.size(); ++f)
        {
            for (int k = 0; k < 3; ++k)
            {
                vface[faces[f][k]].push_back(static_cast<int>(f));
                const int a = faces[f][k];
                const int b = faces[f][(k + 1) % 3];
                ++edge_count[{std::min(a, b), std::max(a, b)}];
            }
        }
        for (const auto& [e, n] : edge_count)
        {
            if (n == 1)
            {
                boundary[e.first] = 1;
                boundary[e.second] = 1;
            }
        }
    }

    std::vector<int> EditableMesh::neighbors(int v) const
    {
        std::vector<int> out;
        out.reserve(vface[v].size() * 2);
        for (int f : vface[v])
        {
            for (int u : faces[f])
            {
                if (u != v)
                {
                    out.push_back(u);
                }
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<int> EditableMesh::edge_faces(int a, int b) const
    {
        std::vector<int> out;
        for (int f : vface[a])
        {
            const Face& t = faces[f];
            if (t[0] == b || t[1] == b || t[2] == b)
            {
                out.push_back(f);
            }
        }
        return out;
    }

    bool EditableMesh::has_edge(int a, int b) const
    {
        for (int f : vface[a])
        {
            const Face& t = faces[f];
            if (t[0] == b || t[1] == b || t[2] == b)
            {
                return true;
            }
        }
        return false;
    }

    std::vector<std::array<int, 2>> EditableMesh::edges() const
    {
        std::vector<std::array<int, 2>> out;
        for (size_t f = 0; f < faces.size(); ++f)
        {
            if (!face_alive[f])
            {
                continue;
            }
            for (int k = 0; k < 3; ++k)
            {
                const int a = faces[f][k];
                const int b = faces[f][(k + 1) % 3];
                out.push_back({std::min(a, b), std::max(a, b)});
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    Vec3 EditableMesh::normal(int f) const
    {
        const Face& t = faces[f];
        return raw_normal(pos[t[0]], pos[t[1]], pos[t[2]]);
    }

    Vec3 EditableMesh::vertex_normal(int v) const
    {
        Vec3 n = Vec3::Zero();
        for (int f : vface[v])
        {
            n += normal(f);
        }
        const double len = n.norm();
        return len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
    }

    int EditableMesh::third(int f, int a, int b) const
    {
        for (int u : faces[f])
        {
            if (u != a && u != b)
            {
                return u;
            }
        }
        return -1;
    }

    void EditableMesh::remove_face_ref(int v, int f)
    {
        auto& list = vface[v];
        list.erase(std::remove(list.begin(), list.end(), f), list.end());
    }

    int EditableMesh::split(int a, int b)
    {
        const int m = static_cast<int>(pos.size());
        pos.push_back(0.5 * (pos[a] + pos[b]));
        vert_alive.push_back(1);
        vface.emplace_back();
        boundary.push_back(0);
        ++live_vertices_;
        for (int f : edge_faces(a, b))
        {
            Face t = faces[f];
            // rotate so that t = (x, y, z) with {x, y} = {a, b}
            while (!((t[0] == a || t[0] == b) && (t[1] == a || t[1] == b)))
            {
                std::rotate(t.begin(), t.begin() + 1, t.end());
            }
            const int x = t[0];
            const int y = t[1];
            const int z = t[2];
            faces[f] = {x, m, z};
            const int g = static_cast<int>(faces.size());
            faces.push_back({m, y, z});
            face_alive.push_back(1);
            ++live_faces_;
            remove_face_ref(y, f);
            vface[y].push_back(g);
            vface[z].push_back(g);
            vface[m].push_back(f);
            vface[m].push_back(g);
        }
        return m;
    }

    bool EditableMesh::can_collapse(int a, int b, const Vec3& p, double max_length) const
    {
        if (boundary[a] || boundary[b])
        {
            return false;
        }
        const auto shared = edge_faces(a, b);
        if (shared.size() != 2)
        {
            return false;
        }
        const int c = third(shared[0], a, b);
        const int d = third(shared[1], a, b);
        const auto na = neighbors(a);
        const auto nb = neighbors(b);
        std::vector<int> common;
        std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
        if (common.size() != 2)
        {
            return false;
        }
        if (valence(c) <= 3 || valence(d) <= 3)
        {
            return false;
        }
        if (live_vertices_ <= 4 || na.size() + nb.size() - 4 < 3)
        {
            return false;
        }
        if (max_length > 0.0)
        {
            for (const auto* list : {&na, &nb})
            {
                for (int u : *list)
                {
                    if (u != a && u != b && (pos[u] - p).norm() > max_length)
                    {
                        return false;
                    }
                }
            }
        }
        for (int v : {a, b})
        {
            for (int f : vface[v])
            {
                if (f == shared[0] || f == shared[1])
                {
                    continue;
                }
                Face t = faces[f];
                const Vec3 before = normal(f);
                std::array<Vec3, 3> q;
                for (int k = 0; k < 3; ++k)
                {
                    q[k] = (t[k] == a || t[k] == b) ? p : pos[t[k]];
                }
                const Vec3 after = raw_normal(q[0], q[1], q[2]);
                if (0.5 * after.norm() <= kMinArea || before.dot(after) <= 0.0)
                {
                    return false;
                }
            }
        }
        return true;
    }

    void EditableMesh::collapse(int a, int b, const Vec3& p)
    {
        const auto shared = edge_faces(a, b);
        for (int f : shared)
        {
            face_alive[f] = 0;
            --live_faces_;
            for (int u : faces[f])
            {
                remove_face_ref(u, f);
            }
        }
        for (int f : vface[b])
        {
            for (int& u : faces[f])
            {
                if (u == b)
                {
                    u = a;
                }
            }
            vface[a].push_back(f);
        }
        vface[b].clear();
        vert_alive[b] = 0;
        --live_vertices_;
        pos[a] = p;
    }

    bool EditableMesh::can_flip(int a, int b, double max_length, bool require_improvement) const
    {
        if (boundary[a] || boundary[b])
        {
            return false;
        }
        const auto shared = edge_faces(a, b);
        if (shared.size() != 2)
        {
            return false;
        }
        const int c = third(shared[0], a, b);
        const int d = third(shared[1], a, b);
        if (c == d || has_edge(c, d))
        {
            return false;
        }
        const int va = valence(a);
        const int vb = valence(b);
        if (va <= 3 || vb <= 3)
        {
            return false;
        }
        if (require_improvement)
        {
            const int vc = valence(c);
            const int vd = valence(d);
            auto dev = [](int v) { return (v - 6) * (v - 6); };
            const int before = dev(va) + dev(vb) + dev(vc) + dev(vd);
            const int after = dev(va - 1) + dev(vb - 1) + dev(vc + 1) + dev(vd + 1);
            if (after >= before)
            {
                return false;
            }
        }
        if (max_length > 0.0 && length(c, d) > max_length)
        {
            return false;
        }
        // orient the new pair consistently with the old faces
        Face t = faces[shared[0]];
        while (t[0] != a)
        {
            std::rotate(t.begin(), t.begin() + 1, t.end());
        }
        // shared[0] holds directed edge x->y and third vertex c
        const int x = t[1] == b ? a : b;
        const int y = t[1] == b ? b : a;
        const int p = c;
        const int q = d;
        const Vec3 n0 = normal(shared[0]);
        const Vec3 n1 = normal(shared[1]);
        const Vec3 m0 = raw_normal(pos[p], pos[x], pos[q]);
        const Vec3 m1 = raw_normal(pos[q], pos[y], pos[p]);
        for (const Vec3& m : {m0, m1})
        {
            if (0.5 * m.norm() <= kMinArea || m.dot(n0) <= 0.0 || m.dot(n1) <= 0.0)
            {
                return false;
            }
        }
        return true;
    }

    void EditableMesh::flip(int a, int b)
    {
        const auto shared = edge_faces(a, b);
        int f1 = shared[0];
        int f2 = shared[1];
        Face t = faces[f1];
        while (t[0] != a && t[0] != b)
        {
            std::rotate(t.begin(), t.begin() + 1, t.end());
        }
        if (t[1] != a && t[1] != b)
        {
            std::rotate(t.begin(), t.begin() + 2, t.end());
        }
        // t = (x, y, p) with x->y directed in f1
        const int x = t[0];
        const int y = t[1];
        const int p = t[2];
        const int q = third(f2, a, b);
        faces[f1] = {p, x, q};
        faces[f2] = {q, y, p};
        remove_face_ref(y, f1);
        remove_face_ref(x, f2);
        vface[q].push_back(f1);
        vface[p].push_back(f2);
    }

    bool EditableMesh::try_move(int v, const Vec3& p, double max_length)
    {
        if (max_length > 0.0)
        {
            for (int u : neighbors(v))
            {
                if ((pos[u] - p).norm() > max_length)
                {
                    return false;
                }
            }
        }
        for (int f : vface[v])
        {
            const Face& t = faces[f];
            std::array<Vec3, 3> q;
            for (int k = 0; k < 3; ++k)
            {
                q[k] = t[k] == v ? p : pos[t[k]];
            }
            const Vec3 after = raw_normal(q[0], q[1], q[2]);
            if (0.5 * after.norm() <= kMinArea || after.dot(normal(f)) <= 0.0)
            {
                return false;
            }
        }
        pos[v] = p;
        return true;
    }

    TriangleMesh EditableMesh::compact(std::vector<int>* provenance) const
    {
        TriangleMesh out;
        std::vector<int> remap(pos.size(), -1);
        for (size_t v = 0; v < pos.size(); ++v)
        {
            if (vert_alive[v])
            {
                remap[v] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(pos[v]);
            }
        }
        for (size_t f = 0; f < faces.size(); ++f)
        {
            if (face_alive[f])
            {
                out.faces.push_back({remap[faces[f][0]], remap[faces[f][1]], remap[faces[f][2]]});
            }
        }
        if (provenance)
        {
            provenance->assign(remap.begin(), remap.begin() + static_cast<std::ptrdiff_t>(original_vertices));
        }
        return out;
    }
} // namespace assetgen::detail
