#ifndef TETHERNET_HULL_HPP
#define TETHERNET_HULL_HPP

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "tethernet/common.hpp"

namespace tethernet {

struct HullResult {
    double volume = 0.0;
    double surface_area = 0.0;
    std::vector<int> vertex_ids;
    /// Triangles (point indices) of the 3D hull; empty for degenerate input.
    std::vector<std::array<int, 3>> facets;
};

namespace hull_detail {

struct Face {
    int a, b, c;
    Vec3 normal;  // unit, outward
    double offset;
    bool alive = true;
};

inline Face make_face(int a, int b, int c, const std::vector<Vec3>& pts, const Vec3& interior) {
    Face f{a, b, c, Vec3::Zero(), 0.0, true};
    Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = n.norm();
    if (len > 0) n /= len;
    if (n.dot(interior - pts[a]) > 0) {
        std::swap(f.b, f.c);
        n = -n;
    }
    f.normal = n;
    f.offset = n.dot(pts[a]);
    return f;
}

// Area of the 2D convex hull of coplanar points (monotone chain).
inline double planar_hull_area(const std::vector<Vec3>& pts) {
    // Best-fit plane basis from the two dominant directions.
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) {
        Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Vec3 u = es.eigenvectors().col(2);
    Vec3 v = es.eigenvectors().col(1);
    std::vector<Eigen::Vector2d> q;
    q.reserve(pts.size());
    for (const auto& p : pts) q.emplace_back(u.dot(p - centroid), v.dot(p - centroid));
    std::sort(q.begin(), q.end(), [](const auto& l, const auto& r) {
        return l.x() < r.x() || (l.x() == r.x() && l.y() < r.y());
    });
    q.erase(std::unique(q.begin(), q.end()), q.end());
    if (q.size() < 3) return 0.0;
    auto cross2 = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> ch(2 * q.size());
    std::size_t k = 0;
    for (const auto& p : q) {
        while (k >= 2 && cross2(ch[k - 2], ch[k - 1], p) <= 0) --k;
        ch[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = q.rbegin(); it != q.rend(); ++it) {
        while (k >= lower && cross2(ch[k - 2], ch[k - 1], *it) <= 0) --k;
        ch[k++] = *it;
    }
    ch.resize(k - 1);
    double area = 0.0;
    for (std::size_t i = 1; i + 1 < ch.size(); ++i)
        area += 0.5 * cross2(ch[0], ch[i], ch[i + 1]);
    return std::abs(area);
}

}  // namespace hull_detail

/// 3D convex hull with volume (signed tetrahedra from the centroid) and
/// surface area (facet sum). Coplanar/collinear input yields volume 0 and the
/// planar hull area.
inline HullResult convex_hull(const std::vector<Vec3>& pts) {
    using hull_detail::Face;
    const std::size_t n = pts.size();
    if (n < 4) throw ConfigError("convex_hull needs at least 4 points");

    Vec3 lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double scale = std::max((hi - lo).norm(), 1e-30);
    const double eps = 1e-12 * scale;

    // Initial simplex: spread-out extremes.
    const std::size_t i0 = 0;
    std::size_t i1 = 0;
    double best = -1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = (pts[i] - pts[i0]).squaredNorm();
        if (d > best) {
            best = d;
            i1 = i;
        }
    }
    if (std::sqrt(best) < eps) {
        // All points coincide.
        HullResult r;
        r.vertex_ids.push_back(0);
        return r;
    }
    std::size_t i2 = i0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (pts[i] - pts[i0]).cross(pts[i] - pts[i1]).squaredNorm();
        if (d > best) {
            best = d;
            i2 = i;
        }
    }
    if (std::sqrt(best) < eps * eps) {
        HullResult r;  // collinear
        r.vertex_ids = {static_cast<int>(i0), static_cast<int>(i1)};
        return r;
    }
    Vec3 n012 = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
    std::size_t i3 = i0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(n012.dot(pts[i] - pts[i0]));
        if (d > best) {
            best = d;
            i3 = i;
        }
    }
    if (best < eps) {
        HullResult r;  // coplanar
        r.volume = 0.0;
        r.surface_area = hull_detail::planar_hull_area(pts);
        return r;
    }

    const Vec3 interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
    std::vector<Face> faces;
    const int a = static_cast<int>(i0), b = static_cast<int>(i1), c = static_cast<int>(i2),
              d = static_cast<int>(i3);
    faces.push_back(hull_detail::make_face(a, b, c, pts, interior));
    faces.push_back(hull_detail::make_face(a, b, d, pts, interior));
    faces.push_back(hull_detail::make_face(a, c, d, pts, interior));
    faces.push_back(hull_detail::make_face(b, c, d, pts, interior));

    // Incremental expansion: insert each remaining point, replacing the faces
    // it can see with a cap over the horizon edges.
    for (std::size_t p = 0; p < n; ++p) {
        if (p == i0 || p == i1 || p == i2 || p == i3) continue;
        std::vector<std::size_t> visible;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            if (!faces[f].alive) continue;
            if (faces[f].normal.dot(pts[p]) - faces[f].offset > eps) visible.push_back(f);
        }
        if (visible.empty()) continue;
        std::map<std::pair<int, int>, int> edge_count;
        auto add_edge = [&](int x, int y) {
            auto key = std::minmax(x, y);
            edge_count[{key.first, key.second}]++;
        };
        for (std::size_t f : visible) {
            add_edge(faces[f].a, faces[f].b);
            add_edge(faces[f].b, faces[f].c);
            add_edge(faces[f].c, faces[f].a);
            faces[f].alive = false;
        }
        for (const auto& [edge, count] : edge_count) {
            if (count != 1) continue;  // interior edge of the visible region
            faces.push_back(
                hull_detail::make_face(edge.first, edge.second, static_cast<int>(p), pts, interior));
        }
    }

    HullResult r;
    std::vector<char> used(n, 0);
    for (const auto& f : faces) {
        if (!f.alive) continue;
        r.facets.push_back({f.a, f.b, f.c});
        used[f.a] = used[f.b] = used[f.c] = 1;
        const Vec3 u = pts[f.b] - pts[f.a];
        const Vec3 v = pts[f.c] - pts[f.a];
        r.surface_area += 0.5 * u.cross(v).norm();
        // Signed tetrahedron against the interior point.
        r.volume += (pts[f.a] - interior).dot((pts[f.b] - interior).cross(pts[f.c] - interior)) / 6.0;
    }
    r.volume = std::abs(r.volume);
    for (std::size_t i = 0; i < n; ++i)
        if (used[i]) r.vertex_ids.push_back(static_cast<int>(i));
    return r;
}

}  // namespace tethernet

#endif  // TETHERNET_HULL_HPP
