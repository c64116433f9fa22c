#include "miurex/miura.hpp"
#include "miurex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace miurex {

namespace {
constexpr double kPi = std::numbers::pi;
} // namespace

void MiuraParams::validate(bool for_mesh) const {
    if (!(l > 0.0) || !(w > 0.0))
        throw DegenerateParameterError("MiuraParams: l and w must be positive");
    if (!(theta > 0.0) || !(theta < kPi / 2.0))
        throw DegenerateParameterError("MiuraParams: theta must lie in (0, pi/2)");
    if (for_mesh) {
        if (!(rho > 0.0) || !(rho < kPi))
            throw DegenerateParameterError("MiuraParams: rho must lie in (0, pi)");
    } else {
        if (rho < 0.0 || rho > kPi)
            throw DegenerateParameterError("MiuraParams: rho must lie in [0, pi]");
    }
}

MiuraDerived derive_angles(const MiuraParams& p) {
    p.validate(false);
    MiuraDerived d;
    const double st = std::sin(p.theta), ct = std::cos(p.theta);
    const double ch = std::cos(p.rho / 2.0), sh = std::sin(p.rho / 2.0);

    const double cxi = st * ch;
    const double sxi = std::sqrt(st * st * sh * sh + ct * ct);
    d.xi = std::atan2(sxi, cxi);
    if (sxi == 0.0)
        throw DegenerateParameterError("derive_angles: sin(xi) = 0");
    const double cze = ct / sxi;
    const double sze = st * sh / sxi;
    d.zeta = std::atan2(sze, cze);

    d.L = std::sqrt(p.w * p.w + p.l * p.l - 2.0 * p.w * p.l * ct);
    if (!(d.L > 0.0))
        throw DegenerateParameterError("derive_angles: L = 0");
    const double cga = (p.l * std::cos(2.0 * p.theta) - p.w * ct) / d.L;
    const double sga = st * (p.w - 2.0 * p.l * ct) / d.L;
    d.gamma = wrap_2pi(std::atan2(sga, cga));

    if (ch == 0.0)
        throw DegenerateParameterError("derive_angles: cos(rho/2) = 0");
    d.h = p.l * sxi / ch;

    d.panel_height = p.w * sze;
    d.pitch_x = p.w * cze;
    d.stagger_x = p.l * sxi;
    d.pitch_y = p.l * cxi;

    d.e_plus = Vec3(-cxi, -sxi, 0.0);
    // The printed local e_minus components are not unit; normalize so the
    // stored vector is a direction (the world-frame vectors measured on the
    // constructed mesh are authoritative for all geometry).
    Vec3 em(p.w * cze - p.l * cxi, -p.l * sxi, 0.0);
    const double nm = em.norm();
    if (nm == 0.0)
        throw DegenerateParameterError("derive_angles: degenerate e_minus");
    d.e_minus = em / nm;
    return d;
}

VertexSectorData world_sector(const MiuraDerived& d) {
    const double s = d.stagger_x, t = d.pitch_y, p = d.pitch_x, h = d.panel_height;
    const double l = std::hypot(s, t);
    VertexSectorData sec;
    sec.e_plus = Vec3(-s, -t, 0.0) / l;
    sec.e_minus = Vec3(p - s, t, -h) / d.L;
    sec.gamma = d.gamma;
    return sec;
}

const char* to_string(CreaseAssignment a) {
    switch (a) {
        case CreaseAssignment::Mountain: return "M";
        case CreaseAssignment::Valley: return "V";
        case CreaseAssignment::Border: return "B";
        case CreaseAssignment::Flat: return "F";
    }
    return "?";
}

const char* to_string(FaceRole r) {
    switch (r) {
        case FaceRole::Miura: return "miura";
        case FaceRole::Web: return "web";
        case FaceRole::SkinTop: return "skin-top";
        case FaceRole::SkinBottom: return "skin-bottom";
    }
    return "?";
}

double FoldedMesh::scale() const {
    if (scale_hint > 0.0) return scale_hint;
    if (vertices.empty()) return 1.0;
    Vec3 lo = vertices.front(), hi = vertices.front();
    for (const Vec3& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const double diag = (hi - lo).norm();
    return diag > 0.0 ? diag : 1.0;
}

double measure_fold_angle(const std::vector<Vec3>& pos, int a, int b, int wl, int wr) {
    Vec3 e = pos[b] - pos[a];
    e /= e.norm();
    Vec3 u1 = pos[wl] - pos[a];
    u1 -= u1.dot(e) * e;
    Vec3 u2 = pos[wr] - pos[a];
    u2 -= u2.dot(e) * e;
    const double ang = std::atan2(u1.cross(u2).dot(e), u1.dot(u2));
    return ang > 0.0 ? kPi - ang : -kPi - ang;
}

namespace {

// Face corner angles at a given vertex: sum over all faces containing it.
double corner_angle_sum(const FoldedMesh& mesh, int vertex) {
    double sum = 0.0;
    for (const MeshFace& f : mesh.faces) {
        const int m = static_cast<int>(f.v.size());
        for (int k = 0; k < m; ++k) {
            if (f.v[k] != vertex) continue;
            const Vec3& o = mesh.vertices[f.v[k]];
            const Vec3& p = mesh.vertices[f.v[(k + 1) % m]];
            const Vec3& q = mesh.vertices[f.v[(k + m - 1) % m]];
            sum += angle_between(p - o, q - o);
        }
    }
    return sum;
}

struct EdgeKey {
    int a, b;
    bool operator<(const EdgeKey& o) const {
        return a != o.a ? a < o.a : b < o.b;
    }
};

EdgeKey make_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

} // namespace

bool vertex_is_interior(const FoldedMesh& mesh, int vertex) {
    std::map<EdgeKey, int> count;
    for (const MeshFace& f : mesh.faces) {
        const int m = static_cast<int>(f.v.size());
        for (int k = 0; k < m; ++k) {
            const int a = f.v[k], b = f.v[(k + 1) % m];
            if (a == vertex || b == vertex) ++count[make_key(a, b)];
        }
    }
    if (count.empty()) return false;
    for (const auto& [e, c] : count)
        if (c < 2) return false;
    return true;
}

double angle_defect(const FoldedMesh& mesh, int vertex) {
    return 2.0 * kPi - corner_angle_sum(mesh, vertex);
}

void rebuild_edges(FoldedMesh& mesh, double flat_tol) {
    // For each undirected edge remember the face traversing it a->b (left)
    // and the face traversing b->a (right), plus the wing vertex adjacent to
    // the edge on each side.
    struct Adj {
        int left_face = -1, right_face = -1;
        int left_wing = -1, right_wing = -1;
    };
    std::map<EdgeKey, Adj> adj;
    for (int fi = 0; fi < static_cast<int>(mesh.faces.size()); ++fi) {
        const auto& vs = mesh.faces[fi].v;
        const int m = static_cast<int>(vs.size());
        for (int k = 0; k < m; ++k) {
            const int a = vs[k], b = vs[(k + 1) % m];
            const int wing = vs[(k + 2) % m];  // next corner after b
            Adj& e = adj[make_key(a, b)];
            if (a < b) {
                e.left_face = fi;
                e.left_wing = wing;
            } else {
                e.right_face = fi;
                e.right_wing = wing;
            }
        }
    }
    mesh.edges.clear();
    mesh.edges.reserve(adj.size());
    for (const auto& [key, e] : adj) {
        MeshEdge me;
        me.a = key.a;
        me.b = key.b;
        if (e.left_face < 0 || e.right_face < 0) {
            me.assignment = CreaseAssignment::Border;
            me.fold_angle = 0.0;
        } else {
            me.fold_angle =
                measure_fold_angle(mesh.vertices, key.a, key.b, e.left_wing, e.right_wing);
            if (std::abs(me.fold_angle) < flat_tol)
                me.assignment = CreaseAssignment::Flat;
            else
                me.assignment = me.fold_angle > 0.0 ? CreaseAssignment::Mountain
                                                    : CreaseAssignment::Valley;
        }
        mesh.edges.push_back(me);
    }
}

namespace {

FoldedMesh grid_mesh_from(const MiuraParams& p, int rows, int cols,
                          const std::function<Vec3(int, int)>& base) {
    if (rows < 2 || cols < 2)
        throw DegenerateParameterError("mesh construction needs rows, cols >= 2");
    FoldedMesh mesh;
    mesh.rows = rows;
    mesh.cols = cols;
    mesh.scale_hint = std::max(p.l, p.w);
    mesh.vertices.reserve((rows + 1) * (cols + 1));
    for (int i = 0; i <= rows; ++i)
        for (int j = 0; j <= cols; ++j) {
            mesh.grid[{i, j}] = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(base(i, j));
        }
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            MeshFace f;
            f.role = FaceRole::Miura;
            f.v = {mesh.grid[{i, j}], mesh.grid[{i, j + 1}],
                   mesh.grid[{i + 1, j + 1}], mesh.grid[{i + 1, j}]};
            mesh.faces.push_back(std::move(f));
        }
    rebuild_edges(mesh);
    return mesh;
}

} // namespace

FoldedMesh fold_miura_mesh(const MiuraParams& p, int rows, int cols) {
    p.validate(true);
    const MiuraDerived d = derive_angles(p);
    const double px = d.pitch_x, s = d.stagger_x, t = d.pitch_y, h = d.panel_height;
    return grid_mesh_from(p, rows, cols, [&](int i, int j) {
        return Vec3(j * px + (i % 2) * s, i * t, (j % 2) * h);
    });
}

FoldedMesh alternate_mode_mesh(const MiuraParams& p, double accordion_angle,
                               int rows, int cols) {
    p.validate(true);
    if (!(accordion_angle > 0.0) || !(accordion_angle < kPi))
        throw DegenerateParameterError("alternate_mode_mesh: accordion angle must lie in (0, pi)");
    const double ch = std::cos(accordion_angle / 2.0);
    const double sh = std::sin(accordion_angle / 2.0);
    const double wct = p.w * std::cos(p.theta);
    const double wst = p.w * std::sin(p.theta);
    return grid_mesh_from(p, rows, cols, [&](int i, int j) {
        return Vec3(j * wct + (i % 2) * p.l, j * wst * ch, (j % 2) * wst * sh);
    });
}

namespace {

// Walk the cut path starting at (0, c): oblique edge on even rows, face
// diagonal on odd rows, until the grid boundary.
std::vector<std::pair<int, int>> cut_path_labels(int rows, int cols, int c) {
    std::vector<std::pair<int, int>> labels;
    int i = 0, j = c;
    labels.emplace_back(i, j);
    while (i < rows && j < cols) {
        if (i % 2 == 0) {
            i += 1;
        } else {
            i += 1;
            j += 1;
        }
        labels.emplace_back(i, j);
    }
    return labels;
}

} // namespace

std::vector<CutLine> extract_cut_lines(const FoldedMesh& mesh) {
    std::vector<int> cols;
    for (int c = 1; c < mesh.cols; ++c) cols.push_back(c);
    return extract_cut_lines(mesh, cols);
}

std::vector<CutLine> extract_cut_lines(const FoldedMesh& mesh,
                                       const std::vector<int>& start_cols) {
    if (mesh.grid.empty())
        throw DegenerateParameterError("extract_cut_lines: mesh has no grid structure");
    std::vector<CutLine> lines;
    for (int c : start_cols) {
        if (c < 1 || c >= mesh.cols)
            throw DegenerateParameterError("extract_cut_lines: cut column out of range");
        CutLine line;
        line.start_col = c;
        const auto labels = cut_path_labels(mesh.rows, mesh.cols, c);
        for (size_t k = 0; k < labels.size(); ++k) {
            const auto [i, j] = labels[k];
            CutVertex cv;
            cv.vertex = mesh.grid.at({i, j});
            cv.klass = ((i + 3) % 4) + 1;
            const Vec3& at = mesh.vertices[cv.vertex];
            // e_plus along the incident oblique edge, e_minus along the
            // incident diagonal; both point away from the vertex.
            auto dir_to = [&](const std::pair<int, int>& lbl) {
                Vec3 v = mesh.vertices[mesh.grid.at(lbl)] - at;
                return Vec3(v / v.norm());
            };
            for (int side = -1; side <= 1; side += 2) {
                const size_t kk = (side < 0) ? k - 1 : k + 1;
                if ((side < 0 && k == 0) || kk >= labels.size()) continue;
                const auto& nb = labels[kk];
                const bool diagonal = nb.first != i && nb.second != j;
                if (diagonal)
                    cv.e_minus = dir_to(nb);
                else
                    cv.e_plus = dir_to(nb);
            }
            line.vertices.push_back(cv);
            if (k > 0) {
                const auto& prev = labels[k - 1];
                line.edge_is_diagonal.push_back(prev.first != i && prev.second != j);
            }
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

VertexSectorData cut_vertex_sector(const FoldedMesh& mesh, int cut_col) {
    if (mesh.grid.empty())
        throw DegenerateParameterError("cut_vertex_sector: mesh has no grid structure");
    const int c = cut_col;
    if (c < 1 || c >= mesh.cols || mesh.rows < 2)
        throw DegenerateParameterError("cut_vertex_sector: cut column out of range");
    auto at = [&](int i, int j) { return mesh.vertices[mesh.grid.at({i, j})]; };
    const Vec3 v1 = at(1, c);
    VertexSectorData sec;
    Vec3 ep = at(0, c) - v1;
    sec.e_plus = ep / ep.norm();
    Vec3 em = at(2, c + 1) - v1;
    sec.e_minus = em / em.norm();
    // Wedge sum on the side whose copies displace by +direction (the right of
    // the upward path). The left-side wedges are directly measurable, and the
    // two sides total 2 pi because the uncut vertex is developable.
    const double a1 = angle_between(at(0, c) - v1, at(1, c - 1) - v1);
    const double a2 = angle_between(at(1, c - 1) - v1, at(2, c) - v1);
    const double a3 = angle_between(at(2, c) - v1, at(2, c + 1) - v1);
    sec.gamma = 2.0 * kPi - (a1 + a2 + a3);
    return sec;
}

} // namespace miurex
