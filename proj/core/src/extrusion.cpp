#include "miurex/extrusion.hpp"
#include "miurex/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <string>

namespace miurex {

namespace {

constexpr double kPi = std::numbers::pi;

using Label = std::pair<int, int>;

struct CutEdge {
    bool diagonal = false;  // false: oblique mesh edge, true: face diagonal
    Label a, b;
};

// Cut path from (0, c): oblique edge on even rows, face diagonal on odd rows,
// until the path leaves the grid.
std::vector<CutEdge> cut_path_edges(int rows, int cols, int c) {
    std::vector<CutEdge> edges;
    int i = 0, j = c;
    while (i < rows && j < cols) {
        if (i % 2 == 0) {
            edges.push_back({false, {i, j}, {i + 1, j}});
            i += 1;
        } else {
            edges.push_back({true, {i, j}, {i + 1, j + 1}});
            i += 1;
            j += 1;
        }
    }
    return edges;
}

double dihedral_raw(const Vec3& A, const Vec3& B, const Vec3& WL, const Vec3& WR) {
    const Vec3 e = (B - A).normalized();
    Vec3 u1 = WL - A;
    u1 -= u1.dot(e) * e;
    Vec3 u2 = WR - A;
    u2 -= u2.dot(e) * e;
    const double ang = std::atan2(u1.cross(u2).dot(e), u1.dot(u2));
    return ang > 0.0 ? kPi - ang : -kPi - ang;
}

// face adjacency over shared (sorted) edges
struct FaceAdjacency {
    std::vector<std::vector<std::pair<int, std::pair<int, int>>>> adj;
};

FaceAdjacency face_adjacency(const FoldedMesh& mesh) {
    std::map<std::pair<int, int>, std::vector<int>> edge2faces;
    for (int fi = 0; fi < static_cast<int>(mesh.faces.size()); ++fi) {
        const auto& vs = mesh.faces[fi].v;
        const int n = static_cast<int>(vs.size());
        for (int k = 0; k < n; ++k) {
            int a = vs[k], b = vs[(k + 1) % n];
            if (a > b) std::swap(a, b);
            edge2faces[{a, b}].push_back(fi);
        }
    }
    FaceAdjacency fa;
    fa.adj.resize(mesh.faces.size());
    for (const auto& [e, fs] : edge2faces)
        for (int a : fs)
            for (int b : fs)
                if (a != b) fa.adj[a].push_back({b, e});
    return fa;
}

double max_vertex_norm(const FoldedMesh& mesh) {
    double m = 1.0;
    for (const Vec3& v : mesh.vertices) m = std::max(m, v.norm());
    return m;
}

} // namespace

void ExtrusionSpec::validate(int rows, int cols) const {
    if (!(depth > 0.0) || !std::isfinite(depth))
        throw DegenerateParameterError("extrusion depth must be positive");
    std::set<int> seen;
    for (int c : cuts) {
        if (c < 1 || c >= cols)
            throw DegenerateParameterError("cut column " + std::to_string(c)
                                           + " outside [1, cols-1]");
        if (!seen.insert(c).second)
            throw DegenerateParameterError("duplicate cut column " + std::to_string(c));
    }
    if (mode == ExtrusionMode::Alternate &&
        (!(accordion_angle > 0.0) || !(accordion_angle < kPi)))
        throw DegenerateParameterError("alternate mode needs accordion angle in (0, pi)");
    (void)rows;
}

bool ExtrudedModel::is_cut_vertex(int i, int j) const {
    return cut_of.count({i, j}) > 0;
}

int ExtrudedModel::vertex_id(int i, int j, int ribbon) const {
    char side = 'x';
    const auto it = cut_of.find({i, j});
    if (it != cut_of.end()) {
        const auto pos = std::lower_bound(cuts_sorted.begin(), cuts_sorted.end(),
                                          it->second);
        const int idx = static_cast<int>(pos - cuts_sorted.begin());
        side = (ribbon <= idx) ? 'L' : 'R';
    }
    const auto vit = vertex_by_key.find({i, j, side});
    if (vit == vertex_by_key.end())
        throw MalformedStateError("no vertex for grid label (" + std::to_string(i)
                                  + ", " + std::to_string(j) + ")");
    return vit->second;
}

Vec3 extrusion_direction(const MiuraDerived& d) {
    const VertexSectorData sec = world_sector(d);
    const Vec3 X = sec.e_minus - rotate_z(-d.gamma, sec.e_plus);
    const double nxy = std::hypot(X.x(), X.y());
    if (!(nxy > 1e-14))
        throw DegenerateParameterError(
            "extrusion direction degenerates: cut edges anti-align after rotation");
    const Vec3 xxy(X.x() / nxy, X.y() / nxy, 0.0);
    return rotate_z(kPi / 2.0, xxy);
}

std::vector<Vec3> orientation_filter(const std::vector<Vec3>& candidates,
                                     const VertexSectorData& sector,
                                     double branch_tol) {
    std::vector<Vec3> keep;
    for (const Vec3& n : candidates) {
        const double alpha = angle_between(n, sector.e_plus);
        const double beta = angle_between(sector.e_minus, n);
        if (std::abs((alpha + beta) - (2.0 * kPi - sector.gamma)) > branch_tol)
            continue;
        // counter-clockwise from e_plus viewed from +z; the flipped candidate
        // would flip the inserted faces
        if (!(sector.e_plus.cross(n).z() > 0.0)) continue;
        keep.push_back(n);
    }
    return keep;
}

Vec3 solve_direction(const VertexSectorData& sector, const OracleOptions& opt) {
    const auto kept = orientation_filter(solve_horizontal_direction(sector, opt), sector);
    if (kept.empty())
        throw NoValidDirectionError(
            "no horizontal direction satisfies the sector's bondability condition");
    return kept.front();
}

ExtrudedModel build_extruded_model(const MiuraParams& p, const ExtrusionSpec& spec,
                                   int rows, int cols) {
    p.validate(true);
    if (rows < 2 || cols < 2)
        throw DegenerateParameterError("build_extruded_model: rows, cols >= 2 required");
    spec.validate(rows, cols);

    ExtrudedModel m;
    m.params = p;
    m.derived = derive_angles(p);
    m.spec = spec;
    m.rows = rows;
    m.cols = cols;
    m.cuts_sorted = spec.cuts;
    std::sort(m.cuts_sorted.begin(), m.cuts_sorted.end());

    // base positions of the uncut folded mesh
    std::function<Vec3(int, int)> base;
    if (spec.mode == ExtrusionMode::Ordinary) {
        const MiuraDerived d = m.derived;
        base = [d](int i, int j) {
            return Vec3(j * d.pitch_x + (i % 2) * d.stagger_x, i * d.pitch_y,
                        (j % 2) * d.panel_height);
        };
    } else {
        const double ch = std::cos(spec.accordion_angle / 2.0);
        const double sh = std::sin(spec.accordion_angle / 2.0);
        const double wct = p.w * std::cos(p.theta);
        const double wst = p.w * std::sin(p.theta);
        const double l = p.l;
        base = [=](int i, int j) {
            return Vec3(j * wct + (i % 2) * l, j * wst * ch, (j % 2) * wst * sh);
        };
    }

    if (spec.mode == ExtrusionMode::Ordinary) {
        m.sector = world_sector(m.derived);
        m.direction = extrusion_direction(m.derived);
    } else {
        // measure the cut-vertex sector on the alternate-mode mesh and let the
        // oracle find the bond-preserving direction
        const FoldedMesh alt = alternate_mode_mesh(p, spec.accordion_angle, rows, cols);
        const int c0 = m.cuts_sorted.empty() ? 1 : m.cuts_sorted.front();
        m.sector = cut_vertex_sector(alt, c0);
        m.direction = solve_direction(m.sector);
    }
    m.sector.alpha = angle_between(m.direction, m.sector.e_plus);
    m.sector.beta = angle_between(m.sector.e_minus, m.direction);

    std::map<int, std::vector<CutEdge>> paths;
    for (int c : m.cuts_sorted) paths[c] = cut_path_edges(rows, cols, c);
    for (const auto& [c, edges] : paths)
        for (const CutEdge& e : edges) {
            m.cut_of[e.a] = c;
            m.cut_of[e.b] = c;
        }
    std::map<Label, int> split_of;  // face label -> cut whose diagonal splits it
    for (int c : m.cuts_sorted)
        for (const CutEdge& e : paths[c])
            if (e.diagonal) split_of[e.a] = c;

    const int K = static_cast<int>(m.cuts_sorted.size());
    auto ribbon_of = [&](int i, int j, char side, int cc_split) {
        int r = 0;
        for (int cc : m.cuts_sorted) {
            const int col = cc + (i % 2 == 0 ? i / 2 : (i - 1) / 2);
            if (i % 2 == 0) {
                if (j >= col) ++r;
            } else {
                if (j > col) ++r;
                else if (j == col && cc == cc_split && side == 'R') ++r;
            }
        }
        return r;
    };

    struct ProtoFace {
        std::vector<Label> corners;
        int ribbon;
    };
    std::vector<ProtoFace> proto;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const auto it = split_of.find({i, j});
            if (it != split_of.end()) {
                // the path diagonal splits this face into two triangles
                const int c = it->second;
                proto.push_back({{{i, j}, {i, j + 1}, {i + 1, j + 1}},
                                 ribbon_of(i, j, 'R', c)});
                proto.push_back({{{i, j}, {i + 1, j + 1}, {i + 1, j}},
                                 ribbon_of(i, j, 'L', c)});
            } else {
                proto.push_back({{{i, j}, {i, j + 1}, {i + 1, j + 1}, {i + 1, j}},
                                 ribbon_of(i, j, ' ', -1)});
            }
        }

    auto cut_index = [&](int c) {
        return static_cast<int>(std::lower_bound(m.cuts_sorted.begin(),
                                                 m.cuts_sorted.end(), c)
                                - m.cuts_sorted.begin());
    };
    auto getv = [&](const Label& lbl, int ribbon) {
        char side = 'x';
        const auto it = m.cut_of.find(lbl);
        if (it != m.cut_of.end())
            side = (ribbon <= cut_index(it->second)) ? 'L' : 'R';
        const std::tuple<int, int, char> key{lbl.first, lbl.second, side};
        const auto vit = m.vertex_by_key.find(key);
        if (vit != m.vertex_by_key.end()) return vit->second;
        const int id = static_cast<int>(m.mesh.vertices.size());
        m.vertex_by_key.emplace(key, id);
        m.key_of.push_back(key);
        m.mesh.vertices.push_back(base(lbl.first, lbl.second)
                                  + (K - ribbon) * spec.depth * m.direction);
        return id;
    };

    for (const ProtoFace& pf : proto) {
        MeshFace f;
        f.role = FaceRole::Miura;
        for (const Label& c : pf.corners) f.v.push_back(getv(c, pf.ribbon));
        m.mesh.faces.push_back(std::move(f));
    }
    // strip faces between the two copies of each cut edge
    for (int ci = 0; ci < K; ++ci) {
        for (const CutEdge& e : paths[m.cuts_sorted[ci]]) {
            getv(e.a, ci);
            getv(e.a, ci + 1);
            getv(e.b, ci);
            getv(e.b, ci + 1);
            MeshFace f;
            f.v = {m.vertex_by_key.at({e.a.first, e.a.second, 'R'}),
                   m.vertex_by_key.at({e.b.first, e.b.second, 'R'}),
                   m.vertex_by_key.at({e.b.first, e.b.second, 'L'}),
                   m.vertex_by_key.at({e.a.first, e.a.second, 'L'})};
            if (e.diagonal)
                f.role = FaceRole::Web;
            else
                f.role = (std::abs(base(e.a.first, e.a.second).z()) < 1e-9)
                             ? FaceRole::SkinBottom
                             : FaceRole::SkinTop;
            m.mesh.faces.push_back(std::move(f));
        }
    }

    m.mesh.rows = rows;
    m.mesh.cols = cols;
    m.mesh.scale_hint = std::max({p.l, p.w, spec.depth});
    rebuild_edges(m.mesh);
    m.pattern = develop_mesh(m.mesh);
    return m;
}

CreasePattern develop_mesh(const FoldedMesh& mesh) {
    const size_t n = mesh.vertices.size();
    if (mesh.faces.empty() || n == 0)
        throw MalformedStateError("develop_mesh: empty mesh");
    const FaceAdjacency fa = face_adjacency(mesh);
    const double tol = 1e-7 * max_vertex_norm(mesh);

    std::vector<Vec2> pos2(n, Vec2::Zero());
    std::vector<char> placed_v(n, 0), placed_f(mesh.faces.size(), 0);
    auto rot90 = [](const Vec2& v) { return Vec2(-v.y(), v.x()); };

    {
        // seed face in its own isometric frame
        const auto& vs = mesh.faces[0].v;
        const Vec3 o = mesh.vertices[vs[0]];
        const Vec3 e1 = (mesh.vertices[vs[1]] - o).normalized();
        const Vec3 nrm = e1.cross(mesh.vertices[vs[2]] - o).normalized();
        const Vec3 e2 = nrm.cross(e1);
        for (int v : vs) {
            const Vec3 d = mesh.vertices[v] - o;
            pos2[v] = Vec2(d.dot(e1), d.dot(e2));
            placed_v[v] = 1;
        }
        placed_f[0] = 1;
    }
    std::deque<int> q{0};
    while (!q.empty()) {
        const int fi = q.front();
        q.pop_front();
        for (const auto& [fj, e] : fa.adj[fi]) {
            if (placed_f[fj]) continue;
            const int a = e.first, b = e.second;
            const auto& vs = mesh.faces[fj].v;
            const Vec3 eh = (mesh.vertices[b] - mesh.vertices[a]).normalized();
            const Vec3 nrm = ((mesh.vertices[vs[1]] - mesh.vertices[vs[0]])
                                  .cross(mesh.vertices[vs[2]] - mesh.vertices[vs[0]]))
                                 .normalized();
            const Vec3 mh = nrm.cross(eh);
            // (s, t) of the face on the shared edge, interior flipped to t > 0
            std::vector<Vec2> st(vs.size());
            double tbar = 0.0;
            for (size_t k = 0; k < vs.size(); ++k) {
                const Vec3 d = mesh.vertices[vs[k]] - mesh.vertices[a];
                st[k] = Vec2(d.dot(eh), d.dot(mh));
                tbar += st[k].y();
            }
            if (tbar < 0.0)
                for (Vec2& v : st) v.y() = -v.y();
            const Vec2 e2d = (pos2[b] - pos2[a]).normalized();
            int wpar = -1;
            for (int v : mesh.faces[fi].v)
                if (v != a && v != b) { wpar = v; break; }
            const double side_par =
                ((pos2[wpar] - pos2[a]).dot(rot90(e2d)) >= 0.0) ? 1.0 : -1.0;
            // place on the side opposite the parent face
            const Vec2 m2d = -side_par * rot90(e2d);
            for (size_t k = 0; k < vs.size(); ++k) {
                const Vec2 pp = pos2[a] + st[k].x() * e2d + st[k].y() * m2d;
                const int v = vs[k];
                if (placed_v[v]) {
                    const double miss = (pp - pos2[v]).norm();
                    if (miss > tol)
                        throw NonDevelopableError(
                            v, miss,
                            "development inconsistency at vertex " + std::to_string(v));
                } else {
                    pos2[v] = pp;
                    placed_v[v] = 1;
                }
            }
            placed_f[fj] = 1;
            q.push_back(fj);
        }
    }
    for (size_t v = 0; v < n; ++v)
        if (!placed_v[v])
            throw MalformedStateError("develop_mesh: mesh is not face-connected");
    CreasePattern pat;
    pat.vertices = std::move(pos2);
    return pat;
}

CreasePattern develop_model(const ExtrudedModel& m) {
    int worst = -1;
    double worst_defect = 0.0;
    for (int v = 0; v < static_cast<int>(m.mesh.vertices.size()); ++v) {
        if (!vertex_is_interior(m.mesh, v)) continue;
        const double d = std::abs(angle_defect(m.mesh, v));
        if (d > worst_defect) {
            worst_defect = d;
            worst = v;
        }
    }
    if (worst_defect > 1e-8)
        throw NonDevelopableError(worst, worst_defect,
                                  "vertex " + std::to_string(worst)
                                      + " violates the 2 pi sector-sum condition");
    return develop_mesh(m.mesh);
}

std::vector<Vec3> refold_pattern(const FoldedMesh& mesh, const CreasePattern& pattern) {
    const size_t n = mesh.vertices.size();
    if (pattern.vertices.size() != n)
        throw MalformedStateError("refold_pattern: pattern does not index the mesh");
    if (mesh.edges.empty())
        throw MalformedStateError("refold_pattern: mesh carries no edge records");
    std::map<std::pair<int, int>, double> angle_of;
    for (const MeshEdge& e : mesh.edges) {
        int a = e.a, b = e.b;
        if (a > b) std::swap(a, b);
        angle_of[{a, b}] = e.fold_angle;
    }
    const FaceAdjacency fa = face_adjacency(mesh);
    const double tol = 1e-7 * max_vertex_norm(mesh);

    std::vector<Vec3> pos(n, Vec3::Zero());
    std::vector<char> placed_v(n, 0), placed_f(mesh.faces.size(), 0);
    auto rot90 = [](const Vec2& v) { return Vec2(-v.y(), v.x()); };

    for (int v : mesh.faces[0].v) {
        pos[v] = Vec3(pattern.vertices[v].x(), pattern.vertices[v].y(), 0.0);
        placed_v[v] = 1;
    }
    placed_f[0] = 1;
    std::deque<int> q{0};
    while (!q.empty()) {
        const int fi = q.front();
        q.pop_front();
        for (const auto& [fj, e] : fa.adj[fi]) {
            if (placed_f[fj]) continue;
            const int a = e.first, b = e.second;
            const auto& vs = mesh.faces[fj].v;
            // child planar geometry relative to the edge, interior at t > 0
            const Vec2 a2 = pattern.vertices[a];
            const Vec2 e2d = (pattern.vertices[b] - a2).normalized();
            const Vec2 n2d = rot90(e2d);
            std::vector<Vec2> st(vs.size());
            double tbar = 0.0;
            for (size_t k = 0; k < vs.size(); ++k) {
                const Vec2 d = pattern.vertices[vs[k]] - a2;
                st[k] = Vec2(d.dot(e2d), d.dot(n2d));
                tbar += st[k].y();
            }
            if (tbar < 0.0)
                for (Vec2& v : st) v.y() = -v.y();

            const Vec3 e3 = (pos[b] - pos[a]).normalized();
            int wpar = -1;
            for (int v : mesh.faces[fi].v)
                if (v != a && v != b) { wpar = v; break; }
            Vec3 mpar = pos[wpar] - pos[a];
            mpar -= mpar.dot(e3) * e3;
            mpar.normalize();
            const Vec3 flat_dir = -mpar;  // child side when unfolded flat

            int wch = -1;
            size_t wch_k = 0;
            for (size_t k = 0; k < vs.size(); ++k)
                if (vs[k] != a && vs[k] != b) { wch = vs[k]; wch_k = k; break; }

            // parent acts as the left face when it traverses a -> b
            bool parent_left = false;
            {
                const auto& pv = mesh.faces[fi].v;
                const int np = static_cast<int>(pv.size());
                for (int k = 0; k < np; ++k)
                    if (pv[k] == a && pv[(k + 1) % np] == b) { parent_left = true; break; }
            }
            const double target = angle_of.at({std::min(a, b), std::max(a, b)});
            auto wing_at = [&](double delta) {
                const Vec3 md = std::cos(delta) * flat_dir + std::sin(delta) * e3.cross(flat_dir);
                return Vec3(pos[a] + st[wch_k].x() * e3 + st[wch_k].y() * md);
            };
            double delta = target;
            {
                const Vec3 wpos = wing_at(target);
                const double meas = parent_left
                                        ? dihedral_raw(pos[a], pos[b], pos[wpar], wpos)
                                        : dihedral_raw(pos[b], pos[a], pos[wpar], wpos);
                if (std::abs(meas - target) > 1e-6) delta = -target;
            }
            const Vec3 md = std::cos(delta) * flat_dir + std::sin(delta) * e3.cross(flat_dir);
            for (size_t k = 0; k < vs.size(); ++k) {
                const Vec3 pp = pos[a] + st[k].x() * e3 + st[k].y() * md;
                const int v = vs[k];
                if (placed_v[v]) {
                    if ((pp - pos[v]).norm() > tol)
                        throw MalformedStateError(
                            "refold inconsistency at vertex " + std::to_string(v));
                } else {
                    pos[v] = pp;
                    placed_v[v] = 1;
                }
            }
            placed_f[fj] = 1;
            q.push_back(fj);
        }
    }
    for (size_t v = 0; v < n; ++v)
        if (!placed_v[v])
            throw MalformedStateError("refold_pattern: mesh is not face-connected");
    return pos;
}

double ValidationReport::max_vertex_defect() const {
    double m = 0.0;
    for (const auto& [v, d] : vertex_defects) m = std::max(m, d);
    return m;
}

double ValidationReport::max_face_planarity() const {
    double m = 0.0;
    for (const auto& [f, d] : face_planarity) m = std::max(m, d);
    return m;
}

double ValidationReport::max_skin_deviation() const {
    double m = 0.0;
    for (const auto& [f, d] : skin_deviation) m = std::max(m, d);
    return m;
}

std::vector<int> ValidationReport::vertices_over(double defect_tol) const {
    std::vector<int> out;
    for (const auto& [v, d] : vertex_defects)
        if (d > defect_tol) out.push_back(v);
    return out;
}

bool ValidationReport::developable(double defect_tol) const {
    return max_vertex_defect() < defect_tol;
}

bool ValidationReport::bondable(double skin_tol_factor) const {
    return max_skin_deviation() < skin_tol_factor * scale;
}

ValidationReport validate_model(const FoldedMesh& mesh, double intersection_tol_factor) {
    ValidationReport rep;
    rep.scale = mesh.scale();
    for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v)
        if (vertex_is_interior(mesh, v))
            rep.vertex_defects.emplace_back(v, std::abs(angle_defect(mesh, v)));

    const double s3 = rep.scale * rep.scale * rep.scale;
    for (int fi = 0; fi < static_cast<int>(mesh.faces.size()); ++fi) {
        const auto& vs = mesh.faces[fi].v;
        if (vs.size() != 4) continue;
        Eigen::Matrix3d mtx;
        mtx.row(0) = (mesh.vertices[vs[1]] - mesh.vertices[vs[0]]).transpose();
        mtx.row(1) = (mesh.vertices[vs[2]] - mesh.vertices[vs[0]]).transpose();
        mtx.row(2) = (mesh.vertices[vs[3]] - mesh.vertices[vs[0]]).transpose();
        rep.face_planarity.emplace_back(fi, std::abs(mtx.determinant()) / (6.0 * s3));
    }

    // best-fit plane per skin role (works in any rigid frame)
    for (const FaceRole role : {FaceRole::SkinBottom, FaceRole::SkinTop}) {
        std::set<int> ids;
        for (const auto& f : mesh.faces)
            if (f.role == role)
                for (int v : f.v) ids.insert(v);
        if (ids.empty()) continue;
        Vec3 c = Vec3::Zero();
        for (int v : ids) c += mesh.vertices[v];
        c /= static_cast<double>(ids.size());
        Eigen::MatrixXd pts(ids.size(), 3);
        int r = 0;
        for (int v : ids) pts.row(r++) = (mesh.vertices[v] - c).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pts, Eigen::ComputeThinV);
        const Vec3 nrm = svd.matrixV().col(2);
        if (role == FaceRole::SkinBottom)
            rep.skin_z_bottom = c.z();
        else
            rep.skin_z_top = c.z();
        for (int fi = 0; fi < static_cast<int>(mesh.faces.size()); ++fi) {
            if (mesh.faces[fi].role != role) continue;
            double dev = 0.0;
            for (int v : mesh.faces[fi].v)
                dev = std::max(dev, std::abs((mesh.vertices[v] - c).dot(nrm)));
            rep.skin_deviation.emplace_back(fi, dev);
        }
    }

    rep.intersections = intersecting_face_pairs(mesh, intersection_tol_factor);
    return rep;
}

ValidationReport validate_model(const ExtrudedModel& m) {
    return validate_model(m.mesh);
}

bool triangles_cross(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                     double tol) {
    const Vec3 n2 = ((t2[1] - t2[0]).cross(t2[2] - t2[0])).normalized();
    Vec3 d1;
    for (int k = 0; k < 3; ++k) d1[k] = n2.dot(t1[k] - t2[0]);
    if (d1.minCoeff() > -tol || d1.maxCoeff() < tol) return false;
    const Vec3 n1 = ((t1[1] - t1[0]).cross(t1[2] - t1[0])).normalized();
    Vec3 d2;
    for (int k = 0; k < 3; ++k) d2[k] = n1.dot(t2[k] - t1[0]);
    if (d2.minCoeff() > -tol || d2.maxCoeff() < tol) return false;
    Vec3 axis = n1.cross(n2);
    const double na = axis.norm();
    if (na < 1e-12) return false;
    axis /= na;

    auto interval = [&](const std::array<Vec3, 3>& tri, const Vec3& dist,
                        double& lo, double& hi) {
        int cnt = 0;
        double ts[3];
        for (int k = 0; k < 3; ++k) {
            const double da = dist[k], db = dist[(k + 1) % 3];
            if ((da > 0.0) != (db > 0.0)) {
                const double t = da / (da - db);
                const Vec3 pnt = tri[k] + t * (tri[(k + 1) % 3] - tri[k]);
                ts[cnt++] = axis.dot(pnt);
            }
        }
        if (cnt < 2) return false;
        lo = *std::min_element(ts, ts + cnt);
        hi = *std::max_element(ts, ts + cnt);
        return true;
    };
    double lo1, hi1, lo2, hi2;
    if (!interval(t1, d1, lo1, hi1) || !interval(t2, d2, lo2, hi2)) return false;
    return std::min(hi1, hi2) - std::max(lo1, lo2) > tol;
}

std::vector<std::array<int, 3>> face_triangles(const MeshFace& face) {
    std::vector<std::array<int, 3>> tris;
    for (size_t k = 1; k + 1 < face.v.size(); ++k)
        tris.push_back({face.v[0], face.v[k], face.v[k + 1]});
    return tris;
}

std::vector<std::pair<int, int>> intersecting_face_pairs(const FoldedMesh& mesh,
                                                         double tol_factor) {
    struct TriRec {
        int face;
        std::array<int, 3> v;
        Vec3 lo, hi;
    };
    std::vector<TriRec> tris;
    for (int fi = 0; fi < static_cast<int>(mesh.faces.size()); ++fi)
        for (const auto& t : face_triangles(mesh.faces[fi])) {
            TriRec rec;
            rec.face = fi;
            rec.v = t;
            rec.lo = rec.hi = mesh.vertices[t[0]];
            for (int k = 1; k < 3; ++k) {
                rec.lo = rec.lo.cwiseMin(mesh.vertices[t[k]]);
                rec.hi = rec.hi.cwiseMax(mesh.vertices[t[k]]);
            }
            tris.push_back(rec);
        }
    const double tol = tol_factor * mesh.scale();
    std::set<std::pair<int, int>> bad;
    for (size_t i = 0; i < tris.size(); ++i) {
        for (size_t j = i + 1; j < tris.size(); ++j) {
            const TriRec& ti = tris[i];
            const TriRec& tj = tris[j];
            if (ti.face == tj.face) continue;
            bool share = false;
            for (int a : ti.v)
                for (int b : tj.v)
                    if (a == b) share = true;
            if (share) continue;
            if ((ti.lo.array() > tj.hi.array() + tol).any() ||
                (tj.lo.array() > ti.hi.array() + tol).any())
                continue;
            const std::array<Vec3, 3> P{mesh.vertices[ti.v[0]], mesh.vertices[ti.v[1]],
                                        mesh.vertices[ti.v[2]]};
            const std::array<Vec3, 3> Q{mesh.vertices[tj.v[0]], mesh.vertices[tj.v[1]],
                                        mesh.vertices[tj.v[2]]};
            if (triangles_cross(P, Q, tol))
                bad.insert({std::min(ti.face, tj.face), std::max(ti.face, tj.face)});
        }
    }
    return {bad.begin(), bad.end()};
}

} // namespace miurex
