#include "miurex/foldsim.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace miurex {

namespace {

constexpr double kPi = std::numbers::pi;

double dihedral_x(const Eigen::VectorXd& X, const std::array<int, 4>& st) {
    auto P = [&](int i) { return Vec3(X[3 * i], X[3 * i + 1], X[3 * i + 2]); };
    const Vec3 A = P(st[0]), B = P(st[1]);
    const Vec3 e = (B - A).normalized();
    Vec3 u1 = P(st[2]) - A;
    u1 -= u1.dot(e) * e;
    Vec3 u2 = P(st[3]) - A;
    u2 -= u2.dot(e) * e;
    const double ang = std::atan2(u1.cross(u2).dot(e), u1.dot(u2));
    return ang > 0.0 ? kPi - ang : -kPi - ang;
}

struct Drive {
    std::array<int, 4> stencil;
    double target;
};

/*
Finite-patch constraint system. Unknowns X = all vertex positions (3N).
Rows: edge lengths (d^2 - L0^2)/(2 S^2); quad planarity det/(6 S^3) with the
face's shorter diagonal length fixing its shape; six pin rows fixing the
first quad's frame; one row per drive, (fold_angle - target)/pi. All but the
drive rows have analytic gradients; drives use forward differences.
*/
class PatchSim {
public:
    explicit PatchSim(const TriangulatedModel& t) : tm(t) {
        const FoldedMesh& mesh = t.model->mesh;
        N = static_cast<int>(mesh.vertices.size());
        S = t.model->scale();
        const auto& pos = mesh.vertices;

        std::set<std::pair<int, int>> seen;
        for (const MeshFace& f : mesh.faces) {
            const int m = static_cast<int>(f.v.size());
            for (int k = 0; k < m; ++k) {
                int a = f.v[k], b = f.v[(k + 1) % m];
                if (a > b) std::swap(a, b);
                if (seen.insert({a, b}).second)
                    cons.push_back({0, a, b, -1, -1, (pos[a] - pos[b]).norm()});
            }
            const bool skin =
                f.role == FaceRole::SkinTop || f.role == FaceRole::SkinBottom;
            if (m == 4 && (!skin || t.skins_rigid)) {
                const int a = f.v[0], b = f.v[1], c = f.v[2], d = f.v[3];
                cons.push_back({0, a, c, -1, -1, (pos[a] - pos[c]).norm()});
                cons.push_back({1, a, b, c, d, 0.0});
            }
        }
        if (!t.skins_rigid) {
            for (const auto& st : t.aux)
                cons.push_back(
                    {0, st[0], st[1], -1, -1, (pos[st[0]] - pos[st[1]]).norm()});
            // The free patch has one fold mode per cut besides the pleat
            // mode, so the fold angle alone does not pick a state. Skins
            // whose cut edges sit two rows apart in the same column are
            // images under the tessellation's vertical period (and share an
            // edge in the final state); tying their bend angles equal keeps
            // the continuation on the periodic branch and leaves one mode.
            if (!std::getenv("MIUREX_NO_TIES")) {
                std::map<std::pair<int, int>, size_t> by_edge;
                size_t k = 0;
                for (const MeshFace& f : mesh.faces) {
                    if (f.role != FaceRole::SkinTop && f.role != FaceRole::SkinBottom)
                        continue;
                    int imin = std::numeric_limits<int>::max(), jc = 0;
                    for (int v : f.v) {
                        const auto& [iv, jv, side] = t.model->key_of[v];
                        imin = std::min(imin, iv);
                        jc = jv;
                    }
                    by_edge[{imin, jc}] = k++;
                }
                for (const auto& [lab, ka] : by_edge) {
                    auto it = by_edge.find({lab.first + 2, lab.second});
                    if (it != by_edge.end())
                        ties.push_back({t.aux[ka], t.aux[it->second], 1.0});
                }
            }
        }

        // pins: first quad (a0, b0, c0) fixes the rigid-motion frame
        const MeshFace* pf = nullptr;
        for (const MeshFace& f : mesh.faces)
            if (f.v.size() == 4) { pf = &f; break; }
        if (!pf) throw MalformedStateError("simulation needs at least one quad face");
        a0 = pf->v[0];
        b0 = pf->v[1];
        c0 = pf->v[2];
        pin_a0 = pos[a0];
        const Vec3 e0 = (pos[b0] - pos[a0]).normalized();
        n0 = ((pos[b0] - pos[a0]).cross(pos[c0] - pos[a0])).normalized();
        m1 = n0.cross(e0);
        b0_m1 = pos[b0].dot(m1);
        b0_n0 = pos[b0].dot(n0);
        c0_n0 = pos[c0].dot(n0);
    }

    int unknowns() const { return 3 * N; }
    int rows(int ndrives) const {
        return static_cast<int>(cons.size()) + 6 + static_cast<int>(ties.size())
               + ndrives;
    }

    Eigen::VectorXd pack(const std::vector<Vec3>& pos) const {
        Eigen::VectorXd X(unknowns());
        for (int k = 0; k < N; ++k) X.segment<3>(3 * k) = pos[k];
        return X;
    }
    std::vector<Vec3> positions_of(const Eigen::VectorXd& X) const {
        std::vector<Vec3> out(N);
        for (int k = 0; k < N; ++k) out[k] = X.segment<3>(3 * k);
        return out;
    }

    Eigen::VectorXd residuals(const Eigen::VectorXd& X,
                              const std::vector<Drive>& drives) const {
        Eigen::VectorXd r(rows(static_cast<int>(drives.size())));
        int i = 0;
        auto P = [&](int k) { return Vec3(X.segment<3>(3 * k)); };
        for (const Con& c : cons) {
            if (c.kind == 0) {
                const Vec3 dv = P(c.a) - P(c.b);
                r[i++] = (dv.squaredNorm() - c.L0 * c.L0) / (2.0 * S * S);
            } else {
                Eigen::Matrix3d m;
                m.row(0) = (P(c.b) - P(c.a)).transpose();
                m.row(1) = (P(c.c) - P(c.a)).transpose();
                m.row(2) = (P(c.d) - P(c.a)).transpose();
                r[i++] = m.determinant() / (6.0 * S * S * S);
            }
        }
        r.segment<3>(i) = (P(a0) - pin_a0) / S;
        i += 3;
        r[i++] = (P(b0).dot(m1) - b0_m1) / S;
        r[i++] = (P(b0).dot(n0) - b0_n0) / S;
        r[i++] = (P(c0).dot(n0) - c0_n0) / S;
        for (const auto& [sa, sb, sgn] : ties)
            r[i++] = (dihedral_x(X, sa) - sgn * dihedral_x(X, sb)) / kPi;
        for (const Drive& d : drives)
            r[i++] = (dihedral_x(X, d.stencil) - d.target) / kPi;
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& X,
                             const std::vector<Drive>& drives) const {
        Eigen::MatrixXd J =
            Eigen::MatrixXd::Zero(rows(static_cast<int>(drives.size())), unknowns());
        int i = 0;
        auto P = [&](int k) { return Vec3(X.segment<3>(3 * k)); };
        for (const Con& c : cons) {
            if (c.kind == 0) {
                const Vec3 dv = (P(c.a) - P(c.b)) / (S * S);
                J.block<1, 3>(i, 3 * c.a) = dv.transpose();
                J.block<1, 3>(i, 3 * c.b) = -dv.transpose();
            } else {
                const Vec3 u = P(c.b) - P(c.a);
                const Vec3 v = P(c.c) - P(c.a);
                const Vec3 w = P(c.d) - P(c.a);
                const double s3 = 6.0 * S * S * S;
                const Vec3 gu = v.cross(w) / s3;
                const Vec3 gv = w.cross(u) / s3;
                const Vec3 gw = u.cross(v) / s3;
                J.block<1, 3>(i, 3 * c.b) = gu.transpose();
                J.block<1, 3>(i, 3 * c.c) = gv.transpose();
                J.block<1, 3>(i, 3 * c.d) = gw.transpose();
                J.block<1, 3>(i, 3 * c.a) = -(gu + gv + gw).transpose();
            }
            ++i;
        }
        for (int comp = 0; comp < 3; ++comp) J(i + comp, 3 * a0 + comp) = 1.0 / S;
        i += 3;
        J.block<1, 3>(i++, 3 * b0) = m1.transpose() / S;
        J.block<1, 3>(i++, 3 * b0) = n0.transpose() / S;
        J.block<1, 3>(i++, 3 * c0) = n0.transpose() / S;
        const double hstep = 1e-6 * S;
        // central differences keep the truncation error well below the
        // null-space rank threshold
        for (const auto& [sa, sb, sgn] : ties) {
            std::set<int> ids(sa.begin(), sa.end());
            ids.insert(sb.begin(), sb.end());
            Eigen::VectorXd XX = X;
            for (int idx : ids)
                for (int comp = 0; comp < 3; ++comp) {
                    XX[3 * idx + comp] = X[3 * idx + comp] + hstep;
                    const double fp =
                        dihedral_x(XX, sa) - sgn * dihedral_x(XX, sb);
                    XX[3 * idx + comp] = X[3 * idx + comp] - hstep;
                    const double fm =
                        dihedral_x(XX, sa) - sgn * dihedral_x(XX, sb);
                    XX[3 * idx + comp] = X[3 * idx + comp];
                    J(i, 3 * idx + comp) = (fp - fm) / (2.0 * hstep) / kPi;
                }
            ++i;
        }
        for (const Drive& d : drives) {
            std::set<int> ids(d.stencil.begin(), d.stencil.end());
            Eigen::VectorXd XX = X;
            for (int idx : ids)
                for (int comp = 0; comp < 3; ++comp) {
                    XX[3 * idx + comp] = X[3 * idx + comp] + hstep;
                    const double fp = dihedral_x(XX, d.stencil);
                    XX[3 * idx + comp] = X[3 * idx + comp] - hstep;
                    const double fm = dihedral_x(XX, d.stencil);
                    XX[3 * idx + comp] = X[3 * idx + comp];
                    J(i, 3 * idx + comp) = (fp - fm) / (2.0 * hstep) / kPi;
                }
            ++i;
        }
        return J;
    }

    bool newton(Eigen::VectorXd& X, const std::vector<Drive>& drives,
                double tol = 5e-11, int itmax = 60) const {
        for (int it = 0; it < itmax; ++it) {
            const Eigen::VectorXd r = residuals(X, drives);
            const double nr = r.lpNorm<Eigen::Infinity>();
            if (nr < tol) return true;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
                jacobian(X, drives));
            cod.setThreshold(1e-12);
            const Eigen::VectorXd dx = cod.solve(-r);
            double lam = 1.0;
            bool ok = false;
            for (int h = 0; h < 30; ++h) {
                const Eigen::VectorXd Xn = X + lam * dx;
                if (residuals(Xn, drives).lpNorm<Eigen::Infinity>() < nr) {
                    X = Xn;
                    ok = true;
                    break;
                }
                lam /= 2.0;
            }
            if (!ok) return false;
        }
        return false;
    }

    double measure(const Eigen::VectorXd& X, const HingeStencil& st) const {
        if (st.v[0] < 0) return 0.0;
        return dihedral_x(X, st.v);
    }

    const TriangulatedModel& tm;
    int N = 0;
    double S = 1.0;
    struct Con {
        int kind;  // 0 length, 1 planarity
        int a, b, c, d;
        double L0;
    };
    std::vector<Con> cons;
    struct Tie {
        std::array<int, 4> a, b;
        double sign;
    };
    std::vector<Tie> ties;
    int a0 = 0, b0 = 0, c0 = 0;
    Vec3 pin_a0{Vec3::Zero()}, n0{Vec3::Zero()}, m1{Vec3::Zero()};
    double b0_m1 = 0.0, b0_n0 = 0.0, c0_n0 = 0.0;
};

struct RawSample {
    double phi, sigma;
    Eigen::VectorXd X;
};

struct LegInfo {
    bool switched = false;
    bool failed = false;
    double phi_max = 0.0;
    double switch_phi = 0.0;
    double fail_phi = 0.0;
};

/*
Monotone drive-target continuation: advance the phi target by h, solve from a
linear predictor, halve h on failure; when h underflows near the top of the
sweep switch the drive to sigma and walk it to zero (the blocked state),
otherwise report failure at the stall angle.
*/
std::vector<RawSample> drive_leg(const PatchSim& sim, const HingeStencil& obl,
                                 const HingeStencil& sig, Eigen::VectorXd X,
                                 double phi_end, int steps, LegInfo& info,
                                 double tol = 1e-10) {
    if (!sim.newton(X, {}, tol))
        throw ContinuationError(0.0, "seed state does not satisfy the constraints");
    const double phi0 = sim.measure(X, obl);
    std::vector<RawSample> samples{{phi0, sim.measure(X, sig), X}};
    double h = (phi_end - phi0) / steps;
    double hmin = 1e-6;
    bool phi_mode = true;
    bool have_prev = false;
    Eigen::VectorXd Xprev;
    double target = phi0;
    info.phi_max = phi0;
    for (int nacc = 0; nacc < 20000;) {
        if (phi_mode) {
            if ((phi_end > phi0 && target >= phi_end - 1e-12) ||
                (phi_end < phi0 && target <= phi_end + 1e-12) || phi_end == phi0)
                break;
            target += h;
            target = phi_end > phi0 ? std::min(target, phi_end)
                                    : std::max(target, phi_end);
        } else {
            target += h;
            if (target * h > 0 && std::abs(target) < std::abs(h)) target = 0.0;
        }
        const Drive drive{phi_mode ? obl.v : sig.v, target};
        Eigen::VectorXd Xn = have_prev ? Eigen::VectorXd(X + (X - Xprev)) : X;
        bool ok = sim.newton(Xn, {drive}, tol);
        if (!ok) {
            Xn = X;
            ok = sim.newton(Xn, {drive}, tol);
        }
        if (!ok) {
            target -= h;
            h /= 2.0;
            if (std::abs(h) < hmin) {
                if (phi_mode && phi_end > phi0 &&
                    (info.phi_max > 0.95 * phi_end ||
                     std::getenv("MIUREX_FORCE_SWITCH"))) {
                    const double sgv = sim.measure(X, sig);
                    phi_mode = false;
                    info.switched = true;
                    info.switch_phi = sim.measure(X, obl);
                    if (std::abs(sgv) < 1e-11) break;
                    target = sgv;
                    h = -sgv / 50.0;
                    hmin = std::abs(sgv) * 1e-7;
                    have_prev = false;
                    continue;
                }
                info.failed = true;
                info.fail_phi = sim.measure(X, obl);
                break;
            }
            continue;
        }
        Xprev = X;
        have_prev = true;
        X = Xn;
        ++nacc;
        const double phi = sim.measure(X, obl);
        const double sg = sim.measure(X, sig);
        info.phi_max = std::max(info.phi_max, phi);
        samples.push_back({phi, sg, X});
        if (!phi_mode &&
            (sg * samples.front().sigma < 0 || std::abs(sg) < 1e-11 || target == 0.0))
            break;
    }
    return samples;
}

// Walk the pure skin-bend family at phi ~ 0 linearly down to sigma = 0.
std::vector<RawSample> sigma_polish(const PatchSim& sim, const HingeStencil& obl,
                                    const HingeStencil& sig, Eigen::VectorXd X,
                                    int steps, bool& ok_out, double tol = 1e-10) {
    const double s0 = sim.measure(X, sig);
    std::vector<RawSample> out;
    ok_out = true;
    for (int k = 1; k <= steps; ++k) {
        const double tgt = s0 * (1.0 - static_cast<double>(k) / steps);
        Eigen::VectorXd Xn = X;
        if (!sim.newton(Xn, {{sig.v, tgt}}, tol)) {
            ok_out = false;
            return out;
        }
        X = Xn;
        out.push_back({sim.measure(X, obl), sim.measure(X, sig), X});
    }
    return out;
}

PathSample to_path_sample(const PatchSim& sim, const RawSample& s) {
    PathSample ps;
    ps.phi = s.phi;
    ps.sigma = s.sigma;
    ps.residual = sim.residuals(s.X, {}).lpNorm<Eigen::Infinity>();
    ps.positions = sim.positions_of(s.X);
    return ps;
}

FoldPath assemble_path(std::shared_ptr<const TriangulatedModel> t,
                       const PatchSim& sim, const std::vector<RawSample>& raw,
                       const FoldPathMeta& meta) {
    FoldPath path;
    path.model = std::move(t);
    path.meta = meta;
    path.samples.reserve(raw.size());
    for (const RawSample& s : raw) path.samples.push_back(to_path_sample(sim, s));
    return path;
}

HingeStencil select_phi_stencil(const ExtrudedModel& m) {
    const FoldedMesh& mesh = m.mesh;
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
    struct Cand {
        int i, j;
    };
    std::vector<Cand> cands;
    for (int i = 0; i + 1 <= m.rows; ++i)
        for (int j = 1; j < m.cols; ++j) cands.push_back({i, j});
    const double ic = m.rows / 2.0, jc = m.cols / 2.0;
    std::stable_sort(cands.begin(), cands.end(), [&](const Cand& x, const Cand& y) {
        const auto key = [&](const Cand& c) {
            return std::make_tuple(c.i % 2 != 0, std::abs(c.i - ic), std::abs(c.j - jc),
                                   c.i, c.j);
        };
        return key(x) < key(y);
    });
    for (const Cand& c : cands) {
        if (m.is_cut_vertex(c.i, c.j) || m.is_cut_vertex(c.i + 1, c.j)) continue;
        const auto ka = m.vertex_by_key.find({c.i, c.j, 'x'});
        const auto kb = m.vertex_by_key.find({c.i + 1, c.j, 'x'});
        if (ka == m.vertex_by_key.end() || kb == m.vertex_by_key.end()) continue;
        int a = ka->second, b = kb->second;
        int lo = std::min(a, b), hi = std::max(a, b);
        const auto it = edge2faces.find({lo, hi});
        if (it == edge2faces.end() || it->second.size() != 2) continue;
        // wings: the row-i corner at column j+1 (first) and j-1 (second)
        int wplus = -1, wminus = -1;
        for (int fi : it->second)
            for (int v : mesh.faces[fi].v) {
                const int vi = std::get<0>(m.key_of[v]);
                const int vj = std::get<1>(m.key_of[v]);
                if (vi == c.i && vj == c.j + 1) wplus = v;
                if (vi == c.i && vj == c.j - 1) wminus = v;
            }
        if (wplus < 0 || wminus < 0) continue;
        HingeStencil st;
        st.v = {a, b, wplus, wminus};
        return st;
    }
    throw MalformedStateError("no uncut oblique hinge available for the phi drive");
}

TriangulatedModel make_sim_model(std::shared_ptr<const ExtrudedModel> m,
                                 bool rigid) {
    TriangulatedModel t;
    t.model = std::move(m);
    t.skins_rigid = rigid;
    const FoldedMesh& mesh = t.model->mesh;
    for (const MeshFace& f : mesh.faces) {
        if (f.role != FaceRole::SkinTop && f.role != FaceRole::SkinBottom) continue;
        const int a = f.v[0], b = f.v[1], c = f.v[2], d = f.v[3];
        const double d1 = (mesh.vertices[a] - mesh.vertices[c]).norm();
        const double d2 = (mesh.vertices[b] - mesh.vertices[d]).norm();
        if (d1 <= d2)
            t.aux.push_back({a, c, b, d});
        else
            t.aux.push_back({b, d, c, a});
    }
    t.phi_stencil = select_phi_stencil(*t.model);
    if (!t.aux.empty()) t.sigma_stencil.v = t.aux[t.aux.size() / 2];
    return t;
}

} // namespace

TriangulatedModel triangulate_skins(std::shared_ptr<const ExtrudedModel> m) {
    return make_sim_model(std::move(m), false);
}

TriangulatedModel triangulate_skins(const ExtrudedModel& m) {
    return make_sim_model(std::make_shared<const ExtrudedModel>(m), false);
}

TriangulatedModel rigid_skin_model(std::shared_ptr<const ExtrudedModel> m) {
    return make_sim_model(std::move(m), true);
}

int constraint_nulldim(const TriangulatedModel& t, const std::vector<Vec3>& positions) {
    PatchSim sim(t);
    const Eigen::VectorXd X0 = sim.pack(positions);
    const Eigen::MatrixXd J = sim.jacobian(X0, {});
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    if (std::getenv("MIUREX_SV_DEBUG")) {
        std::fprintf(stderr, "sv tail:");
        for (int k = std::max(0, (int)sv.size() - 8); k < sv.size(); ++k)
            std::fprintf(stderr, " %.3e", sv[k]);
        std::fprintf(stderr, "  (rows %d cols %d)\n", (int)J.rows(), (int)J.cols());
    }
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
        if (sv[k] > 1e-9) ++rank;
    return sim.unknowns() - rank;
}

int constraint_nulldim(const TriangulatedModel& t) {
    return constraint_nulldim(t, t.model->mesh.vertices);
}

const char* to_string(StateLabel label) {
    switch (label) {
        case StateLabel::Developed: return "developed";
        case StateLabel::Construction: return "construction";
        case StateLabel::Final: return "final";
    }
    return "?";
}

bool SigmaZeroStates::has(StateLabel label) const {
    return find(label) != nullptr;
}

const SigmaZeroState* SigmaZeroStates::find(StateLabel label) const {
    for (const SigmaZeroState& s : states)
        if (s.label == label) return &s;
    return nullptr;
}

FoldPath simulate_fold_path(std::shared_ptr<const TriangulatedModel> t,
                            double phi_from, double phi_to, double step) {
    if (!t || !t->model) throw MalformedStateError("simulate_fold_path: empty model");
    if (!(step > 0.0))
        throw DegenerateParameterError("simulate_fold_path: step must be positive");
    for (double v : {phi_from, phi_to})
        if (!(v >= 0.0) || !(v <= kPi))
            throw DegenerateParameterError(
                "simulate_fold_path: hinge angles lie in [0, pi]");
    const double lo = std::min(phi_from, phi_to);
    const double hi = std::max(phi_from, phi_to);

    PatchSim sim(*t);
    Eigen::VectorXd Xc = sim.pack(t->model->mesh.vertices);
    if (!sim.newton(Xc, {}))
        throw ContinuationError(0.0, "construction state does not satisfy constraints");
    const double phi_c = sim.measure(Xc, t->phi_stencil);
    const int steps_full = std::max(20, static_cast<int>(std::lround(kPi / step)));

    FoldPathMeta meta;
    meta.phi_construction = phi_c;

    // down leg (construction -> lo), with sigma polish onto the developed state
    std::vector<RawSample> down, polish;
    if (lo < phi_c) {
        const int nd = std::max(
            20, static_cast<int>(std::lround(steps_full * (phi_c - lo) / kPi)));
        LegInfo dinfo;
        down = drive_leg(sim, t->phi_stencil, t->sigma_stencil, Xc, lo, nd, dinfo);
        if (dinfo.failed) {
            meta.phi_max = dinfo.phi_max;
            throw FoldContinuationError(
                dinfo.fail_phi, assemble_path(t, sim, down, meta),
                "fold path stalled while unfolding, at phi = "
                    + std::to_string(dinfo.fail_phi));
        }
        if (lo < 1e-12) {
            const double s0 = std::abs(down.back().sigma);
            const int np =
                std::max<int>(12, static_cast<int>(std::ceil(s0 / (5.0 * step))));
            bool ok = false;
            polish = sigma_polish(sim, t->phi_stencil, t->sigma_stencil,
                                  down.back().X, np, ok);
            if (!ok)
                throw FoldContinuationError(
                    down.back().phi, assemble_path(t, sim, down, meta),
                    "skin-bend polish onto the developed state failed");
        }
    }

    // up leg (construction -> hi), sigma-switch near a blocked top
    std::vector<RawSample> up;
    LegInfo uinfo;
    if (hi > phi_c) {
        const int nu = std::max(
            20, static_cast<int>(std::lround(steps_full * (hi - phi_c) / kPi)));
        up = drive_leg(sim, t->phi_stencil, t->sigma_stencil, Xc, hi, nu, uinfo);
    }
    meta.phi_max = std::max(uinfo.phi_max, phi_c);
    meta.switched = uinfo.switched;
    meta.switch_phi = uinfo.switch_phi;

    // splice: developed, reversed polish, reversed down, construction, up
    std::vector<RawSample> raw;
    if (!polish.empty()) {
        raw.push_back(polish.back());
        for (auto it = polish.rbegin() + 1; it != polish.rend(); ++it)
            raw.push_back(*it);
    }
    for (size_t k = down.size(); k-- > 1;) raw.push_back(down[k]);
    if (!up.empty()) {
        raw.insert(raw.end(), up.begin(), up.end());
    } else if (!down.empty()) {
        raw.push_back(down.front());
    } else {
        raw.push_back({phi_c, sim.measure(Xc, t->sigma_stencil), Xc});
    }

    // trim to the requested window (small slack: endpoint states sit at the
    // window edge up to solver noise); a sigma-switch tail may fall back in phi
    std::vector<RawSample> kept;
    for (const RawSample& s : raw)
        if (s.phi >= lo - 1e-7 && s.phi <= hi + 1e-7) kept.push_back(s);
    if (phi_from > phi_to) std::reverse(kept.begin(), kept.end());

    if (uinfo.failed) {
        meta.phi_max = uinfo.phi_max;
        throw FoldContinuationError(
            uinfo.fail_phi, assemble_path(t, sim, kept, meta),
            "fold path blocked before the target angle, at phi = "
                + std::to_string(uinfo.fail_phi));
    }
    return assemble_path(t, sim, kept, meta);
}

SigmaZeroStates find_sigma_zero_states(const FoldPath& path) {
    if (!path.model || path.samples.empty())
        throw MalformedStateError("find_sigma_zero_states: empty path");
    const TriangulatedModel& t = *path.model;
    PatchSim sim(t);
    const auto XOf = [&](const PathSample& s) { return sim.pack(s.positions); };

    struct Cross {
        double phi, sigma;
        Eigen::VectorXd X;
    };
    std::vector<Cross> out;
    const double endpoint_tol = 1e-9;
    const auto& ss = path.samples;
    if (std::abs(ss.front().sigma) < endpoint_tol)
        out.push_back({ss.front().phi, ss.front().sigma, XOf(ss.front())});
    for (size_t k = 1; k < ss.size(); ++k) {
        const double p0 = ss[k - 1].phi, s0 = ss[k - 1].sigma;
        const double p1 = ss[k].phi, s1 = ss[k].sigma;
        if (std::abs(s1) < 1e-12 && k + 1 < ss.size()) {
            out.push_back({p1, s1, XOf(ss[k])});
            continue;
        }
        if (s0 * s1 < 0 && std::abs(s0) > 1e-12 && std::abs(s1) > 1e-12) {
            if (std::abs(p0 - p1) < 1e-13)
                continue;  // vertical (skin-bend) segment: covered by the endpoint
            double a = p0, b = p1, sa = s0;
            Eigen::VectorXd Xa = XOf(ss[k - 1]), Xb = XOf(ss[k]);
            for (int it = 0; it < 80; ++it) {
                const double m = 0.5 * (a + b);
                Eigen::VectorXd Xm = 0.5 * (Xa + Xb);
                if (!sim.newton(Xm, {{t.phi_stencil.v, m}}, 1e-10)) break;
                const double sm = sim.measure(Xm, t.sigma_stencil);
                if (std::abs(sm) < 1e-13) {
                    a = m;
                    Xa = Xm;
                    break;
                }
                if (sa * sm <= 0) {
                    b = m;
                    Xb = Xm;
                } else {
                    a = m;
                    Xa = Xm;
                    sa = sm;
                }
            }
            out.push_back({sim.measure(Xa, t.phi_stencil),
                           sim.measure(Xa, t.sigma_stencil), Xa});
        }
    }
    if (std::abs(ss.back().sigma) < endpoint_tol) {
        Eigen::VectorXd Xl = XOf(ss.back());
        if (out.empty() || (out.back().X - Xl).norm() > 1e-8)
            out.push_back({ss.back().phi, ss.back().sigma, Xl});
    }

    SigmaZeroStates states;
    states.model = path.model;
    for (const Cross& c : out) {
        const bool dup =
            std::any_of(states.states.begin(), states.states.end(),
                        [&](const SigmaZeroState& d) {
                            return std::abs(c.phi - d.phi) < 1e-7
                                   && (c.X - sim.pack(d.positions)).norm() < 1e-6;
                        });
        if (dup) continue;
        SigmaZeroState s;
        s.phi = c.phi;
        s.sigma = c.sigma;
        s.label = c.phi < 0.01 ? StateLabel::Developed
                               : (c.phi > kPi - 0.01 ? StateLabel::Final
                                                     : StateLabel::Construction);
        s.positions = sim.positions_of(c.X);
        states.states.push_back(std::move(s));
    }
    return states;
}

FoldedMesh FinalState::as_mesh() const {
    FoldedMesh mesh = model->model->mesh;
    mesh.vertices = positions;
    rebuild_edges(mesh);
    return mesh;
}

FinalState extract_final_state(const SigmaZeroStates& states) {
    if (!states.model) throw MalformedStateError("extract_final_state: empty states");
    const TriangulatedModel& t = *states.model;
    const SigmaZeroState* fin = states.find(StateLabel::Final);
    if (!fin) {
        std::ostringstream msg;
        msg << "no final-labeled sigma = 0 state on the path (" << states.states.size()
            << " crossings:";
        for (const SigmaZeroState& s : states.states)
            msg << " " << to_string(s.label) << "@" << s.phi;
        msg << ")";
        throw MissingFinalStateError(msg.str());
    }
    PatchSim sim(t);
    Eigen::VectorXd X = sim.pack(fin->positions);
    // corner polish: hinge at exactly pi and skin bend at zero when possible,
    // else keep the refined crossing
    std::vector<Drive> corner{{t.phi_stencil.v, kPi}};
    if (t.sigma_stencil.v[0] >= 0) corner.push_back({t.sigma_stencil.v, 0.0});
    {
        Eigen::VectorXd Xc = X;
        if (sim.newton(Xc, corner)) {
            X = Xc;
        } else if (t.sigma_stencil.v[0] >= 0) {
            Xc = X;
            if (sim.newton(Xc, {{t.sigma_stencil.v, 0.0}})) X = Xc;
        }
    }

    const std::vector<Vec3> pos = sim.positions_of(X);
    const double S = t.model->scale();
    const FoldedMesh& mesh = t.model->mesh;
    const ExtrudedModel& em = *t.model;

    // check 1: skins flat on one best-fit plane per side
    for (const FaceRole role : {FaceRole::SkinBottom, FaceRole::SkinTop}) {
        std::set<int> ids;
        for (const MeshFace& f : mesh.faces)
            if (f.role == role)
                for (int v : f.v) ids.insert(v);
        if (ids.size() < 3) continue;
        Vec3 c = Vec3::Zero();
        for (int v : ids) c += pos[v];
        c /= static_cast<double>(ids.size());
        Eigen::MatrixXd pts(ids.size(), 3);
        int r = 0;
        for (int v : ids) pts.row(r++) = (pos[v] - c).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pts, Eigen::ComputeThinV);
        const Vec3 nrm = svd.matrixV().col(2);
        double dev = 0.0;
        for (int v : ids) dev = std::max(dev, std::abs((pos[v] - c).dot(nrm)));
        if (dev > 1e-7 * S)
            throw MissingFinalStateError("final state's skins are not coplanar (dev "
                                         + std::to_string(dev) + ")");
    }

    // check 2: column neighbors collide edge to edge. The skins made from
    // grid edges (i, j) and (i+2, j) stack along one rung in the final state
    // and must share two corners.
    std::map<std::pair<int, int>, const MeshFace*> skin_by_edge;
    for (const MeshFace& f : mesh.faces) {
        if (f.role != FaceRole::SkinTop && f.role != FaceRole::SkinBottom) continue;
        int imin = std::numeric_limits<int>::max(), jcol = -1;
        for (int v : f.v) {
            imin = std::min(imin, std::get<0>(em.key_of[v]));
            jcol = std::get<1>(em.key_of[v]);
        }
        skin_by_edge[{imin, jcol}] = &f;
    }
    for (const auto& [edge, f1] : skin_by_edge) {
        const auto it = skin_by_edge.find({edge.first + 2, edge.second});
        if (it == skin_by_edge.end()) continue;
        const MeshFace* f2 = it->second;
        int shared = 0;
        for (int u : f1->v)
            for (int v : f2->v)
                if ((pos[u] - pos[v]).norm() < 1e-7 * S) ++shared;
        if (shared < 2) {
            std::ostringstream msg;
            msg << "final-state skins over grid edges (" << edge.first << ","
                << edge.second << ") and (" << edge.first + 2 << "," << edge.second
                << ") do not share an edge (" << shared << " coincident corners)";
            throw MissingFinalStateError(msg.str());
        }
    }

    FinalState out;
    out.model = states.model;
    out.positions = pos;
    out.phi = sim.measure(X, t.phi_stencil);
    out.sigma = sim.measure(X, t.sigma_stencil);
    return out;
}

double final_cos_half_accordion(const MiuraParams& p) {
    const MiuraDerived d = derive_angles(p);
    const Vec3 n = extrusion_direction(d);
    const VertexSectorData sec = world_sector(d);
    const double alpha = angle_between(n, sec.e_plus);
    const double beta = angle_between(sec.e_minus, n);
    const double num =
        -(p.w * std::cos(p.theta) - p.l) * std::cos(alpha) - d.L * std::cos(beta);
    const double den = p.w * std::sin(p.theta) * std::sin(alpha);
    return num / den;
}

double final_accordion_angle(const MiuraParams& p) {
    const double f = final_cos_half_accordion(p);
    if (std::abs(f) > 1.0)
        throw MissingFinalStateError("no flat-folded periodic state: |cos(a*/2)| = "
                                     + std::to_string(std::abs(f)) + " > 1");
    return 2.0 * std::acos(std::abs(f));
}

ExtrudedModel construct_final_state(const MiuraParams& p, const ExtrusionSpec& spec,
                                    int rows, int cols) {
    ExtrusionSpec alt = spec;
    alt.mode = ExtrusionMode::Alternate;
    alt.accordion_angle = final_accordion_angle(p);
    return build_extruded_model(p, alt, rows, cols);
}

} // namespace miurex
