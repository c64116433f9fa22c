#pragma once
/*
Edge extrusion: split a folded Miura-Ori along its cut lines, offset the
pieces along the unique bond-preserving direction and insert the strip faces
(webs between the planes, skins on them). Also: BFS development to a planar
crease pattern, the refold round trip, and model validation (developability,
skin coplanarity, self-intersection).
*/
#include <array>
#include <map>
#include <tuple>
#include <vector>

#include "miurex/miura.hpp"

namespace miurex {

enum class ExtrusionMode { Ordinary, Alternate };

struct ExtrusionSpec {
    double depth = 0.0;          // extrusion depth d > 0
    std::vector<int> cuts;       // cut-line start columns, each in [1, cols-1]
    ExtrusionMode mode = ExtrusionMode::Ordinary;
    double accordion_angle = 0.0;  // alternate mode: accordion opening in (0, pi)

    // Range checks against a rows x cols grid; duplicate cut columns rejected.
    void validate(int rows, int cols) const;
};

// Planar development. Vertex indices coincide with the folded mesh.
struct CreasePattern {
    std::vector<Vec2> vertices;
};

/*
A vertex of the extruded model is a copy of a base-grid vertex (i, j):
side 'x' for uncut vertices, 'L'/'R' for the two copies of a vertex on a cut
line. Ribbons are the strips between consecutive cut lines, numbered from the
left; copies of ribbon r sit at base + (K - r) * depth * direction.
*/
struct ExtrudedModel {
    MiuraParams params;
    MiuraDerived derived;
    ExtrusionSpec spec;
    int rows = 0, cols = 0;

    Vec3 direction{Vec3::Zero()};  // unit rung direction n
    VertexSectorData sector;       // cut-vertex sector that n solves

    FoldedMesh mesh;       // folded geometry, roles, crease assignments
    CreasePattern pattern; // BFS development, same vertex indexing

    std::vector<int> cuts_sorted;
    std::map<std::pair<int, int>, int> cut_of;            // cut label -> start column
    std::map<std::tuple<int, int, char>, int> vertex_by_key;
    std::vector<std::tuple<int, int, char>> key_of;       // vertex id -> key

    double scale() const { return mesh.scale(); }
    bool is_cut_vertex(int i, int j) const;
    // Vertex id of grid label (i, j) as seen from ribbon r (picks the L/R
    // copy on cut lines). Throws MalformedStateError if absent.
    int vertex_id(int i, int j, int ribbon) const;
};

// Closed-form extrusion direction for the ordinary folded state: rotate
// X = e_minus - R_z(-gamma) e_plus by +90 degrees about Z and normalize the
// horizontal part. n_z = 0 by construction. Throws DegenerateParameterError
// when X vanishes.
Vec3 extrusion_direction(const MiuraDerived& d);

// Keep only the horizontal candidates that lie on the correct branch of the
// spherical ellipse (alpha + beta matches 2*pi - gamma) and are
// counter-clockwise from e_plus viewed from +z; flipped candidates would
// flip the inserted faces. For well-posed sectors exactly one survives.
std::vector<Vec3> orientation_filter(const std::vector<Vec3>& candidates,
                                     const VertexSectorData& sector,
                                     double branch_tol = 1e-6);

// Oracle + orientation filter; exactly one direction or NoValidDirectionError.
Vec3 solve_direction(const VertexSectorData& sector, const OracleOptions& opt = {});

ExtrudedModel build_extruded_model(const MiuraParams& p, const ExtrusionSpec& spec,
                                   int rows, int cols);

// Breadth-first isometric unrolling into the plane (seed: face 0 in its own
// isometric frame). Throws NonDevelopableError when a shared vertex lands in
// two incompatible places.
CreasePattern develop_mesh(const FoldedMesh& mesh);

// Checks interior-vertex angle defects first (throws NonDevelopableError
// carrying the worst offender), then unrolls.
CreasePattern develop_model(const ExtrudedModel& m);

// Refold the pattern with the recorded per-edge fold angles via BFS over
// faces; returns 3D positions (same indexing). Matches the folded mesh up to
// a rigid motion.
std::vector<Vec3> refold_pattern(const FoldedMesh& mesh, const CreasePattern& pattern);

struct ValidationReport {
    double scale = 1.0;
    // interior vertices only: (vertex id, |2 pi - angle sum|)
    std::vector<std::pair<int, double>> vertex_defects;
    // quad faces: (face id, |tetrahedral volume of corners| / scale^3)
    std::vector<std::pair<int, double>> face_planarity;
    // skin faces: (face id, max corner distance to the best-fit plane of its
    // role); plane fit so the check survives rigid motions of the model
    std::vector<std::pair<int, double>> skin_deviation;
    // mean z of the two skin planes (equal to the z levels when axis-aligned)
    double skin_z_bottom = 0.0, skin_z_top = 0.0;
    // strictly crossing face pairs (contact does not count), face ids a < b
    std::vector<std::pair<int, int>> intersections;

    double max_vertex_defect() const;
    double max_face_planarity() const;
    double max_skin_deviation() const;
    std::vector<int> vertices_over(double defect_tol) const;
    bool developable(double defect_tol = 1e-8) const;
    bool bondable(double skin_tol_factor = 1e-8) const;  // vs scale
    bool intersection_free() const { return intersections.empty(); }
};

ValidationReport validate_model(const FoldedMesh& mesh,
                                double intersection_tol_factor = 1e-9);
ValidationReport validate_model(const ExtrudedModel& m);

// Strict proper crossing of two triangles: both must straddle the other's
// plane by more than tol and the intersection segment must have positive
// length. Coplanar or touching contact reports false.
bool triangles_cross(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                     double tol);

// Fan triangulation of a face into (v0, vk, vk+1) triples.
std::vector<std::array<int, 3>> face_triangles(const MeshFace& face);

// All strictly crossing face pairs; pairs sharing a vertex id and triangles
// of the same face are excluded, AABB prefilter applied.
std::vector<std::pair<int, int>> intersecting_face_pairs(const FoldedMesh& mesh,
                                                         double tol_factor = 1e-9);

} // namespace miurex
