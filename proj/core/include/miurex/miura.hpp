#pragma once
/*
Miura-Ori parameterization, closed-form derived angles, folded mesh
construction (ordinary and alternate folding modes), and extraction of the
oblique cutting lines along which strips get extruded.

Mesh indexing is a row-major grid: vertex (i, j) sits at row i, column j,
i in [0, rows], j in [0, cols]. Mirror-symmetry creases run parallel to the
X axis; skin-side vertices alternate between z = 0 and z = panel height.
*/
#include <map>
#include <string>
#include <vector>

#include "miurex/geom.hpp"

namespace miurex {

struct MiuraParams {
    double l = 0.0;      // oblique crease length
    double w = 0.0;      // edge on the mirror-symmetry line
    double theta = 0.0;  // parallelogram sector angle, (0, pi/2)
    double rho = 0.0;    // mirror-crease fold angle, (0, pi)

    // Throws DegenerateParameterError outside the open ranges above.
    // Formula evaluation (derive_angles) tolerates the rho endpoints; mesh
    // construction does not.
    void validate(bool for_mesh = true) const;
};

// Closed-form quantities of one folded Miura-Ori vertex star.
struct MiuraDerived {
    double xi = 0.0;     // cos(xi) = sin(theta) cos(rho/2)
    double zeta = 0.0;   // cos(zeta) = cos(theta) / sin(xi)
    double gamma = 0.0;  // atan2(sin g, cos g) wrapped to [0, 2 pi)
    double L = 0.0;      // sqrt(w^2 + l^2 - 2 w l cos theta)
    double h = 0.0;      // l sin(xi) / cos(rho/2)  (the printed relation)

    // World-frame mesh constants.
    double panel_height = 0.0;  // w sin(zeta): z distance between skin planes
    double pitch_x = 0.0;       // w cos(zeta): column pitch along X
    double stagger_x = 0.0;     // l sin(xi):  odd-row X stagger
    double pitch_y = 0.0;       // l cos(xi):  row pitch along Y

    // Local-frame cut-edge directions (z = 0), normalized.
    Vec3 e_plus{Vec3::Zero()};
    Vec3 e_minus{Vec3::Zero()};
};

MiuraDerived derive_angles(const MiuraParams& p);

// Canonical class-1 cut-vertex sector in the world frame (the frame of
// fold_miura_mesh). e_plus points along the oblique edge, e_minus along the
// face diagonal; gamma is the closed-form sector sum.
VertexSectorData world_sector(const MiuraDerived& d);

enum class CreaseAssignment { Mountain, Valley, Border, Flat };
enum class FaceRole { Miura, Web, SkinTop, SkinBottom };

const char* to_string(CreaseAssignment a); // "M","V","B","F"
const char* to_string(FaceRole r);

struct MeshEdge {
    int a = -1, b = -1;
    CreaseAssignment assignment = CreaseAssignment::Flat;
    double fold_angle = 0.0;
    bool auxiliary = false;  // triangulation diagonal, not a pattern crease
};

struct MeshFace {
    std::vector<int> v;
    FaceRole role = FaceRole::Miura;
};

struct FoldedMesh {
    std::vector<Vec3> vertices;
    std::vector<MeshFace> faces;
    std::vector<MeshEdge> edges;

    // Grid bookkeeping, populated by the grid builders (empty otherwise).
    int rows = 0, cols = 0;
    std::map<std::pair<int, int>, int> grid;  // (i, j) -> vertex id

    double scale_hint = 0.0;
    double scale() const;  // scale_hint if set, else bounding-box diagonal
};

// Signed dihedral fold angle at the oriented hinge a-b with wing vertices
// wl (left face) and wr (right face): 0 when flat, +pi/-pi when fully
// folded; mountains positive under the builders' orientation convention.
double measure_fold_angle(const std::vector<Vec3>& pos, int a, int b, int wl, int wr);

// 2*pi minus the sum of incident face corner angles. Only meaningful for
// interior vertices.
double angle_defect(const FoldedMesh& mesh, int vertex);
bool vertex_is_interior(const FoldedMesh& mesh, int vertex);

// Derives mesh.edges from the face list: every polygon side once, boundary
// edges tagged Border, interior edges Mountain/Valley/Flat by the sign of
// the measured dihedral (|angle| < flat_tol means Flat).
void rebuild_edges(FoldedMesh& mesh, double flat_tol = 1e-12);

// Folded Miura-Ori patch; all faces are congruent (l, w, theta)
// parallelograms and carry role Miura.
FoldedMesh fold_miura_mesh(const MiuraParams& p, int rows, int cols);

// The alternate folding mode of the same crease pattern: mirror creases
// folded to 180 degrees, accordion strips folded by accordion_angle.
FoldedMesh alternate_mode_mesh(const MiuraParams& p, double accordion_angle,
                               int rows, int cols);

struct CutVertex {
    int vertex = -1;             // mesh vertex id
    int klass = 0;               // 1..4, cycling along the line
    Vec3 e_plus{Vec3::Zero()};   // unit, along the incident oblique edge
    Vec3 e_minus{Vec3::Zero()};  // unit, along the incident face diagonal
};

struct CutLine {
    int start_col = 0;                 // path starts at grid vertex (0, start_col)
    std::vector<CutVertex> vertices;   // ordered along the path
    // Edge k joins vertices[k] and vertices[k+1]; true if it is a face
    // diagonal, false if it is an oblique mesh edge.
    std::vector<bool> edge_is_diagonal;
};

// One cut line per interior column of a grid mesh (start columns 1..cols-1),
// or a chosen subset. Paths alternate oblique edges and face diagonals and
// stop at the mesh boundary.
std::vector<CutLine> extract_cut_lines(const FoldedMesh& mesh);
std::vector<CutLine> extract_cut_lines(const FoldedMesh& mesh,
                                       const std::vector<int>& start_cols);

// Sector data of the class-1 cut vertex (1, c) measured on the uncut grid
// mesh: world e+/e- and the sector-angle sum gamma on the side of the path
// whose copies displace by +direction. This is the constructive oracle for
// the closed-form gamma and the measurement the alternate-mode build uses.
VertexSectorData cut_vertex_sector(const FoldedMesh& mesh, int cut_col);

} // namespace miurex
