#pragma once
/*
Rigid-panel fold simulation of a finite extruded patch. Unknowns are the
vertex positions; constraints are edge lengths, quad planarity on non-skin
faces, and six pins removing the rigid motions. No periodicity is imposed:
the simulated patch is free, as in the source experiments. A fold path is
traced by driving the oblique hinge angle phi (construction -> developed,
construction -> folded) and spliced into one monotone sweep; when the drive
stalls in the last stretch before the target the drive switches to the
skin-bend angle sigma to land exactly on sigma = 0.
*/
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "miurex/errors.hpp"
#include "miurex/extrusion.hpp"

namespace miurex {

// Fold-angle measurement stencil: (a, b) the hinge edge, (wl, wr) one off-edge
// vertex of each adjacent face, in the order measure_fold_angle expects.
struct HingeStencil {
    std::array<int, 4> v{-1, -1, -1, -1};
};

/*
Simulation-ready model. Skins are triangulated along their shorter diagonal
(stored in aux as (diag end, diag end, wing, wing), face order), which frees
the skin-bend mode sigma; the rigid variant keeps skins planar instead and
leaves the model locked at the construction state.
*/
struct TriangulatedModel {
    std::shared_ptr<const ExtrudedModel> model;
    std::vector<std::array<int, 4>> aux;
    bool skins_rigid = false;
    HingeStencil phi_stencil;    // driven oblique hinge, a central uncut edge
    HingeStencil sigma_stencil;  // skin-bend measure, a central skin diagonal

    double scale() const { return model->scale(); }
};

TriangulatedModel triangulate_skins(std::shared_ptr<const ExtrudedModel> m);
TriangulatedModel triangulate_skins(const ExtrudedModel& m);  // copies m

// Same stencils but skins constrained planar (diagonal + volume like any
// other quad). Used to show the untriangulated model does not fold.
TriangulatedModel rigid_skin_model(std::shared_ptr<const ExtrudedModel> m);

// Dimension of the constraint-Jacobian null space at the construction state
// (singular values below 1e-9 of the scaled system count as zero). The
// pins are included, so rigid motions do not contribute.
int constraint_nulldim(const TriangulatedModel& t);

// Same, evaluated at an arbitrary vertex configuration instead of the
// construction state. The mechanism count changes at branch points.
int constraint_nulldim(const TriangulatedModel& t, const std::vector<Vec3>& positions);

struct PathSample {
    double phi = 0.0;
    double sigma = 0.0;
    double residual = 0.0;  // inf-norm of the constraint residuals
    std::vector<Vec3> positions;
};

struct FoldPathMeta {
    double phi_construction = 0.0;
    double phi_max = 0.0;
    bool switched = false;      // sigma-drive engaged near the fold-back
    double switch_phi = 0.0;    // phi where the switch happened
};

struct FoldPath {
    std::shared_ptr<const TriangulatedModel> model;
    std::vector<PathSample> samples;
    FoldPathMeta meta;
};

// Continuation failed at a genuine stall: carries the partial path and the
// last phi the solver could hold.
class FoldContinuationError : public ContinuationError {
public:
    FoldContinuationError(double last_good_phi, FoldPath partial_path,
                          const std::string& msg)
        : ContinuationError(last_good_phi, msg), partial(std::move(partial_path)) {}
    FoldPath partial;
};

/*
Trace the fold path between hinge angles phi_from and phi_to (both in
[0, pi]); step is the nominal phi increment between samples. The trace is
anchored at the construction state: one leg runs down to the lower endpoint
(finishing with a sigma-polish onto the exactly developed state when the
endpoint is 0), one leg runs up, and the legs are spliced into a single
monotone sweep. Each accepted sample satisfies the constraints to 1e-10;
on non-convergence the step halves down to 1e-6. When the up leg stalls
beyond 95% of the target the drive switches to sigma and finishes on the
blocked sigma = 0 state (recorded in the metadata); a stall anywhere else
throws FoldContinuationError with the partial path.
*/
FoldPath simulate_fold_path(std::shared_ptr<const TriangulatedModel> t,
                            double phi_from, double phi_to, double step);

enum class StateLabel { Developed, Construction, Final };
const char* to_string(StateLabel label);

struct SigmaZeroState {
    double phi = 0.0;
    double sigma = 0.0;
    StateLabel label = StateLabel::Construction;
    std::vector<Vec3> positions;
};

struct SigmaZeroStates {
    std::shared_ptr<const TriangulatedModel> model;
    std::vector<SigmaZeroState> states;

    bool has(StateLabel label) const;
    const SigmaZeroState* find(StateLabel label) const;  // first match or null
};

// All sigma = 0 crossings along the path, refined by bisection on the phi
// drive; labels: phi < 0.01 developed, phi > pi - 0.01 final, construction
// otherwise.
SigmaZeroStates find_sigma_zero_states(const FoldPath& path);

struct FinalState {
    std::shared_ptr<const TriangulatedModel> model;
    std::vector<Vec3> positions;
    double phi = 0.0;
    double sigma = 0.0;

    // Folded mesh with the final positions and recomputed fold angles.
    FoldedMesh as_mesh() const;
};

/*
Polish the final-labeled state onto the exact corner (phi = pi, sigma = 0)
and verify its structure: all skin faces on two parallel best-fit planes
(to 1e-7 * scale) and colliding column neighbors sharing their rung edges
(the skins made from grid edges (i, j) and (i+2, j) coincide along an edge
to 1e-7 * scale). Throws MissingFinalStateError when no final-labeled state
exists or a check fails.
*/
FinalState extract_final_state(const SigmaZeroStates& states);

// cos(a*/2) of the accordion angle the flat-folded periodic tessellation
// needs. The periodic final state closes up iff this lies in [-1, 1].
double final_cos_half_accordion(const MiuraParams& p);

// a* = 2 acos(|cos(a*/2)|); throws MissingFinalStateError when |f| > 1.
double final_accordion_angle(const MiuraParams& p);

// Analytic periodic final state: the alternate-mode build at a*. Throws
// MissingFinalStateError when the closure angle does not exist.
ExtrudedModel construct_final_state(const MiuraParams& p, const ExtrusionSpec& spec,
                                    int rows, int cols);

} // namespace miurex
