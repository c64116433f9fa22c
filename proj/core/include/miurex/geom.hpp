#pragma once
/*
Elementary 3D vector utilities, the spherical-ellipse residual that governs
developability of an extruded vertex, and an independent brute-force oracle
for extrusion directions constrained to the horizontal plane.

World frame convention used throughout the library: the bottom skin plane is
z = 0, the top skin plane is z = h > 0, so "horizontal" means skin-parallel.
*/
#include <functional>
#include <vector>
#include <Eigen/Dense>

namespace miurex {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Rotate v about the +Z axis by theta. Leaves the z-component untouched.
Vec3 rotate_z(double theta, const Vec3& v);

// Angle in [0, pi] between two (not necessarily unit) vectors.
double angle_between(const Vec3& a, const Vec3& b);

// Wrap into [0, 2*pi).
double wrap_2pi(double a);

// Cut-vertex sector data: unit vectors along the two cut edges meeting at the
// vertex, the sum gamma of the sector angles between them on the kept side,
// and (once an extrusion direction n is known) the strip angles
// alpha = angle(n, e_plus), beta = angle(e_minus, n).
struct VertexSectorData {
    Vec3 e_plus{Vec3::Zero()};
    Vec3 e_minus{Vec3::Zero()};
    double gamma = 0.0;
    double alpha = 0.0;   // filled in by extrusion_direction / callers
    double beta = 0.0;
};

// Residual of the spherical-ellipse condition for a candidate direction n:
//   ((cos g)^2 - 1)|n|^2 + (e+ . n)^2 + (e- . n)^2 - 2 cos g (e+ . n)(e- . n)
// Zero iff n lies on the spherical ellipse with foci e+, e- and arc-sum
// matching gamma. Sign is reported raw so root brackets can use it.
double eq1_residual(const Vec3& n, const VertexSectorData& sector);

// Options for the horizontal-circle oracle.
struct OracleOptions {
    int samples = 4096;       // azimuth scan density
    double residual_tol = 1e-11;
    double refine_tol = 1e-13; // root location tolerance (radians of azimuth)
};

// Brute-force oracle: all unit vectors with n_z = 0 satisfying
// |eq1_residual| < residual_tol. Scans azimuth in [0, 2*pi) with sign-change
// bracketing and bisection, then polishes each root against the exact
// second-harmonic form of the restricted residual
//   res(t) = A + B cos 2t + C sin 2t,
// which the bisection bracket identifies. Returns an empty list when no
// horizontal root exists. In the fully degenerate case (residual identically
// zero on the circle, e.g. a straight cut with gamma = pi) every sampled
// direction is a root and the whole sampled circle is returned.
std::vector<Vec3> solve_horizontal_direction(const VertexSectorData& sector,
                                             const OracleOptions& opt = {});

// Classic Brent root refinement on [a, b]; f(a), f(b) must have opposite
// signs. xtol is an absolute abscissa tolerance.
double brent_root(const std::function<double(double)>& f, double a, double b,
                  double xtol = 1e-13, int max_iter = 200);

// Best proper rigid motion mapping P onto Q in the least-squares sense
// (Kabsch). Apply as x -> R * (x - centroid_p) + centroid_q.
struct RigidAlignment {
    Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
    Vec3 centroid_p{Vec3::Zero()};
    Vec3 centroid_q{Vec3::Zero()};
    Vec3 apply(const Vec3& x) const {
        return rotation * (x - centroid_p) + centroid_q;
    }
};

RigidAlignment rigid_align(const std::vector<Vec3>& P, const std::vector<Vec3>& Q);

// RMS point distance between P and Q after optimally aligning P onto Q.
double rigid_align_rms(const std::vector<Vec3>& P, const std::vector<Vec3>& Q);

} // namespace miurex
