#include "miurex/geom.hpp"
#include "miurex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace miurex {

namespace {
constexpr double kPi = std::numbers::pi;

double clamp1(double x) { return std::clamp(x, -1.0, 1.0); }
} // namespace

Vec3 rotate_z(double theta, const Vec3& v) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

double angle_between(const Vec3& a, const Vec3& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0)
        throw DegenerateParameterError("angle_between: zero-length vector");
    return std::acos(clamp1(a.dot(b) / (na * nb)));
}

double wrap_2pi(double a) {
    const double two_pi = 2.0 * kPi;
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

double eq1_residual(const Vec3& n, const VertexSectorData& sector) {
    const double cg = std::cos(sector.gamma);
    const double dp = sector.e_plus.dot(n);
    const double dm = sector.e_minus.dot(n);
    return (cg * cg - 1.0) * n.squaredNorm() + dp * dp + dm * dm - 2.0 * cg * dp * dm;
}

namespace {

// Restricted to horizontal unit n = (cos t, sin t, 0) the residual is a pure
// second harmonic res(t) = A + B cos 2t + C sin 2t.
struct Harmonic {
    double A, B, C;
};

Harmonic second_harmonic(const VertexSectorData& s) {
    const double cg = std::cos(s.gamma);
    const double e1 = s.e_plus.x(), e2 = s.e_plus.y();
    const double f1 = s.e_minus.x(), f2 = s.e_minus.y();
    Harmonic h;
    h.A = (cg * cg - 1.0) + 0.5 * (e1 * e1 + e2 * e2) + 0.5 * (f1 * f1 + f2 * f2)
          - cg * (e1 * f1 + e2 * f2);
    h.B = 0.5 * (e1 * e1 - e2 * e2) + 0.5 * (f1 * f1 - f2 * f2)
          - cg * (e1 * f1 - e2 * f2);
    h.C = e1 * e2 + f1 * f2 - cg * (e1 * f2 + e2 * f1);
    return h;
}

Vec3 unit_at(double t) { return {std::cos(t), std::sin(t), 0.0}; }

} // namespace

std::vector<Vec3> solve_horizontal_direction(const VertexSectorData& sector,
                                             const OracleOptions& opt) {
    const int ns = std::max(opt.samples, 4096);
    const auto res = [&](double t) { return eq1_residual(unit_at(t), sector); };

    // Degenerate case: the residual vanishes identically on the circle
    // (straight cut, gamma = pi). Report the whole sampled circle.
    const Harmonic h = second_harmonic(sector);
    const double amp = std::hypot(h.B, h.C);
    if (std::abs(h.A) < 1e-13 && amp < 1e-13) {
        std::vector<Vec3> all;
        all.reserve(ns);
        bool every = true;
        for (int k = 0; k < ns; ++k) {
            const double t = 2.0 * kPi * k / ns;
            if (std::abs(res(t)) >= opt.residual_tol) { every = false; break; }
            all.push_back(unit_at(t));
        }
        if (every) return all;
    }

    // Scan for sign changes (and near-tangent zeros the scan may straddle).
    std::vector<double> roots;
    double prev = res(0.0);
    for (int k = 1; k <= ns; ++k) {
        const double t0 = 2.0 * kPi * (k - 1) / ns;
        const double t1 = 2.0 * kPi * k / ns;
        const double cur = res(t1);
        if (prev == 0.0) {
            roots.push_back(t0);
        } else if (prev * cur < 0.0) {
            // bisection
            double a = t0, b = t1, fa = prev;
            for (int it = 0; it < 200 && (b - a) > 1e-15; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = res(m);
                if (fm == 0.0) { a = b = m; break; }
                if (fa * fm < 0.0) b = m;
                else { a = m; fa = fm; }
            }
            roots.push_back(0.5 * (a + b));
        }
        prev = cur;
    }

    // Polish each bracketed root against the exact harmonic form:
    //   A + R cos(2t - psi) = 0  with R = hypot(B, C), psi = atan2(C, B),
    // so 2t = psi +- arccos(-A/R) (mod 2 pi). Bisection stalls near tangency
    // (|A| ~ R); snapping to the nearest analytic root restores full
    // precision there.
    if (amp > 1e-15) {
        const double x = -h.A / amp;
        if (std::abs(x) <= 1.0) {
            const double psi = std::atan2(h.C, h.B);
            const double d = std::acos(clamp1(x));
            std::vector<double> exact;
            for (int k = 0; k < 2; ++k)
                for (double sgn : {+1.0, -1.0})
                    exact.push_back(wrap_2pi(0.5 * (psi + sgn * d) + k * kPi));
            for (double& t : roots) {
                double best = t, bd = 1e300;
                for (double te : exact) {
                    double diff = std::abs(wrap_2pi(te - t));
                    diff = std::min(diff, 2.0 * kPi - diff);
                    if (diff < bd) { bd = diff; best = te; }
                }
                // Snap only when the analytic root confirms the bracket.
                if (bd < 2.0 * (2.0 * kPi / ns)) t = best;
            }
        }
    }

    // Deduplicate (a tangency can produce twin brackets) and filter.
    std::sort(roots.begin(), roots.end());
    std::vector<Vec3> out;
    for (double t : roots) {
        if (!out.empty()) {
            const double tprev = std::atan2(out.back().y(), out.back().x());
            double diff = std::abs(wrap_2pi(t - tprev));
            diff = std::min(diff, 2.0 * kPi - diff);
            if (diff < 1e-9) continue;
        }
        const Vec3 n = unit_at(t);
        if (std::abs(eq1_residual(n, sector)) < opt.residual_tol)
            out.push_back(n);
    }
    return out;
}

double brent_root(const std::function<double(double)>& f, double a, double b,
                  double xtol, int max_iter) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0)
        throw NoBracketError("brent_root: f(a) and f(b) have the same sign");
    if (std::abs(fa) < std::abs(fb)) { std::swap(a, b); std::swap(fa, fb); }
    double c = a, fc = fa, s = b, d = b - a;
    bool mflag = true;
    for (int it = 0; it < max_iter; ++it) {
        if (fb == 0.0 || std::abs(b - a) < xtol) return b;
        if (fa != fc && fb != fc) {
            // inverse quadratic interpolation
            s = a * fb * fc / ((fa - fb) * (fa - fc))
              + b * fa * fc / ((fb - fa) * (fb - fc))
              + c * fa * fb / ((fc - fa) * (fc - fb));
        } else {
            s = b - fb * (b - a) / (fb - fa); // secant
        }
        const double lo = (3.0 * a + b) / 4.0;
        const bool cond = !((s > std::min(lo, b) && s < std::max(lo, b)))
            || (mflag && std::abs(s - b) >= std::abs(b - c) / 2.0)
            || (!mflag && std::abs(s - b) >= std::abs(c - d) / 2.0)
            || (mflag && std::abs(b - c) < xtol)
            || (!mflag && std::abs(c - d) < xtol);
        if (cond) { s = 0.5 * (a + b); mflag = true; }
        else mflag = false;
        const double fs = f(s);
        d = c; c = b; fc = fb;
        if (fa * fs < 0.0) { b = s; fb = fs; }
        else { a = s; fa = fs; }
        if (std::abs(fa) < std::abs(fb)) { std::swap(a, b); std::swap(fa, fb); }
    }
    return b;
}

RigidAlignment rigid_align(const std::vector<Vec3>& P, const std::vector<Vec3>& Q) {
    if (P.size() != Q.size() || P.size() < 3)
        throw DegenerateParameterError("rigid_align: need matching point sets of size >= 3");
    RigidAlignment al;
    for (const Vec3& p : P) al.centroid_p += p;
    for (const Vec3& q : Q) al.centroid_q += q;
    al.centroid_p /= static_cast<double>(P.size());
    al.centroid_q /= static_cast<double>(Q.size());
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    for (size_t k = 0; k < P.size(); ++k)
        H += (P[k] - al.centroid_p) * (Q[k] - al.centroid_q).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    // restrict to proper rotations
    D(2, 2) = ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) ? -1.0 : 1.0;
    al.rotation = svd.matrixV() * D * svd.matrixU().transpose();
    return al;
}

double rigid_align_rms(const std::vector<Vec3>& P, const std::vector<Vec3>& Q) {
    const RigidAlignment al = rigid_align(P, Q);
    double acc = 0.0;
    for (size_t k = 0; k < P.size(); ++k)
        acc += (al.apply(P[k]) - Q[k]).squaredNorm();
    return std::sqrt(acc / static_cast<double>(P.size()));
}

} // namespace miurex
