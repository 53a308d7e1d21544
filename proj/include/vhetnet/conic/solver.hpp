#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "vhetnet/conic/program.hpp"

namespace vhetnet::conic {

struct SolverOptions {
    int max_iters = 100;
    // full accuracy targets
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    // fallback accuracy accepted when progress stalls
    double feastol_inacc = 1e-7;
    double abstol_inacc = 1e-7;
    double reltol_inacc = 1e-7;
    double static_reg = 1e-8;
    int refine_iters = 3;
    double step_scale = 0.99;
    bool equilibrate = true;
    int ruiz_iters = 20;  // cap; the loop exits early once the scaling settles
    // residuals re-measured on the original (unscaled) data must pass this
    // before a solve counts as optimal; failed attempts restart with the
    // regularization shifted
    double accept_tol = 1e-6;
    double accept_tol_loose = 1e-4;  // last resort after every restart
};

struct ConeLayout {
    int n_nonneg = 0;
    std::vector<int> soc_dims;

    int rows() const {
        int m = n_nonneg;
        for (int d : soc_dims) m += d;
        return m;
    }
    int degree() const { return n_nonneg + static_cast<int>(soc_dims.size()); }
};

// min c'x  s.t.  A x = b,  G x + s = h,  s in (R+)^n_nonneg x SOC(d_1) x ...
struct StandardForm {
    int n = 0;
    Eigen::SparseMatrix<double> A;  // p x n
    Eigen::SparseMatrix<double> G;  // m x n
    Eigen::VectorXd b, h, c;
    ConeLayout cone;
};

struct StandardResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x;
    Eigen::VectorXd y, z;  // duals of the equality block and the cone block
    double pobj = std::numeric_limits<double>::quiet_NaN();  // c'x, minimize sense
    int iterations = 0;
    double pres = std::numeric_limits<double>::quiet_NaN();
    double dres = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
};

// Backend seam: anything that can solve the continuous standard form.
class ConeSolver {
  public:
    virtual ~ConeSolver() = default;
    virtual StandardResult solve_standard(const StandardForm& sf) const = 0;
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// ---- cone algebra on stacked vectors ---------------------------------------

// residual to the cone boundary: min over blocks of the interior margin
inline double cone_margin(const Eigen::VectorXd& v, const ConeLayout& cone) {
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cone.n_nonneg; ++i) margin = std::min(margin, v[i]);
    int off = cone.n_nonneg;
    for (int d : cone.soc_dims) {
        margin = std::min(margin, v[off] - v.segment(off + 1, d - 1).norm());
        off += d;
    }
    return margin;
}

// shift v onto the interior of the cone along the identity element
inline Eigen::VectorXd bring_to_cone(const Eigen::VectorXd& v, const ConeLayout& cone) {
    const double margin = cone_margin(v, cone);
    if (margin > 0.0) return v;
    Eigen::VectorXd r = v;
    const double shift = 1.0 - margin;
    for (int i = 0; i < cone.n_nonneg; ++i) r[i] += shift;
    int off = cone.n_nonneg;
    for (int d : cone.soc_dims) {
        r[off] += shift;
        off += d;
    }
    return r;
}

// Jordan product u o v
inline Eigen::VectorXd jordan_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                      const ConeLayout& cone) {
    Eigen::VectorXd r(u.size());
    for (int i = 0; i < cone.n_nonneg; ++i) r[i] = u[i] * v[i];
    int off = cone.n_nonneg;
    for (int d : cone.soc_dims) {
        const auto u1 = u.segment(off + 1, d - 1);
        const auto v1 = v.segment(off + 1, d - 1);
        r[off] = u.segment(off, d).dot(v.segment(off, d));
        r.segment(off + 1, d - 1) = u[off] * v1 + v[off] * u1;
        off += d;
    }
    return r;
}

// solve lambda o x = d for x
inline Eigen::VectorXd jordan_divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d,
                                     const ConeLayout& cone) {
    Eigen::VectorXd x(d.size());
    for (int i = 0; i < cone.n_nonneg; ++i) x[i] = d[i] / lambda[i];
    int off = cone.n_nonneg;
    for (int dim : cone.soc_dims) {
        const auto l1 = lambda.segment(off + 1, dim - 1);
        const auto d1 = d.segment(off + 1, dim - 1);
        const double l0 = lambda[off];
        const double rho = l0 * l0 - l1.squaredNorm();
        const double x0 = (l0 * d[off] - l1.dot(d1)) / rho;
        x[off] = x0;
        x.segment(off + 1, dim - 1) = (d1 - x0 * l1) / l0;
        off += dim;
    }
    return x;
}

// cone identity element (ones on the nonnegative part, (1,0,...) per SOC)
inline Eigen::VectorXd cone_identity(const ConeLayout& cone) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(cone.rows());
    for (int i = 0; i < cone.n_nonneg; ++i) e[i] = 1.0;
    int off = cone.n_nonneg;
    for (int d : cone.soc_dims) {
        e[off] = 1.0;
        off += d;
    }
    return e;
}

// Largest step a with (v + a*d) staying in the cone, v strictly interior.
// SOC blocks use the first positive root of (v0+a d0)^2 - ||v1+a d1||^2.
inline double max_cone_step(const Eigen::VectorXd& v, const Eigen::VectorXd& d,
                            const ConeLayout& cone) {
    double amax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cone.n_nonneg; ++i)
        if (d[i] < 0.0) amax = std::min(amax, -v[i] / d[i]);
    int off = cone.n_nonneg;
    for (int dim : cone.soc_dims) {
        const auto v1 = v.segment(off + 1, dim - 1);
        const auto d1 = d.segment(off + 1, dim - 1);
        const double a = d[off] * d[off] - d1.squaredNorm();
        const double b = 2.0 * (v[off] * d[off] - v1.dot(d1));
        const double c = v[off] * v[off] - v1.squaredNorm();
        double root = std::numeric_limits<double>::infinity();
        if (std::abs(a) < 1e-14) {
            if (b < 0.0) root = -c / b;
        } else {
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
                for (double r : {q / a, c / q})
                    if (r > 0.0) root = std::min(root, r);
            }
        }
        amax = std::min(amax, root);
        off += dim;
    }
    return amax;
}

// ---- Nesterov-Todd scaling --------------------------------------------------

// For the nonnegative part w2[i] = s_i/z_i. For each SOC block the scaling
// point wbar (unit hyperbolic norm) and magnitude eta with W = eta * H(wbar),
// H(wbar) = [w0 w1'; w1 I + w1 w1'/(1+w0)], W^2 = eta^2 (2 wbar wbar' - J).
struct Scaling {
    Eigen::VectorXd w2_lp;
    std::vector<double> eta;
    std::vector<Eigen::VectorXd> wbar;
    ConeLayout cone;

    bool compute(const Eigen::VectorXd& s, const Eigen::VectorXd& z, const ConeLayout& c) {
        cone = c;
        w2_lp.resize(c.n_nonneg);
        for (int i = 0; i < c.n_nonneg; ++i) {
            if (s[i] <= 0.0 || z[i] <= 0.0) return false;
            w2_lp[i] = s[i] / z[i];
        }
        eta.assign(c.soc_dims.size(), 0.0);
        wbar.assign(c.soc_dims.size(), {});
        int off = c.n_nonneg;
        for (std::size_t k = 0; k < c.soc_dims.size(); ++k) {
            const int d = c.soc_dims[k];
            const auto sb = s.segment(off, d);
            const auto zb = z.segment(off, d);
            const double a2 = sb[0] * sb[0] - sb.tail(d - 1).squaredNorm();
            const double b2 = zb[0] * zb[0] - zb.tail(d - 1).squaredNorm();
            if (a2 <= 0.0 || b2 <= 0.0 || sb[0] <= 0.0 || zb[0] <= 0.0) return false;
            const double a = std::sqrt(a2), b = std::sqrt(b2);
            Eigen::VectorXd sbar = sb / a, zbar = zb / b;
            const double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
            Eigen::VectorXd w = sbar;
            w[0] += zbar[0];
            w.tail(d - 1) -= zbar.tail(d - 1);
            w /= 2.0 * gamma;
            wbar[k] = std::move(w);
            eta[k] = std::sqrt(a / b);
            off += d;
        }
        return true;
    }

    // W v
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
        Eigen::VectorXd r(v.size());
        for (int i = 0; i < cone.n_nonneg; ++i) r[i] = std::sqrt(w2_lp[i]) * v[i];
        int off = cone.n_nonneg;
        for (std::size_t k = 0; k < cone.soc_dims.size(); ++k) {
            const int d = cone.soc_dims[k];
            const auto& w = wbar[k];
            const auto v1 = v.segment(off + 1, d - 1);
            const double w1v1 = w.tail(d - 1).dot(v1);
            r[off] = eta[k] * (w[0] * v[off] + w1v1);
            r.segment(off + 1, d - 1) =
                eta[k] * (v1 + (v[off] + w1v1 / (1.0 + w[0])) * w.tail(d - 1));
            off += d;
        }
        return r;
    }

    // W^{-1} v
    Eigen::VectorXd apply_inv(const Eigen::VectorXd& v) const {
        Eigen::VectorXd r(v.size());
        for (int i = 0; i < cone.n_nonneg; ++i) r[i] = v[i] / std::sqrt(w2_lp[i]);
        int off = cone.n_nonneg;
        for (std::size_t k = 0; k < cone.soc_dims.size(); ++k) {
            const int d = cone.soc_dims[k];
            const auto& w = wbar[k];
            const auto v1 = v.segment(off + 1, d - 1);
            const double w1v1 = w.tail(d - 1).dot(v1);
            r[off] = (w[0] * v[off] - w1v1) / eta[k];
            r.segment(off + 1, d - 1) =
                (v1 + (-v[off] + w1v1 / (1.0 + w[0])) * w.tail(d - 1)) / eta[k];
            off += d;
        }
        return r;
    }
};

// ---- Ruiz equilibration ------------------------------------------------------

// Row multipliers are capped at 1 so feasibility residuals measured on the
// scaled data upper-bound the residuals of the original rows. SOC blocks get
// one uniform row multiplier to preserve the cone.
struct Equilibration {
    Eigen::VectorXd row_a, row_g, col;  // multipliers applied to A/G rows and columns
    double cobj = 1.0;

    void run(StandardForm& sf, int iters) {
        const int p = static_cast<int>(sf.A.rows());
        const int m = static_cast<int>(sf.G.rows());
        row_a = Eigen::VectorXd::Ones(p);
        row_g = Eigen::VectorXd::Ones(m);
        col = Eigen::VectorXd::Ones(sf.n);

        for (int it = 0; it < iters; ++it) {
            Eigen::VectorXd rmax_a = Eigen::VectorXd::Zero(p);
            Eigen::VectorXd rmax_g = Eigen::VectorXd::Zero(m);
            Eigen::VectorXd cmax = Eigen::VectorXd::Zero(sf.n);
            for (int j = 0; j < sf.A.outerSize(); ++j)
                for (SpMat::InnerIterator iter(sf.A, j); iter; ++iter) {
                    const double v = std::abs(iter.value());
                    rmax_a[iter.row()] = std::max(rmax_a[iter.row()], v);
                    cmax[j] = std::max(cmax[j], v);
                }
            for (int j = 0; j < sf.G.outerSize(); ++j)
                for (SpMat::InnerIterator iter(sf.G, j); iter; ++iter) {
                    const double v = std::abs(iter.value());
                    rmax_g[iter.row()] = std::max(rmax_g[iter.row()], v);
                    cmax[j] = std::max(cmax[j], v);
                }
            // uniform scale per SOC block
            int off = sf.cone.n_nonneg;
            for (int d : sf.cone.soc_dims) {
                const double blockmax = rmax_g.segment(off, d).maxCoeff();
                rmax_g.segment(off, d).setConstant(blockmax);
                off += d;
            }
            auto step = [](double mx) { return mx > 1e-12 ? 1.0 / std::sqrt(mx) : 1.0; };
            Eigen::VectorXd sa(p), sg(m), sc(sf.n);
            for (int i = 0; i < p; ++i) sa[i] = std::min(step(rmax_a[i]), 1.0 / row_a[i]);
            for (int i = 0; i < m; ++i) sg[i] = std::min(step(rmax_g[i]), 1.0 / row_g[i]);
            for (int j = 0; j < sf.n; ++j)
                sc[j] = std::clamp(step(cmax[j]), 1e-6 / col[j], 1e6 / col[j]);

            sf.A = sa.asDiagonal() * sf.A * sc.asDiagonal();
            sf.G = sg.asDiagonal() * sf.G * sc.asDiagonal();
            sf.b = sa.asDiagonal() * sf.b;
            sf.h = sg.asDiagonal() * sf.h;
            sf.c = sc.asDiagonal() * sf.c;
            row_a = row_a.cwiseProduct(sa);
            row_g = row_g.cwiseProduct(sg);
            col = col.cwiseProduct(sc);

            // settled: this pass barely rescaled anything, further passes
            // cannot improve (capped multipliers always yield factor 1)
            auto settled = [](const Eigen::VectorXd& v) {
                constexpr double lo = 0.707, hi = 1.415;
                for (Eigen::Index i = 0; i < v.size(); ++i)
                    if (v[i] < lo || v[i] > hi) return false;
                return true;
            };
            if (settled(sa) && settled(sg) && settled(sc)) break;
        }
        cobj = std::max(1.0, sf.c.lpNorm<Eigen::Infinity>());
        sf.c /= cobj;
    }

    void unscale_x(Eigen::VectorXd& x) const { x = col.asDiagonal() * x; }

    void unscale_duals(Eigen::VectorXd& y, Eigen::VectorXd& z) const {
        y = cobj * (row_a.asDiagonal() * y);
        z = cobj * (row_g.asDiagonal() * z);
    }
};

struct TrueResiduals {
    double pres = 0.0;
    double dres = 0.0;
    double gap = 0.0;
};

// Residuals of a candidate optimum measured against the original data, each
// row (and dual column) normalized by the largest term entering it. This is a
// backward-error check: equilibration and the static regularization can both
// leave a point that satisfies the scaled tolerances while violating the real
// problem, and this is where that gets caught.
inline TrueResiduals true_residuals(const StandardForm& sf, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
    TrueResiduals out;
    const int p = static_cast<int>(sf.A.rows());
    const int m = static_cast<int>(sf.G.rows());

    Eigen::VectorXd ax = Eigen::VectorXd::Zero(p), amag = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < sf.A.outerSize(); ++j)
        for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
            const double v = it.value() * x[j];
            ax[it.row()] += v;
            amag[it.row()] = std::max(amag[it.row()], std::abs(v));
        }
    for (int i = 0; i < p; ++i)
        out.pres = std::max(out.pres, std::abs(ax[i] - sf.b[i]) /
                                          std::max({1.0, amag[i], std::abs(sf.b[i])}));

    Eigen::VectorXd gx = Eigen::VectorXd::Zero(m), gmag = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < sf.G.outerSize(); ++j)
        for (SpMat::InnerIterator it(sf.G, j); it; ++it) {
            const double v = it.value() * x[j];
            gx[it.row()] += v;
            gmag[it.row()] = std::max(gmag[it.row()], std::abs(v));
        }
    const Eigen::VectorXd s = sf.h - gx;
    for (int i = 0; i < sf.cone.n_nonneg; ++i)
        out.pres = std::max(out.pres, std::max(0.0, -s[i]) /
                                          std::max({1.0, gmag[i], std::abs(sf.h[i])}));
    int off = sf.cone.n_nonneg;
    for (int d : sf.cone.soc_dims) {
        const double tail = s.segment(off + 1, d - 1).norm();
        double mag = tail;
        for (int i = off; i < off + d; ++i)
            mag = std::max({mag, gmag[i], std::abs(sf.h[i])});
        out.pres = std::max(out.pres, std::max(0.0, tail - s[off]) / std::max(1.0, mag));
        off += d;
    }

    // stationarity c + A'y + G'z = 0, column by column
    Eigen::VectorXd r = sf.c;
    Eigen::VectorXd dmag = sf.c.cwiseAbs();
    for (int j = 0; j < sf.A.outerSize(); ++j)
        for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
            const double v = it.value() * y[it.row()];
            r[j] += v;
            dmag[j] = std::max(dmag[j], std::abs(v));
        }
    for (int j = 0; j < sf.G.outerSize(); ++j)
        for (SpMat::InnerIterator it(sf.G, j); it; ++it) {
            const double v = it.value() * z[it.row()];
            r[j] += v;
            dmag[j] = std::max(dmag[j], std::abs(v));
        }
    for (int j = 0; j < sf.n; ++j)
        out.dres = std::max(out.dres, std::abs(r[j]) / std::max(1.0, dmag[j]));

    const double pobj = sf.c.dot(x);
    const double dobj = -(sf.b.dot(y) + sf.h.dot(z));
    out.gap = std::abs(pobj - dobj) / std::max(1.0, std::abs(pobj));
    return out;
}

}  // namespace detail

// Primal-dual interior-point method on the homogeneous self-dual embedding,
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector step. The KKT
// system
//   [ dI   A'        G'     ] [dx]   [rhs_x]
//   [ A   -dI        0      ] [dy] = [rhs_y]
//   [ G    0   -(W'W + dI)  ] [dz]   [rhs_z]
// is factored once per iteration with a sparse LDL' and polished by iterative
// refinement against the unregularized matrix.
class InteriorPointSolver : public ConeSolver {
  public:
    InteriorPointSolver() = default;
    explicit InteriorPointSolver(SolverOptions opts) : opts_(opts) {}

    StandardResult solve_standard(const StandardForm& sf_in) const override {
        StandardForm sf = sf_in;
        detail::Equilibration eq;
        if (opts_.equilibrate)
            eq.run(sf, opts_.ruiz_iters);
        else {
            eq.row_a = Eigen::VectorXd::Ones(sf.A.rows());
            eq.row_g = Eigen::VectorXd::Ones(sf.G.rows());
            eq.col = Eigen::VectorXd::Ones(sf.n);
        }
        // each attempt runs from scratch with the regularization shifted:
        // smaller first (it biases the solution less), larger as a rescue
        std::fprintf(stderr, "SOLVE enter static_reg=%.1e n=%d\n", opts_.static_reg, sf_in.n);
        if (const char* dp = std::getenv("SF_DUMP")) {  // REMOVE
            static int ctr = 0;
            char path[256];
            std::snprintf(path, sizeof path, "%s%d.txt", dp, ctr++);
            std::FILE* f = std::fopen(path, "w");
            std::fprintf(f, "%d %d %d %d %zu\n", sf_in.n, static_cast<int>(sf_in.A.rows()),
                         static_cast<int>(sf_in.G.rows()), sf_in.cone.n_nonneg,
                         sf_in.cone.soc_dims.size());
            for (int d : sf_in.cone.soc_dims) std::fprintf(f, "%d ", d);
            std::fprintf(f, "\n");
            for (int i = 0; i < sf_in.n; ++i) std::fprintf(f, "%.17g ", sf_in.c[i]);
            std::fprintf(f, "\n");
            for (int i = 0; i < sf_in.A.rows(); ++i) std::fprintf(f, "%.17g ", sf_in.b[i]);
            std::fprintf(f, "\n");
            for (int i = 0; i < sf_in.G.rows(); ++i) std::fprintf(f, "%.17g ", sf_in.h[i]);
            std::fprintf(f, "\n");
            for (int k = 0; k < sf_in.A.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(sf_in.A, k); it; ++it)
                    std::fprintf(f, "A %d %d %.17g\n", static_cast<int>(it.row()),
                                 static_cast<int>(it.col()), it.value());
            for (int k = 0; k < sf_in.G.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(sf_in.G, k); it; ++it)
                    std::fprintf(f, "G %d %d %.17g\n", static_cast<int>(it.row()),
                                 static_cast<int>(it.col()), it.value());
            std::fclose(f);
        }
        StandardResult best;
        double best_err = std::numeric_limits<double>::infinity();
        for (double mult : {1.0, 0.1, 0.01, 1e-3, 10.0}) {
            StandardResult res = run_ipm(sf, opts_.static_reg * mult);
            std::fprintf(stderr, "LADDER reg=%.1e status=%d iters=%d pobj=%.9g\n",
                         opts_.static_reg * mult, static_cast<int>(res.status), res.iterations,
                         res.pobj);
            if (res.status == SolveStatus::Infeasible || res.status == SolveStatus::Unbounded)
                return res;
            if (res.status != SolveStatus::Optimal) continue;
            eq.unscale_x(res.x);
            eq.unscale_duals(res.y, res.z);
            res.pobj *= eq.cobj;
            const detail::TrueResiduals tr = detail::true_residuals(sf_in, res.x, res.y, res.z);
            res.pres = tr.pres;
            res.dres = tr.dres;
            res.gap = tr.gap;
            const double err = std::max({tr.pres, tr.dres, tr.gap});
            std::fprintf(stderr, "  ACCEPT? pres=%.3g dres=%.3g gap=%.3g err=%.3g\n", tr.pres,
                         tr.dres, tr.gap, err);
            if (err <= opts_.accept_tol) return res;
            if (err < best_err) {
                best_err = err;
                best = std::move(res);
            }
        }
        if (best_err <= opts_.accept_tol_loose) return best;
        StandardResult fail;
        return fail;
    }

    const SolverOptions& options() const { return opts_; }

  private:
    struct Work {
        Eigen::VectorXd x, y, z, s;
        double tau = 1.0, kap = 1.0;
    };

    struct Stats {
        double pcost = 0, dcost = 0, gap = 0, mu = 0;
        std::optional<double> relgap;
        double pres = 0, dres = 0;
        std::optional<double> pinfres, dinfres;
        double cx = 0, by = 0, hz = 0;
    };

    struct Kkt {
        detail::SpMat K;
        Eigen::SimplicialLDLT<detail::SpMat, Eigen::Lower> ldlt;
        std::vector<std::ptrdiff_t> lp_slots;               // diag slots of nonneg rows
        std::vector<std::vector<std::ptrdiff_t>> soc_slots; // per cone, column-major lower triangle
        bool analyzed = false;
    };

    StandardResult run_ipm(const StandardForm& sf, double reg0) const {
        using Eigen::VectorXd;
        const int n = sf.n;
        const int p = static_cast<int>(sf.A.rows());
        const int m = static_cast<int>(sf.G.rows());
        const int N = n + p + m;
        const ConeLayout& cone = sf.cone;

        StandardResult out;
        if (m == 0 && p == 0) {
            // unconstrained linear objective
            out.status = sf.c.norm() == 0.0 ? SolveStatus::Optimal : SolveStatus::Unbounded;
            out.x = VectorXd::Zero(n);
            out.pobj = 0.0;
            out.pres = out.dres = out.gap = 0.0;
            return out;
        }

        const detail::SpMat At = sf.A.transpose();
        const detail::SpMat Gt = sf.G.transpose();
        const double resx0 = std::max(1.0, sf.c.norm());
        const double resy0 = std::max(1.0, sf.b.norm());
        const double resz0 = std::max(1.0, sf.h.norm());

        Kkt kkt;
        double reg = reg0;
        build_kkt(sf, kkt, reg);

        detail::Scaling W;
        // identity scaling for the initialization solves
        {
            Eigen::VectorXd ones_s = detail::cone_identity(cone);
            if (!W.compute(ones_s, ones_s, cone)) return out;
        }
        if (!refactor(sf, kkt, W, reg)) return out;

        Work w;
        w.x = VectorXd::Zero(n);
        w.y = VectorXd::Zero(p);
        w.z = VectorXd::Zero(m);
        w.s = VectorXd::Zero(m);

        VectorXd rhs(N), sol1(N), sol2(N);
        // primal start: solve [0; b; h]
        rhs.setZero();
        rhs.segment(n, p) = sf.b;
        rhs.segment(n + p, m) = sf.h;
        {
            const Eigen::VectorXd dvec = kkt.ldlt.vectorD();
            std::fprintf(stderr,
                         "  INIT reg=%.17g dmin=%.3g dmax=%.3g dzero=%d dnan=%d rhsfin=%d\n", reg,
                         dvec.cwiseAbs().minCoeff(), dvec.cwiseAbs().maxCoeff(),
                         static_cast<int>((dvec.cwiseAbs().array() == 0.0).count()),
                         static_cast<int>(dvec.array().isNaN().count()),
                         static_cast<int>(rhs.allFinite()));
        }
        sol1 = kkt_solve_safe(sf, kkt, W, reg, rhs);
        if (!sol1.allFinite()) return out;
        w.x = sol1.head(n);
        w.s = detail::bring_to_cone(-sol1.segment(n + p, m), cone);
        // dual start: solve [-c; 0; 0]
        rhs.setZero();
        rhs.head(n) = -sf.c;
        sol2 = kkt_solve_safe(sf, kkt, W, reg, rhs);
        if (!sol2.allFinite()) return out;
        w.y = sol2.segment(n, p);
        w.z = detail::bring_to_cone(sol2.segment(n + p, m), cone);
        w.tau = 1.0;
        w.kap = 1.0;

        // rhs for the tau-update solve, constant across iterations
        VectorXd rhs1(N);
        rhs1.head(n) = -sf.c;
        rhs1.segment(n, p) = sf.b;
        rhs1.segment(n + p, m) = sf.h;

        std::optional<StandardResult> fallback;
        double best_score = std::numeric_limits<double>::infinity();
        int stall_count = 0;

        for (int iter = 0; iter <= opts_.max_iters; ++iter) {
            // residuals
            VectorXd rx = -(Gt * w.z);
            if (p > 0) rx -= At * w.y;
            const double hresx = rx.norm();
            rx -= w.tau * sf.c;
            VectorXd ry;
            double hresy = 0.0;
            if (p > 0) {
                ry = sf.A * w.x;
                hresy = ry.norm();
                ry -= w.tau * sf.b;
            } else {
                ry.resize(0);
            }
            VectorXd rz = w.s + sf.G * w.x;
            const double hresz = rz.norm();
            rz -= w.tau * sf.h;

            Stats st;
            st.cx = sf.c.dot(w.x);
            st.by = p > 0 ? sf.b.dot(w.y) : 0.0;
            st.hz = sf.h.dot(w.z);
            const double rt = w.kap + st.cx + st.by + st.hz;
            const double nx = w.x.norm(), ny = w.y.norm(), nz = w.z.norm(), ns = w.s.norm();

            st.gap = w.s.dot(w.z);
            st.mu = (st.gap + w.kap * w.tau) / (cone.degree() + 1);
            st.pcost = st.cx / w.tau;
            st.dcost = -(st.hz + st.by) / w.tau;
            if (st.pcost < 0.0)
                st.relgap = st.gap / (-st.pcost);
            else if (st.dcost > 0.0)
                st.relgap = st.gap / st.dcost;
            const double nry = p > 0 ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
            const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
            st.pres = std::max(nry, nrz) / w.tau;
            st.dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / w.tau;
            if ((st.hz + st.by) / std::max(ny + nz, 1.0) < -opts_.reltol)
                st.pinfres = hresx / std::max(ny + nz, 1.0);
            if (st.cx / std::max(nx, 1.0) < -opts_.reltol)
                st.dinfres = std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0));

            if (auto done = classify(st, w, false)) {
                fill_result(out, *done, st, w, iter, n);
                return out;
            }
            if (auto close = classify(st, w, true)) {
                const double score = std::max(st.pres, st.dres);
                if (score < best_score) {
                    best_score = score;
                    StandardResult r;
                    fill_result(r, *close, st, w, iter, n);
                    fallback = std::move(r);
                }
            }
            if (iter == opts_.max_iters || stall_count >= 2) break;

            // update scaling and refactor
            if (!W.compute(w.s, w.z, cone)) break;
            if (!refactor(sf, kkt, W, reg)) break;
            VectorXd lambda = W.apply(w.z);

            sol1 = kkt_solve_safe(sf, kkt, W, reg, rhs1);
            if (!sol1.allFinite()) break;
            const double dt_denom = w.kap / w.tau -
                                    (sf.c.dot(sol1.head(n)) + (p > 0 ? sf.b.dot(sol1.segment(n, p)) : 0.0) +
                                     sf.h.dot(sol1.segment(n + p, m)));
            if (!(std::abs(dt_denom) > 1e-14)) break;

            // affine (predictor) direction
            rhs.head(n) = rx;
            if (p > 0) rhs.segment(n, p) = -ry;
            rhs.segment(n + p, m) = w.s - rz;
            sol2 = kkt_solve_safe(sf, kkt, W, reg, rhs);
            if (!sol2.allFinite()) break;
            const double dtau_aff =
                (rt - w.kap + sf.c.dot(sol2.head(n)) + (p > 0 ? sf.b.dot(sol2.segment(n, p)) : 0.0) +
                 sf.h.dot(sol2.segment(n + p, m))) /
                dt_denom;
            VectorXd dz_aff = sol2.segment(n + p, m) + dtau_aff * sol1.segment(n + p, m);
            VectorXd dz_aff_byW = W.apply(dz_aff);
            VectorXd ds_aff_byW = -dz_aff_byW - lambda;  // W^{-1} ds
            const double dkap_aff = -w.kap - (w.kap / w.tau) * dtau_aff;

            double alpha_aff = detail::max_cone_step(lambda, ds_aff_byW, cone);
            alpha_aff = std::min(alpha_aff, detail::max_cone_step(lambda, dz_aff_byW, cone));
            if (dtau_aff < 0.0) alpha_aff = std::min(alpha_aff, -w.tau / dtau_aff);
            if (dkap_aff < 0.0) alpha_aff = std::min(alpha_aff, -w.kap / dkap_aff);
            alpha_aff = std::min(alpha_aff, 1.0);

            const double rho = 1.0 - alpha_aff;
            const double sigma = std::clamp(rho * rho * rho, 1e-8, 0.999);

            // combined (corrector) direction
            VectorXd ds1 = detail::jordan_product(lambda, lambda, cone) +
                           detail::jordan_product(ds_aff_byW, dz_aff_byW, cone) -
                           sigma * st.mu * detail::cone_identity(cone);
            VectorXd lam_div = detail::jordan_divide(lambda, ds1, cone);
            rhs.head(n) = (1.0 - sigma) * rx;
            if (p > 0) rhs.segment(n, p) = -(1.0 - sigma) * ry;
            rhs.segment(n + p, m) = -(1.0 - sigma) * rz + W.apply(lam_div);
            sol2 = kkt_solve_safe(sf, kkt, W, reg, rhs);
            if (!sol2.allFinite()) break;
            const double bkap = w.kap * w.tau + dkap_aff * dtau_aff - sigma * st.mu;
            const double dtau = ((1.0 - sigma) * rt - bkap / w.tau + sf.c.dot(sol2.head(n)) +
                                 (p > 0 ? sf.b.dot(sol2.segment(n, p)) : 0.0) +
                                 sf.h.dot(sol2.segment(n + p, m))) /
                                dt_denom;
            VectorXd dx = sol2.head(n) + dtau * sol1.head(n);
            VectorXd dy = p > 0 ? VectorXd(sol2.segment(n, p) + dtau * sol1.segment(n, p))
                                : VectorXd();
            VectorXd dz = sol2.segment(n + p, m) + dtau * sol1.segment(n + p, m);
            VectorXd dz_byW = W.apply(dz);
            VectorXd ds_byW = -(lam_div + dz_byW);
            const double dkap = -(bkap + w.kap * dtau) / w.tau;

            double alpha = detail::max_cone_step(lambda, ds_byW, cone);
            alpha = std::min(alpha, detail::max_cone_step(lambda, dz_byW, cone));
            if (dtau < 0.0) alpha = std::min(alpha, -w.tau / dtau);
            if (dkap < 0.0) alpha = std::min(alpha, -w.kap / dkap);
            alpha = std::min(alpha, 1.0 / opts_.step_scale) * opts_.step_scale;
            if (alpha < 1e-6)
                ++stall_count;
            else
                stall_count = 0;

            w.x += alpha * dx;
            if (p > 0) w.y += alpha * dy;
            w.z += alpha * dz;
            w.s += alpha * W.apply(ds_byW);
            w.tau += alpha * dtau;
            w.kap += alpha * dkap;
            if (!(w.tau > 0.0) || !(w.kap > 0.0)) break;
        }

        if (fallback) return *fallback;
        return out;
    }

    std::optional<SolveStatus> classify(const Stats& st, const Work& w, bool reduced) const {
        const double feastol = reduced ? opts_.feastol_inacc : opts_.feastol;
        const double abstol = reduced ? opts_.abstol_inacc : opts_.abstol;
        const double reltol = reduced ? opts_.reltol_inacc : opts_.reltol;
        if ((-st.cx > 0.0 || -st.by - st.hz >= -abstol) && st.pres < feastol && st.dres < feastol &&
            (st.gap < abstol || (st.relgap && *st.relgap < reltol)))
            return SolveStatus::Optimal;
        if (st.dinfres && *st.dinfres < feastol && w.tau < w.kap) return SolveStatus::Unbounded;
        if ((st.pinfres && *st.pinfres < feastol && w.tau < w.kap) ||
            (w.tau < feastol && w.kap < feastol && st.pinfres && *st.pinfres < feastol))
            return SolveStatus::Infeasible;
        return std::nullopt;
    }

    void fill_result(StandardResult& r, SolveStatus status, const Stats& st, const Work& w,
                     int iter, int n) const {
        r.status = status;
        r.iterations = iter;
        r.pres = st.pres;
        r.dres = st.dres;
        r.gap = st.relgap.value_or(st.gap);
        if (status == SolveStatus::Optimal) {
            r.x = w.x / w.tau;
            r.y = w.y / w.tau;
            r.z = w.z / w.tau;
            r.pobj = st.pcost;
        }
    }

    // Assemble the lower triangle of the KKT matrix once; scaling-dependent
    // entries are patched in place through cached value slots.
    void build_kkt(const StandardForm& sf, Kkt& kkt, double reg) const {
        const int n = sf.n;
        const int p = static_cast<int>(sf.A.rows());
        const int m = static_cast<int>(sf.G.rows());
        const int N = n + p + m;
        std::vector<detail::Triplet> trips;
        trips.reserve(static_cast<std::size_t>(sf.A.nonZeros() + sf.G.nonZeros() + N) + 64);

        for (int j = 0; j < n; ++j) trips.emplace_back(j, j, reg);
        for (int j = 0; j < sf.A.outerSize(); ++j)
            for (detail::SpMat::InnerIterator it(sf.A, j); it; ++it)
                trips.emplace_back(n + static_cast<int>(it.row()), j, it.value());
        for (int i = 0; i < p; ++i) trips.emplace_back(n + i, n + i, -reg);
        for (int j = 0; j < sf.G.outerSize(); ++j)
            for (detail::SpMat::InnerIterator it(sf.G, j); it; ++it)
                trips.emplace_back(n + p + static_cast<int>(it.row()), j, it.value());
        for (int i = 0; i < sf.cone.n_nonneg; ++i)
            trips.emplace_back(n + p + i, n + p + i, -1.0 - reg);
        int off = sf.cone.n_nonneg;
        for (int d : sf.cone.soc_dims) {
            for (int cjj = 0; cjj < d; ++cjj)
                for (int rii = cjj; rii < d; ++rii)
                    trips.emplace_back(n + p + off + rii, n + p + off + cjj,
                                       rii == cjj ? -1.0 - reg : 0.0);
            off += d;
        }

        kkt.K.resize(N, N);
        kkt.K.setFromTriplets(trips.begin(), trips.end());
        kkt.K.makeCompressed();

        auto slot = [&](int row, int col) -> std::ptrdiff_t {
            for (detail::SpMat::InnerIterator it(kkt.K, col); it; ++it)
                if (it.row() == row) return &it.valueRef() - kkt.K.valuePtr();
            throw Error("kkt: missing slot");
        };
        kkt.lp_slots.clear();
        for (int i = 0; i < sf.cone.n_nonneg; ++i)
            kkt.lp_slots.push_back(slot(n + p + i, n + p + i));
        kkt.soc_slots.clear();
        off = sf.cone.n_nonneg;
        for (int d : sf.cone.soc_dims) {
            std::vector<std::ptrdiff_t> blk;
            blk.reserve(static_cast<std::size_t>(d) * (d + 1) / 2);
            for (int cjj = 0; cjj < d; ++cjj)
                for (int rii = cjj; rii < d; ++rii)
                    blk.push_back(slot(n + p + off + rii, n + p + off + cjj));
            kkt.soc_slots.push_back(std::move(blk));
            off += d;
        }
        kkt.ldlt.analyzePattern(kkt.K);
        kkt.analyzed = true;
    }

    // Patch -(W'W + reg I) into the cone block and factorize; on failure the
    // regularization is bumped and the factorization retried.
    bool refactor(const StandardForm& sf, Kkt& kkt, const detail::Scaling& W, double& reg) const {
        for (int attempt = 0; attempt < 4; ++attempt) {
            double* vals = kkt.K.valuePtr();
            for (int i = 0; i < sf.cone.n_nonneg; ++i)
                vals[kkt.lp_slots[i]] = -W.w2_lp[i] - reg;
            for (std::size_t k = 0; k < sf.cone.soc_dims.size(); ++k) {
                const int d = sf.cone.soc_dims[k];
                const double e2 = W.eta[k] * W.eta[k];
                const Eigen::VectorXd& wb = W.wbar[k];
                std::size_t idx = 0;
                for (int cjj = 0; cjj < d; ++cjj)
                    for (int rii = cjj; rii < d; ++rii, ++idx) {
                        // W^2(i,j) = eta^2 (2 wb_i wb_j - J_ij)
                        double v = -e2 * 2.0 * wb[rii] * wb[cjj];
                        if (rii == cjj) {
                            v += e2 * (rii == 0 ? 1.0 : -1.0);
                            v -= reg;
                        }
                        vals[kkt.soc_slots[k][idx]] = v;
                    }
            }
            kkt.ldlt.factorize(kkt.K);
            if (kkt.ldlt.info() == Eigen::Success) return true;
            reg *= 100.0;
            // static entries depend on reg as well; rebuild from scratch
            build_kkt(sf, kkt, reg);
        }
        return false;
    }

    Eigen::VectorXd kkt_solve(const StandardForm& sf, const Kkt& kkt, double reg,
                              const Eigen::VectorXd& rhs, double& rel_err) const {
        const int n = sf.n;
        Eigen::VectorXd v = kkt.ldlt.solve(rhs);
        // refine against the unregularized matrix: K v - reg * S v. When that
        // matrix is nearly singular the iteration can diverge, so each pass
        // keeps the best iterate and stops the moment the residual grows.
        auto residual = [&](const Eigen::VectorXd& u) {
            Eigen::VectorXd Ku = kkt.K.selfadjointView<Eigen::Lower>() * u;
            Eigen::VectorXd Su = u;
            Su.tail(u.size() - n) *= -1.0;
            return Eigen::VectorXd(rhs - (Ku - reg * Su));
        };
        const double rhs_scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
        if (!v.allFinite()) {
            rel_err = std::numeric_limits<double>::infinity();
            return v;
        }
        Eigen::VectorXd err = residual(v);
        double err_norm = err.lpNorm<Eigen::Infinity>();
        for (int it = 0; it < opts_.refine_iters; ++it) {
            if (!(err_norm > 1e-14 * rhs_scale)) break;
            Eigen::VectorXd cand = v + kkt.ldlt.solve(err);
            if (!cand.allFinite()) break;
            Eigen::VectorXd cand_err = residual(cand);
            const double cand_norm = cand_err.lpNorm<Eigen::Infinity>();
            if (!(cand_norm < err_norm)) break;
            v = std::move(cand);
            err = std::move(cand_err);
            err_norm = cand_norm;
        }
        rel_err = err_norm / rhs_scale;
        return v;
    }

    // LDL' without dynamic pivoting can accept a bad pivot and hand back a
    // garbage solve (NaN, or finite with a residual refinement cannot pull
    // down); bump the regularization, refactor and retry, keeping whichever
    // attempt left the smallest true residual
    Eigen::VectorXd kkt_solve_safe(const StandardForm& sf, Kkt& kkt, const detail::Scaling& W,
                                   double& reg, const Eigen::VectorXd& rhs) const {
        constexpr double kStallTol = 1e-6;
        double rel_err;
        Eigen::VectorXd v = kkt_solve(sf, kkt, reg, rhs, rel_err);
        for (int attempt = 0; attempt < 3 && !(rel_err <= kStallTol) && reg < 1e-2; ++attempt) {
            reg *= 100.0;
            if (!refactor(sf, kkt, W, reg)) break;
            double retry_err;
            Eigen::VectorXd retry = kkt_solve(sf, kkt, reg, rhs, retry_err);
            if (retry_err < rel_err) {
                v = std::move(retry);
                rel_err = retry_err;
            }
        }
        return v;
    }

    SolverOptions opts_;
};

// ---- program -> standard form, with binary substitution and presolve --------

struct FixedVar {
    Var var;
    double value;
};
using FixedVars = std::vector<FixedVar>;

namespace detail {

struct NumRow {
    std::vector<std::pair<std::int32_t, double>> terms;  // folded, compact var ids later
    double cst = 0.0;
};

// fold duplicate variables and substitute fixed values
inline NumRow fold_row(const LinExpr& e, const std::vector<double>& fixed_value,
                       const std::vector<char>& is_fixed) {
    NumRow r;
    r.cst = e.constant();
    r.terms.reserve(e.terms().size());
    for (const LinTerm& t : e.terms()) {
        if (is_fixed[static_cast<std::size_t>(t.var)]) {
            r.cst += t.coef * fixed_value[static_cast<std::size_t>(t.var)];
        } else {
            r.terms.emplace_back(t.var, t.coef);
        }
    }
    std::sort(r.terms.begin(), r.terms.end());
    std::size_t w = 0;
    for (std::size_t i = 0; i < r.terms.size(); ++i) {
        if (w > 0 && r.terms[w - 1].first == r.terms[i].first) {
            r.terms[w - 1].second += r.terms[i].second;
        } else {
            r.terms[w++] = r.terms[i];
        }
    }
    r.terms.resize(w);
    std::erase_if(r.terms, [](const auto& t) { return t.second == 0.0; });
    return r;
}

}  // namespace detail

inline const ConeSolver& default_cone_solver() {
    static const InteriorPointSolver solver;
    return solver;
}

// Solve the continuous relaxation of `prog` with the given variables fixed.
// Binary marks become [0,1] box rows for the unfixed binaries; fixed variables
// are substituted out before the backend sees the problem. Second-order cones
// whose radius folds to the constant zero are presolved into equality rows so
// the cone keeps a strict interior.
inline Solution solve_relaxation(const Program& prog, const FixedVars& fixed = {},
                                 const SolverOptions& opts = {},
                                 const ConeSolver* backend = nullptr) {
    constexpr double kFeasEps = 1e-9;
    const int nv = prog.num_vars();
    std::vector<double> fixed_value(static_cast<std::size_t>(nv), 0.0);
    std::vector<char> is_fixed(static_cast<std::size_t>(nv), 0);
    for (const FixedVar& f : fixed) {
        if (!f.var.valid() || f.var.id >= nv) throw Error("solve_relaxation: unknown fixed variable");
        const auto i = static_cast<std::size_t>(f.var.id);
        if (is_fixed[i] && fixed_value[i] != f.value)
            throw Error("solve_relaxation: conflicting values for fixed variable");
        is_fixed[i] = 1;
        fixed_value[i] = f.value;
    }

    // Rows in standard form. Zero rows build A, everything else builds G.
    std::vector<detail::NumRow> eq_rows, ineq_rows;  // ineq: row >= 0 (nonneg slack)
    std::vector<std::vector<detail::NumRow>> soc_blocks;

    auto fold = [&](const LinExpr& e) { return detail::fold_row(e, fixed_value, is_fixed); };

    Solution infeasible;
    infeasible.status = SolveStatus::Infeasible;

    for (const Constraint& c : prog.constraints()) {
        switch (c.kind) {
            case ConeKind::Zero: {
                for (const LinExpr& e : c.rows) {
                    detail::NumRow r = fold(e);
                    if (r.terms.empty()) {
                        if (std::abs(r.cst) > kFeasEps) return infeasible;
                    } else {
                        eq_rows.push_back(std::move(r));
                    }
                }
                break;
            }
            case ConeKind::NonNeg: {
                detail::NumRow r = fold(c.rows[0]);
                if (r.terms.empty()) {
                    if (r.cst < -kFeasEps) return infeasible;
                } else {
                    ineq_rows.push_back(std::move(r));
                }
                break;
            }
            case ConeKind::SecondOrder: {
                detail::NumRow head = fold(c.rows[0]);
                if (head.terms.empty()) {
                    // Constant radius. When the constant tail rows already use
                    // up the whole budget (a fixed binary folded through a
                    // big-M bound does this exactly), the variable rows must
                    // vanish; keeping the cone would leave it without a strict
                    // interior.
                    if (head.cst < -kFeasEps) return infeasible;
                    const double budget = head.cst * head.cst;
                    double used = 0.0;
                    std::vector<detail::NumRow> tail;
                    tail.reserve(c.rows.size() - 1);
                    for (std::size_t i = 1; i < c.rows.size(); ++i) {
                        detail::NumRow r = fold(c.rows[i]);
                        if (r.terms.empty()) used += r.cst * r.cst;
                        tail.push_back(std::move(r));
                    }
                    const double scale = std::max(1.0, budget);
                    if (used - budget > kFeasEps * scale) return infeasible;
                    if (budget - used <= 1e-11 * scale) {
                        for (detail::NumRow& r : tail) {
                            if (r.terms.empty()) continue;
                            eq_rows.push_back(std::move(r));
                        }
                        break;
                    }
                    bool has_var_rows = false;
                    for (const detail::NumRow& r : tail)
                        if (!r.terms.empty()) has_var_rows = true;
                    if (!has_var_rows) break;  // fully constant, already checked
                    std::vector<detail::NumRow> blk;
                    blk.reserve(c.rows.size());
                    blk.push_back(std::move(head));
                    for (detail::NumRow& r : tail) blk.push_back(std::move(r));
                    soc_blocks.push_back(std::move(blk));
                    break;
                }
                std::vector<detail::NumRow> blk;
                blk.reserve(c.rows.size());
                blk.push_back(std::move(head));
                for (std::size_t i = 1; i < c.rows.size(); ++i) blk.push_back(fold(c.rows[i]));
                soc_blocks.push_back(std::move(blk));
                break;
            }
        }
    }

    // Dependent equality rows would lean entirely on the static
    // regularization (the KKT factorization has no row pivoting), so drop
    // repeats: single-term rows pin a variable and are kept once in unit
    // form, wider rows are kept once per exact coefficient pattern.
    {
        std::vector<detail::NumRow> kept;
        kept.reserve(eq_rows.size());
        std::map<std::int32_t, double> pinned;
        std::set<std::pair<double, std::vector<std::pair<std::int32_t, double>>>> seen;
        for (detail::NumRow& r : eq_rows) {
            if (r.terms.size() == 1) {
                const double val = -r.cst / r.terms[0].second;
                auto [it, fresh] = pinned.emplace(r.terms[0].first, val);
                if (!fresh) {
                    if (std::abs(it->second - val) > kFeasEps * std::max(1.0, std::abs(val)))
                        return infeasible;
                    continue;
                }
                r.terms[0].second = 1.0;
                r.cst = -val;
            } else if (!seen.emplace(r.cst, r.terms).second) {
                continue;
            }
            kept.push_back(std::move(r));
        }
        eq_rows = std::move(kept);
    }

    // box rows for unfixed binaries
    for (std::int32_t id : prog.binaries()) {
        if (is_fixed[static_cast<std::size_t>(id)]) continue;
        detail::NumRow lo;
        lo.terms.emplace_back(id, 1.0);
        ineq_rows.push_back(lo);
        detail::NumRow hi;
        hi.cst = 1.0;
        hi.terms.emplace_back(id, -1.0);
        ineq_rows.push_back(std::move(hi));
    }

    // compact variable numbering over the free variables
    std::vector<std::int32_t> to_compact(static_cast<std::size_t>(nv), -1);
    std::vector<std::int32_t> to_full;
    for (std::int32_t i = 0; i < nv; ++i)
        if (!is_fixed[static_cast<std::size_t>(i)]) {
            to_compact[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(to_full.size());
            to_full.push_back(i);
        }
    const int n = static_cast<int>(to_full.size());

    detail::NumRow obj = fold(prog.objective());

    if (n == 0) {
        // everything fixed: constants already validated above
        Solution sol;
        sol.status = SolveStatus::Optimal;
        sol.x = fixed_value;
        sol.objective = obj.cst;
        sol.primal_residual = sol.dual_residual = sol.gap = 0.0;
        return sol;
    }

    StandardForm sf;
    sf.n = n;
    const int p = static_cast<int>(eq_rows.size());
    int m = static_cast<int>(ineq_rows.size());
    sf.cone.n_nonneg = m;
    for (const auto& blk : soc_blocks) {
        sf.cone.soc_dims.push_back(static_cast<int>(blk.size()));
        m += static_cast<int>(blk.size());
    }

    std::vector<detail::Triplet> ta, tg;
    sf.b.resize(p);
    sf.h.resize(m);
    for (int i = 0; i < p; ++i) {
        sf.b[i] = -eq_rows[static_cast<std::size_t>(i)].cst;
        for (const auto& [var, coef] : eq_rows[static_cast<std::size_t>(i)].terms)
            ta.emplace_back(i, to_compact[static_cast<std::size_t>(var)], coef);
    }
    int gi = 0;
    auto push_g_row = [&](const detail::NumRow& r) {
        // cone slack s = row value: G row holds the negated coefficients
        sf.h[gi] = r.cst;
        for (const auto& [var, coef] : r.terms)
            tg.emplace_back(gi, to_compact[static_cast<std::size_t>(var)], -coef);
        ++gi;
    };
    for (const auto& r : ineq_rows) push_g_row(r);
    for (const auto& blk : soc_blocks)
        for (const auto& r : blk) push_g_row(r);

    sf.A.resize(p, n);
    sf.A.setFromTriplets(ta.begin(), ta.end());
    sf.G.resize(m, n);
    sf.G.setFromTriplets(tg.begin(), tg.end());
    sf.c = Eigen::VectorXd::Zero(n);
    for (const auto& [var, coef] : obj.terms)
        sf.c[to_compact[static_cast<std::size_t>(var)]] -= coef;  // maximize -> minimize

    StandardResult raw;
    if (backend) {
        raw = backend->solve_standard(sf);
    } else {
        raw = InteriorPointSolver(opts).solve_standard(sf);
    }

    Solution sol;
    sol.status = raw.status;
    sol.iterations = raw.iterations;
    sol.primal_residual = raw.pres;
    sol.dual_residual = raw.dres;
    sol.gap = raw.gap;
    if (raw.status == SolveStatus::Optimal) {
        sol.x = fixed_value;
        for (int j = 0; j < n; ++j) sol.x[static_cast<std::size_t>(to_full[static_cast<std::size_t>(j)])] = raw.x[j];
        sol.objective = obj.cst - raw.pobj;
    }
    return sol;
}

}  // namespace vhetnet::conic
