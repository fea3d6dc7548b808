#include "aggflex/ipm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>

#include <Eigen/SparseCholesky>

#include "aggflex/errors.hpp"

namespace aggflex::ipm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Smallest positive root of q(t) = a2*t^2 + 2*a1*t + a0 (a0 > 0),
/// or +inf when q stays positive for all t >= 0.
double smallest_positive_root(double a2, double a1, double a0) {
    if (std::abs(a2) < 1e-300) {
        if (a1 >= 0.0) {
            return kInf;
        }
        return -a0 / (2.0 * a1);
    }
    const double disc = a1 * a1 - a0 * a2;
    if (disc < 0.0) {
        return kInf; // a2 > 0 here; a2 < 0 implies disc >= -a0*a2 > 0
    }
    const double sq = std::sqrt(disc);
    // Stable split: q has roots r1*r2 = a0/a2, r1+r2 = -2*a1/a2.
    double r1, r2;
    if (a1 >= 0.0) {
        r1 = (-a1 - sq) / a2;
        r2 = a0 / (a2 * r1);
    } else {
        r2 = (-a1 + sq) / a2;
        r1 = a0 / (a2 * r2);
    }
    double best = kInf;
    if (r1 > 0.0) best = std::min(best, r1);
    if (r2 > 0.0) best = std::min(best, r2);
    return best;
}

void max_abs_rows(Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
            e(it.row()) = std::max(std::abs(it.value()), e(it.row()));
        }
    }
}

void max_abs_cols(Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
            e(j) = std::max(std::abs(it.value()), e(j));
        }
    }
}

void scale_rows(const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
            it.valueRef() /= e(it.row());
        }
    }
}

void scale_cols(const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
            it.valueRef() /= e(j);
        }
    }
}

struct SocScaling {
    Eigen::Index dim = 0;
    Eigen::Index start = 0;    // offset into the cone vector
    double eta = 1.0;
    double eta_sq = 1.0;
    Eigen::VectorXd wbar;      // normalized NT point, wbar' J wbar = 1
    Eigen::MatrixXd w_sq;      // eta^2 * (2 wbar wbar' - J)
};

/// Ordering functor for SimplicialLDLT that replays a precomputed
/// elimination order when one is installed, and falls back to AMD.
struct FixedOrdering {
    using PermutationType = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;
    static thread_local const Eigen::VectorXi* active;

    template <typename MatrixType>
    void operator()(const MatrixType& mat, PermutationType& perm) {
        if (active != nullptr && active->size() == mat.rows()) {
            perm.indices() = *active;
            return;
        }
        Eigen::AMDOrdering<int> amd;
        amd(mat, perm);
    }
};

thread_local const Eigen::VectorXi* FixedOrdering::active = nullptr;

struct Iterate {
    Eigen::VectorXd x, y, z, s;
    double tau = 1.0;
    double kap = 1.0;
    // statistics of this iterate
    double gap = 0.0, mu = 0.0, kapovert = 0.0;
    double pcost = 0.0, dcost = 0.0;
    double pres = 0.0, dres = 0.0;
    double step = 0.0;
    std::optional<double> relgap, pinfres, dinfres;
    int iter = 0;

    bool better_than(const Iterate& other) const {
        if (pinfres.has_value() && kapovert > 1.0) {
            return gap > 0.0 && other.gap > 0.0 && gap < other.gap &&
                   *pinfres > 0.0 && *pinfres < other.pres &&
                   mu > 0.0 && mu < other.mu;
        }
        return gap > 0.0 && other.gap > 0.0 && gap < other.gap &&
               pres > 0.0 && pres < other.pres &&
               dres > 0.0 && dres < other.dres &&
               kapovert > 0.0 && kapovert < other.kapovert &&
               mu > 0.0 && mu < other.mu;
    }
};

class ConeSolver {
  public:
    ConeSolver(const Eigen::SparseMatrix<double>& G,
               const Eigen::SparseMatrix<double>& A,
               const Eigen::VectorXd& c,
               const Eigen::VectorXd& h,
               const Eigen::VectorXd& b,
               Eigen::Index num_nonneg,
               const std::vector<Eigen::Index>& soc_dims,
               const Settings& settings,
               const EliminationGroups& groups)
        : st_(settings), G_(G), A_(A), c_(c), h_(h), b_(b), n_lp_(num_nonneg) {
        n_ = c.size();
        p_ = b.size();
        m_ = h.size();
        require(G.rows() == m_ && G.cols() == n_, ErrorKind::Model, "ipm: G shape mismatch");
        require(A.rows() == p_ && (p_ == 0 || A.cols() == n_), ErrorKind::Model, "ipm: A shape mismatch");
        require(m_ >= 1, ErrorKind::Model, "ipm: at least one conic constraint is required");
        Eigen::Index cone_rows = n_lp_;
        cones_.resize(soc_dims.size());
        for (size_t i = 0; i < soc_dims.size(); ++i) {
            require(soc_dims[i] >= 2, ErrorKind::Model, "ipm: SOC dimension must be >= 2");
            cones_[i].dim = soc_dims[i];
            cones_[i].start = cone_rows;
            cones_[i].wbar = Eigen::VectorXd::Zero(soc_dims[i]);
            cones_[i].wbar(0) = 1.0;
            cones_[i].w_sq = Eigen::MatrixXd::Identity(soc_dims[i], soc_dims[i]);
            cone_rows += soc_dims[i];
        }
        require(cone_rows == m_, ErrorKind::Model, "ipm: cone dimensions do not add up to rows of G");
        G_.makeCompressed();
        A_.makeCompressed();
        lp_v_.setOnes(n_lp_);
        lp_w_.setOnes(n_lp_);
        dim_kkt_ = n_ + p_ + m_;

        equilibrate();
        Gt_ = G_.transpose();
        At_ = A_.transpose();
        build_elimination_order(groups);
        setup_kkt();
    }

    Result run();

  private:
    void equilibrate();
    void build_elimination_order(const EliminationGroups& groups);
    void setup_kkt();
    void update_kkt_scalings();
    bool update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z);
    void compute_residuals();
    void update_statistics();
    ExitCode check_exit(bool reduced);
    void bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out, bool flip) const;
    int solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                  Eigen::VectorXd& dz) const;
    double line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                       const Eigen::VectorXd& dz, double tau, double dtau,
                       double kap, double dkap) const;

    // W z, W^{-1} s, u o v, lambda \ w over the full cone vector
    Eigen::VectorXd apply_w(const Eigen::VectorXd& z) const;
    Eigen::VectorXd apply_w_inv(const Eigen::VectorXd& s) const;
    Eigen::VectorXd cone_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    Eigen::VectorXd cone_divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& w) const;
    Eigen::VectorXd apply_w_sq(const Eigen::VectorXd& v) const;

    Result finish(ExitCode code);

    Settings st_;
    Eigen::SparseMatrix<double> G_, A_, Gt_, At_;
    Eigen::VectorXd c_, h_, b_;
    Eigen::Index n_ = 0, p_ = 0, m_ = 0, n_lp_ = 0, dim_kkt_ = 0;

    std::vector<SocScaling> cones_;
    Eigen::VectorXd lp_v_, lp_w_; // LP scaling: v = s./z, w = sqrt(v)
    Eigen::VectorXd lambda_;

    Eigen::VectorXd x_equil_, a_equil_, g_equil_;

    Eigen::SparseMatrix<double> kkt_; // upper triangle
    std::vector<Eigen::Index> scaling_value_offsets_; // per z-column start of its (3,3) entries
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper, FixedOrdering> ldlt_;
    Eigen::VectorXi elimination_order_; // empty: AMD

    Iterate w_, best_;
    Eigen::VectorXd rx_, ry_, rz_;
    double rt_ = 0.0, hresx_ = 0.0, hresy_ = 0.0, hresz_ = 0.0;
    double nx_ = 0.0, ny_ = 0.0, nz_ = 0.0, ns_ = 0.0;
    double cx_ = 0.0, by_ = 0.0, hz_ = 0.0;
    double resx0_ = 1.0, resy0_ = 1.0, resz0_ = 1.0;
    mutable double factorize_ms_ = 0.0;
    mutable double solve_ms_ = 0.0;
    mutable int kkt_solves_ = 0;
};

void ConeSolver::equilibrate() {
    x_equil_.setOnes(n_);
    a_equil_.setOnes(p_);
    g_equil_.setOnes(m_);

    Eigen::VectorXd xt(n_), at(p_), gt(m_);
    for (int iter = 0; iter < 3; ++iter) {
        xt.setZero();
        at.setZero();
        gt.setZero();
        max_abs_cols(xt, A_);
        max_abs_cols(xt, G_);
        max_abs_rows(at, A_);
        max_abs_rows(gt, G_);
        // Keep each SOC block uniformly scaled so the cone is preserved.
        for (const SocScaling& sc : cones_) {
            const double block = gt.segment(sc.start, sc.dim).maxCoeff();
            gt.segment(sc.start, sc.dim).setConstant(block);
        }
        auto sqrt_or_one = [](double v) { return v < 1e-6 ? 1.0 : std::sqrt(v); };
        xt = xt.unaryExpr(sqrt_or_one);
        at = at.unaryExpr(sqrt_or_one);
        gt = gt.unaryExpr(sqrt_or_one);
        scale_rows(at, A_);
        scale_rows(gt, G_);
        scale_cols(xt, A_);
        scale_cols(xt, G_);
        x_equil_ = x_equil_.cwiseProduct(xt);
        a_equil_ = a_equil_.cwiseProduct(at);
        g_equil_ = g_equil_.cwiseProduct(gt);
    }
    c_ = c_.cwiseQuotient(x_equil_);
    b_ = b_.cwiseQuotient(a_equil_);
    h_ = h_.cwiseQuotient(g_equil_);
}

void ConeSolver::build_elimination_order(const EliminationGroups& groups) {
    if (groups.empty()) {
        return;
    }
    require(static_cast<Eigen::Index>(groups.variables.size()) == n_ &&
                static_cast<Eigen::Index>(groups.equalities.size()) == p_ &&
                static_cast<Eigen::Index>(groups.cone_rows.size()) == m_,
            ErrorKind::Model, "elimination groups do not match the problem dimensions");
    // KKT index -> group; border (-1) sorts last
    std::vector<std::pair<long, Eigen::Index>> keyed(static_cast<size_t>(dim_kkt_));
    auto key_of = [](int g) {
        return g < 0 ? std::numeric_limits<long>::max() : static_cast<long>(g);
    };
    for (Eigen::Index i = 0; i < n_; ++i) {
        keyed[static_cast<size_t>(i)] = {key_of(groups.variables[static_cast<size_t>(i)]), i};
    }
    for (Eigen::Index i = 0; i < p_; ++i) {
        keyed[static_cast<size_t>(n_ + i)] = {key_of(groups.equalities[static_cast<size_t>(i)]),
                                              n_ + i};
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
        keyed[static_cast<size_t>(n_ + p_ + i)] = {
            key_of(groups.cone_rows[static_cast<size_t>(i)]), n_ + p_ + i};
    }
    std::stable_sort(keyed.begin(), keyed.end());
    elimination_order_.resize(dim_kkt_);
    for (Eigen::Index k = 0; k < dim_kkt_; ++k) {
        elimination_order_(k) = static_cast<int>(keyed[static_cast<size_t>(k)].second);
    }
}

void ConeSolver::setup_kkt() {
    //        [ dI   A'   G'      ]
    //  KKT = [ A   -dI   0       ]   (upper triangle stored)
    //        [ G    0   -W^2-dI  ]
    std::vector<Eigen::Triplet<double>> trip;
    size_t nnz_estimate = static_cast<size_t>(n_ + p_ + A_.nonZeros() + G_.nonZeros() + n_lp_);
    for (const SocScaling& sc : cones_) {
        nnz_estimate += static_cast<size_t>(sc.dim * (sc.dim + 1) / 2);
    }
    trip.reserve(nnz_estimate);

    for (Eigen::Index i = 0; i < n_; ++i) {
        trip.emplace_back(i, i, st_.static_reg);
    }
    for (Eigen::Index j = 0; j < p_; ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(At_, j); it; ++it) {
            trip.emplace_back(it.row(), n_ + j, it.value());
        }
        trip.emplace_back(n_ + j, n_ + j, -st_.static_reg);
    }
    for (Eigen::Index j = 0; j < m_; ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(Gt_, j); it; ++it) {
            trip.emplace_back(it.row(), n_ + p_ + j, it.value());
        }
    }
    for (Eigen::Index j = 0; j < n_lp_; ++j) {
        trip.emplace_back(n_ + p_ + j, n_ + p_ + j, -1.0 - st_.static_reg);
    }
    for (const SocScaling& sc : cones_) {
        for (Eigen::Index col = 0; col < sc.dim; ++col) {
            for (Eigen::Index row = 0; row <= col; ++row) {
                const double v = (row == col) ? -1.0 - st_.static_reg : 0.0;
                trip.emplace_back(n_ + p_ + sc.start + row, n_ + p_ + sc.start + col, v);
            }
        }
    }
    kkt_.resize(dim_kkt_, dim_kkt_);
    kkt_.setFromTriplets(trip.begin(), trip.end());
    kkt_.makeCompressed();

    // Within each z-column the scaling entries sit below every G' entry,
    // so they occupy the tail of the column's value range.
    scaling_value_offsets_.assign(m_, 0);
    const auto* outer = kkt_.outerIndexPtr();
    for (Eigen::Index j = 0; j < m_; ++j) {
        Eigen::Index col = n_ + p_ + j;
        Eigen::Index tail;
        if (j < n_lp_) {
            tail = 1;
        } else {
            Eigen::Index local = 0;
            for (const SocScaling& sc : cones_) {
                if (j >= sc.start && j < sc.start + sc.dim) {
                    local = j - sc.start;
                    break;
                }
            }
            tail = local + 1;
        }
        scaling_value_offsets_[j] = outer[col + 1] - tail;
    }
}

void ConeSolver::update_kkt_scalings() {
    double* values = kkt_.valuePtr();
    for (Eigen::Index j = 0; j < n_lp_; ++j) {
        values[scaling_value_offsets_[j]] = -lp_v_(j) - st_.static_reg;
    }
    for (const SocScaling& sc : cones_) {
        for (Eigen::Index col = 0; col < sc.dim; ++col) {
            double* dst = values + scaling_value_offsets_[sc.start + col];
            for (Eigen::Index row = 0; row <= col; ++row) {
                double v = -sc.w_sq(row, col);
                if (row == col) {
                    v -= st_.static_reg;
                }
                dst[row] = v;
            }
        }
    }
}

bool ConeSolver::update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    if (n_lp_ > 0) {
        if ((s.head(n_lp_).array() <= 0.0).any() || (z.head(n_lp_).array() <= 0.0).any()) {
            return false;
        }
        lp_v_ = s.head(n_lp_).cwiseQuotient(z.head(n_lp_));
        lp_w_ = lp_v_.cwiseSqrt();
    }
    for (SocScaling& sc : cones_) {
        const auto sseg = s.segment(sc.start, sc.dim);
        const auto zseg = z.segment(sc.start, sc.dim);
        const double sres = sseg(0) * sseg(0) - sseg.tail(sc.dim - 1).squaredNorm();
        const double zres = zseg(0) * zseg(0) - zseg.tail(sc.dim - 1).squaredNorm();
        if (sres <= 0.0 || zres <= 0.0) {
            return false;
        }
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        const Eigen::VectorXd sbar = sseg / snorm;
        const Eigen::VectorXd zbar = zseg / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        sc.wbar.resize(sc.dim);
        sc.wbar(0) = (0.5 / gamma) * (sbar(0) + zbar(0));
        sc.wbar.tail(sc.dim - 1) = (0.5 / gamma) * (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1));
        sc.eta_sq = snorm / znorm;
        sc.eta = std::sqrt(sc.eta_sq);
        // W^2 = eta^2 * (2 wbar wbar' - J)
        sc.w_sq = 2.0 * sc.wbar * sc.wbar.transpose();
        sc.w_sq(0, 0) -= 1.0;
        for (Eigen::Index i = 1; i < sc.dim; ++i) {
            sc.w_sq(i, i) += 1.0;
        }
        sc.w_sq *= sc.eta_sq;
    }
    lambda_ = apply_w(z);
    return true;
}

Eigen::VectorXd ConeSolver::apply_w(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = lp_w_.cwiseProduct(z.head(n_lp_));
    for (const SocScaling& sc : cones_) {
        const auto zseg = z.segment(sc.start, sc.dim);
        const double w0 = sc.wbar(0);
        const auto w1 = sc.wbar.tail(sc.dim - 1);
        const double zeta = w1.dot(zseg.tail(sc.dim - 1));
        out(sc.start) = sc.eta * (w0 * zseg(0) + zeta);
        out.segment(sc.start + 1, sc.dim - 1) =
            sc.eta * (zseg.tail(sc.dim - 1) + (zseg(0) + zeta / (1.0 + w0)) * w1);
    }
    return out;
}

Eigen::VectorXd ConeSolver::apply_w_inv(const Eigen::VectorXd& s) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = s.head(n_lp_).cwiseQuotient(lp_w_);
    for (const SocScaling& sc : cones_) {
        const auto sseg = s.segment(sc.start, sc.dim);
        const double w0 = sc.wbar(0);
        const auto w1 = sc.wbar.tail(sc.dim - 1);
        const double zeta = w1.dot(sseg.tail(sc.dim - 1));
        out(sc.start) = (w0 * sseg(0) - zeta) / sc.eta;
        out.segment(sc.start + 1, sc.dim - 1) =
            (sseg.tail(sc.dim - 1) + (-sseg(0) + zeta / (1.0 + w0)) * w1) / sc.eta;
    }
    return out;
}

Eigen::VectorXd ConeSolver::apply_w_sq(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = lp_v_.cwiseProduct(v.head(n_lp_));
    for (const SocScaling& sc : cones_) {
        out.segment(sc.start, sc.dim).noalias() = sc.w_sq * v.segment(sc.start, sc.dim);
    }
    return out;
}

Eigen::VectorXd ConeSolver::cone_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = u.head(n_lp_).cwiseProduct(v.head(n_lp_));
    for (const SocScaling& sc : cones_) {
        const auto useg = u.segment(sc.start, sc.dim);
        const auto vseg = v.segment(sc.start, sc.dim);
        out(sc.start) = useg.dot(vseg);
        out.segment(sc.start + 1, sc.dim - 1) =
            useg(0) * vseg.tail(sc.dim - 1) + vseg(0) * useg.tail(sc.dim - 1);
    }
    return out;
}

Eigen::VectorXd ConeSolver::cone_divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& w) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = w.head(n_lp_).cwiseQuotient(lambda.head(n_lp_));
    for (const SocScaling& sc : cones_) {
        const auto l = lambda.segment(sc.start, sc.dim);
        const auto wseg = w.segment(sc.start, sc.dim);
        const double l0 = l(0);
        const double rho = l0 * l0 - l.tail(sc.dim - 1).squaredNorm();
        const double zeta = l.tail(sc.dim - 1).dot(wseg.tail(sc.dim - 1));
        out(sc.start) = (l0 * wseg(0) - zeta) / rho;
        const double factor = (zeta / l0 - wseg(0)) / rho;
        out.segment(sc.start + 1, sc.dim - 1) =
            factor * l.tail(sc.dim - 1) + wseg.tail(sc.dim - 1) / l0;
    }
    return out;
}

void ConeSolver::bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out, bool flip) const {
    const Eigen::VectorXd v = flip ? Eigen::VectorXd(-r) : r;
    double alpha = -st_.step_scale;
    for (Eigen::Index i = 0; i < n_lp_; ++i) {
        if (v(i) <= 0.0 && -v(i) > alpha) {
            alpha = -v(i);
        }
    }
    for (const SocScaling& sc : cones_) {
        const double res = v(sc.start) - v.segment(sc.start + 1, sc.dim - 1).norm();
        if (res <= 0.0 && -res > alpha) {
            alpha = -res;
        }
    }
    alpha += 1.0;
    out = v;
    out.head(n_lp_).array() += alpha;
    for (const SocScaling& sc : cones_) {
        out(sc.start) += alpha;
    }
}

int ConeSolver::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                          Eigen::VectorXd& dz) const {
    const auto ts0 = std::chrono::steady_clock::now();
    ++kkt_solves_;
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    const double threshold = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * st_.linsys_acc;
    const auto bx = rhs.head(n_);
    const auto by = rhs.segment(n_, p_);
    const auto bz = rhs.tail(m_);

    double err_prev = std::numeric_limits<double>::max();
    Eigen::VectorXd correction(dim_kkt_);
    int k = 0;
    for (; k <= st_.refine_iters; ++k) {
        const auto dxs = sol.head(n_);
        const auto dys = sol.segment(n_, p_);
        const auto dzs = sol.tail(m_);

        // Residual of the regularized KKT system.
        Eigen::VectorXd ex = bx - Gt_ * dzs - st_.static_reg * dxs;
        if (p_ > 0) {
            ex -= At_ * dys;
        }
        Eigen::VectorXd ey(p_);
        if (p_ > 0) {
            ey = by - A_ * dxs + st_.static_reg * dys;
        }
        Eigen::VectorXd ez = bz - G_ * dxs + apply_w_sq(dzs) + st_.static_reg * dzs;

        double err = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
        if (p_ > 0) {
            err = std::max(err, ey.lpNorm<Eigen::Infinity>());
        }
        if (k > 0 && err > err_prev) {
            sol -= correction;
            --k;
            break;
        }
        if (k == st_.refine_iters || err < threshold ||
            (k > 0 && err_prev < st_.refine_decrease * err)) {
            break;
        }
        err_prev = err;
        Eigen::VectorXd e(dim_kkt_);
        e << ex, ey, ez;
        correction = ldlt_.solve(e);
        sol += correction;
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.tail(m_);
    solve_ms_ +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - ts0).count();
    return k;
}

void ConeSolver::compute_residuals() {
    rx_ = -(Gt_ * w_.z);
    if (p_ > 0) {
        rx_ -= At_ * w_.y;
    }
    hresx_ = rx_.norm();
    rx_ -= w_.tau * c_;

    if (p_ > 0) {
        ry_ = A_ * w_.x;
        hresy_ = ry_.norm();
        ry_ -= w_.tau * b_;
    } else {
        ry_.resize(0);
        hresy_ = 0.0;
    }

    rz_ = w_.s + G_ * w_.x;
    hresz_ = rz_.norm();
    rz_ -= w_.tau * h_;

    cx_ = c_.dot(w_.x);
    by_ = p_ > 0 ? b_.dot(w_.y) : 0.0;
    hz_ = h_.dot(w_.z);
    rt_ = w_.kap + cx_ + by_ + hz_;

    nx_ = w_.x.norm();
    ny_ = w_.y.norm();
    nz_ = w_.z.norm();
    ns_ = w_.s.norm();
}

void ConeSolver::update_statistics() {
    const double degree = static_cast<double>(n_lp_ + static_cast<Eigen::Index>(cones_.size()));
    w_.gap = w_.s.dot(w_.z);
    w_.mu = (w_.gap + w_.kap * w_.tau) / (degree + 1.0);
    w_.kapovert = w_.kap / w_.tau;
    w_.pcost = cx_ / w_.tau;
    w_.dcost = -(hz_ + by_) / w_.tau;

    if (w_.pcost < 0.0) {
        w_.relgap = w_.gap / (-w_.pcost);
    } else if (w_.dcost > 0.0) {
        w_.relgap = w_.gap / w_.dcost;
    } else {
        w_.relgap.reset();
    }

    const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx_, 1.0) : 0.0;
    const double nrz = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0);
    w_.pres = std::max(nry, nrz) / w_.tau;
    w_.dres = rx_.norm() / std::max(resx0_ + ny_ + nz_, 1.0) / w_.tau;

    w_.pinfres.reset();
    w_.dinfres.reset();
    if ((hz_ + by_) / std::max(ny_ + nz_, 1.0) < -st_.reltol) {
        w_.pinfres = hresx_ / std::max(ny_ + nz_, 1.0);
    }
    if (cx_ / std::max(nx_, 1.0) < -st_.reltol) {
        w_.dinfres = std::max(hresy_ / std::max(nx_, 1.0), hresz_ / std::max(nx_ + ns_, 1.0));
    }
}

ExitCode ConeSolver::check_exit(bool reduced) {
    const double feastol = reduced ? st_.feastol_inacc : st_.feastol;
    const double abstol = reduced ? st_.abstol_inacc : st_.abstol;
    const double reltol = reduced ? st_.reltol_inacc : st_.reltol;

    if ((-cx_ > 0.0 || -by_ - hz_ >= -abstol) && w_.pres < feastol && w_.dres < feastol &&
        (w_.gap < abstol || (w_.relgap.has_value() && *w_.relgap < reltol))) {
        return reduced ? ExitCode::CloseToOptimal : ExitCode::Optimal;
    }
    if (w_.dinfres.has_value() && *w_.dinfres < feastol && w_.tau < w_.kap) {
        return reduced ? ExitCode::CloseToDualInfeasible : ExitCode::DualInfeasible;
    }
    if ((w_.pinfres.has_value() && *w_.pinfres < feastol && w_.tau < w_.kap) ||
        (w_.tau < feastol && w_.kap < feastol && w_.pinfres.has_value() && *w_.pinfres < feastol)) {
        return reduced ? ExitCode::CloseToPrimalInfeasible : ExitCode::PrimalInfeasible;
    }
    return ExitCode::MaxIterations; // sentinel: not converged yet
}

double ConeSolver::line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                               const Eigen::VectorXd& dz, double tau, double dtau,
                               double kap, double dkap) const {
    double alpha = 10.0;
    if (n_lp_ > 0) {
        const double rhomin = ds.head(n_lp_).cwiseQuotient(lambda.head(n_lp_)).minCoeff();
        const double sigmamin = dz.head(n_lp_).cwiseQuotient(lambda.head(n_lp_)).minCoeff();
        const double worst = std::min(rhomin, sigmamin);
        alpha = worst < 0.0 ? 1.0 / (-worst) : 1.0 / 1e-13;
    }
    if (dtau < 0.0) {
        alpha = std::min(alpha, -tau / dtau);
    }
    if (dkap < 0.0) {
        alpha = std::min(alpha, -kap / dkap);
    }
    for (const SocScaling& sc : cones_) {
        const auto l = lambda.segment(sc.start, sc.dim);
        const double a0 = l(0) * l(0) - l.tail(sc.dim - 1).squaredNorm();
        if (a0 <= 0.0) {
            continue;
        }
        for (const Eigen::VectorXd* dir : {&ds, &dz}) {
            const auto d = dir->segment(sc.start, sc.dim);
            const double a1 = l(0) * d(0) - l.tail(sc.dim - 1).dot(d.tail(sc.dim - 1));
            const double a2 = d(0) * d(0) - d.tail(sc.dim - 1).squaredNorm();
            alpha = std::min(alpha, smallest_positive_root(a2, a1, a0));
        }
    }
    return std::clamp(alpha, st_.step_min, st_.step_max);
}

Result ConeSolver::finish(ExitCode code) {
    if (std::getenv("AGGFLEX_IPM_VERBOSE") != nullptr) {
        std::fprintf(stderr,
                     "[ipm] n=%ld p=%ld m=%ld kkt_nnz=%ld iters=%d factorize=%.0fms solve=%.0fms "
                     "(%d solves) code=%d\n",
                     static_cast<long>(n_), static_cast<long>(p_), static_cast<long>(m_),
                     static_cast<long>(kkt_.nonZeros()), w_.iter, factorize_ms_, solve_ms_,
                     kkt_solves_, static_cast<int>(code));
    }
    Result res;
    res.code = code;
    res.iterations = w_.iter;
    res.x = w_.x.cwiseQuotient(x_equil_ * w_.tau);
    res.y = p_ > 0 ? Eigen::VectorXd(w_.y.cwiseQuotient(a_equil_ * w_.tau)) : Eigen::VectorXd(0);
    res.z = w_.z.cwiseQuotient(g_equil_ * w_.tau);
    res.s = w_.s.cwiseProduct(g_equil_) / w_.tau;
    res.primal_objective = w_.pcost;
    res.dual_objective = w_.dcost;
    res.duality_gap = res.s.dot(res.z);
    return res;
}

Result ConeSolver::run() {
    // Right-hand sides for the two KKT solves per iteration.
    Eigen::VectorXd rhs1 = Eigen::VectorXd::Zero(dim_kkt_);
    rhs1.segment(n_, p_) = b_;
    rhs1.tail(m_) = h_;
    Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(dim_kkt_);
    rhs2.head(n_) = -c_;

    resx0_ = std::max(1.0, c_.norm());
    resy0_ = std::max(1.0, b_.norm());
    resz0_ = std::max(1.0, h_.norm());

    if (const char* dump = std::getenv("AGGFLEX_DUMP_KKT"); dump != nullptr && n_ > 10000) {
        FILE* f = std::fopen(dump, "w");
        std::fprintf(f, "%ld %ld %ld\n", static_cast<long>(n_), static_cast<long>(p_),
                     static_cast<long>(m_));
        for (int col = 0; col < kkt_.outerSize(); ++col) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(kkt_, col); it; ++it) {
                std::fprintf(f, "%ld %d\n", static_cast<long>(it.row()), col);
            }
        }
        std::fclose(f);
        std::exit(0);
    }
    FixedOrdering::active = elimination_order_.size() == dim_kkt_ ? &elimination_order_ : nullptr;
    ldlt_.analyzePattern(kkt_);
    FixedOrdering::active = nullptr;
    ldlt_.factorize(kkt_);
    if (std::getenv("AGGFLEX_IPM_VERBOSE") != nullptr) {
        std::fprintf(stderr, "[ipm] factor nnz(L)=%ld\n",
                     static_cast<long>(ldlt_.matrixL().nestedExpression().nonZeros()));
    }
    if (ldlt_.info() != Eigen::Success) {
        return finish(ExitCode::NumericalProblems);
    }

    // Initial primal variables: x from min ||Gx - h|| s.t. Ax = b, then
    // shift the cone residual into the interior.
    Eigen::VectorXd dx1(n_), dy1(p_), dz1(m_);
    solve_kkt(rhs1, dx1, dy1, dz1);
    w_.x = dx1;
    bring_to_cone(dz1, w_.s, true);

    // Initial dual variables.
    Eigen::VectorXd dx2(n_), dy2(p_), dz2(m_);
    solve_kkt(rhs2, dx2, dy2, dz2);
    w_.y = dy2;
    bring_to_cone(dz2, w_.z, false);

    rhs1.head(n_) = -c_;

    w_.kap = 1.0;
    w_.tau = 1.0;

    double pres_prev = std::numeric_limits<double>::max();
    ExitCode code = ExitCode::NumericalProblems;

    Eigen::VectorXd dsaff_by_w(m_), w_times_dzaff(m_), ds(m_);

    for (w_.iter = 0; w_.iter <= st_.max_iters; ++w_.iter) {
        compute_residuals();
        update_statistics();

        if (w_.iter > 0 && (w_.pres > st_.safeguard * pres_prev || w_.gap < 0.0)) {
            w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::MaxIterations) {
                code = ExitCode::NumericalProblems;
            }
            break;
        }
        pres_prev = w_.pres;

        code = check_exit(false);
        if (code != ExitCode::MaxIterations) {
            break;
        }

        if (w_.iter > 0 && w_.step == st_.step_min * st_.step_scale) {
            w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::MaxIterations) {
                code = ExitCode::NumericalProblems;
            }
            break;
        }
        if (w_.iter == st_.max_iters) {
            if (!(w_.iter == 0 || w_.better_than(best_))) {
                w_ = best_;
            }
            code = check_exit(true); // MaxIterations when even reduced accuracy fails
            break;
        }
        if (std::isnan(w_.pcost)) {
            if (!(w_.iter == 0 || w_.better_than(best_))) {
                w_ = best_;
                code = check_exit(true);
                if (code == ExitCode::MaxIterations) {
                    code = ExitCode::NumericalProblems;
                }
            } else {
                code = ExitCode::NumericalProblems;
            }
            break;
        }

        if (w_.iter == 0 || w_.better_than(best_)) {
            best_ = w_;
        }

        if (!update_scalings(w_.s, w_.z)) {
            w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::MaxIterations) {
                code = ExitCode::NumericalProblems;
            }
            break;
        }
        update_kkt_scalings();
        const auto tf0 = std::chrono::steady_clock::now();
        ldlt_.factorize(kkt_);
        factorize_ms_ +=
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tf0)
                .count();
        if (ldlt_.info() != Eigen::Success) {
            w_ = best_;
            code = ExitCode::NumericalProblems;
            break;
        }

        solve_kkt(rhs1, dx1, dy1, dz1);
        const double dtau_denom =
            w_.kap / w_.tau - c_.dot(dx1) - (p_ > 0 ? b_.dot(dy1) : 0.0) - h_.dot(dz1);

        // Affine (predictor) direction.
        rhs2.head(n_) = rx_;
        rhs2.segment(n_, p_) = -ry_;
        rhs2.tail(m_) = w_.s - rz_;
        solve_kkt(rhs2, dx2, dy2, dz2);

        const double dtauaff =
            (rt_ - w_.kap + c_.dot(dx2) + (p_ > 0 ? b_.dot(dy2) : 0.0) + h_.dot(dz2)) / dtau_denom;
        dz2 += dtauaff * dz1;
        w_times_dzaff = apply_w(dz2);
        dsaff_by_w = -w_times_dzaff - lambda_;
        const double dkapaff = -w_.kap - w_.kap / w_.tau * dtauaff;

        const double step_aff =
            line_search(lambda_, dsaff_by_w, w_times_dzaff, w_.tau, dtauaff, w_.kap, dkapaff);
        const double sigma = std::clamp(std::pow(1.0 - step_aff, 3), st_.sigma_min, st_.sigma_max);

        // Combined (centering + corrector) direction.
        Eigen::VectorXd dscomb = cone_product(lambda_, lambda_);
        dscomb += cone_product(dsaff_by_w, w_times_dzaff);
        const double sigmamu = sigma * w_.mu;
        dscomb.head(n_lp_).array() -= sigmamu;
        for (const SocScaling& sc : cones_) {
            dscomb(sc.start) -= sigmamu;
        }
        dsaff_by_w = cone_divide(lambda_, dscomb);
        const double one_minus_sigma = 1.0 - sigma;
        rhs2.head(n_) = one_minus_sigma * rx_;
        rhs2.segment(n_, p_) = -one_minus_sigma * ry_;
        rhs2.tail(m_) = -one_minus_sigma * rz_ + apply_w(dsaff_by_w);

        const int refine3 = solve_kkt(rhs2, dx2, dy2, dz2);
        (void)refine3;

        const double bkap = w_.kap * w_.tau + dkapaff * dtauaff - sigmamu;
        const double dtau = (one_minus_sigma * rt_ - bkap / w_.tau + c_.dot(dx2) +
                             (p_ > 0 ? b_.dot(dy2) : 0.0) + h_.dot(dz2)) /
                            dtau_denom;
        dx2 += dtau * dx1;
        dy2 += dtau * dy1;
        dz2 += dtau * dz1;

        w_times_dzaff = apply_w(dz2);
        dsaff_by_w = -(dsaff_by_w + w_times_dzaff);
        const double dkap = -(bkap + w_.kap * dtau) / w_.tau;

        w_.step = st_.step_scale *
                  line_search(lambda_, dsaff_by_w, w_times_dzaff, w_.tau, dtau, w_.kap, dkap);
        ds = apply_w(dsaff_by_w);

        w_.x += w_.step * dx2;
        w_.y += w_.step * dy2;
        w_.z += w_.step * dz2;
        w_.s += w_.step * ds;
        w_.kap += w_.step * dkap;
        w_.tau += w_.step * dtau;
    }

    return finish(code);
}

} // namespace

Result solve(const Eigen::SparseMatrix<double>& G,
             const Eigen::SparseMatrix<double>& A,
             const Eigen::VectorXd& c,
             const Eigen::VectorXd& h,
             const Eigen::VectorXd& b,
             Eigen::Index num_nonneg,
             const std::vector<Eigen::Index>& soc_dims,
             const Settings& settings,
             const EliminationGroups& groups) {
    ConeSolver solver(G, A, c, h, b, num_nonneg, soc_dims, settings, groups);
    return solver.run();
}

} // namespace aggflex::ipm
