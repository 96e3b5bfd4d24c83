#pragma once

// Leading eigenpair of the discretized Q, its (g, nu)-derivatives, and
// resolvent solves.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <limits>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "wsaw/discretize.hpp"
#include "wsaw/error.hpp"

namespace wsaw {

struct SpectralResult {
    double lambda = 0.0;
    double lambda2 = 0.0;  ///< second eigenvalue
    Vector h;              ///< unit eigenvector, sqrt(w)-scaled
    double gap = 0.0;      ///< lambda - lambda2
    double residual = 0.0; ///< ||M h - lambda h||
    int iterations = 0;

    double dlambda_dnu = std::numeric_limits<double>::quiet_NaN();
    double dlambda_dg = std::numeric_limits<double>::quiet_NaN();

    std::optional<double> d2lambda_dnu2;
    std::optional<double> d2lambda_dnudg;
    std::optional<double> d2lambda_dgdnu;  ///< same quantity, built with the roles of g and nu swapped
    std::optional<double> d2lambda_dg2;
};

struct EigenOptions {
    double residual_tol = 1e-10;
    int max_krylov = 200;
    int max_restarts = 4;
    /// Use a full dense eigendecomposition at or below this size.
    Eigen::Index dense_limit = 200;
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline void normalize_sign(Vector& h) {
    Eigen::Index k = 0;
    h.cwiseAbs().maxCoeff(&k);
    if (h[k] < 0.0) h = -h;
}

struct LanczosOutcome {
    double theta1 = 0.0;
    double theta2 = 0.0;
    Vector y;
    int steps = 0;
};

/// Lanczos with full reorthogonalization for the two largest eigenvalues.
template <class Apply>
LanczosOutcome lanczos_top(const Apply& apply, const Vector& start, int max_steps) {
    const Eigen::Index n = start.size();
    const int kmax = static_cast<int>(std::min<Eigen::Index>(n, max_steps));
    Matrix V(n, kmax + 1);
    Vector alpha = Vector::Zero(kmax), beta = Vector::Zero(kmax);
    V.col(0) = start.normalized();

    LanczosOutcome out;
    Eigen::SelfAdjointEigenSolver<Matrix> tri;
    for (int j = 0; j < kmax; ++j) {
        Vector w = apply(V.col(j));
        alpha[j] = V.col(j).dot(w);
        w -= alpha[j] * V.col(j);
        if (j > 0) w -= beta[j - 1] * V.col(j - 1);
        for (int pass = 0; pass < 2; ++pass) {
            const Vector c = V.leftCols(j + 1).transpose() * w;
            w -= V.leftCols(j + 1) * c;
        }
        beta[j] = w.norm();

        const int k = j + 1;
        const bool check = (k >= 4 && k % 4 == 0) || k == kmax || beta[j] == 0.0;
        if (!check) {
            V.col(j + 1) = w / beta[j];
            continue;
        }
        Vector diag = alpha.head(k);
        Vector sub = beta.head(std::max(k - 1, 0));
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const Vector& ev = tri.eigenvalues();
        const double th1 = ev[k - 1];
        const double th2 = k >= 2 ? ev[k - 2] : 0.0;
        const double est1 = std::abs(beta[j] * tri.eigenvectors()(k - 1, k - 1));
        const double est2 = k >= 2 ? std::abs(beta[j] * tri.eigenvectors()(k - 1, k - 2)) : 0.0;
        const double scale = std::max(std::abs(th1), std::numeric_limits<double>::min());
        const bool invariant = beta[j] <= 1e-14 * scale;
        if ((est1 <= 1e-14 * scale && est2 <= 1e-10 * scale) || invariant || k == kmax) {
            out.theta1 = th1;
            out.theta2 = th2;
            out.y = V.leftCols(k) * tri.eigenvectors().col(k - 1);
            out.steps = k;
            return out;
        }
        V.col(j + 1) = w / beta[j];
    }
    return out;
}

}  // namespace detail

/// Largest eigenvalue and unit eigenvector of a symmetric operator, plus the
/// second eigenvalue for the spectral gap.
inline SpectralResult leading_eigenpair(const DiscretizedOperator& M, const EigenOptions& opts = {}) {
    if (!M.symmetric()) throw DomainError("leading_eigenpair: operator must be symmetric");
    const Eigen::Index n = M.size();
    SpectralResult res;

    if (n <= opts.dense_limit) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(M.to_dense());
        if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
        res.lambda = es.eigenvalues()[n - 1];
        res.lambda2 = n >= 2 ? es.eigenvalues()[n - 2] : 0.0;
        res.h = es.eigenvectors().col(n - 1);
        res.iterations = 1;
    } else {
        auto apply = [&M](const Vector& x) { return M.apply(x); };
        Vector start(n);
        for (Eigen::Index i = 0; i < n; ++i) start[i] = std::sqrt(M.grid().weights[static_cast<std::size_t>(i)]);
        bool have_second = false;
        for (int restart = 0; restart <= opts.max_restarts; ++restart) {
            const auto out = detail::lanczos_top(apply, start, opts.max_krylov);
            res.iterations += out.steps;
            res.h = out.y.normalized();
            if (!have_second) {
                res.lambda2 = out.theta2;
                have_second = true;
            }
            const Vector mh = M.apply(res.h);
            res.lambda = res.h.dot(mh);
            res.residual = (mh - res.lambda * res.h).norm();
            if (res.residual <= opts.residual_tol * std::max(1.0, std::abs(res.lambda))) break;
            start = res.h;
        }
    }

    if (!std::isfinite(res.lambda) || !res.h.allFinite())
        throw NumericalError("leading eigenpair is not finite");
    detail::normalize_sign(res.h);
    const Vector mh = M.apply(res.h);
    res.lambda = res.h.dot(mh);
    res.residual = (mh - res.lambda * res.h).norm();
    res.gap = res.lambda - res.lambda2;
    // absolute near lambda = 1, relative for the large lambda seen early in a Newton solve
    if (res.residual > opts.residual_tol * std::max(1.0, std::abs(res.lambda)))
        throw NumericalError("eigen residual " + detail::sci(res.residual) + " above tolerance", res.residual);
    return res;
}

/// Hellmann-Feynman: lambda_nu = <Q_nu h, h>, lambda_g = <Q_g h, h>.
inline std::pair<double, double> lambda_first_derivs(const DiscretizedOperator& Q, const SpectralResult& spec) {
    const Vector t = node_weights(Q.grid(), Q.params(), Weight::Time);
    const Vector phi = node_weights(Q.grid(), Q.params(), Weight::Phi);
    const Vector qh = Q.apply(spec.h);
    // <-(DQ + QD)/2 h, h> = -(D h) . (Q h)
    const double dnu = -t.cwiseProduct(spec.h).dot(qh);
    const double dg = -phi.cwiseProduct(spec.h).dot(qh);
    return {dnu, dg};
}

inline void fill_first_derivs(const DiscretizedOperator& Q, SpectralResult& spec) {
    std::tie(spec.dlambda_dnu, spec.dlambda_dg) = lambda_first_derivs(Q, spec);
}

/// Eigen-decomposition of the Gram matrix B^T B of a factored operator. Its
/// nonzero spectrum coincides with that of M = B B^T.
struct GramSpectrum {
    Vector mu;  ///< ascending
    Matrix V;

    explicit GramSpectrum(const Matrix& B) {
        const Matrix G = B.transpose() * B;
        Eigen::SelfAdjointEigenSolver<Matrix> es(G);
        if (es.info() != Eigen::Success) throw NumericalError("Gram eigensolver failed");
        mu = es.eigenvalues();
        V = es.eigenvectors();
    }
};

/// Solves (lambda - Q) x = y for y orthogonal to h, returning x orthogonal to h.
/// Uses the SPD system (lambda I - M + lambda h h^T).
class DeflatedSolver {
public:
    DeflatedSolver(const DiscretizedOperator& Q, const SpectralResult& spec) : Q_(&Q), spec_(&spec) {
        if (!(spec.gap >= 1e-8)) throw NumericalError("spectral gap below 1e-8; complement solve is ill-conditioned");
        if (Q.is_dense()) {
            Matrix S = -Q.matrix();
            S.diagonal().array() += spec.lambda;
            S.noalias() += spec.lambda * spec.h * spec.h.transpose();
            llt_.compute(S);
            if (llt_.info() != Eigen::Success) throw NumericalError("deflated system is not positive definite");
        } else {
            gram_.emplace(Q.factor());
        }
    }

    Vector solve(const Vector& y_in) const {
        const Vector& h = spec_->h;
        Vector y = y_in - h.dot(y_in) * h;
        Vector x;
        if (Q_->is_dense()) {
            x = llt_.solve(y);
        } else {
            const Matrix& B = Q_->factor();
            const Vector c = gram_->V.transpose() * (B.transpose() * y);
            Vector coef(c.size());
            const double lam = spec_->lambda;
            const Eigen::Index top = c.size() - 1;
            for (Eigen::Index k = 0; k < c.size(); ++k)
                coef[k] = (k == top) ? 0.0 : c[k] / (lam * (lam - gram_->mu[k]));
            x = y / lam + B * (gram_->V * coef);
        }
        x -= h.dot(x) * h;
        return x;
    }

private:
    const DiscretizedOperator* Q_;
    const SpectralResult* spec_;
    Eigen::LLT<Matrix> llt_;
    std::optional<GramSpectrum> gram_;
};

/// Second derivatives from
///   lambda_{nu *} = <Q_{nu *} h, h> + 2 <(lambda - Q)^{-1} P Q_* h, P Q_nu h>,
/// P the projection onto the complement of h.
inline void fill_second_derivs(const DiscretizedOperator& Q, SpectralResult& spec) {
    const Vector t = node_weights(Q.grid(), Q.params(), Weight::Time);
    const Vector phi = node_weights(Q.grid(), Q.params(), Weight::Phi);
    const Vector& h = spec.h;
    const DeflatedSolver solver(Q, spec);

    auto project = [&h](Vector v) {
        v -= h.dot(v) * h;
        return v;
    };
    const Vector a = project(apply_first_derivative(Q, t, h));    // P Q_nu h
    const Vector b = project(apply_first_derivative(Q, phi, h));  // P Q_g h
    const Vector ra = solver.solve(a);
    const Vector rb = solver.solve(b);

    spec.d2lambda_dnu2 = h.dot(apply_second_derivative(Q, t, t, h)) + 2.0 * ra.dot(a);
    spec.d2lambda_dnudg = h.dot(apply_second_derivative(Q, t, phi, h)) + 2.0 * rb.dot(a);
    spec.d2lambda_dgdnu = h.dot(apply_second_derivative(Q, phi, t, h)) + 2.0 * ra.dot(b);
    spec.d2lambda_dg2 = h.dot(apply_second_derivative(Q, phi, phi, h)) + 2.0 * rb.dot(b);
}

/// Returns (d2lambda_dnu2, d2lambda_dnudg).
inline std::pair<double, double> lambda_second_derivs(const DiscretizedOperator& Q, SpectralResult spec) {
    fill_second_derivs(Q, spec);
    return {*spec.d2lambda_dnu2, *spec.d2lambda_dnudg};
}

/// Factorized (shift I - M)^{-1}, reusable for several right-hand sides.
class Resolvent {
public:
    /// `lambda_max` is the leading eigenvalue of M; solves within 1e-10 of it
    /// are refused.
    Resolvent(const DiscretizedOperator& M, double shift, double lambda_max) : M_(&M), shift_(shift) {
        if (!M.symmetric()) throw DomainError("Resolvent: operator must be symmetric");
        if (std::abs(shift - lambda_max) <= 1e-10)
            throw CriticalityError("resolvent shift is within 1e-10 of the leading eigenvalue", lambda_max);
        if (M.is_dense()) {
            Matrix S = -M.matrix();
            S.diagonal().array() += shift;
            lu_.compute(S);
        } else {
            gram_.emplace(M.factor());
            for (Eigen::Index k = 0; k < gram_->mu.size(); ++k)
                if (std::abs(shift - gram_->mu[k]) <= 1e-10)
                    throw CriticalityError("resolvent shift hits an eigenvalue", gram_->mu[k]);
            if (std::abs(shift) <= 1e-300) throw CriticalityError("zero shift on a rank-deficient operator", 0.0);
        }
    }

    Resolvent(const DiscretizedOperator& M, double shift)
        : Resolvent(M, shift, leading_eigenpair(M).lambda) {}

    double shift() const { return shift_; }

    Vector solve(const Vector& rhs) const {
        M_->check_size(rhs);
        const double rnorm = rhs.norm();
        if (rnorm == 0.0) return Vector::Zero(rhs.size());
        Vector x;
        if (M_->is_dense()) {
            x = lu_.solve(rhs);
            for (int refine = 0; refine < 2; ++refine) {
                const Vector r = rhs - (shift_ * x - M_->apply(x));
                if (r.norm() <= 1e-12 * rnorm) break;
                x += lu_.solve(r);
            }
        } else {
            const Matrix& B = M_->factor();
            const Vector c = gram_->V.transpose() * (B.transpose() * rhs);
            Vector coef(c.size());
            for (Eigen::Index k = 0; k < c.size(); ++k) coef[k] = c[k] / (shift_ * (shift_ - gram_->mu[k]));
            x = rhs / shift_ + B * (gram_->V * coef);
        }
        const double res = (rhs - (shift_ * x - M_->apply(x))).norm();
        if (!x.allFinite() || res > 1e-10 * rnorm)
            throw NumericalError("resolvent residual " + std::to_string(res / rnorm) + " exceeds 1e-10", res);
        return x;
    }

private:
    const DiscretizedOperator* M_;
    double shift_;
    Eigen::PartialPivLU<Matrix> lu_;
    std::optional<GramSpectrum> gram_;
};

/// Solves (shift I - M) x = rhs.
inline Vector resolvent_solve(const DiscretizedOperator& M, double shift, const Vector& rhs) {
    return Resolvent(M, shift).solve(rhs);
}

inline Vector resolvent_solve(const DiscretizedOperator& M, double shift, const Vector& rhs, double lambda_max) {
    return Resolvent(M, shift, lambda_max).solve(rhs);
}

}  // namespace wsaw
