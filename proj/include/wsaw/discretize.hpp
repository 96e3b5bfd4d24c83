#pragma once

// Nystrom discretization of the kernels on a quadrature grid.
//
// Matrices are similarity-symmetrized, M_ij = sqrt(w_i) k(t_i, t_j) sqrt(w_j),
// so vectors live in sqrt(w)-scaled coordinates and L^2 inner products become
// plain dot products.
//
// Two storage modes. Dense keeps the n x n matrix. Factored uses the positive
// power series e^{-t-s} I0(2 sqrt(st)) = sum_m (e^{-t} t^m/m!)(e^{-s} s^m/m!):
// with B_im = sqrt(w_i) sqrt(p(t_i)) e^{-t_i} t_i^m / m!,
//   K0 = B B^T,   K1Weighted = B[:, 1:] B[:, :-1]^T,
// which makes 10^5-node grids (the trapezoid-0.001 preset) tractable.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string_view>

#include <Eigen/Dense>

#include "wsaw/error.hpp"
#include "wsaw/kernels.hpp"
#include "wsaw/model.hpp"
#include "wsaw/quadrature.hpp"

namespace wsaw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Representation { Auto, Dense, Factored };

inline std::string_view to_string(Representation rep) {
    switch (rep) {
        case Representation::Auto: return "auto";
        case Representation::Dense: return "dense";
        case Representation::Factored: return "factored";
    }
    return "?";
}

/// Auto switches to the factored form above this many nodes.
inline constexpr std::size_t kDenseNodeLimit = 3000;

/// Which multiplication operator a derivative kernel uses.
enum class Weight { Time, Phi };

namespace detail {

/// log(sqrt(w_i) sqrt(p(t_i))) for every node.
inline Vector log_node_weights(const ModelParams& params, const QuadGrid& grid) {
    Vector out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = 0.5 * std::log(grid.weights[i]) + log_sqrt_p(params, grid.nodes[i]);
    return out;
}

/// Number of series terms needed for all t <= s_max: Poisson(t) tail past
/// t + 12 sqrt(t) + 60 is below 1e-30.
inline int factor_columns(double s_max) {
    return static_cast<int>(std::ceil(s_max + 12.0 * std::sqrt(s_max) + 60.0));
}

inline Matrix build_factor(const ModelParams& params, const QuadGrid& grid) {
    const int cols = factor_columns(grid.s_max);
    const auto n = static_cast<Eigen::Index>(grid.size());
    const Vector lw = log_node_weights(params, grid);
    std::vector<double> log_fact(static_cast<std::size_t>(cols) + 1, 0.0);
    for (int m = 1; m <= cols; ++m) log_fact[m] = std::lgamma(m + 1.0);

    Matrix B = Matrix::Zero(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = grid.nodes[static_cast<std::size_t>(i)];
        if (t == 0.0) {
            B(i, 0) = std::exp(lw[i]);
            continue;
        }
        const double log_t = std::log(t);
        for (int m = 0; m < cols; ++m) {
            const double e = lw[i] - t + m * log_t - log_fact[m];
            if (e > 709.0) throw NumericalError("factor entry overflows; lambda far above 1 at this nu");
            B(i, m) = (e < -745.0) ? 0.0 : std::exp(e);
        }
    }
    // drop trailing all-zero columns
    Eigen::Index used = cols;
    while (used > 1 && B.col(used - 1).isZero(0.0)) --used;
    if (used < cols) B.conservativeResize(Eigen::NoChange, used);
    return B;
}

}  // namespace detail

/// Discretized kernel operator on a grid. Immutable after construction.
class DiscretizedOperator {
public:
    DiscretizedOperator(KernelKind kind, ModelParams params, std::shared_ptr<const QuadGrid> grid,
                        Matrix dense)
        : kind_(kind), params_(std::move(params)), grid_(std::move(grid)), dense_(std::move(dense)),
          is_dense_(true) {}

    DiscretizedOperator(KernelKind kind, ModelParams params, std::shared_ptr<const QuadGrid> grid,
                        Matrix factor, bool /*factored_tag*/)
        : kind_(kind), params_(std::move(params)), grid_(std::move(grid)), factor_(std::move(factor)),
          is_dense_(false) {}

    KernelKind kind() const { return kind_; }
    bool symmetric() const { return is_symmetric(kind_); }
    const ModelParams& params() const { return params_; }
    const QuadGrid& grid() const { return *grid_; }
    std::shared_ptr<const QuadGrid> grid_ptr() const { return grid_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(grid_->size()); }
    bool is_dense() const { return is_dense_; }
    Representation representation() const { return is_dense_ ? Representation::Dense : Representation::Factored; }

    /// Dense matrix (only in dense mode).
    const Matrix& matrix() const {
        if (!is_dense_) throw Error("operator is stored in factored form");
        return dense_;
    }

    /// The n x m series factor B (only in factored mode).
    const Matrix& factor() const {
        if (is_dense_) throw Error("operator is stored densely");
        return factor_;
    }

    Vector apply(const Vector& x) const {
        check_size(x);
        if (is_dense_) return dense_ * x;
        const Eigen::Index m = factor_.cols();
        if (kind_ == KernelKind::K1Weighted) {
            if (m < 2) return Vector::Zero(size());
            const Vector y = factor_.leftCols(m - 1).transpose() * x;
            return factor_.rightCols(m - 1) * y;
        }
        const Vector y = factor_.transpose() * x;
        return factor_ * y;
    }

    /// Materializes M (or A) in either mode. Meant for tests and small grids.
    Matrix to_dense() const {
        if (is_dense_) return dense_;
        const Eigen::Index m = factor_.cols();
        if (kind_ == KernelKind::K1Weighted) {
            if (m < 2) return Matrix::Zero(size(), size());
            return factor_.rightCols(m - 1) * factor_.leftCols(m - 1).transpose();
        }
        return factor_ * factor_.transpose();
    }

    double entry(Eigen::Index i, Eigen::Index j) const {
        if (is_dense_) return dense_(i, j);
        const Eigen::Index m = factor_.cols();
        if (kind_ == KernelKind::K1Weighted)
            return m < 2 ? 0.0 : factor_.row(i).tail(m - 1).dot(factor_.row(j).head(m - 1));
        return factor_.row(i).dot(factor_.row(j));
    }

    void check_size(const Vector& x) const {
        if (x.size() != size())
            throw DomainError("vector of length " + std::to_string(x.size()) + " does not match grid of " +
                              std::to_string(size()) + " nodes");
    }

private:
    KernelKind kind_;
    ModelParams params_;
    std::shared_ptr<const QuadGrid> grid_;
    Matrix dense_;
    Matrix factor_;
    bool is_dense_;
};

inline Representation resolve_representation(Representation rep, std::size_t n) {
    if (rep != Representation::Auto) return rep;
    return n <= kDenseNodeLimit ? Representation::Dense : Representation::Factored;
}

/// Assembles the Nystrom matrix of `kind`. Derivative kinds are dense only.
inline DiscretizedOperator assemble(KernelKind kind, const ModelParams& params,
                                    std::shared_ptr<const QuadGrid> grid,
                                    Representation rep = Representation::Auto) {
    if (!grid || grid->size() == 0) throw DomainError("assemble: empty grid");
    const bool derivative = kind != KernelKind::K0 && kind != KernelKind::K1Weighted;
    rep = derivative ? Representation::Dense : resolve_representation(rep, grid->size());

    if (rep == Representation::Factored)
        return DiscretizedOperator(kind, params, grid, detail::build_factor(params, *grid), true);

    const auto n = static_cast<Eigen::Index>(grid->size());
    Matrix M(n, n);
    Vector sw(n);
    for (Eigen::Index i = 0; i < n; ++i) sw[i] = std::sqrt(grid->weights[static_cast<std::size_t>(i)]);
    const auto& t = grid->nodes;
    if (is_symmetric(kind)) {
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = j; i < n; ++i) {
                const double v = sw[i] * kernel_eval(kind, params, t[i], t[j]) * sw[j];
                M(i, j) = v;
                M(j, i) = v;
            }
        }
    } else {
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                M(i, j) = sw[i] * kernel_eval(kind, params, t[i], t[j]) * sw[j];
    }
    return DiscretizedOperator(kind, params, std::move(grid), std::move(M));
}

inline DiscretizedOperator assemble(KernelKind kind, const ModelParams& params, const QuadGrid& grid,
                                    Representation rep = Representation::Auto) {
    return assemble(kind, params, std::make_shared<const QuadGrid>(grid), rep);
}

/// Node values t_i or phi(t_i) used by the derivative identities.
inline Vector node_weights(const QuadGrid& grid, const ModelParams& params, Weight which) {
    Vector d(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i)
        d[static_cast<Eigen::Index>(i)] = which == Weight::Time ? grid.nodes[i] : params.phi(grid.nodes[i]);
    return d;
}

/// Derivative kernels act as multiplication operators sandwiching Q:
///   Q_nu = -(D_t Q + Q D_t)/2,  Q_g = -(D_phi Q + Q D_phi)/2,
///   Q_ab = (D_a D_b Q + D_a Q D_b + D_b Q D_a + Q D_a D_b)/4.
inline Vector apply_first_derivative(const DiscretizedOperator& Q, const Vector& d, const Vector& x) {
    return -0.5 * (d.cwiseProduct(Q.apply(x)) + Q.apply(d.cwiseProduct(x)));
}

inline Vector apply_second_derivative(const DiscretizedOperator& Q, const Vector& da, const Vector& db,
                                      const Vector& x) {
    const Vector qx = Q.apply(x);
    const Vector qbx = Q.apply(db.cwiseProduct(x));
    const Vector qax = Q.apply(da.cwiseProduct(x));
    const Vector qabx = Q.apply(da.cwiseProduct(db).cwiseProduct(x));
    return 0.25 * (da.cwiseProduct(db).cwiseProduct(qx) + da.cwiseProduct(qbx) + db.cwiseProduct(qax) + qabx);
}

/// sqrt(w_i) sqrt(p(t_i)) e^{-t_i}: the affine offset of T, also T[0].
inline Vector t_offset(const ModelParams& params, const QuadGrid& grid) {
    Vector c(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double e = 0.5 * std::log(grid.weights[i]) + log_sqrt_p(params, grid.nodes[i]) - grid.nodes[i];
        c[static_cast<Eigen::Index>(i)] = std::exp(e);
    }
    return c;
}

/// sqrt(w_i) sqrt(p(t_i)), the starting vector of the T iteration.
inline Vector sqrt_p_vector(const ModelParams& params, const QuadGrid& grid) {
    Vector c(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i)
        c[static_cast<Eigen::Index>(i)] = std::exp(0.5 * std::log(grid.weights[i]) + log_sqrt_p(params, grid.nodes[i]));
    return c;
}

/// Discrete T f = offset + A f for A assembled from K1Weighted.
inline Vector apply_T(const ModelParams& params, const DiscretizedOperator& A, const Vector& f) {
    if (A.kind() != KernelKind::K1Weighted) throw DomainError("apply_T expects a K1Weighted operator");
    A.check_size(f);
    return t_offset(params, A.grid()) + A.apply(f);
}

/// Same map with a precomputed offset, for tight iteration loops.
inline Vector apply_T(const Vector& offset, const DiscretizedOperator& A, const Vector& f) {
    A.check_size(f);
    return offset + A.apply(f);
}

}  // namespace wsaw
