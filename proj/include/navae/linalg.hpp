#pragma once

// Small dense symmetric linear algebra: cyclic Jacobi eigensolver,
// Moore-Penrose pseudo-inverse, PSD square root, spectral norm, Cholesky.
// Sizes are expected to be modest (p up to ~100).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "navae/errors.hpp"

namespace navae {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Square matrix that is exactly symmetric. Construction accepts inputs
/// whose asymmetry is within 1e-12 of their scale and stores (M + M')/2.
template <typename Scalar>
class SymMatrix {
public:
    SymMatrix() = default;

    template <typename Derived>
    explicit SymMatrix(const Eigen::MatrixBase<Derived>& m) : m_(m) {
        if (m_.rows() != m_.cols()) throw DomainError("SymMatrix: matrix is not square");
        if (!m_.allFinite()) throw DomainError("SymMatrix: non-finite entry");
        const Scalar scale = std::max<Scalar>(Scalar(1), m_.cwiseAbs().maxCoeff());
        const Scalar asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
        if (asym > Scalar(1e-12) * scale) throw DomainError("SymMatrix: input is not symmetric");
        m_ = (m_ + m_.transpose()).eval() * Scalar(0.5);
    }

    static SymMatrix identity(Eigen::Index p) { return SymMatrix(MatrixX<Scalar>::Identity(p, p)); }

    Eigen::Index dim() const { return m_.rows(); }
    const MatrixX<Scalar>& matrix() const { return m_; }
    Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

private:
    MatrixX<Scalar> m_;
};

using SymMatrixd = SymMatrix<double>;

/// Eigenvalues in descending order with the matching orthonormal
/// eigenvectors as columns.
template <typename Scalar>
struct SymEigen {
    VectorX<Scalar> values;
    MatrixX<Scalar> vectors;
};

/// Cyclic Jacobi sweeps until the off-diagonal mass is negligible.
template <typename Scalar>
SymEigen<Scalar> sym_eigen(const SymMatrix<Scalar>& sym) {
    const Eigen::Index p = sym.dim();
    MatrixX<Scalar> a = sym.matrix();
    MatrixX<Scalar> v = MatrixX<Scalar>::Identity(p, p);
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar total = a.norm();

    for (int sweep = 0; sweep < 100; ++sweep) {
        Scalar off = 0;
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i + 1; j < p; ++j) off += a(i, j) * a(i, j);
        if (off == Scalar(0) || std::sqrt(off) <= Scalar(0.01) * eps * total) break;

        for (Eigen::Index i = 0; i < p - 1; ++i) {
            for (Eigen::Index j = i + 1; j < p; ++j) {
                const Scalar aij = a(i, j);
                if (aij == Scalar(0)) continue;
                const Scalar theta = (a(j, j) - a(i, i)) / (Scalar(2) * aij);
                const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
                const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
                const Scalar s = t * c;
                // A <- J' A J with J the rotation in the (i, j) plane.
                for (Eigen::Index k = 0; k < p; ++k) {
                    const Scalar aki = a(k, i);
                    const Scalar akj = a(k, j);
                    a(k, i) = c * aki - s * akj;
                    a(k, j) = s * aki + c * akj;
                }
                for (Eigen::Index k = 0; k < p; ++k) {
                    const Scalar aik = a(i, k);
                    const Scalar ajk = a(j, k);
                    a(i, k) = c * aik - s * ajk;
                    a(j, k) = s * aik + c * ajk;
                }
                a(i, j) = Scalar(0);
                a(j, i) = Scalar(0);
                for (Eigen::Index k = 0; k < p; ++k) {
                    const Scalar vki = v(k, i);
                    const Scalar vkj = v(k, j);
                    v(k, i) = c * vki - s * vkj;
                    v(k, j) = s * vki + c * vkj;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
    SymEigen<Scalar> out{VectorX<Scalar>(p), MatrixX<Scalar>(p, p)};
    for (Eigen::Index k = 0; k < p; ++k) {
        out.values(k) = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    return out;
}

template <typename Scalar>
MatrixX<Scalar> reconstruct(const VectorX<Scalar>& values, const MatrixX<Scalar>& vectors) {
    return vectors * values.asDiagonal() * vectors.transpose();
}

/// Inverts eigenvalues with |lambda| > rtol * max|lambda| and zeroes the
/// rest. The default rtol is p * machine epsilon.
template <typename Scalar>
SymMatrix<Scalar> pseudo_inverse(const SymMatrix<Scalar>& m, std::optional<Scalar> rtol = std::nullopt) {
    const Eigen::Index p = m.dim();
    if (p == 0) return m;
    const auto eig = sym_eigen(m);
    const Scalar tol = rtol.value_or(Scalar(p) * std::numeric_limits<Scalar>::epsilon());
    const Scalar cutoff = tol * eig.values.cwiseAbs().maxCoeff();
    VectorX<Scalar> inv(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Scalar l = eig.values(k);
        inv(k) = (std::abs(l) > cutoff && l != Scalar(0)) ? Scalar(1) / l : Scalar(0);
    }
    return SymMatrix<Scalar>(reconstruct<Scalar>(inv, eig.vectors));
}

/// Symmetric PSD square root. Eigenvalues down to -1e-10 * ||M|| are
/// treated as zero; anything more negative throws NumericalError.
template <typename Scalar>
SymMatrix<Scalar> psd_sqrt(const SymMatrix<Scalar>& m) {
    const Eigen::Index p = m.dim();
    if (p == 0) return m;
    const auto eig = sym_eigen(m);
    const Scalar norm = eig.values.cwiseAbs().maxCoeff();
    VectorX<Scalar> root(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Scalar l = eig.values(k);
        if (l < -Scalar(1e-10) * norm) throw NumericalError("psd_sqrt: matrix has a materially negative eigenvalue");
        root(k) = l > Scalar(0) ? std::sqrt(l) : Scalar(0);
    }
    return SymMatrix<Scalar>(reconstruct<Scalar>(root, eig.vectors));
}

template <typename Scalar>
Scalar spectral_norm(const SymMatrix<Scalar>& m) {
    if (m.dim() == 0) return Scalar(0);
    return sym_eigen(m).values.cwiseAbs().maxCoeff();
}

/// Largest singular value of an arbitrary dense matrix, via the
/// eigenvalues of A'A.
template <typename Derived>
typename Derived::Scalar operator_norm(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    if (a.size() == 0) return Scalar(0);
    const MatrixX<Scalar> gram = a.transpose() * a;
    const Scalar top = sym_eigen(SymMatrix<Scalar>(gram)).values.maxCoeff();
    return std::sqrt(std::max(top, Scalar(0)));
}

template <typename Scalar>
Scalar lambda_min(const SymMatrix<Scalar>& m) {
    const auto eig = sym_eigen(m);
    return eig.values(eig.values.size() - 1);
}

/// Lower-triangular L with L L' = M. Every pivot must exceed 1e-12 * ||M||.
template <typename Scalar>
MatrixX<Scalar> cholesky(const SymMatrix<Scalar>& sym) {
    const Eigen::Index p = sym.dim();
    const MatrixX<Scalar>& m = sym.matrix();
    const Scalar scale = p > 0 ? m.cwiseAbs().maxCoeff() : Scalar(0);
    MatrixX<Scalar> l = MatrixX<Scalar>::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        Scalar d = m(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > Scalar(1e-12) * scale)) throw NumericalError("cholesky: matrix is not positive definite");
        const Scalar ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < p; ++i) {
            Scalar s = m(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

}  // namespace navae
