#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "malinbai/errors.hpp"

namespace malinbai {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Orthonormal basis of the span of an arm set: d_p rows of length d.
// Coordinates in the projected space are obtained as rows * a.
struct ProjectionBasis {
    Mat rows;

    int dim() const { return static_cast<int>(rows.rows()); }
    int ambient_dim() const { return static_cast<int>(rows.cols()); }
};

namespace detail {

inline void require_symmetric(const Mat& V) {
    if (V.rows() != V.cols()) {
        throw SingularMatrix("matrix is not square");
    }
    const double scale = V.cwiseAbs().maxCoeff();
    const double asym = (V - V.transpose()).cwiseAbs().maxCoeff();
    if (!V.allFinite() || (scale > 0.0 && asym > 1e-12 * scale)) {
        throw SingularMatrix("matrix is not symmetric to 1e-12 relative");
    }
}

// Eigenvalue-ratio conditioning gate shared by solve_psd and quad_norm_sq.
inline Eigen::LLT<Mat> psd_factor(const Mat& V) {
    require_symmetric(V);
    Eigen::SelfAdjointEigenSolver<Mat> es(V, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (hi <= 0.0 || lo <= 1e-10 * hi) {
        throw SingularMatrix("matrix fails positive-definiteness check (min eig <= 1e-10 * max eig)");
    }
    Eigen::LLT<Mat> llt(V);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrix("Cholesky factorization failed");
    }
    return llt;
}

}  // namespace detail

// Solve V x = b for symmetric positive-definite V via Cholesky.
inline Vec solve_psd(const Mat& V, const Vec& b) {
    return detail::psd_factor(V).solve(b);
}

// a^T V^{-1} a for symmetric positive-definite V.
inline double quad_norm_sq(const Mat& V, const Vec& a) {
    const Vec x = detail::psd_factor(V).solve(a);
    return a.dot(x);
}

// Numerical rank and orthonormal spanning basis of an arm set, via SVD.
// Singular values > tol * largest are kept; tol < 0 selects the default
// 1e-9 * largest singular value.
inline ProjectionBasis rank_basis(const std::vector<Vec>& arms, double tol = -1.0) {
    if (arms.empty()) {
        throw EmptyArmSet("no arms given");
    }
    const auto d = arms.front().size();
    Mat A(static_cast<Eigen::Index>(arms.size()), d);
    for (std::size_t i = 0; i < arms.size(); ++i) {
        A.row(static_cast<Eigen::Index>(i)) = arms[i].transpose();
    }
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    if (smax <= 0.0) {
        throw EmptyArmSet("all arms are zero vectors");
    }
    if (tol < 0.0) tol = 1e-9;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol * smax) ++rank;
    }
    ProjectionBasis basis;
    basis.rows = svd.matrixV().leftCols(rank).transpose();
    return basis;
}

// Coordinates of a in the basis; requires a to lie in span(basis).
inline Vec project(const ProjectionBasis& basis, const Vec& a) {
    const Vec coords = basis.rows * a;
    const Vec residual = a - basis.rows.transpose() * coords;
    const double scale = a.norm();
    if (residual.norm() > 1e-8 * (scale > 0.0 ? scale : 1.0)) {
        throw OutOfSpan("vector lies outside the basis span");
    }
    return coords;
}

}  // namespace malinbai
