#include "sidebandit/linalg.hpp"

#include <cmath>
#include <string>

namespace sidebandit {

DeconfounderMatrix build_deconfounder(std::size_t visible_dim, std::size_t dim, const Matrix& block) {
    if (visible_dim < 1 || visible_dim >= dim) {
        throw InvalidArgument("deconfounder requires 1 <= L < d, got L=" + std::to_string(visible_dim) +
                              ", d=" + std::to_string(dim));
    }
    const auto L = static_cast<Eigen::Index>(visible_dim);
    const auto d = static_cast<Eigen::Index>(dim);
    const auto m = d - L;
    if (block.rows() != L || block.cols() != m) {
        throw DimensionError("deconfounder block must be " + std::to_string(L) + "x" + std::to_string(m) +
                             ", got " + std::to_string(block.rows()) + "x" + std::to_string(block.cols()));
    }
    if (!block.allFinite()) {
        throw InvalidArgument("deconfounder block has non-finite entries");
    }

    DeconfounderMatrix out;
    out.visible_dim_ = visible_dim;
    out.dim_ = dim;
    out.block_ = block;

    out.matrix_.resize(L, d);
    out.matrix_.leftCols(L).setIdentity();
    out.matrix_.rightCols(m) = block;

    // M M^T = I + B B^T is SPD with eigenvalues >= 1.
    Matrix gram = Matrix::Identity(L, L);
    gram.noalias() += block * block.transpose();
    const Eigen::LLT<Matrix> llt(gram);
    out.pinv_ = llt.solve(out.matrix_).transpose();

    out.proj_ = Matrix::Identity(d, d);
    out.proj_.noalias() -= out.pinv_ * out.matrix_;

    Matrix span(d, m);
    span.topRows(L) = -block;
    span.bottomRows(m).setIdentity();
    const Eigen::HouseholderQR<Matrix> qr(span);
    out.basis_ = qr.householderQ() * Matrix::Identity(d, m);
    return out;
}

ProjectedGram make_projected_gram(const Matrix& V, const DeconfounderMatrix& mhat) {
    const auto d = static_cast<Eigen::Index>(mhat.dim());
    if (V.rows() != d || V.cols() != d) {
        throw DimensionError("Gram matrix must be d x d");
    }
    const Matrix& U = mhat.kernel_basis();
    return ProjectedGram{V, U.transpose() * V * U};
}

double projected_norm(const Vector& x, const ProjectedGram& gram, const DeconfounderMatrix& mhat) {
    const auto d = static_cast<Eigen::Index>(mhat.dim());
    const auto m = static_cast<Eigen::Index>(mhat.kernel_dim());
    if (x.size() != d) {
        throw DimensionError("context length does not match deconfounder dimension");
    }
    if (gram.V_tilde.rows() != m || gram.V_tilde.cols() != m) {
        throw DimensionError("rotated Gram matrix does not match kernel dimension");
    }
    const Vector u = mhat.kernel_basis().transpose() * x;
    const Eigen::LLT<Matrix> llt(gram.V_tilde);
    if (llt.info() != Eigen::Success) {
        throw InvalidArgument("rotated Gram matrix is not positive definite");
    }
    return std::sqrt(u.dot(llt.solve(u)));
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    const Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

PerturbationReport perturbation_check(const DeconfounderMatrix& m, const DeconfounderMatrix& mhat) {
    if (m.dim() != mhat.dim() || m.visible_dim() != mhat.visible_dim()) {
        throw DimensionError("perturbation check needs matrices of equal (L, d)");
    }
    return PerturbationReport{
        spectral_norm(m.matrix() - mhat.matrix()),
        spectral_norm(m.proj() - mhat.proj()),
        spectral_norm(m.pinv() - mhat.pinv()),
    };
}

}  // namespace sidebandit
