#pragma once

// Structured deconfounder matrices M = [I_L | B] and the projection-weighted
// norms built on top of them.

#include "sidebandit/common.hpp"

namespace sidebandit {

/// M = [I_L | B] with its pseudoinverse, kernel projection and an orthonormal
/// kernel basis. Immutable once built; obtain one through build_deconfounder.
///
/// Because M M^T = I + B B^T has every eigenvalue >= 1, M always has rank L
/// and ||M^+||_2 <= 1, whatever B is.
class DeconfounderMatrix {
public:
    std::size_t visible_dim() const noexcept { return visible_dim_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t kernel_dim() const noexcept { return dim_ - visible_dim_; }

    const Matrix& block() const noexcept { return block_; }          // B, L x (d-L)
    const Matrix& matrix() const noexcept { return matrix_; }        // M, L x d
    const Matrix& pinv() const noexcept { return pinv_; }            // M^+, d x L
    const Matrix& proj() const noexcept { return proj_; }            // P = I - M^+ M, d x d
    const Matrix& kernel_basis() const noexcept { return basis_; }   // U, d x (d-L), P = U U^T

private:
    friend DeconfounderMatrix build_deconfounder(std::size_t, std::size_t, const Matrix&);
    DeconfounderMatrix() = default;

    std::size_t visible_dim_ = 0;
    std::size_t dim_ = 0;
    Matrix block_;
    Matrix matrix_;
    Matrix pinv_;
    Matrix proj_;
    Matrix basis_;
};

/// Builds [I_L | B]. The pseudoinverse is M^T (M M^T)^{-1}; the kernel basis
/// is the orthonormalized column span of [-B; I_{d-L}].
///
/// Throws InvalidArgument unless 1 <= L < d, DimensionError if B is not
/// L x (d-L), and InvalidArgument if B has a non-finite entry.
DeconfounderMatrix build_deconfounder(std::size_t visible_dim, std::size_t dim, const Matrix& block);

/// Regularized Gram matrix V together with its rotation U^T V U onto the
/// kernel of some deconfounder matrix.
struct ProjectedGram {
    Matrix V;
    Matrix V_tilde;
};

ProjectedGram make_projected_gram(const Matrix& V, const DeconfounderMatrix& mhat);

/// ||x||_{(P V P)^+}, evaluated as ||U^T x||_{(U^T V U)^{-1}}.
double projected_norm(const Vector& x, const ProjectedGram& gram, const DeconfounderMatrix& mhat);

struct PerturbationReport {
    double dM = 0.0;     // ||M - M_hat||_2
    double dP = 0.0;     // ||P - P_hat||_2
    double dPinv = 0.0;  // ||M^+ - M_hat^+||_2
};

PerturbationReport perturbation_check(const DeconfounderMatrix& m, const DeconfounderMatrix& mhat);

/// Largest singular value.
double spectral_norm(const Matrix& a);

}  // namespace sidebandit
