#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "physguard/matrix.hpp"

namespace physguard {

struct Centered {
  Matrix values;
  std::vector<double> mean;
};

Centered center(const Matrix& x);

struct QrResult {
  Matrix q;  // m x k, orthonormal columns
  Matrix r;  // k x n, upper triangular with non-negative diagonal
};

// Reduced Householder QR of an m x n matrix, k = min(m, n). Rank deficiency is
// tolerated: the returned columns stay orthonormal.
QrResult householder_qr(const Matrix& a);

// First k = min(B, dims) columns of Q from the QR factorization of X_c^T.
Matrix qr_basis(const Matrix& centered);

// Frozen transform x -> (x - mean) Q_k Q_k^T.
struct FusionTransform {
  std::vector<double> mean;
  Matrix basis;  // dims x k

  std::size_t dims() const { return mean.size(); }
  std::size_t rank() const { return basis.cols(); }

  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& x) const;
};

struct FusedBatch {
  Matrix x_ortho;
  FusionTransform transform;
};

// [z_ssl | z_phys] row-wise.
Matrix concat_features(const Matrix& z_ssl, const Matrix& z_phys);

FusedBatch fuse(const Matrix& z_ssl, const Matrix& z_phys);
FusedBatch fuse(const Matrix& combined);

// Throws ShapeError when x does not have the fitted dimensionality.
std::vector<double> apply_fusion(std::span<const double> x, const FusionTransform& t);

// "QRF1", u32 dims, u32 k, mean then basis as little-endian f32, row-major.
void save_fusion(const std::filesystem::path& path, const FusionTransform& t);
FusionTransform load_fusion(const std::filesystem::path& path);

}  // namespace physguard
