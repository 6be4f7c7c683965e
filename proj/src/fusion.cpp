#include "physguard/fusion.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "physguard/audio_io.hpp"
#include "physguard/errors.hpp"

namespace physguard {

Centered center(const Matrix& x) {
  Centered c{x, std::vector<double>(x.cols(), 0.0)};
  if (x.rows() == 0) return c;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) c.mean[j] += x(r, j);
  for (double& m : c.mean) m /= static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) c.values(r, j) -= c.mean[j];
  return c;
}

QrResult householder_qr(const Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols(), k = std::min(m, n);
  Matrix work = a;
  // Unit Householder vectors, stored densely (zero above the pivot row).
  std::vector<std::vector<double>> reflectors;
  reflectors.reserve(k);

  for (std::size_t j = 0; j < k; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < m; ++i) norm += work(i, j) * work(i, j);
    norm = std::sqrt(norm);
    std::vector<double> v(m, 0.0);
    if (norm > 0.0) {
      const double alpha = work(j, j) > 0.0 ? -norm : norm;
      for (std::size_t i = j; i < m; ++i) v[i] = work(i, j);
      v[j] -= alpha;
      double vnorm = 0.0;
      for (std::size_t i = j; i < m; ++i) vnorm += v[i] * v[i];
      vnorm = std::sqrt(vnorm);
      if (vnorm > 0.0) {
        for (std::size_t i = j; i < m; ++i) v[i] /= vnorm;
        for (std::size_t c = j; c < n; ++c) {
          double s = 0.0;
          for (std::size_t i = j; i < m; ++i) s += v[i] * work(i, c);
          s *= 2.0;
          for (std::size_t i = j; i < m; ++i) work(i, c) -= s * v[i];
        }
      } else {
        std::fill(v.begin(), v.end(), 0.0);
      }
    }
    reflectors.push_back(std::move(v));
  }

  // Q_k = H_0 H_1 ... H_{k-1} I[:, :k]
  Matrix q(m, k);
  for (std::size_t i = 0; i < k; ++i) q(i, i) = 1.0;
  for (std::size_t jj = k; jj-- > 0;) {
    const auto& v = reflectors[jj];
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = jj; i < m; ++i) s += v[i] * q(i, c);
      if (s == 0.0) continue;
      s *= 2.0;
      for (std::size_t i = jj; i < m; ++i) q(i, c) -= s * v[i];
    }
  }

  Matrix r(k, n);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t c = i; c < n; ++c) r(i, c) = work(i, c);

  // Sign convention: non-negative diagonal of R.
  for (std::size_t i = 0; i < k; ++i) {
    if (r(i, i) >= 0.0) continue;
    for (std::size_t c = i; c < n; ++c) r(i, c) = -r(i, c);
    for (std::size_t row = 0; row < m; ++row) q(row, i) = -q(row, i);
  }
  return {std::move(q), std::move(r)};
}

Matrix qr_basis(const Matrix& centered) {
  if (centered.empty()) throw ShapeError("qr_basis: empty batch");
  return householder_qr(centered.transposed()).q;
}

std::vector<double> FusionTransform::apply(std::span<const double> x) const {
  if (x.size() != dims())
    throw ShapeError("apply_fusion: expected " + std::to_string(dims()) + " features, got " +
                     std::to_string(x.size()));
  std::vector<double> xc(x.begin(), x.end());
  for (std::size_t j = 0; j < xc.size(); ++j) xc[j] -= mean[j];
  std::vector<double> coeff(rank(), 0.0);
  for (std::size_t i = 0; i < dims(); ++i)
    for (std::size_t c = 0; c < rank(); ++c) coeff[c] += xc[i] * basis(i, c);
  std::vector<double> out(dims(), 0.0);
  for (std::size_t i = 0; i < dims(); ++i)
    for (std::size_t c = 0; c < rank(); ++c) out[i] += basis(i, c) * coeff[c];
  return out;
}

Matrix FusionTransform::apply(const Matrix& x) const {
  Matrix out(x.rows(), dims());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = apply(x.row(r));
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

Matrix concat_features(const Matrix& z_ssl, const Matrix& z_phys) {
  if (z_ssl.rows() != z_phys.rows())
    throw ShapeError("fusion batch: " + std::to_string(z_ssl.rows()) + " SSL rows vs " +
                     std::to_string(z_phys.rows()) + " physics rows");
  Matrix x(z_ssl.rows(), z_ssl.cols() + z_phys.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto out = x.row(r);
    std::copy(z_ssl.row(r).begin(), z_ssl.row(r).end(), out.begin());
    std::copy(z_phys.row(r).begin(), z_phys.row(r).end(),
              out.begin() + static_cast<std::ptrdiff_t>(z_ssl.cols()));
  }
  return x;
}

FusedBatch fuse(const Matrix& z_ssl, const Matrix& z_phys) { return fuse(concat_features(z_ssl, z_phys)); }

FusedBatch fuse(const Matrix& combined) {
  if (combined.rows() == 0) throw ShapeError("fuse: empty batch");
  for (double v : combined.data())
    if (!std::isfinite(v)) throw ShapeError("fuse: non-finite feature value");
  Centered c = center(combined);
  Matrix q = qr_basis(c.values);
  Matrix x_ortho = matmul(matmul(c.values, q), q.transposed());
  return {std::move(x_ortho), FusionTransform{std::move(c.mean), std::move(q)}};
}

std::vector<double> apply_fusion(std::span<const double> x, const FusionTransform& t) { return t.apply(x); }

void save_fusion(const std::filesystem::path& path, const FusionTransform& t) {
  std::ostringstream out(std::ios::binary);
  out.write("QRF1", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(t.dims()));
  detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (double v : t.mean) detail::put_f32(out, static_cast<float>(v));
  for (double v : t.basis.data()) detail::put_f32(out, static_cast<float>(v));
  write_file_atomic(path, out.str());
}

FusionTransform load_fusion(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string what = "fusion transform " + path.string();
  detail::expect_magic(in, "QRF1", what);
  const std::uint32_t dims = detail::get_u32(in, what);
  const std::uint32_t k = detail::get_u32(in, what);
  if (k > dims) throw FormatError(what + ": rank exceeds dimensionality");
  FusionTransform t{std::vector<double>(dims), Matrix(dims, k)};
  for (double& v : t.mean) v = detail::get_f32(in, what);
  for (double& v : t.basis.data()) v = detail::get_f32(in, what);
  return t;
}

}  // namespace physguard
