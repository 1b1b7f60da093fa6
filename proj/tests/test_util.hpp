#pragma once

#include <vector>

#include "mopt/mopt.hpp"

namespace test_util {

using mopt::Index;
using mopt::Matrix;
using mopt::ObjectiveBundle;
using mopt::RngStream;
using mopt::Vector;

/// f_j(x) = 0.5 (x - c_j)' H_j (x - c_j) with SPD H_j.
inline ObjectiveBundle quadratic_bundle(std::vector<Matrix> hessians, std::vector<Vector> centers,
                                        double mu, std::optional<double> lipschitz) {
  struct Data {
    std::vector<Matrix> H;
    std::vector<Vector> c;
  };
  auto data = std::make_shared<Data>(Data{std::move(hessians), std::move(centers)});
  const Index m = static_cast<Index>(data->H.size());
  const Index n = data->H.front().rows();
  ObjectiveBundle bundle;
  bundle.m = m;
  bundle.n = n;
  bundle.mu = mu;
  bundle.lipschitz = lipschitz;
  bundle.values = [data, m](const Vector& x) {
    Vector f(m);
    for (Index j = 0; j < m; ++j) {
      const Vector d = x - data->c[j];
      f[j] = 0.5 * d.dot(data->H[j] * d);
    }
    return f;
  };
  bundle.jacobian = [data, m](const Vector& x) {
    Matrix jac(x.size(), m);
    for (Index j = 0; j < m; ++j) jac.col(j) = data->H[j] * (x - data->c[j]);
    return jac;
  };
  return bundle;
}

/// SPD matrix with prescribed extreme eigenvalues: Q diag(ev) Q' with Q from
/// the QR factorization of a seeded uniform matrix.
inline Matrix seeded_spd(RngStream& rng, Index n, double lmin, double lmax) {
  const Matrix a = rng.uniform_matrix(n, n, -1.0, 1.0);
  const Matrix q = Eigen::HouseholderQR<Matrix>(a).householderQ();
  Vector ev(n);
  for (Index i = 0; i < n; ++i)
    ev[i] = (n == 1) ? lmax : lmin + (lmax - lmin) * static_cast<double>(i) / (n - 1);
  return q * ev.asDiagonal() * q.transpose();
}

/// Affine objectives f_j(x) = g_j . x + b_j (constant gradients).
inline ObjectiveBundle affine_bundle(Matrix gradients, Vector offsets) {
  struct Data {
    Matrix g;
    Vector b;
  };
  auto data = std::make_shared<Data>(Data{std::move(gradients), std::move(offsets)});
  ObjectiveBundle bundle;
  bundle.m = data->g.cols();
  bundle.n = data->g.rows();
  bundle.mu = 0.0;
  bundle.values = [data](const Vector& x) {
    return Vector(data->g.transpose() * x + data->b);
  };
  bundle.jacobian = [data](const Vector&) { return data->g; };
  return bundle;
}

/// The scalar test problem f(x) = 0.5 x^2.
inline ObjectiveBundle scalar_half_square() {
  ObjectiveBundle bundle;
  bundle.m = 1;
  bundle.n = 1;
  bundle.mu = 1.0;
  bundle.lipschitz = 1.0;
  bundle.values = [](const Vector& x) { return Vector::Constant(1, 0.5 * x[0] * x[0]); };
  bundle.jacobian = [](const Vector& x) { return Matrix::Constant(1, 1, x[0]); };
  return bundle;
}

}  // namespace test_util
