#include "vsgrasp/projective.hpp"

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "vsgrasp/error.hpp"

namespace vsgrasp {

namespace {

constexpr double kSignEpsilon = 1e-12;

template <typename Derived>
void canonicalize_sign(Eigen::MatrixBase<Derived>& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double c = x(i);
    if (std::abs(c) > kSignEpsilon) {
      if (c < 0.0) {
        x = -x;
      }
      return;
    }
  }
}

// Similarity taking the points' centroid to the origin and their mean distance
// to sqrt(2).
Eigen::Matrix3d hartley_normalization(std::span<const ImagePoint> pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) {
    centroid += p.vector();
  }
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) {
    mean_dist += (p.vector() - centroid).norm();
  }
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * centroid.x(),
       0.0, s, -s * centroid.y(),
       0.0, 0.0, 1.0;
  return t;
}

// Symmetric M^-1/2 of the second-moment matrix of unit-normalized 4-vectors.
// Conditions projective points regardless of where the plane at infinity lies.
Eigen::Matrix4d whitening(std::span<const Eigen::Vector4d> pts) {
  Eigen::Matrix4d moment = Eigen::Matrix4d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector4d u = p.normalized();
    moment += u * u.transpose();
  }
  moment /= static_cast<double>(pts.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(moment);
  const Eigen::Vector4d ev = eig.eigenvalues();
  if (ev(0) < 1e-12 * ev(3)) {
    throw Error(ErrorCode::DegenerateBasis, "points do not span projective 3-space");
  }
  return eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

Eigen::Vector3d to_homogeneous(const ImagePoint& p) { return {p.u, p.v, 1.0}; }

ImagePoint dehomogenize(const Eigen::Vector3d& b) {
  const Eigen::Vector3d u = b.normalized();
  if (std::abs(u.z()) < 1e-12) {
    throw Error(ErrorCode::PointAtInfinity, "homogeneous image point has zero scale");
  }
  return {u.x() / u.z(), u.y() / u.z()};
}

}  // namespace

ProjectivePoint ProjectivePoint::canonical(const Eigen::Vector4d& x) {
  ProjectivePoint p;
  p.coords = x.normalized();
  canonicalize_sign(p.coords);
  return p;
}

ProjectiveHomography ProjectiveHomography::canonical(const Eigen::Matrix4d& m) {
  ProjectiveHomography h;
  h.matrix = m / m.norm();
  canonicalize_sign(h.matrix);
  return h;
}

ProjectiveHomography ProjectiveHomography::inverse() const {
  return canonical(matrix.inverse());
}

ProjectivePoint ProjectiveHomography::apply(const ProjectivePoint& x) const {
  return ProjectivePoint::canonical(matrix * x.coords);
}

ProjectiveHomography operator*(const ProjectiveHomography& a, const ProjectiveHomography& b) {
  return ProjectiveHomography::canonical(a.matrix * b.matrix);
}

FundamentalEstimate estimate_fundamental(std::span<const ImageMatch> matches) {
  if (matches.size() < 8) {
    throw Error(ErrorCode::InsufficientMatches, "the 8-point algorithm needs at least 8 matches");
  }
  std::vector<ImagePoint> left;
  std::vector<ImagePoint> right;
  for (const auto& m : matches) {
    left.push_back(m.left);
    right.push_back(m.right);
  }
  const Eigen::Matrix3d t_left = hartley_normalization(left);
  const Eigen::Matrix3d t_right = hartley_normalization(right);

  const Eigen::Index n = static_cast<Eigen::Index>(matches.size());
  Eigen::MatrixXd design(n, 9);
  std::vector<Eigen::Vector3d> nl(matches.size());
  std::vector<Eigen::Vector3d> nr(matches.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    nl[i] = t_left * to_homogeneous(left[i]);
    nr[i] = t_right * to_homogeneous(right[i]);
    const Eigen::Vector3d& a = nl[i];
    const Eigen::Vector3d& b = nr[i];
    design.row(i) << b.x() * a.x(), b.x() * a.y(), b.x() * a.z(),
                     b.y() * a.x(), b.y() * a.y(), b.y() * a.z(),
                     b.z() * a.x(), b.z() * a.y(), b.z() * a.z();
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(7) < 1e-12 * sv(0)) {
    throw Error(ErrorCode::DegenerateConfiguration, "8-point design matrix has rank < 8");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d f_norm;
  f_norm << h(0), h(1), h(2),
            h(3), h(4), h(5),
            h(6), h(7), h(8);

  Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(f_norm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = fsvd.singularValues();
  d(2) = 0.0;
  f_norm = fsvd.matrixU() * d.asDiagonal() * fsvd.matrixV().transpose();
  f_norm /= f_norm.norm();

  FundamentalEstimate est;
  for (Eigen::Index i = 0; i < n; ++i) {
    est.max_normalized_residual =
        std::max(est.max_normalized_residual, std::abs(nr[i].dot(f_norm * nl[i])));
  }

  Eigen::Matrix3d f = t_right.transpose() * f_norm * t_left;
  f /= f.norm();
  canonicalize_sign(f);
  est.f.matrix = f;

  double sampson = 0.0;
  for (const auto& m : matches) {
    const Eigen::Vector3d a = to_homogeneous(m.left);
    const Eigen::Vector3d b = to_homogeneous(m.right);
    const Eigen::Vector3d fa = f * a;
    const Eigen::Vector3d ftb = f.transpose() * b;
    const double num = b.dot(fa);
    const double den = fa.x() * fa.x() + fa.y() * fa.y() + ftb.x() * ftb.x() + ftb.y() * ftb.y();
    sampson += den > 0.0 ? num * num / den : 0.0;
  }
  est.sampson_rms_px = std::sqrt(sampson / static_cast<double>(n));
  return est;
}

FundamentalMatrix fundamental_from_cameras(const Matrix34d& p_left, const Matrix34d& p_right) {
  const Eigen::JacobiSVD<Matrix34d> svd(p_left, Eigen::ComputeFullV);
  const Eigen::Vector4d centre = svd.matrixV().col(3);
  const Eigen::Vector3d e_right = p_right * centre;
  const Eigen::Matrix<double, 4, 3> pinv =
      p_left.transpose() * (p_left * p_left.transpose()).inverse();
  FundamentalMatrix f;
  f.matrix = skew(e_right) * p_right * pinv;
  f.matrix /= f.matrix.norm();
  canonicalize_sign(f.matrix);
  return f;
}

Eigen::Vector3d right_epipole(const FundamentalMatrix& f) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(f.matrix, Eigen::ComputeFullU);
  Eigen::Vector3d e = svd.matrixU().col(2);
  canonicalize_sign(e);
  return e;
}

ProjectiveCameraPair cameras_from_fundamental(const FundamentalMatrix& f) {
  const Eigen::Vector3d e = right_epipole(f);
  ProjectiveCameraPair pair;
  pair.left.setZero();
  pair.left.leftCols<3>().setIdentity();
  pair.right.leftCols<3>() = skew(e) * f.matrix;
  pair.right.col(3) = e;
  pair.right /= pair.right.norm();
  return pair;
}

ProjectivePoint triangulate(const ProjectiveCameraPair& pair, const ImagePoint& m,
                            const ImagePoint& m_prime) {
  Eigen::Matrix4d design;
  design.row(0) = m.u * pair.left.row(2) - pair.left.row(0);
  design.row(1) = m.v * pair.left.row(2) - pair.left.row(1);
  design.row(2) = m_prime.u * pair.right.row(2) - pair.right.row(0);
  design.row(3) = m_prime.v * pair.right.row(2) - pair.right.row(1);
  for (int r = 0; r < 4; ++r) {
    const double norm = design.row(r).norm();
    if (norm > 0.0) {
      design.row(r) /= norm;
    }
  }
  const Eigen::JacobiSVD<Eigen::Matrix4d> svd(design, Eigen::ComputeFullV);
  const Eigen::Vector4d sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(2) < 1e-12 * sv(0) || sv(3) > 0.99 * sv(0)) {
    throw Error(ErrorCode::IllConditionedTriangulation, "two-view design has no unique null direction");
  }
  return ProjectivePoint::canonical(svd.matrixV().col(3));
}

ProjectiveHomography basis_homography(std::span<const ProjectivePoint> basis) {
  if (basis.size() != 5) {
    throw Error(ErrorCode::InvalidArgument, "a projective basis has exactly 5 points");
  }
  std::array<Eigen::Vector4d, 5> p;
  for (std::size_t i = 0; i < 5; ++i) {
    p[i] = basis[i].coords.normalized();
  }
  for (std::size_t skip = 0; skip < 5; ++skip) {
    Eigen::Matrix4d sub;
    for (std::size_t i = 0, c = 0; i < 5; ++i) {
      if (i != skip) {
        sub.col(static_cast<Eigen::Index>(c++)) = p[i];
      }
    }
    if (std::abs(sub.determinant()) < 1e-10) {
      throw Error(ErrorCode::DegenerateBasis,
                  "basis points other than #" + std::to_string(skip) + " are coplanar");
    }
  }
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i) {
    a.col(i) = p[i];
  }
  const Eigen::Vector4d lambda = a.partialPivLu().solve(p[4]);
  const Eigen::Matrix4d to_points = a * lambda.asDiagonal();
  return ProjectiveHomography::canonical(to_points.inverse());
}

ProjectiveHomography estimate_homography_3d(std::span<const ProjectivePointPair> pairs) {
  if (pairs.size() < 5) {
    throw Error(ErrorCode::InsufficientMatches, "3-D homography needs at least 5 point pairs");
  }
  std::vector<Eigen::Vector4d> src;
  std::vector<Eigen::Vector4d> dst;
  for (const auto& pr : pairs) {
    src.push_back(pr.source.coords.normalized());
    dst.push_back(pr.target.coords.normalized());
  }
  const Eigen::Matrix4d t_src = whitening(src);
  const Eigen::Matrix4d t_dst = whitening(dst);

  // y ~ H x  <=>  y_a (H x)_b - y_b (H x)_a = 0 for all a < b.
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(6 * n, 16);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector4d x = t_src * src[i];
    const Eigen::Vector4d y = t_dst * dst[i];
    Eigen::Index row = 6 * i;
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b, ++row) {
        for (int c = 0; c < 4; ++c) {
          design(row, 4 * b + c) = y(a) * x(c);
          design(row, 4 * a + c) = -y(b) * x(c);
        }
      }
    }
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv(14) < 1e-12 * sv(0)) {
    throw Error(ErrorCode::DegenerateBasis, "point pairs do not determine a unique homography");
  }
  const Eigen::VectorXd h = svd.matrixV().col(15);
  Eigen::Matrix4d hn;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      hn(r, c) = h(4 * r + c);
    }
  }
  return ProjectiveHomography::canonical(t_dst.inverse() * hn * t_src);
}

std::vector<TransferredPoint> transfer_gripper_points(const StereoSetup& setup_x,
                                                      const ProjectiveHomography& h_xy,
                                                      const ProjectiveCameraPair& setup_y) {
  std::vector<TransferredPoint> out;
  out.reserve(setup_x.gripper_images.size());
  for (const auto& images : setup_x.gripper_images) {
    const ProjectivePoint b_x = triangulate(setup_x.pair, images.left, images.right);
    const ProjectivePoint b_y = h_xy.apply(b_x);
    out.push_back({setup_y.left * b_y.coords, setup_y.right * b_y.coords});
  }
  return out;
}

FeatureVector setpoint_from_transfer(std::span<const TransferredPoint> points, RigCamera which) {
  std::vector<Eigen::Vector3d> homogeneous;
  homogeneous.reserve(points.size());
  for (const auto& p : points) {
    homogeneous.push_back(which == RigCamera::left ? p.left : p.right);
  }
  return setpoint_from_homogeneous(homogeneous);
}

FeatureVector setpoint_from_homogeneous(std::span<const Eigen::Vector3d> points) {
  std::vector<ImagePoint> image;
  image.reserve(points.size());
  for (const auto& b : points) {
    image.push_back(dehomogenize(b));
  }
  return FeatureVector::from_points(image);
}

ProjectiveHomography euclidean_to_projective(const ProjectiveHomography& h_go,
                                             const RigidTransform& d) {
  return ProjectiveHomography::canonical(h_go.matrix * d.matrix() * h_go.matrix.inverse());
}

double distance_up_to_scale(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ua = a.normalized();
  const Eigen::VectorXd ub = b.normalized();
  return std::min((ua - ub).norm(), (ua + ub).norm());
}

double matrix_distance_up_to_scale(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd va = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
  const Eigen::VectorXd vb = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  return distance_up_to_scale(va, vb);
}

}  // namespace vsgrasp
