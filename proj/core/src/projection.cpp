#include <crtc/projection.hpp>

#include <crtc/error.hpp>

#include <Eigen/Eigenvalues>

namespace crtc {

Projection pca2(const Matrix& x) {
  if (x.rows() == 0) throw DataError(DataErrc::InvalidArgument, "pca2: empty input");
  Projection out;
  out.mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - out.mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("pca2: eigen decomposition failed");

  out.components = Matrix::Zero(2, x.cols());
  out.variance.setZero();
  const Eigen::Index d = x.cols();
  for (Eigen::Index c = 0; c < 2 && c < d; ++c) {
    // Eigenvalues come in ascending order.
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    out.components.row(c) = axis.transpose();
    out.variance(c) = std::max(0.0, solver.eigenvalues()(d - 1 - c));
  }
  out.coords = centered * out.components.transpose();
  return out;
}

}  // namespace crtc
