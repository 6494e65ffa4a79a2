#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "htefs/error.hpp"
#include "htefs/kernels.hpp"
#include "htefs/structure_fit.hpp"

namespace htefs {

void CiTestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

FisherZTest::FisherZTest(const Matrix& data, double alpha) : n_(data.rows()), alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const std::size_t k = data.cols();
  std::vector<std::vector<double>> cols(k);
  std::vector<double> norm(k);
  for (std::size_t c = 0; c < k; ++c) {
    cols[c] = data.column(c);
    const double mu = kernels::sum(cols[c]) / static_cast<double>(n_);
    for (auto& v : cols[c]) v -= mu;
    norm[c] = std::sqrt(kernels::dot(cols[c], cols[c]));
  }
  corr_ = Matrix(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    corr_(a, a) = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      const double den = norm[a] * norm[b];
      const double r = den > 0.0 ? kernels::dot(cols[a], cols[b]) / den : 0.0;
      corr_(a, b) = corr_(b, a) = std::clamp(r, -1.0, 1.0);
    }
  }
}

double FisherZTest::partial_correlation(std::size_t i, std::size_t j,
                                        std::span<const std::size_t> cond) const {
  if (cond.empty()) return i == j ? 1.0 : corr_(i, j);
  const long q = static_cast<long>(cond.size());
  Eigen::MatrixXd scc(q, q);
  Eigen::VectorXd sic(q), sjc(q);
  for (long a = 0; a < q; ++a) {
    sic(a) = corr_(i, cond[a]);
    sjc(a) = corr_(j, cond[a]);
    for (long b = 0; b < q; ++b) scc(a, b) = corr_(cond[a], cond[b]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scc, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff()))
    throw Error(ErrorCode::SingularSystem, "conditioning correlation block is singular");
  const auto ldlt = scc.ldlt();
  const Eigen::VectorXd bi = ldlt.solve(sic);
  const Eigen::VectorXd bj = ldlt.solve(sjc);
  const double cij = (i == j ? 1.0 : corr_(i, j)) - sic.dot(bj);
  const double vi = 1.0 - sic.dot(bi);
  const double vj = 1.0 - sjc.dot(bj);
  // A column fully explained by the conditioning set carries no residual
  // information about the other.
  if (vi <= 1e-12 || vj <= 1e-12) return 0.0;
  return std::clamp(cij / std::sqrt(vi * vj), -1.0, 1.0);
}

namespace {

CiResult z_test(double r, std::size_t n, std::size_t cond_size, double alpha) {
  CiResult res;
  if (std::abs(r) >= 1.0) {
    res.p_value = 0.0;
  } else {
    const double dof = static_cast<double>(n) - static_cast<double>(cond_size) - 3.0;
    const double z = std::atanh(r) * std::sqrt(dof);
    res.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
  }
  res.independent = res.p_value > alpha;
  return res;
}

}  // namespace

CiResult FisherZTest::test(std::size_t i, std::size_t j, std::span<const std::size_t> cond) const {
  if (n_ <= cond.size() + 3)
    throw Error(ErrorCode::InvalidArgument, "Fisher-z needs more rows than |cond| + 3");
  try {
    return z_test(partial_correlation(i, j, cond), n_, cond.size(), alpha_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularSystem) throw;
    log_warning("singular conditioning set in Fisher-z test; treating pair as dependent");
    return {0.0, false, true};
  }
}

CiResult fisher_z(const Matrix& data, std::size_t i, std::size_t j, std::span<const std::size_t> cond,
                  const CiTestConfig& config) {
  config.validate();
  std::vector<std::size_t> cols{i, j};
  cols.insert(cols.end(), cond.begin(), cond.end());
  const FisherZTest test(data.select_columns(cols), config.alpha);
  std::vector<std::size_t> local(cond.size());
  for (std::size_t k = 0; k < cond.size(); ++k) local[k] = k + 2;
  return test.test(0, i == j ? 0 : 1, local);
}

DSeparationOracle::DSeparationOracle(Dag dag, std::vector<NodeId> column_nodes)
    : dag_(std::move(dag)), column_nodes_(std::move(column_nodes)) {}

CiResult DSeparationOracle::test(std::size_t i, std::size_t j, std::span<const std::size_t> cond) const {
  std::vector<NodeId> z(cond.size());
  for (std::size_t k = 0; k < cond.size(); ++k) z[k] = column_nodes_[cond[k]];
  const bool sep = dag_.d_separated(column_nodes_[i], column_nodes_[j], z);
  return {sep ? 1.0 : 0.0, sep, false};
}

}  // namespace htefs
