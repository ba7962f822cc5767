#include "wsc/spectrum.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

namespace wsc {

namespace {

constexpr int kDenseLimit = 2000;

Eigen::MatrixXd dense_sub(const SparseMat& A, const std::vector<int>& dofs,
                          const std::vector<int>& where) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dofs.size(), dofs.size());
  for (int j : dofs)
    for (SparseMat::InnerIterator it(A, j); it; ++it) {
      int wi = where[it.row()], wj = where[j];
      if (wi >= 0 && wj >= 0) out(wi, wj) = it.value();
    }
  return out;
}

SparseMat sparse_sub(const SparseMat& A, const std::vector<int>& dofs,
                     const std::vector<int>& where) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int j : dofs)
    for (SparseMat::InnerIterator it(A, j); it; ++it) {
      int wi = where[it.row()], wj = where[j];
      if (wi >= 0 && wj >= 0) trip.emplace_back(wi, wj, it.value());
    }
  SparseMat out(dofs.size(), dofs.size());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// Dense path: reduce on the eigenbasis of G, deflating its kernel, then
// solve the projected symmetric problem for sigma directly.
std::vector<EigPair> dense_spectrum(const Eigen::MatrixXd& Ms, const Eigen::MatrixXd& Gs,
                                    double sigma_cap, int max_pairs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(Gs);
  const auto& lam = eg.eigenvalues();
  double lmax = lam.size() ? lam(lam.size() - 1) : 0.0;
  if (lmax <= 0) return {};
  std::vector<int> keep;
  for (int i = 0; i < lam.size(); ++i)
    if (lam(i) > 1e-12 * lmax) keep.push_back(i);
  if (keep.empty()) return {};
  Eigen::MatrixXd Qp(Gs.rows(), keep.size());
  for (size_t j = 0; j < keep.size(); ++j)
    Qp.col(j) = eg.eigenvectors().col(keep[j]) / std::sqrt(lam(keep[j]));
  Eigen::MatrixXd S = Qp.transpose() * Ms * Qp;
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  std::vector<EigPair> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double sigma = std::max(0.0, es.eigenvalues()(i));
    if (sigma > sigma_cap) break;
    if ((int)out.size() >= max_pairs) break;
    EigPair p;
    p.sigma = sigma;
    p.coeffs = Qp * es.eigenvectors().col(i);
    out.push_back(std::move(p));
  }
  return out;
}

// Lanczos path on the pencil (M, K), K = M + tau G, in the K inner product.
// rho = sigma/(sigma+tau) is monotone in sigma; the K-kernel of G (rho = 1)
// stays at the far end and never pollutes the small-sigma band.
std::vector<EigPair> lanczos_spectrum(const SparseMat& Ms, const SparseMat& Gs,
                                      double tau, double sigma_cap, int max_pairs) {
  const int N = (int)Ms.rows();
  SparseMat K = Ms + tau * Gs;
  Eigen::SimplicialLLT<SparseMat> llt(K);
  if (llt.info() != Eigen::Success)
    throw SolverError("pencil regularisation failed to factorise");

  int m = std::min(N, 2 * max_pairs + 80);
  Eigen::MatrixXd V(N, m);
  Eigen::VectorXd v = Eigen::VectorXd::Random(N);
  auto Knorm2 = [&](const Eigen::VectorXd& a) { return a.dot(K * a); };
  double nv0 = std::sqrt(std::max(Knorm2(v), 1e-300));
  v /= nv0;
  int built = 0;
  for (int j = 0; j < m; ++j) {
    V.col(j) = v;
    built = j + 1;
    Eigen::VectorXd w = llt.solve(Ms * v);
    for (int r = 0; r < 2; ++r) {
      Eigen::VectorXd proj = V.leftCols(built).transpose() * (K * w);
      w.noalias() -= V.leftCols(built) * proj;
    }
    double nb = std::sqrt(std::max(Knorm2(w), 0.0));
    if (nb < 1e-12) {
      Eigen::VectorXd f = Eigen::VectorXd::Random(N);
      Eigen::VectorXd proj = V.leftCols(built).transpose() * (K * f);
      f.noalias() -= V.leftCols(built) * proj;
      double nf = std::sqrt(std::max(Knorm2(f), 0.0));
      if (nf < 1e-12) break;
      v = f / nf;
    } else {
      v = w / nb;
    }
  }
  Eigen::MatrixXd Vm = V.leftCols(built);
  Eigen::MatrixXd Sm = Vm.transpose() * (Ms * Vm);
  Sm = 0.5 * (Sm + Sm.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sm);
  std::vector<EigPair> out;
  for (int i = 0; i < built; ++i) {
    double rho = std::max(0.0, es.eigenvalues()(i));
    if (rho >= 1.0 - 1e-9) break;
    double sigma = rho * tau / (1.0 - rho);
    if (sigma > sigma_cap) break;
    if ((int)out.size() >= max_pairs) break;
    Eigen::VectorXd y = Vm * es.eigenvectors().col(i);
    Eigen::VectorXd Ky = K * y;
    Eigen::VectorXd r = Ms * y - rho * Ky;
    double rn = r.norm() / std::max(1e-300, Ky.norm());
    if (rn > 1e-7) continue;  // unconverged interior ritz value
    EigPair p;
    p.sigma = sigma;
    double gn = (1.0 - rho) / tau;  // y is K-normalised
    p.coeffs = y / std::sqrt(std::max(gn, 1e-300));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<EigPair> component_spectrum(const GridSpace& space, const SparseMat& M,
                                        const SparseMat& G, int component,
                                        double sigma_cap, int max_pairs) {
  std::vector<int> dofs = space.component_dofs(component);
  std::vector<int> where(space.ndofs(), -1);
  for (size_t i = 0; i < dofs.size(); ++i) where[dofs[i]] = (int)i;

  std::vector<EigPair> local;
  if ((int)dofs.size() <= kDenseLimit) {
    // the dense path returns the whole admissible band: near-degenerate
    // bands must be retained in full, otherwise their coherent members
    // (which sit at the top of the band) would be truncated away
    local = dense_spectrum(dense_sub(M, dofs, where), dense_sub(G, dofs, where),
                           sigma_cap, (int)dofs.size());
  } else {
    double tau = std::isfinite(sigma_cap) && sigma_cap > 0 ? sigma_cap : 1.0;
    local = lanczos_spectrum(sparse_sub(M, dofs, where), sparse_sub(G, dofs, where),
                             tau, sigma_cap, max_pairs);
  }
  for (auto& p : local) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(space.ndofs());
    for (size_t i = 0; i < dofs.size(); ++i) full[dofs[i]] = p.coeffs[i];
    p.coeffs = std::move(full);
    p.component = component;
  }
  return local;
}

std::vector<EigPair> null_gradient_spectrum(const GridSpace& space, const SparseMat& M,
                                            const SparseMat& G, int k) {
  k = std::min(k, space.ndofs());
  std::vector<EigPair> all;
  for (int comp = 0; comp < space.ncomponents(); ++comp) {
    auto part = component_spectrum(space, M, G, comp,
                                   std::numeric_limits<double>::infinity(), k);
    for (auto& p : part) all.push_back(std::move(p));
  }
  std::sort(all.begin(), all.end(),
            [](const EigPair& a, const EigPair& b) { return a.sigma < b.sigma; });
  if ((int)all.size() > k) all.resize(k);
  return all;
}

}  // namespace wsc
