#include "microbend/rve.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace microbend::rve {

using materials::MaterialSpec;

Mat3 iota(const Mat2& G) {
  Mat3 out = Mat3::Zero();
  out.topLeftCorner<2, 2>() = G;
  return out;
}

const std::array<Mat2, 3>& sym_basis() {
  static const std::array<Mat2, 3> basis = [] {
    std::array<Mat2, 3> b;
    b[0] << 1, 0, 0, 0;
    b[1] << 0, 0, 0, 1;
    const double r = 1.0 / std::sqrt(2.0);
    b[2] << 0, r, r, 0;
    return b;
  }();
  return basis;
}

Vec3 sym_coeffs(const Mat2& A) {
  const Mat2 s = 0.5 * (A + A.transpose());
  const auto& basis = sym_basis();
  return Vec3(s.cwiseProduct(basis[0]).sum(), s.cwiseProduct(basis[1]).sum(),
              s.cwiseProduct(basis[2]).sum());
}

Mat2 from_sym_coeffs(const Vec3& a) {
  const auto& basis = sym_basis();
  return a[0] * basis[0] + a[1] * basis[1] + a[2] * basis[2];
}

double RveMesh::h() const {
  double h = 0;
  for (int a = 0; a < 3; ++a)
    for (size_t i = 0; i + 1 < lines[a].size(); ++i)
      h = std::max(h, lines[a][i + 1] - lines[a][i]);
  return h;
}

double RveMesh::max_aspect() const {
  double worst = 1.0;
  for (int ez = 0; ez < nz(); ++ez)
    for (int ey = 0; ey < ny(); ++ey)
      for (int ex = 0; ex < nx(); ++ex) {
        const double dx = lines[0][ex + 1] - lines[0][ex];
        const double dy = lines[1][ey + 1] - lines[1][ey];
        const double dz = lines[2][ez + 1] - lines[2][ez];
        const double lo = std::min({dx, dy, dz});
        const double hi = std::max({dx, dy, dz});
        worst = std::max(worst, hi / lo);
      }
  return worst;
}

namespace {

const char* axis_name(int a) { return a == 0 ? "y1" : (a == 1 ? "y2" : "y3"); }

void finalize_mesh(RveMesh& mesh, const MaterialSpec& spec, double max_aspect) {
  for (int a = 0; a < 3; ++a) {
    const auto& l = mesh.lines[a];
    if (l.size() < 2) throw ValidationError("RveMesh: need at least one element per axis");
    for (size_t i = 0; i + 1 < l.size(); ++i)
      if (!(l[i] < l[i + 1]))
        throw ValidationError("RveMesh: grid lines must be strictly increasing");
    const double lo = (a == 2) ? -0.5 : 0.0;
    const double hi = (a == 2) ? 0.5 : 1.0;
    if (std::abs(l.front() - lo) > 1e-14 || std::abs(l.back() - hi) > 1e-14)
      throw ValidationError("RveMesh: grid does not cover the RVE box on axis " +
                            std::string(axis_name(a)));
    for (double p : spec.region_planes(a)) {
      bool present = false;
      for (double c : l)
        if (std::abs(c - p) < 1e-12) present = true;
      if (!present) {
        std::ostringstream os;
        os << "RveMesh: region face " << axis_name(a) << "=" << p
           << " is not representable on the grid; add a grid line there";
        throw ValidationError(os.str());
      }
    }
  }
  if (mesh.max_aspect() > max_aspect)
    throw ValidationError("RveMesh: element aspect ratio exceeds bound " +
                          std::to_string(max_aspect));
  mesh.element_region.resize(mesh.num_elements());
  for (int ez = 0; ez < mesh.nz(); ++ez)
    for (int ey = 0; ey < mesh.ny(); ++ey)
      for (int ex = 0; ex < mesh.nx(); ++ex) {
        const Vec3 center(0.5 * (mesh.lines[0][ex] + mesh.lines[0][ex + 1]),
                          0.5 * (mesh.lines[1][ey] + mesh.lines[1][ey + 1]),
                          0.5 * (mesh.lines[2][ez] + mesh.lines[2][ez + 1]));
        mesh.element_region[ex + mesh.nx() * (ey + mesh.ny() * ez)] = spec.region_index(center);
      }
}

}  // namespace

RveMesh build_rve_mesh(const std::array<int, 3>& divisions, const MaterialSpec& spec,
                       double max_aspect) {
  RveMesh mesh;
  for (int a = 0; a < 3; ++a) {
    if (divisions[a] < 1) throw ValidationError("RveMesh: divisions must be >= 1");
    const double lo = (a == 2) ? -0.5 : 0.0;
    const double hi = (a == 2) ? 0.5 : 1.0;
    mesh.lines[a].resize(divisions[a] + 1);
    for (int i = 0; i <= divisions[a]; ++i)
      mesh.lines[a][i] = lo + (hi - lo) * static_cast<double>(i) / divisions[a];
  }
  finalize_mesh(mesh, spec, max_aspect);
  return mesh;
}

RveMesh build_rve_mesh(const std::array<std::vector<double>, 3>& lines, const MaterialSpec& spec,
                       double max_aspect) {
  RveMesh mesh;
  mesh.lines = lines;
  finalize_mesh(mesh, spec, max_aspect);
  return mesh;
}

PeriodicDofMap::PeriodicDofMap(const RveMesh& mesh)
    : nx_(mesh.nx()), ny_(mesh.ny()), nz_(mesh.nz()) {}

const MicroQuadratureRule& MicroQuadratureRule::gauss2() {
  static const MicroQuadratureRule rule = [] {
    MicroQuadratureRule r;
    const double a = 0.5 - 0.5 / std::sqrt(3.0);
    const double b = 0.5 + 0.5 / std::sqrt(3.0);
    for (double z : {a, b})
      for (double y : {a, b})
        for (double x : {a, b}) {
          r.points.emplace_back(x, y, z);
          r.weights.push_back(0.125);
        }
    return r;
  }();
  return rule;
}

namespace {

struct TrilinearShape {
  std::array<double, 8> value;
  std::array<Vec3, 8> grad_ref;  // gradient on the unit reference cube
};

TrilinearShape eval_trilinear(const Vec3& r) {
  TrilinearShape s;
  for (int c = 0; c < 8; ++c) {
    const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
    const double fx = bx ? r[0] : 1.0 - r[0];
    const double fy = by ? r[1] : 1.0 - r[1];
    const double fz = bz ? r[2] : 1.0 - r[2];
    const double dx = bx ? 1.0 : -1.0;
    const double dy = by ? 1.0 : -1.0;
    const double dz = bz ? 1.0 : -1.0;
    s.value[c] = fx * fy * fz;
    s.grad_ref[c] = Vec3(dx * fy * fz, fx * dy * fz, fx * fy * dz);
  }
  return s;
}

// <L F, G> for isotropic constituents: mu (<F,G> + <F^T,G>) + lambda trF trG.
inline double lform(const materials::IsotropicLame& m, const Mat3& F, const Mat3& G) {
  return m.mu * (F.cwiseProduct(G).sum() + F.transpose().cwiseProduct(G).sum()) +
         m.lambda * F.trace() * G.trace();
}

struct ElementGeometry {
  Vec3 lo;
  Vec3 size;
  double volume;
};

ElementGeometry element_geometry(const RveMesh& mesh, int ex, int ey, int ez) {
  ElementGeometry g;
  g.lo = Vec3(mesh.lines[0][ex], mesh.lines[1][ey], mesh.lines[2][ez]);
  g.size = Vec3(mesh.lines[0][ex + 1] - mesh.lines[0][ex], mesh.lines[1][ey + 1] - mesh.lines[1][ey],
                mesh.lines[2][ez + 1] - mesh.lines[2][ez]);
  g.volume = g.size.prod();
  return g;
}

// Scaled physical gradient (d1, d2, gamma^-1 d3) of the corner shapes.
std::array<Vec3, 8> scaled_gradients(const TrilinearShape& shape, const ElementGeometry& geo,
                                     double gamma) {
  std::array<Vec3, 8> g;
  for (int c = 0; c < 8; ++c)
    g[c] = Vec3(shape.grad_ref[c][0] / geo.size[0], shape.grad_ref[c][1] / geo.size[1],
                shape.grad_ref[c][2] / (gamma * geo.size[2]));
  return g;
}

Mat3 phi_scaled_gradient(const RveMesh& mesh, const PeriodicDofMap& dofs,
                         const Eigen::VectorXd& phi, const std::array<Vec3, 8>& g, int ex, int ey,
                         int ez) {
  Mat3 grad = Mat3::Zero();
  for (int c = 0; c < 8; ++c) {
    const int node =
        dofs.scalar_node(ex + (c & 1), ey + ((c >> 1) & 1), ez + ((c >> 2) & 1));
    grad += phi.segment<3>(3 * node) * g[c].transpose();
  }
  return grad;
}

}  // namespace

double micro_integrate(const RveMesh& mesh, const MicroQuadratureRule& rule,
                       const std::function<double(const Vec3&)>& f) {
  double sum = 0;
  for (int ez = 0; ez < mesh.nz(); ++ez)
    for (int ey = 0; ey < mesh.ny(); ++ey)
      for (int ex = 0; ex < mesh.nx(); ++ex) {
        const ElementGeometry geo = element_geometry(mesh, ex, ey, ez);
        for (size_t q = 0; q < rule.points.size(); ++q) {
          const Vec3 y = geo.lo + rule.points[q].cwiseProduct(geo.size);
          sum += rule.weights[q] * geo.volume * f(y);
        }
      }
  return sum;
}

CellOutputs solve_correctors(const MaterialSpec& spec, const Vec2& s, double gamma,
                             const RveMesh& mesh, const CellSolveOptions& opts) {
  if (!(gamma > 0)) throw ValidationError("solve_correctors: gamma must be positive");
  const auto& rule = MicroQuadratureRule::gauss2();
  const auto& basis = sym_basis();
  const PeriodicDofMap dofs(mesh);

  const int nper = dofs.num_scalar_nodes();
  const int nphi = 3 * nper;

  const std::array<Mat3, 3> iota_basis = {iota(basis[0]), iota(basis[1]), iota(basis[2])};
  const Vec3 basis_trace(1.0, 1.0, 0.0);

  // Bordered system [K C; C^T D] [phi; m] = [f; g]: K couples the periodic
  // dofs only, the three affine unknowns m live in the dense border. K is
  // made definite by pinning the three components of scalar node 0 (the
  // kernel of K consists of constants); the zero-mean representative is
  // restored by a shift after the solve, which leaves all strains unchanged.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.num_elements()) * 600);
  Eigen::MatrixXd border = Eigen::MatrixXd::Zero(nphi, 3);   // C
  Mat3 mm = Mat3::Zero();                                    // D
  Eigen::MatrixXd load = Eigen::MatrixXd::Zero(nphi, 3);     // f_i
  Mat3 mload = Mat3::Zero();                                 // g_i (column i)
  Eigen::VectorXd mean_weight = Eigen::VectorXd::Zero(nper);

  for (int ez = 0; ez < mesh.nz(); ++ez)
    for (int ey = 0; ey < mesh.ny(); ++ey)
      for (int ex = 0; ex < mesh.nx(); ++ex) {
        const ElementGeometry geo = element_geometry(mesh, ex, ey, ez);
        const int region = mesh.element_region[ex + mesh.nx() * (ey + mesh.ny() * ez)];
        std::array<int, 8> node;
        for (int c = 0; c < 8; ++c)
          node[c] = dofs.scalar_node(ex + (c & 1), ey + ((c >> 1) & 1), ez + ((c >> 2) & 1));

        Eigen::Matrix<double, 24, 24> ke = Eigen::Matrix<double, 24, 24>::Zero();
        Eigen::Matrix<double, 24, 3> ce = Eigen::Matrix<double, 24, 3>::Zero();
        Eigen::Matrix<double, 24, 3> fe = Eigen::Matrix<double, 24, 3>::Zero();

        for (size_t q = 0; q < rule.points.size(); ++q) {
          const TrilinearShape shape = eval_trilinear(rule.points[q]);
          const std::array<Vec3, 8> g = scaled_gradients(shape, geo, gamma);
          const Vec3 y = geo.lo + rule.points[q].cwiseProduct(geo.size);
          const double w = rule.weights[q] * geo.volume;
          const auto mat = spec.sample(s, y, region).lame;
          const double mu = mat.mu, lambda = mat.lambda;

          for (int a = 0; a < 8; ++a)
            for (int b = 0; b <= a; ++b) {
              const double dot = g[a].dot(g[b]);
              for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d) {
                  const double k = mu * ((c == d ? dot : 0.0) + g[a][d] * g[b][c]) +
                                   lambda * g[a][c] * g[b][d];
                  ke(3 * a + c, 3 * b + d) += w * k;
                  if (a != b) ke(3 * b + d, 3 * a + c) += w * k;
                }
            }
          // Border <L (e_c x g_a), iota(G_i)> and loads against iota(y3 G_i).
          for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 8; ++a) {
              const Vec3 v = 2.0 * mu * (iota_basis[i] * g[a]) + lambda * basis_trace[i] * g[a];
              for (int c = 0; c < 3; ++c) {
                ce(3 * a + c, i) += w * v[c];
                fe(3 * a + c, i) -= w * y[2] * v[c];
              }
            }
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const double k =
                  2.0 * mu * (i == j ? 1.0 : 0.0) + lambda * basis_trace[i] * basis_trace[j];
              mm(i, j) += w * k;
              mload(i, j) -= w * y[2] * k;
            }
          for (int a = 0; a < 8; ++a) mean_weight[node[a]] += w * shape.value[a];
        }

        for (int a = 0; a < 24; ++a) {
          const int ga = 3 * node[a / 3] + a % 3;
          for (int b = 0; b < 24; ++b) {
            const double v = ke(a, b);
            if (v != 0.0) triplets.emplace_back(ga, 3 * node[b / 3] + b % 3, v);
          }
          border.row(ga) += ce.row(a);
          load.row(ga) += fe.row(a);
        }
      }

  Eigen::SparseMatrix<double> ktrue(nphi, nphi);
  ktrue.setFromTriplets(triplets.begin(), triplets.end());
  ktrue.makeCompressed();

  // Pinned copy: identity rows/columns for the three components of node 0.
  std::vector<Eigen::Triplet<double>> pinned;
  pinned.reserve(triplets.size() + 3);
  for (const auto& t : triplets)
    if (t.row() >= 3 && t.col() >= 3) pinned.push_back(t);
  const double pin_scale = ktrue.diagonal().maxCoeff();
  for (int d = 0; d < 3; ++d) pinned.emplace_back(d, d, pin_scale);
  Eigen::SparseMatrix<double> kpin(nphi, nphi);
  kpin.setFromTriplets(pinned.begin(), pinned.end());
  kpin.makeCompressed();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(kpin);
  if (ldlt.info() != Eigen::Success)
    throw SolverError("cell problem: factorization failed (singular or indefinite system); "
                      "check the material ellipticity bounds");

  Eigen::MatrixXd rhs_all(nphi, 6);
  rhs_all.leftCols<3>() = border;
  rhs_all.rightCols<3>() = load;
  rhs_all.topRows<3>().setZero();
  const Eigen::MatrixXd sol_all = ldlt.solve(rhs_all);
  const Eigen::MatrixXd kinv_border = sol_all.leftCols<3>();
  const Eigen::MatrixXd kinv_load = sol_all.rightCols<3>();

  const Mat3 schur = mm - border.transpose() * kinv_border;
  Eigen::LDLT<Mat3> schur_ldlt(schur);
  if (schur_ldlt.info() != Eigen::Success)
    throw SolverError("cell problem: affine Schur block is singular");

  CellOutputs out;
  std::array<double, 3> residual_norm;
  double scale = 0;  // shared over the three loads: a zero-load system has a
                     // meaningless per-load relative residual
  for (int i = 0; i < 3; ++i) {
    const Vec3 m = schur_ldlt.solve(Vec3(mload.col(i)) - border.transpose() * kinv_load.col(i));
    Eigen::VectorXd phi = kinv_load.col(i) - kinv_border * m;
    // Residual of the original (unpinned) equations; the pinned rows are
    // consistent because constant test fields carry no strain.
    const Eigen::VectorXd r_phi = ktrue * phi + border * m - load.col(i);
    const Vec3 r_m = border.transpose() * phi + mm * m - mload.col(i);
    residual_norm[i] = std::sqrt(r_phi.squaredNorm() + r_m.squaredNorm());
    const double load_norm = std::sqrt(load.col(i).squaredNorm() + mload.col(i).squaredNorm());
    const double solution_norm = std::sqrt(phi.squaredNorm() + m.squaredNorm());
    scale = std::max(scale, pin_scale * solution_norm + load_norm);
    // Zero-mean representative of the periodic part.
    Vec3 mean = Vec3::Zero();
    for (int a = 0; a < nper; ++a) mean += mean_weight[a] * phi.segment<3>(3 * a);
    for (int a = 0; a < nper; ++a) phi.segment<3>(3 * a) -= mean;
    out.correctors[i].gamma = gamma;
    out.correctors[i].M = from_sym_coeffs(m);
    out.correctors[i].phi = std::move(phi);
  }
  for (int i = 0; i < 3; ++i) {
    const double rel = residual_norm[i] / std::max(scale, 1e-300);
    if (!(rel <= opts.rel_residual_tol))
      throw SolverError("cell problem: solve residual " + std::to_string(rel) +
                        " exceeds tolerance for basis load " + std::to_string(i));
  }

  // Effective quantities from the solved strains.
  for (int ez = 0; ez < mesh.nz(); ++ez)
    for (int ey = 0; ey < mesh.ny(); ++ey)
      for (int ex = 0; ex < mesh.nx(); ++ex) {
        const ElementGeometry geo = element_geometry(mesh, ex, ey, ez);
        const int region = mesh.element_region[ex + mesh.nx() * (ey + mesh.ny() * ez)];
        for (size_t q = 0; q < rule.points.size(); ++q) {
          const TrilinearShape shape = eval_trilinear(rule.points[q]);
          const std::array<Vec3, 8> g = scaled_gradients(shape, geo, gamma);
          const Vec3 y = geo.lo + rule.points[q].cwiseProduct(geo.size);
          const double w = rule.weights[q] * geo.volume;
          const auto mat = spec.sample(s, y, region);

          std::array<Mat3, 3> strain;
          for (int i = 0; i < 3; ++i)
            strain[i] = y[2] * iota_basis[i] + iota(out.correctors[i].M) +
                        phi_scaled_gradient(mesh, dofs, out.correctors[i].phi, g, ex, ey, ez);
          // Full matrix on purpose: the (i,j)/(j,i) entries are computed along
          // different floating-point paths, so symmetry stays observable.
          for (int i = 0; i < 3; ++i) {
            const Mat3 stress = apply_elasticity(mat.lame, strain[i]);
            for (int j = 0; j < 3; ++j)
              out.Qhat(i, j) += w * stress.cwiseProduct(strain[j]).sum();
            out.Bhat[i] += w * stress.cwiseProduct(mat.prestrain).sum();
          }
        }
      }

  const double qscale = out.Qhat.cwiseAbs().maxCoeff();
  Eigen::LLT<Mat3> llt(out.Qhat);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(out.Qhat, Eigen::EigenvaluesOnly);
    throw SolverError("cell problem: Qhat is not positive definite; smallest eigenvalue " +
                      std::to_string(es.eigenvalues().minCoeff()) + " at scale " +
                      std::to_string(qscale));
  }
  out.Beff = from_sym_coeffs(llt.solve(out.Bhat));
  return out;
}

Vec3 assemble_bhat(const MaterialSpec& spec, const Vec2& s, const RveMesh& mesh,
                   const std::array<Corrector, 3>& correctors) {
  const auto& rule = MicroQuadratureRule::gauss2();
  const PeriodicDofMap dofs(mesh);
  Vec3 bhat = Vec3::Zero();
  for (int ez = 0; ez < mesh.nz(); ++ez)
    for (int ey = 0; ey < mesh.ny(); ++ey)
      for (int ex = 0; ex < mesh.nx(); ++ex) {
        const ElementGeometry geo = element_geometry(mesh, ex, ey, ez);
        const int region = mesh.element_region[ex + mesh.nx() * (ey + mesh.ny() * ez)];
        for (size_t q = 0; q < rule.points.size(); ++q) {
          const TrilinearShape shape = eval_trilinear(rule.points[q]);
          const std::array<Vec3, 8> g = scaled_gradients(shape, geo, correctors[0].gamma);
          const Vec3 y = geo.lo + rule.points[q].cwiseProduct(geo.size);
          const double w = rule.weights[q] * geo.volume;
          const auto mat = spec.sample(s, y, region);
          for (int i = 0; i < 3; ++i) {
            const Mat3 strain = y[2] * iota(sym_basis()[i]) + iota(correctors[i].M) +
                                phi_scaled_gradient(mesh, dofs, correctors[i].phi, g, ex, ey, ez);
            bhat[i] += w * apply_elasticity(mat.lame, strain).cwiseProduct(mat.prestrain).sum();
          }
        }
      }
  return bhat;
}

double qhom_eval(const Mat3& Qhat, const Mat2& G) {
  const Vec3 g = sym_coeffs(G);
  return g.dot(Qhat * g);
}

Mat2 lhom_apply(const Mat3& Qhat, const Mat2& F) {
  return from_sym_coeffs(Qhat * sym_coeffs(F));
}

Mat3 analytic_qhat_homogeneous(const materials::IsotropicLame& lame) {
  const double mu = lame.mu, lambda = lame.lambda;
  const double c = 2.0 * mu * lambda / (2.0 * mu + lambda);
  Mat3 q = Mat3::Zero();
  q(0, 0) = q(1, 1) = 2.0 * mu + c;
  q(0, 1) = q(1, 0) = c;
  q(2, 2) = 2.0 * mu;
  return q / 12.0;
}

Mat3 corrector_strain(const RveMesh& mesh, const PeriodicDofMap& dofs, const Corrector& c,
                      int basis_index, int ex, int ey, int ez, const Vec3& r) {
  const ElementGeometry geo = element_geometry(mesh, ex, ey, ez);
  const TrilinearShape shape = eval_trilinear(r);
  const std::array<Vec3, 8> g = scaled_gradients(shape, geo, c.gamma);
  const Vec3 y = geo.lo + r.cwiseProduct(geo.size);
  return y[2] * iota(sym_basis()[basis_index]) + iota(c.M) +
         phi_scaled_gradient(mesh, dofs, c.phi, g, ex, ey, ez);
}

double corrector_h1_norm(const RveMesh& mesh, const PeriodicDofMap& dofs, const Corrector& c) {
  const auto& rule = MicroQuadratureRule::gauss2();
  double sq = 0;
  for (int ez = 0; ez < mesh.nz(); ++ez)
    for (int ey = 0; ey < mesh.ny(); ++ey)
      for (int ex = 0; ex < mesh.nx(); ++ex) {
        const ElementGeometry geo = element_geometry(mesh, ex, ey, ez);
        for (size_t q = 0; q < rule.points.size(); ++q) {
          const TrilinearShape shape = eval_trilinear(rule.points[q]);
          const std::array<Vec3, 8> g = scaled_gradients(shape, geo, 1.0);  // unscaled gradient
          const Vec3 y = geo.lo + rule.points[q].cwiseProduct(geo.size);
          const double w = rule.weights[q] * geo.volume;
          Vec3 value = iota(c.M) * y;
          Mat3 grad = iota(c.M) + phi_scaled_gradient(mesh, dofs, c.phi, g, ex, ey, ez);
          for (int cc = 0; cc < 8; ++cc) {
            const int node =
                dofs.scalar_node(ex + (cc & 1), ey + ((cc >> 1) & 1), ez + ((cc >> 2) & 1));
            value += shape.value[cc] * c.phi.segment<3>(3 * node);
          }
          sq += w * (value.squaredNorm() + grad.squaredNorm());
        }
      }
  return std::sqrt(sq);
}

double galerkin_residual(const MaterialSpec& spec, const Vec2& s, const RveMesh& mesh,
                         const CellOutputs& cell, int i, int j) {
  const auto& rule = MicroQuadratureRule::gauss2();
  const PeriodicDofMap dofs(mesh);
  double sum = 0;
  for (int ez = 0; ez < mesh.nz(); ++ez)
    for (int ey = 0; ey < mesh.ny(); ++ey)
      for (int ex = 0; ex < mesh.nx(); ++ex) {
        const ElementGeometry geo = element_geometry(mesh, ex, ey, ez);
        const int region = mesh.element_region[ex + mesh.nx() * (ey + mesh.ny() * ez)];
        for (size_t q = 0; q < rule.points.size(); ++q) {
          const TrilinearShape shape = eval_trilinear(rule.points[q]);
          const std::array<Vec3, 8> g =
              scaled_gradients(shape, geo, cell.correctors[i].gamma);
          const Vec3 y = geo.lo + rule.points[q].cwiseProduct(geo.size);
          const double w = rule.weights[q] * geo.volume;
          const auto mat = spec.sample(s, y, region).lame;
          const Mat3 strain_i = y[2] * iota(sym_basis()[i]) + iota(cell.correctors[i].M) +
                                phi_scaled_gradient(mesh, dofs, cell.correctors[i].phi, g, ex, ey, ez);
          const Mat3 test_j = iota(cell.correctors[j].M) +
                              phi_scaled_gradient(mesh, dofs, cell.correctors[j].phi, g, ex, ey, ez);
          sum += w * lform(mat, strain_i, test_j);
        }
      }
  return sum;
}

}  // namespace microbend::rve
