#include "microbend/dkt.hpp"

#include <cmath>

namespace microbend::dkt {

namespace {

using Row10 = Eigen::Matrix<double, 1, 10>;

Row10 monomials(const Vec2& xi) {
  Row10 m;
  m << 1, xi[0], xi[1], xi[0] * xi[0], xi[0] * xi[1], xi[1] * xi[1], xi[0] * xi[0] * xi[0],
      xi[0] * xi[0] * xi[1], xi[0] * xi[1] * xi[1], xi[1] * xi[1] * xi[1];
  return m;
}

Row10 monomials_d1(const Vec2& xi) {
  Row10 m;
  m << 0, 1, 0, 2 * xi[0], xi[1], 0, 3 * xi[0] * xi[0], 2 * xi[0] * xi[1], xi[1] * xi[1], 0;
  return m;
}

Row10 monomials_d2(const Vec2& xi) {
  Row10 m;
  m << 0, 0, 1, 0, xi[0], 2 * xi[1], 0, xi[0] * xi[0], 2 * xi[0] * xi[1], 3 * xi[1] * xi[1];
  return m;
}

// Degree-5 rule on the reference triangle: barycentric points and weights
// relative to the triangle area.
struct Tri7Rule {
  std::array<Vec3, 7> bary;
  std::array<double, 7> weight;
};

const Tri7Rule& tri7() {
  static const Tri7Rule rule = [] {
    Tri7Rule r;
    const double s15 = std::sqrt(15.0);
    const double b1 = (6.0 + s15) / 21.0, a1 = 1.0 - 2.0 * b1, w1 = (155.0 + s15) / 1200.0;
    const double b2 = (6.0 - s15) / 21.0, a2 = 1.0 - 2.0 * b2, w2 = (155.0 - s15) / 1200.0;
    r.bary[0] = Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3);
    r.weight[0] = 9.0 / 40.0;
    const std::array<Vec3, 3> g1 = {Vec3(a1, b1, b1), Vec3(b1, a1, b1), Vec3(b1, b1, a1)};
    const std::array<Vec3, 3> g2 = {Vec3(a2, b2, b2), Vec3(b2, a2, b2), Vec3(b2, b2, a2)};
    for (int i = 0; i < 3; ++i) {
      r.bary[1 + i] = g1[i];
      r.weight[1 + i] = w1;
      r.bary[4 + i] = g2[i];
      r.weight[4 + i] = w2;
    }
    return r;
  }();
  return rule;
}

// P2 shape values at a barycentric point, node order: 3 vertices then the
// 3 midpoints (midpoint m opposite vertex m).
Eigen::Matrix<double, 6, 1> p2_values(const Vec3& l) {
  Eigen::Matrix<double, 6, 1> phi;
  for (int i = 0; i < 3; ++i) phi[i] = l[i] * (2 * l[i] - 1);
  for (int i = 0; i < 3; ++i) phi[3 + i] = 4 * l[(i + 1) % 3] * l[(i + 2) % 3];
  return phi;
}

Eigen::Matrix<double, 2, 6> p2_gradients(const Vec3& l, const std::array<Vec2, 3>& grad_lambda) {
  Eigen::Matrix<double, 2, 6> g;
  for (int i = 0; i < 3; ++i) g.col(i) = (4 * l[i] - 1) * grad_lambda[i];
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3, b = (i + 2) % 3;
    g.col(3 + i) = 4 * (l[a] * grad_lambda[b] + l[b] * grad_lambda[a]);
  }
  return g;
}

std::array<Vec2, 3> lambda_gradients(const Triangulation& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const double inv2A = 1.0 / (2.0 * mesh.area[t]);
  std::array<Vec2, 3> g;
  for (int l = 0; l < 3; ++l) {
    const Vec2 d = mesh.vertices[tri[(l + 2) % 3]] - mesh.vertices[tri[(l + 1) % 3]];
    g[l] = inv2A * Vec2(-d[1], d[0]);
  }
  return g;
}

}  // namespace

Eigen::VectorXd flatten(const DktDeformation& w) {
  const int n = static_cast<int>(w.value.size());
  Eigen::VectorXd dofs(kDofsPerVertex * n);
  for (int v = 0; v < n; ++v) {
    dofs.segment<3>(9 * v) = w.value[v];
    dofs.segment<6>(9 * v + 3) = Eigen::Map<const Eigen::Matrix<double, 6, 1>>(w.gradient[v].data());
  }
  return dofs;
}

DktDeformation unflatten(const Triangulation& mesh, const Eigen::VectorXd& dofs) {
  DktDeformation w;
  w.mesh = &mesh;
  const int n = mesh.num_vertices();
  w.value.resize(n);
  w.gradient.resize(n);
  for (int v = 0; v < n; ++v) {
    w.value[v] = dofs.segment<3>(9 * v);
    w.gradient[v] = Eigen::Map<const Mat32>(dofs.segment<6>(9 * v + 3).data());
  }
  return w;
}

AnalyticDeformation flat_embedding() {
  AnalyticDeformation u;
  u.value = [](const Vec2& s) { return Vec3(s[0], s[1], 0); };
  u.gradient = [](const Vec2&) { return (Mat32() << 1, 0, 0, 1, 0, 0).finished(); };
  u.hessian = [](const Vec2&) { return zero_tensor322(); };
  return u;
}

AnalyticDeformation cylinder(double kappa, int axis) {
  AnalyticDeformation u;
  if (axis == 1) {
    u.value = [kappa](const Vec2& s) {
      return Vec3(std::sin(kappa * s[0]) / kappa, s[1], std::cos(kappa * s[0]) / kappa);
    };
    u.gradient = [kappa](const Vec2& s) {
      Mat32 g;
      g << std::cos(kappa * s[0]), 0, 0, 1, -std::sin(kappa * s[0]), 0;
      return g;
    };
    u.hessian = [kappa](const Vec2& s) {
      Tensor322 h = zero_tensor322();
      h[0](0, 0) = -kappa * std::sin(kappa * s[0]);
      h[2](0, 0) = -kappa * std::cos(kappa * s[0]);
      return h;
    };
  } else {
    u.value = [kappa](const Vec2& s) {
      return Vec3(s[0], std::sin(kappa * s[1]) / kappa, std::cos(kappa * s[1]) / kappa);
    };
    u.gradient = [kappa](const Vec2& s) {
      Mat32 g;
      g << 1, 0, 0, std::cos(kappa * s[1]), 0, -std::sin(kappa * s[1]);
      return g;
    };
    u.hessian = [kappa](const Vec2& s) {
      Tensor322 h = zero_tensor322();
      h[1](1, 1) = -kappa * std::sin(kappa * s[1]);
      h[2](1, 1) = -kappa * std::cos(kappa * s[1]);
      return h;
    };
  }
  return u;
}

DktDeformation interpolate_dkt(const AnalyticDeformation& u, const Triangulation& mesh) {
  DktDeformation w;
  w.mesh = &mesh;
  w.value.resize(mesh.num_vertices());
  w.gradient.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    w.value[v] = u.value(mesh.vertices[v]);
    w.gradient[v] = u.gradient(mesh.vertices[v]);
  }
  return w;
}

NormalField discrete_normal(const DktDeformation& w) {
  NormalField n;
  n.mesh = w.mesh;
  n.node_normal.resize(w.gradient.size());
  for (size_t v = 0; v < w.gradient.size(); ++v)
    n.node_normal[v] = w.gradient[v].col(0).cross(w.gradient[v].col(1));
  return n;
}

Vec3 NormalField::eval(int t, const Vec3& bary) const {
  const auto& tri = mesh->triangles[t];
  return bary[0] * node_normal[tri[0]] + bary[1] * node_normal[tri[1]] +
         bary[2] * node_normal[tri[2]];
}

DktSpace::DktSpace(const Triangulation& mesh) : mesh_(&mesh) {
  cache_.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    TriangleCache& c = cache_[t];
    const auto& tri = mesh.triangles[t];
    c.scale = mesh.diameter[t];
    c.center = mesh.centroid[t];

    std::array<Vec2, 3> xi;
    for (int l = 0; l < 3; ++l) xi[l] = (mesh.vertices[tri[l]] - c.center) / c.scale;

    // Nodal functionals plus the center-of-mass constraint in scaled
    // monomial coordinates; gradients pick up the 1/scale factor.
    Eigen::Matrix<double, 10, 10> M;
    for (int l = 0; l < 3; ++l) {
      M.row(3 * l) = monomials(xi[l]);
      M.row(3 * l + 1) = monomials_d1(xi[l]) / c.scale;
      M.row(3 * l + 2) = monomials_d2(xi[l]) / c.scale;
    }
    Row10 constraint = 6.0 * monomials(Vec2::Zero());
    for (int l = 0; l < 3; ++l)
      constraint -= 2.0 * monomials(xi[l]) -
                    (monomials_d1(xi[l]) * xi[l][0] + monomials_d2(xi[l]) * xi[l][1]);
    M.row(9) = constraint;

    Eigen::Matrix<double, 10, 9> rhs = Eigen::Matrix<double, 10, 9>::Zero();
    rhs.topLeftCorner<9, 9>().setIdentity();
    c.coeff_map = M.fullPivLu().solve(rhs);

    // theta at the six P2 nodes as a linear map of the nine local dofs.
    c.theta_map.setZero();
    for (int l = 0; l < 3; ++l)
      for (int k = 0; k < 2; ++k) c.theta_map(2 * l + k, 3 * l + 1 + k) = 1.0;
    for (int l = 0; l < 3; ++l) {
      const int a = (l + 1) % 3, b = (l + 2) % 3;
      const auto& edge = mesh.edges[mesh.triangle_edges[t][l]];
      const Vec2 xim = (edge.midpoint - c.center) / c.scale;
      Eigen::Matrix<double, 2, 10> grad_eval;
      grad_eval.row(0) = monomials_d1(xim) / c.scale;
      grad_eval.row(1) = monomials_d2(xim) / c.scale;
      const Eigen::Matrix<double, 1, 9> row_t =
          edge.tangent.transpose() * grad_eval * c.coeff_map;
      Eigen::Matrix<double, 1, 9> row_n = Eigen::Matrix<double, 1, 9>::Zero();
      for (int end : {a, b})
        for (int k = 0; k < 2; ++k) row_n(0, 3 * end + 1 + k) = 0.5 * edge.normal[k];
      for (int k = 0; k < 2; ++k)
        c.theta_map.row(2 * (3 + l) + k) = edge.tangent[k] * row_t + edge.normal[k] * row_n;
    }

    const auto grad_lambda = lambda_gradients(mesh, t);
    for (int q = 0; q < 3; ++q) {
      Vec3 lq(0.5, 0.5, 0.5);
      lq[q] = 0.0;
      c.p2_grad_at_q[q] = p2_gradients(lq, grad_lambda);
      for (int a = 0; a < 9; ++a) {
        Mat2 s = Mat2::Zero();
        for (int m = 0; m < 6; ++m)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              s(j, k) += c.p2_grad_at_q[q](j, m) * c.theta_map(2 * m + k, a);
        c.hess_sens[q][a] = s;
      }
    }
  }
}

Vec3 DktSpace::barycentric(int t, const Vec2& x) const {
  const auto& tri = mesh_->triangles[t];
  const Vec2 a = mesh_->vertices[tri[0]], b = mesh_->vertices[tri[1]], c = mesh_->vertices[tri[2]];
  Mat2 J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  const Vec2 lc = J.inverse() * (x - a);
  return Vec3(1.0 - lc[0] - lc[1], lc[0], lc[1]);
}

Vec2 DktSpace::point(int t, const Vec3& bary) const {
  const auto& tri = mesh_->triangles[t];
  return bary[0] * mesh_->vertices[tri[0]] + bary[1] * mesh_->vertices[tri[1]] +
         bary[2] * mesh_->vertices[tri[2]];
}

Eigen::Matrix<double, 9, 1> DktSpace::local_dofs(const DktDeformation& w, int t, int comp) const {
  const auto& tri = mesh_->triangles[t];
  Eigen::Matrix<double, 9, 1> d;
  for (int l = 0; l < 3; ++l) {
    d[3 * l] = w.value[tri[l]][comp];
    d[3 * l + 1] = w.gradient[tri[l]](comp, 0);
    d[3 * l + 2] = w.gradient[tri[l]](comp, 1);
  }
  return d;
}

Vec3 DktSpace::eval(const DktDeformation& w, int t, const Vec3& bary) const {
  const TriangleCache& c = cache_[t];
  const Vec2 xi = (point(t, bary) - c.center) / c.scale;
  const Row10 m = monomials(xi);
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = m * (c.coeff_map * local_dofs(w, t, i));
  return out;
}

Mat32 DktSpace::eval_gradient(const DktDeformation& w, int t, const Vec3& bary) const {
  const TriangleCache& c = cache_[t];
  const Vec2 xi = (point(t, bary) - c.center) / c.scale;
  const Row10 d1 = monomials_d1(xi) / c.scale;
  const Row10 d2 = monomials_d2(xi) / c.scale;
  Mat32 g;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix<double, 10, 1> coeff = c.coeff_map * local_dofs(w, t, i);
    g(i, 0) = d1 * coeff;
    g(i, 1) = d2 * coeff;
  }
  return g;
}

ThetaCoeffs DktSpace::discrete_gradient(const DktDeformation& w, int t) const {
  const TriangleCache& c = cache_[t];
  ThetaCoeffs theta;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix<double, 12, 1> tv = c.theta_map * local_dofs(w, t, i);
    for (int m = 0; m < 6; ++m)
      for (int k = 0; k < 2; ++k) theta.value[m](i, k) = tv[2 * m + k];
  }
  return theta;
}

Mat32 DktSpace::theta_value(const ThetaCoeffs& theta, int t, const Vec3& bary) const {
  (void)t;
  const auto phi = p2_values(bary);
  Mat32 out = Mat32::Zero();
  for (int m = 0; m < 6; ++m) out += phi[m] * theta.value[m];
  return out;
}

Tensor322 DktSpace::discrete_hessian(const ThetaCoeffs& theta, int t, const Vec3& bary) const {
  const auto grad_lambda = lambda_gradients(*mesh_, t);
  const auto dphi = p2_gradients(bary, grad_lambda);
  Tensor322 A = zero_tensor322();
  for (int m = 0; m < 6; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) A[i](j, k) += dphi(j, m) * theta.value[m](i, k);
  return A;
}

Tensor322 DktSpace::hessian_at_q(const ThetaCoeffs& theta, int t, int q) const {
  const auto& dphi = cache_[t].p2_grad_at_q[q];
  Tensor322 A = zero_tensor322();
  for (int m = 0; m < 6; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) A[i](j, k) += dphi(j, m) * theta.value[m](i, k);
  return A;
}

const std::array<Mat2, 9>& DktSpace::hessian_sensitivity(int t, int q) const {
  return cache_[t].hess_sens[q];
}

double isometry_defect(const DktDeformation& w, const DktSpace& space) {
  const auto& mesh = space.mesh();
  const auto& rule = tri7();
  double sum = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ThetaCoeffs theta = space.discrete_gradient(w, t);
    for (int p = 0; p < 7; ++p) {
      const Mat32 th = space.theta_value(theta, t, rule.bary[p]);
      sum += mesh.area[t] * rule.weight[p] * (th.transpose() * th - Mat2::Identity()).norm();
    }
  }
  return sum;
}

double max_isometry_violation(const DktDeformation& w) {
  double worst = 0;
  for (const auto& F : w.gradient)
    worst = std::max(worst, (F.transpose() * F - Mat2::Identity()).norm());
  return worst;
}

double mean_curvature_estimate(const DktDeformation& w, const DktSpace& space) {
  const auto& mesh = space.mesh();
  const auto normals = discrete_normal(w);
  double sum = 0, area = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ThetaCoeffs theta = space.discrete_gradient(w, t);
    const auto& tri = mesh.triangles[t];
    const double wq = mesh.area[t] / 3.0;
    for (int q = 0; q < 3; ++q) {
      const Tensor322 A = space.hessian_at_q(theta, t, q);
      const Vec3 n =
          0.5 * (normals.node_normal[tri[(q + 1) % 3]] + normals.node_normal[tri[(q + 2) % 3]]);
      sum += wq * contract_first(n, A).norm();
      area += wq;
    }
  }
  return sum / area;
}

double theta_l2_norm(const DktDeformation& w, const DktSpace& space) {
  const auto& mesh = space.mesh();
  const auto& rule = tri7();
  double sum = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ThetaCoeffs theta = space.discrete_gradient(w, t);
    for (int p = 0; p < 7; ++p)
      sum += mesh.area[t] * rule.weight[p] * space.theta_value(theta, t, rule.bary[p]).squaredNorm();
  }
  return std::sqrt(sum);
}

double hessian_l2_norm(const DktDeformation& w, const DktSpace& space) {
  const auto& mesh = space.mesh();
  const auto& rule = tri7();
  double sum = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ThetaCoeffs theta = space.discrete_gradient(w, t);
    for (int p = 0; p < 7; ++p) {
      const Tensor322 A = space.discrete_hessian(theta, t, rule.bary[p]);
      sum += mesh.area[t] * rule.weight[p] * inner(A, A);
    }
  }
  return std::sqrt(sum);
}

double sym_hessian_l2_norm(const DktDeformation& w, const DktSpace& space) {
  const auto& mesh = space.mesh();
  const auto& rule = tri7();
  double sum = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ThetaCoeffs theta = space.discrete_gradient(w, t);
    for (int p = 0; p < 7; ++p) {
      Tensor322 A = space.discrete_hessian(theta, t, rule.bary[p]);
      for (int i = 0; i < 3; ++i) A[i] = 0.5 * (A[i] + A[i].transpose().eval());
      sum += mesh.area[t] * rule.weight[p] * inner(A, A);
    }
  }
  return std::sqrt(sum);
}

}  // namespace microbend::dkt
