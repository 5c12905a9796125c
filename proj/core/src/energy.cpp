#include "microbend/energy.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace microbend::energy {

using plate::MacroQuadratureRule;

CoefficientField::CoefficientField(const Triangulation& mesh, std::vector<CoefficientPoint> points)
    : num_triangles_(mesh.num_triangles()), points_(std::move(points)) {
  if (static_cast<int>(points_.size()) != 3 * num_triangles_)
    throw ValidationError("CoefficientField: expected " + std::to_string(3 * num_triangles_) +
                          " quadrature points, got " + std::to_string(points_.size()));
}

const CoefficientPoint& CoefficientField::at(int t, int q) const {
  const int idx = 3 * t + q;
  if (t < 0 || t >= num_triangles_ || q < 0 || q >= 3)
    throw ValidationError("CoefficientField: missing coefficients for triangle " +
                          std::to_string(t) + ", point " + std::to_string(q) +
                          " (cache built for " + std::to_string(num_triangles_) + " triangles)");
  return points_[idx];
}

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min(threads, n);
  pool.reserve(nt);
  for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

CoefficientField build_coefficients_cell(const Triangulation& mesh,
                                         const materials::MaterialSpec& spec, double gamma,
                                         const rve::RveMesh& rve_mesh, int threads) {
  const int n = 3 * mesh.num_triangles();
  std::vector<CoefficientPoint> points(n);
  auto sample_point = [&](int idx) {
    return MacroQuadratureRule::point(mesh, idx / 3, idx % 3);
  };

  if (spec.macro_uniform()) {
    const auto cell = rve::solve_correctors(spec, Vec2::Zero(), gamma, rve_mesh);
    for (auto& p : points) {
      p.Qhat = cell.Qhat;
      p.Beff = cell.Beff;
      p.provenance = CoefficientProvenance::CellSolve;
    }
  } else if (spec.lame_macro_uniform()) {
    // Correctors and Qhat do not depend on s; only the prestrain integral does.
    const auto cell = rve::solve_correctors(spec, sample_point(0), gamma, rve_mesh);
    const Eigen::LLT<Mat3> llt(cell.Qhat);
    parallel_for(n, threads, [&](int idx) {
      const Vec3 bhat = rve::assemble_bhat(spec, sample_point(idx), rve_mesh, cell.correctors);
      points[idx].Qhat = cell.Qhat;
      points[idx].Beff = rve::from_sym_coeffs(llt.solve(bhat));
      points[idx].provenance = CoefficientProvenance::CellSolve;
    });
  } else {
    parallel_for(n, threads, [&](int idx) {
      const auto cell = rve::solve_correctors(spec, sample_point(idx), gamma, rve_mesh);
      points[idx].Qhat = cell.Qhat;
      points[idx].Beff = cell.Beff;
      points[idx].provenance = CoefficientProvenance::CellSolve;
    });
  }
  return CoefficientField(mesh, std::move(points));
}

CoefficientField build_coefficients_analytic(const Triangulation& mesh,
                                             const std::function<Mat3(const Vec2&)>& qhat,
                                             const std::function<Mat2(const Vec2&)>& beff) {
  std::vector<CoefficientPoint> points(3 * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int q = 0; q < 3; ++q) {
      const Vec2 s = MacroQuadratureRule::point(mesh, t, q);
      auto& p = points[3 * t + q];
      p.Qhat = qhat(s);
      p.Beff = beff(s);
      p.provenance = CoefficientProvenance::Analytic;
    }
  return CoefficientField(mesh, std::move(points));
}

double contract_third_order(const Mat3& Qhat, const Tensor322& A, const Tensor322& C) {
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3 a = rve::sym_coeffs(A[i]);
    const Vec3 c = rve::sym_coeffs(C[i]);
    sum += a.dot(Qhat * c);
  }
  return sum;
}

EnergyReport assemble_energy(const DktDeformation& w, const DktSpace& space,
                             const CoefficientField& coeffs) {
  const Triangulation& mesh = space.mesh();
  const auto normals = dkt::discrete_normal(w);
  EnergyReport report;
  report.per_triangle.assign(mesh.num_triangles(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto theta = space.discrete_gradient(w, t);
    const double weight = MacroQuadratureRule::weight(mesh, t);
    const auto& tri = mesh.triangles[t];
    double tri_total = 0;
    for (int q = 0; q < 3; ++q) {
      const auto& coeff = coeffs.at(t, q);
      const Tensor322 A = space.hessian_at_q(theta, t, q);
      const Vec3 n =
          0.5 * (normals.node_normal[tri[(q + 1) % 3]] + normals.node_normal[tri[(q + 2) % 3]]);
      const double quad = contract_third_order(coeff.Qhat, A, A);
      const double coup = 2.0 * contract_third_order(coeff.Qhat, A, outer(n, coeff.Beff));
      report.quadratic += weight * quad;
      report.coupling += weight * coup;
      tri_total += weight * (quad + coup);
    }
    report.per_triangle[t] = tri_total;
    report.total += tri_total;
  }
  return report;
}

Eigen::VectorXd assemble_gradient(const DktDeformation& w, const DktSpace& space,
                                  const CoefficientField& coeffs) {
  const Triangulation& mesh = space.mesh();
  const auto normals = dkt::discrete_normal(w);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dkt::kDofsPerVertex * mesh.num_vertices());

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto theta = space.discrete_gradient(w, t);
    const double weight = MacroQuadratureRule::weight(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int q = 0; q < 3; ++q) {
      const auto& coeff = coeffs.at(t, q);
      const Tensor322 A = space.hessian_at_q(theta, t, q);
      const int va = tri[(q + 1) % 3], vb = tri[(q + 2) % 3];
      const Vec3 n = 0.5 * (normals.node_normal[va] + normals.node_normal[vb]);

      // Hessian dependence: d<L A, A + 2 n x B> / dA applied to the per-dof
      // sensitivity matrices.
      std::array<Mat2, 3> P;
      for (int i = 0; i < 3; ++i)
        P[i] = 2.0 * rve::lhom_apply(coeff.Qhat, A[i] + n[i] * coeff.Beff);
      const auto& sens = space.hessian_sensitivity(t, q);
      for (int a = 0; a < 9; ++a) {
        const int l = a / 3, kind = a % 3;
        const int v = tri[l];
        for (int i = 0; i < 3; ++i) {
          const double g = weight * P[i].cwiseProduct(sens[a]).sum();
          const int base = dkt::kDofsPerVertex * v;
          if (kind == 0)
            grad[base + i] += g;
          else
            grad[base + 3 * kind + i] += g;  // gradient column kind-1
        }
      }

      // Normal dependence through the nodal cross products; the P1 midpoint
      // weight 1/2 cancels against the factor 2 of the coupling term.
      Vec3 gvec;
      for (int i = 0; i < 3; ++i)
        gvec[i] = rve::lhom_apply(coeff.Qhat, A[i]).cwiseProduct(coeff.Beff).sum();
      for (int v : {va, vb}) {
        const Vec3 c0 = w.gradient[v].col(0);
        const Vec3 c1 = w.gradient[v].col(1);
        const Vec3 d0 = weight * c1.cross(gvec);
        const Vec3 d1 = weight * gvec.cross(c0);
        const int base = dkt::kDofsPerVertex * v;
        for (int i = 0; i < 3; ++i) {
          grad[base + 3 + i] += d0[i];
          grad[base + 6 + i] += d1[i];
        }
      }
    }
  }
  return grad;
}

Eigen::SparseMatrix<double> quadratic_hessian(const DktSpace& space,
                                              const CoefficientField& coeffs) {
  const Triangulation& mesh = space.mesh();
  const int n = dkt::kDofsPerVertex * mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.num_triangles()) * 3 * 243);
  auto global_index = [&](const std::array<int, 3>& tri, int a, int comp) {
    const int l = a / 3, kind = a % 3;
    const int base = dkt::kDofsPerVertex * tri[l];
    return kind == 0 ? base + comp : base + 3 * kind + comp;
  };
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double weight = MacroQuadratureRule::weight(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int q = 0; q < 3; ++q) {
      const auto& coeff = coeffs.at(t, q);
      const auto& sens = space.hessian_sensitivity(t, q);
      for (int a = 0; a < 9; ++a) {
        const Mat2 lsa = rve::lhom_apply(coeff.Qhat, sens[a]);
        for (int b = 0; b < 9; ++b) {
          const double k = 2.0 * weight * lsa.cwiseProduct(sens[b]).sum();
          if (k == 0.0) continue;
          for (int i = 0; i < 3; ++i)
            triplets.emplace_back(global_index(tri, a, i), global_index(tri, b, i), k);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> H(n, n);
  H.setFromTriplets(triplets.begin(), triplets.end());
  H.makeCompressed();
  return H;
}

double reference_energy_original(const dkt::AnalyticDeformation& u,
                                 const std::function<Mat3(const Vec2&)>& qhat,
                                 const std::function<Mat2(const Vec2&)>& beff,
                                 const Triangulation& mesh) {
  if (!u.hessian)
    throw ValidationError("reference_energy_original: analytic hessian required");
  // Degree-5 rule per triangle, as in isometry_defect.
  const std::array<Vec3, 7> bary = [] {
    const double s15 = std::sqrt(15.0);
    const double b1 = (6.0 + s15) / 21.0, a1 = 1.0 - 2.0 * b1;
    const double b2 = (6.0 - s15) / 21.0, a2 = 1.0 - 2.0 * b2;
    return std::array<Vec3, 7>{Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3), Vec3(a1, b1, b1), Vec3(b1, a1, b1),
                               Vec3(b1, b1, a1), Vec3(a2, b2, b2), Vec3(b2, a2, b2),
                               Vec3(b2, b2, a2)};
  }();
  const std::array<double, 7> wts = [] {
    const double s15 = std::sqrt(15.0);
    const double w1 = (155.0 + s15) / 1200.0, w2 = (155.0 - s15) / 1200.0;
    return std::array<double, 7>{9.0 / 40.0, w1, w1, w1, w2, w2, w2};
  }();
  double total = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int p = 0; p < 7; ++p) {
      const Vec2 s = bary[p][0] * mesh.vertices[tri[0]] + bary[p][1] * mesh.vertices[tri[1]] +
                     bary[p][2] * mesh.vertices[tri[2]];
      const Mat32 g = u.gradient(s);
      const Vec3 n = g.col(0).cross(g.col(1));
      const Mat2 II = -contract_first(n, u.hessian(s));
      total += mesh.area[t] * wts[p] * rve::qhom_eval(qhat(s), II - beff(s));
    }
  }
  return total;
}

double reformulation_offset(const CoefficientField& coeffs, const Triangulation& mesh) {
  double sum = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double weight = MacroQuadratureRule::weight(mesh, t);
    for (int q = 0; q < 3; ++q) {
      const auto& c = coeffs.at(t, q);
      sum += weight * rve::qhom_eval(c.Qhat, c.Beff);
    }
  }
  return sum;
}

}  // namespace microbend::energy
