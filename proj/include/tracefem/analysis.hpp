#pragma once

#include <functional>
#include <vector>

#include "tracefem/levelset.hpp"
#include "tracefem/membrane.hpp"
#include "tracefem/reconstruct.hpp"
#include "tracefem/types.hpp"

namespace tracefem {

// h := N^{-1/3}, N the number of nodes of the active mesh.
double mesh_size(std::size_t n_nodes);

// Cylinder membrane benchmark: radius r, thickness t, length L along x,
// axial surface load f(x) = F x / (2 pi r L^2) and axial stress
// sigma_e(x) = F (1 - (x/L)^2) / (4 pi r t).
struct BenchmarkConfig {
    double radius = 1.0;
    double thickness = 0.01;
    double length = 4.0;
    double force = 1.0;
    double youngs = 100.0;
    double poisson = 0.5;
};

struct BenchmarkPoint {
    Vec3 load;           // (f, 0, 0)
    double sigma_exact;  // axial stress
};
BenchmarkPoint exact_benchmark(const BenchmarkConfig& cfg, const Vec3& x);

// Load passed to the assembly. The membrane bilinear form carries no
// thickness factor, so the surface load is divided by t to keep the solved
// stress on the physical scale of sigma_e.
LoadFn benchmark_load(const BenchmarkConfig& cfg);

// Nodal Dirichlet data: u_x at x = 0, u_y and u_z at x = L.
std::vector<int> benchmark_constraints(const ActiveMesh& active,
                                       const BenchmarkConfig& cfg);

// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi sweeps.
Vec3 symmetric_eigenvalues(const Mat3& m);

// eps_sigma = || sigma_e - sigma_a ||_L2(Gamma_h) with sigma_a the Euclidean
// norm of the eigenvalues of the in-plane stress.
double stress_error(const DisplacementField& field, const SurfaceMesh& surface,
                    const Material& mat, const BenchmarkConfig& cfg,
                    int quad_degree = 4);

// eps_geom = ||phi(x)||_L2(Gamma_h), eps_n = ||n_e - n_h||_L2(Gamma_h)
// against the analytic field.
struct GeometryErrors {
    double geom;
    double normal;
};
GeometryErrors geometric_and_normal_error(const SurfaceMesh& surface,
                                          const AnalyticField& field,
                                          int quad_degree = 4);

// rate_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i); element 0 is NaN.
std::vector<double> convergence_rates(const std::vector<double>& errors,
                                      const std::vector<double>& hs);

// Golden-section search on [lo, hi]; stops when the interval is narrower
// than `tol`. Objective failures (exceptions) count as +infinity.
struct GoldenResult {
    double x;
    double value;
    int evaluations;
};
GoldenResult golden_section(const std::function<double(double)>& objective,
                            double lo, double hi, double tol = 1e-2);

// Nelder-Mead in 2D with reflection/expansion/contraction/shrink
// coefficients (1, 2, 0.5, 0.5); iterates are clamped to the first
// quadrant. Stops when the simplex diameter drops below `tol` or after
// `max_evals` objective evaluations.
struct SimplexResult {
    Vec2 x;
    double value;
    int evaluations;
};
SimplexResult nelder_mead2(const std::function<double(const Vec2&)>& objective,
                           const Vec2& start, double tol = 1e-2, int max_evals = 60);

}  // namespace tracefem
