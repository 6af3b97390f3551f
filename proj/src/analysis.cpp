#include "tracefem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tracefem {

double mesh_size(std::size_t n_nodes) {
    if (n_nodes == 0) throw Error("mesh_size: node count must be positive");
    return std::pow(static_cast<double>(n_nodes), -1.0 / 3.0);
}

BenchmarkPoint exact_benchmark(const BenchmarkConfig& cfg, const Vec3& x) {
    const double pi = M_PI;
    BenchmarkPoint out;
    const double f =
        cfg.force * x.x() / (2.0 * pi * cfg.radius * cfg.length * cfg.length);
    out.load = Vec3(f, 0.0, 0.0);
    const double xi = x.x() / cfg.length;
    out.sigma_exact =
        cfg.force * (1.0 - xi * xi) / (4.0 * pi * cfg.radius * cfg.thickness);
    return out;
}

LoadFn benchmark_load(const BenchmarkConfig& cfg) {
    return [cfg](const Vec3& x) -> Vec3 {
        return exact_benchmark(cfg, x).load / cfg.thickness;
    };
}

std::vector<int> benchmark_constraints(const ActiveMesh& active,
                                       const BenchmarkConfig& cfg) {
    std::vector<int> dofs;
    const double tol = 1e-9 * cfg.length;
    for (int node : active.nodes) {
        const double x = active.parent->nodes[node].x();
        if (std::abs(x) <= tol) dofs.push_back(active.dof(node, 0));
        if (std::abs(x - cfg.length) <= tol) {
            dofs.push_back(active.dof(node, 1));
            dofs.push_back(active.dof(node, 2));
        }
    }
    return dofs;
}

Vec3 symmetric_eigenvalues(const Mat3& m) {
    Mat3 a = 0.5 * (m + m.transpose());
    const double scale = std::max(1e-300, a.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-14 * scale) {
            Vec3 ev(a(0, 0), a(1, 1), a(2, 2));
            std::sort(ev.data(), ev.data() + 3, std::greater<double>());
            return ev;
        }
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a(p, q)) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Mat3 rot = Mat3::Identity();
                rot(p, p) = rot(q, q) = c;
                rot(p, q) = s;
                rot(q, p) = -s;
                a = rot.transpose() * a * rot;
            }
    }
    throw Error("symmetric eigensolver did not converge in 100 Jacobi sweeps");
}

double stress_error(const DisplacementField& field, const SurfaceMesh& surface,
                    const Material& mat, const BenchmarkConfig& cfg,
                    int quad_degree) {
    double acc = 0.0;
    for (const SurfaceElement& se : surface.elements) {
        for (const SurfaceQP& qp : surface_quadrature(se, quad_degree)) {
            const Mat3 sigma = evaluate_stress(field, se, mat, qp.ref);
            const Vec3 ev = symmetric_eigenvalues(sigma);
            const double sigma_a = ev.norm();
            const double sigma_e = exact_benchmark(cfg, qp.frame.x).sigma_exact;
            acc += qp.weight * (sigma_e - sigma_a) * (sigma_e - sigma_a);
        }
    }
    return std::sqrt(acc);
}

GeometryErrors geometric_and_normal_error(const SurfaceMesh& surface,
                                          const AnalyticField& field,
                                          int quad_degree) {
    double geom = 0.0, nrm = 0.0;
    for (const SurfaceElement& se : surface.elements) {
        for (const SurfaceQP& qp : surface_quadrature(se, quad_degree)) {
            const double phi = field.value(qp.frame.x);
            geom += qp.weight * phi * phi;
            const Vec3 n_e = field.eval(qp.frame.x).grad.normalized();
            nrm += qp.weight * (n_e - qp.frame.normal).squaredNorm();
        }
    }
    return {std::sqrt(geom), std::sqrt(nrm)};
}

std::vector<double> convergence_rates(const std::vector<double>& errors,
                                      const std::vector<double>& hs) {
    if (errors.size() != hs.size() || errors.size() < 2)
        throw Error("convergence_rates: need matching lists of length >= 2");
    std::vector<double> rates(errors.size(),
                              std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 1; i < errors.size(); ++i) {
        if (hs[i] >= hs[i - 1]) throw Error("convergence_rates: h must decrease");
        if (errors[i] <= 0.0 || errors[i - 1] <= 0.0)
            throw Error("convergence_rates: errors must be positive");
        rates[i] = std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]);
    }
    return rates;
}

GoldenResult golden_section(const std::function<double(double)>& objective,
                            double lo, double hi, double tol) {
    if (!(hi > lo)) throw Error("golden_section: empty interval");
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    int evals = 0;
    auto safe = [&](double x) {
        ++evals;
        try {
            const double v = objective(x);
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = safe(c), fd = safe(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = safe(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = safe(d);
        }
    }
    GoldenResult out;
    out.x = fc < fd ? c : d;
    out.value = std::min(fc, fd);
    out.evaluations = evals;
    return out;
}

SimplexResult nelder_mead2(const std::function<double(const Vec2&)>& objective,
                           const Vec2& start, double tol, int max_evals) {
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    int evals = 0;
    auto clamp = [](Vec2 x) {
        return Vec2(std::max(0.0, x.x()), std::max(0.0, x.y()));
    };
    auto safe = [&](const Vec2& x) {
        ++evals;
        try {
            const double v = objective(x);
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::array<Vec2, 3> p = {clamp(start), clamp(start + Vec2(1, 0)),
                             clamp(start + Vec2(0, 1))};
    std::array<double, 3> f = {safe(p[0]), safe(p[1]), safe(p[2])};

    auto order = [&]() {
        std::array<int, 3> idx = {0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] < f[b]; });
        std::array<Vec2, 3> np = {p[idx[0]], p[idx[1]], p[idx[2]]};
        std::array<double, 3> nf = {f[idx[0]], f[idx[1]], f[idx[2]]};
        p = np;
        f = nf;
    };
    auto diameter = [&]() {
        return std::max({(p[0] - p[1]).norm(), (p[0] - p[2]).norm(),
                         (p[1] - p[2]).norm()});
    };

    order();
    while (evals < max_evals && diameter() >= tol) {
        const Vec2 centroid = 0.5 * (p[0] + p[1]);
        const Vec2 xr = clamp(centroid + alpha * (centroid - p[2]));
        const double fr = safe(xr);
        if (fr < f[0]) {
            const Vec2 xe = clamp(centroid + gamma * (xr - centroid));
            const double fe = safe(xe);
            if (fe < fr) {
                p[2] = xe;
                f[2] = fe;
            } else {
                p[2] = xr;
                f[2] = fr;
            }
        } else if (fr < f[1]) {
            p[2] = xr;
            f[2] = fr;
        } else {
            const Vec2 xc = clamp(centroid + rho * (p[2] - centroid));
            const double fc = safe(xc);
            if (fc < f[2]) {
                p[2] = xc;
                f[2] = fc;
            } else {
                for (int i = 1; i < 3; ++i) {
                    p[i] = clamp(p[0] + sigma * (p[i] - p[0]));
                    f[i] = safe(p[i]);
                }
            }
        }
        order();
    }
    return {p[0], f[0], evals};
}

}  // namespace tracefem
