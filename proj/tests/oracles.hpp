#pragma once

// brute-force references shared by the unit tests and the acceptance binary

#include <wildscalar/geometry.hpp>
#include <wildscalar/torus_field.hpp>

namespace oracle {

using namespace wildscalar;

// u(x) = sum over retained k != 0 of m(k) theta_hat(k) e^{ik.x}, theta_hat by direct sums
inline PhysicalField dft_oracle(const PhysicalField& th, const MultiplierSymbol& sym) {
    const GridSpec& g = th.grid;
    const int n = g.n, N = g.nx;
    const std::size_t S = g.spatial();
    std::vector<std::vector<int>> ks;
    std::vector<int> k(n, -N / 2 + 1);
    while (true) {
        ks.push_back(k);
        int d = n - 1;
        while (d >= 0 && ++k[d] > N / 2 - 1) k[d--] = -N / 2 + 1;
        if (d < 0) break;
    }
    PhysicalField u(g, n);
    for (int t = 0; t < g.nt; ++t) {
        for (const auto& kk : ks) {
            Vec kv(n);
            bool zero = true;
            for (int d = 0; d < n; ++d) {
                kv(d) = kk[d];
                zero = zero && kk[d] == 0;
            }
            if (zero) continue;
            cplx hat = 0.0;
            for (std::size_t p = 0; p < S; ++p) hat += th(0, t, p) * std::exp(cplx(0, -kv.dot(position(g, p))));
            hat /= double(S);
            Vec m = sym.raw(kv);
            cplx fac = sym.imaginary ? cplx(0, 1) : cplx(1, 0);
            for (std::size_t p = 0; p < S; ++p) {
                cplx e = fac * hat * std::exp(cplx(0, kv.dot(position(g, p))));
                for (int d = 0; d < n; ++d) u(d, t, p) += m(d) * e.real();
            }
        }
    }
    return u;
}

// min over s = +-1 and v of |A - (s, s v, v)|, by grid search over v with repeated zoom
inline double dist_grid(const StateMatrix& A) {
    const int n = A.n();
    double best = 1e300;
    for (double s : {1.0, -1.0}) {
        Vec c = Vec::Zero(n);
        double half = 6.0;
        const int per = n == 2 ? 41 : 17;
        for (int zoom = 0; zoom < 40; ++zoom) {
            double local = 1e300;
            Vec arg = c;
            std::vector<int> idx(n, 0);
            while (true) {
                Vec v(n);
                for (int d = 0; d < n; ++d) v(d) = c(d) - half + 2.0 * half * idx[d] / (per - 1);
                double d2 = (A.theta - s) * (A.theta - s) + (A.q - s * v).squaredNorm() + (A.u - v).squaredNorm();
                if (d2 < local) {
                    local = d2;
                    arg = v;
                }
                int d = n - 1;
                while (d >= 0 && ++idx[d] == per) idx[d--] = 0;
                if (d < 0) break;
            }
            c = arg;
            half *= 0.25;
            best = std::min(best, local);
        }
    }
    return std::sqrt(best);
}

}
