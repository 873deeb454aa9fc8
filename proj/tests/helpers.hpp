#pragma once

#include <cmath>

#include "hmoe/model.hpp"
#include "hmoe/rng.hpp"

namespace hmoe::testutil {

inline MixingMeasure random_measure(Rng& rng, int dim, int k1, int k2,
                                    double spread = 1.5) {
    MixingMeasure G;
    G.dim = dim;
    for (int i1 = 0; i1 < k1; ++i1) {
        Group g;
        g.a.resize(dim);
        for (int j = 0; j < dim; ++j) g.a[j] = rng.uniform(-spread, spread);
        g.b = rng.uniform(-1.0, 1.0);
        for (int i2 = 0; i2 < k2; ++i2) {
            SecondLevelAtom e;
            e.omega.resize(dim);
            e.expert.eta.resize(dim);
            for (int j = 0; j < dim; ++j) {
                e.omega[j] = rng.uniform(-spread, spread);
                e.expert.eta[j] = rng.uniform(-2.0, 2.0);
            }
            e.beta = rng.uniform(-1.0, 1.0);
            e.expert.tau = rng.uniform(-2.0, 2.0);
            e.expert.nu = rng.uniform(0.1, 1.0);
            g.experts.push_back(e);
        }
        G.groups.push_back(g);
    }
    return G;
}

inline double gaussian_pdf(double y, double mean, double var) {
    const double z = y - mean;
    return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
}

/// Direct double-loop density, written independently of the library path.
inline double brute_density(const MixingMeasure& G, GatingCombo combo,
                            const Eigen::VectorXd& x, double y) {
    const bool lap1 = first_level_is_laplace(combo);
    const bool lap2 = second_level_is_laplace(combo);
    const int k1 = G.k1();
    Eigen::VectorXd l1(k1);
    for (int i = 0; i < k1; ++i)
        l1[i] = lap1 ? -(G.groups[i].a - x).norm() + G.groups[i].b
                     : G.groups[i].a.dot(x) + G.groups[i].b;
    Eigen::VectorXd w1 = (l1.array() - l1.maxCoeff()).exp();
    w1 /= w1.sum();
    double total = 0.0;
    for (int i = 0; i < k1; ++i) {
        const auto& g = G.groups[i];
        const int k2 = static_cast<int>(g.experts.size());
        Eigen::VectorXd l2(k2);
        for (int j = 0; j < k2; ++j)
            l2[j] = lap2 ? -(g.experts[j].omega - x).norm() + g.experts[j].beta
                         : g.experts[j].omega.dot(x) + g.experts[j].beta;
        Eigen::VectorXd w2 = (l2.array() - l2.maxCoeff()).exp();
        w2 /= w2.sum();
        for (int j = 0; j < k2; ++j) {
            const auto& e = g.experts[j].expert;
            total += w1[i] * w2[j] *
                     gaussian_pdf(y, e.eta.dot(x) + e.tau, e.nu);
        }
    }
    return total;
}

}  // namespace hmoe::testutil
