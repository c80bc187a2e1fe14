#pragma once

#include "morsespec/morsespec.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace testing_support {

using morsespec::Matrix;
using morsespec::Vector;

inline constexpr int kCases = 1000;

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols)
{
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            m(i, j) = g(rng);
    return m;
}

inline Vector random_vector(std::mt19937_64& rng, int d)
{
    return random_matrix(rng, d, 1).col(0);
}

/// Well-conditioned random matrix: identity plus a bounded perturbation, scaled.
inline Matrix random_invertible(std::mt19937_64& rng, int d)
{
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    Matrix m = Matrix::Identity(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i)
            m(i, j) += u(rng);
    std::uniform_real_distribution<double> s(0.5, 2.0);
    return s(rng) * m;
}

/// Circle-driven system whose generator is one of `bins` random matrices, chosen by omega.
inline morsespec::CocycleSystem random_circle_system(std::mt19937_64& rng, int d, int bins)
{
    std::vector<Matrix> table;
    for (int i = 0; i < bins; ++i)
        table.push_back(random_invertible(rng, d));
    return morsespec::make_system(d, morsespec::golden_rotation(), "random", [table](const morsespec::OmegaPoint& w) {
        const auto i = static_cast<std::size_t>(std::floor(w.circle().value() * static_cast<double>(table.size())));
        return table[std::min(i, table.size() - 1)];
    });
}

/// Phi(t, omega) by plain multiplication of generators and their inverses.
inline Matrix naive_product(const morsespec::CocycleSystem& sys, const morsespec::OmegaPoint& omega, std::int64_t t)
{
    Matrix acc = Matrix::Identity(sys.d, sys.d);
    morsespec::OmegaPoint w = omega;
    if (t >= 0) {
        for (std::int64_t j = 0; j < t; ++j) {
            acc = sys.generator(w).value() * acc;
            w = morsespec::theta_step(sys.driver, w, 1);
        }
    } else {
        for (std::int64_t j = 0; j < -t; ++j) {
            w = morsespec::theta_step(sys.driver, w, -1);
            acc = sys.generator(w).value().inverse() * acc;
        }
    }
    return acc;
}

inline double rel_err(const Matrix& a, const Matrix& b)
{
    return (a - b).norm() / std::max(1e-300, b.norm());
}

/// Largest principal-angle sine between two subspaces with orthonormal bases.
inline double subspace_gap(const Matrix& a, const Matrix& b)
{
    const Matrix qa = morsespec::orthonormal_basis(a);
    const Matrix qb = morsespec::orthonormal_basis(b);
    return morsespec::operator_norm(qa * qa.transpose() - qb * qb.transpose());
}

inline Matrix col2(double x, double y)
{
    Matrix m(2, 1);
    m << x, y;
    return m;
}

inline Matrix diag2(double a, double b)
{
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

} // namespace testing_support
