#pragma once

// Reference implementations used only by tests. They share no code with the
// library and favour the most direct formula over speed.

#include <optional>
#include <string>
#include <vector>

namespace oracle {

using Column = std::vector<std::optional<double>>;
using Matrix = std::vector<std::vector<double>>;  // row-major, rows x cols

struct PairR {
    std::optional<double> r;
    std::size_t n = 0;
};

/// Textbook Pearson over complete pairs, accumulated in long double:
/// (n*Sxy - Sx*Sy) / sqrt((n*Sxx - Sx^2)(n*Syy - Sy^2)).
PairR pearson(const Column& x, const Column& y);

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// descending eigenvalue. vectors[i] is the i-th eigenvector.
struct Eigen {
    std::vector<double> values;
    Matrix vectors;
};
Eigen jacobi(Matrix a);

/// Leading k eigenpairs by power iteration with Hotelling deflation.
Eigen powerDeflation(Matrix a, std::size_t k, int iterations = 20000);

/// Correlation-matrix PCA built from the two oracles above. `data` is
/// states x queries. Loadings are flipped so the largest |entry| is positive.
struct Pca {
    Matrix z;          // z-scored data
    Matrix loadings;   // components x queries
    Matrix scores;     // components x states
    std::vector<double> ratios;
};
enum class Solver { Jacobi, Power };
Pca pca(const Matrix& data, std::size_t k, Solver solver = Solver::Jacobi);

/// round(100 * share / max share), half away from zero, computed in long double.
std::vector<int> quantize(const std::vector<double>& counts, const std::vector<double>& totals);

double median(std::vector<double> v);

}  // namespace oracle
