#pragma once

#include <Eigen/Dense>

namespace ksnh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// sigma_min / sigma_max; 0 for empty or zero matrices.
double rcond(const Mat& a);

// Numerical rank with threshold rel * sigma_max (rel defaults to N*eps).
int numerical_rank(const Mat& a, double rel = -1.0);

// Orthonormal basis of the null space of a (columns), threshold as numerical_rank.
Mat null_space(const Mat& a, double rel = -1.0);

// Orthonormal basis of the column space of a.
Mat orth(const Mat& a, double rel = -1.0);

// Minimum-norm least-squares solution of a x = b.
Vec min_norm_solve(const Mat& a, const Vec& b);

double max_abs(const Mat& a);

}  // namespace ksnh
