#include "ksnh/linalg.hpp"

#include <algorithm>
#include <limits>

namespace ksnh {

namespace {

double threshold(const Eigen::VectorXd& sv, Eigen::Index rows, Eigen::Index cols, double rel) {
    if (sv.size() == 0) return 0.0;
    if (rel < 0.0)
        rel = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
    return rel * sv(0);
}

}  // namespace

double rcond(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0) return 0.0;
    return s(s.size() - 1) / s(0);
}

int numerical_rank(const Mat& a, double rel) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    const double tol = threshold(s, a.rows(), a.cols(), rel);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol) ++r;
    return r;
}

Mat null_space(const Mat& a, double rel) {
    const Eigen::Index n = a.cols();
    if (a.rows() == 0) return Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double tol = threshold(s, a.rows(), a.cols(), rel);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol) ++r;
    return svd.matrixV().rightCols(n - r);
}

Mat orth(const Mat& a, double rel) {
    if (a.cols() == 0) return Mat(a.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    const double tol = threshold(s, a.rows(), a.cols(), rel);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol) ++r;
    return svd.matrixU().leftCols(r);
}

Vec min_norm_solve(const Mat& a, const Vec& b) {
    if (a.cols() == 0) return Vec(0);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
    return cod.solve(b);
}

double max_abs(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace ksnh
