#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <vector>

namespace spar {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using SparseMatrix = Eigen::SparseMatrix<T>;
template <class T>
using SparseVector = Eigen::SparseVector<T>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;

// Sorted, duplicate-free column indices.
using IndexSet = std::vector<Index>;

}  // namespace spar
