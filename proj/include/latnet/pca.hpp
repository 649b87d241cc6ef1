#pragma once

#include "latnet/matrix.hpp"

namespace latnet {

// Projects the rows of `features` onto the top-k principal directions of the
// column-centered data. The eigenproblem is posed on the smaller of the d x d
// covariance and the n x n Gram matrix. Component signs are fixed by making
// the largest-magnitude loading positive. Throws input_error when k exceeds
// the numerical rank of the centered data.
Matrix pca_reduce(const Matrix& features, int k);

}  // namespace latnet
