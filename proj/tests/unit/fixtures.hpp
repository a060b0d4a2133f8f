#pragma once

#include "simlab/estimators.hpp"
#include "simlab/random.hpp"

namespace simlab::testing {

// Class 1: (0,0), (2,1); class 2: (3,0), (5,1).
inline LabeledDataset ds4() {
  Matrix x(4, 2);
  x << 0, 0, 2, 1, 3, 0, 5, 1;
  return LabeledDataset(x, {1, 1, 2, 2});
}

inline Matrix random_matrix(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// n1 + n2 rows of standard normals, class 2 shifted by `shift` in the first k features.
inline LabeledDataset shifted_data(Index n1, Index n2, Index p, Index k, double shift, Rng& rng) {
  Matrix x = random_matrix(n1 + n2, p, rng);
  std::vector<int> y(static_cast<std::size_t>(n1 + n2), 1);
  for (Index i = n1; i < n1 + n2; ++i) {
    y[static_cast<std::size_t>(i)] = 2;
    for (Index j = 0; j < k; ++j) x(i, j) += shift;
  }
  return LabeledDataset(x, y);
}

}  // namespace simlab::testing
