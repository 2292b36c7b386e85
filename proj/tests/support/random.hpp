#pragma once

#include <random>

#include "nflab/types.hpp"

namespace testing_support {

inline nflab::CMatrix random_matrix(std::mt19937_64& rng, nflab::Index n) {
  std::normal_distribution<double> g;
  nflab::CMatrix m(n, n);
  for (nflab::Index i = 0; i < n; ++i)
    for (nflab::Index j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline nflab::CMatrix random_symmetric(std::mt19937_64& rng, nflab::Index n) {
  nflab::CMatrix m = random_matrix(rng, n);
  return (m + m.adjoint()) / 2.0;
}

inline nflab::CVector random_state(std::mt19937_64& rng, nflab::Index n) {
  std::normal_distribution<double> g;
  nflab::CVector v(n);
  for (nflab::Index i = 0; i < n; ++i) v(i) = {g(rng), g(rng)};
  return v / v.norm();
}

}  // namespace testing_support
