#ifndef UDISC_TEST_FIXTURES_HPP
#define UDISC_TEST_FIXTURES_HPP

#include <cmath>

#include "udisc/ensemble.hpp"
#include "udisc/symmetry.hpp"

namespace fixture {

using CMat = udisc::CMatrix<double>;
using CVec = udisc::CVector<double>;
using RVec = udisc::RVector<double>;

/// Three real states in R^3: (1,1,1)/sqrt3, (1,1,0)/sqrt2, (0,1,1)/sqrt2.
inline CMat three_states() {
  const double a = 1 / std::sqrt(3.0), b = 1 / std::sqrt(2.0);
  CMat phi(3, 3);
  phi << a, b, 0, a, b, b, a, 0, b;
  return phi;
}

inline udisc::StateEnsemble<double> three_state_ensemble() { return udisc::make_ensemble<double>(three_states()); }

/// Four diagonal sign matrices on C^4.
inline udisc::UnitaryGroup<double> sign_group_4() {
  udisc::UnitaryGroup<double> g;
  const double signs[4][4] = {{1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
  for (const auto &s : signs) {
    RVec d(4);
    d << s[0], s[1], s[2], s[3];
    g.elements.push_back(d.cast<std::complex<double>>().asDiagonal());
  }
  return g;
}

inline CVec sign_group_generator() {
  CVec phi(4);
  phi << 2, 2, 1, 3;
  return phi / (3 * std::sqrt(2.0));
}

inline udisc::SymmetrySpec<double> sign_group_spec() {
  return udisc::make_symmetry_spec<double>(sign_group_4(), {sign_group_generator()});
}

inline udisc::StateEnsemble<double> orthonormal(Eigen::Index m) {
  return udisc::make_ensemble<double>(CMat::Identity(m, m));
}

} // namespace fixture

#endif // UDISC_TEST_FIXTURES_HPP
