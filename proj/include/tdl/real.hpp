#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace tdl {

// Map computations run in binary128. Fixed points near the saddle sit at
// x ~ exp(-pi*n), where F_x carries a factor x^(nu-1); double rounding would
// swamp the residual tolerances long before n = 20.
using real = boost::multiprecision::float128;

using VecR = Eigen::Matrix<real, Eigen::Dynamic, 1>;
using MatR = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;
using Vec3 = Eigen::Matrix<real, 3, 1>;
using Mat3 = Eigen::Matrix<real, 3, 3>;

inline const real kPi = boost::math::constants::pi<real>();
inline const real kTwoPi = 2 * boost::math::constants::pi<real>();

inline double to_double(const real& v) { return static_cast<double>(v); }

template <class T>
struct Cx {
  T re{0};
  T im{0};

  Cx() = default;
  Cx(T r, T i = T(0)) : re(r), im(i) {}

  friend Cx operator+(const Cx& a, const Cx& b) { return {a.re + b.re, a.im + b.im}; }
  friend Cx operator-(const Cx& a, const Cx& b) { return {a.re - b.re, a.im - b.im}; }
  friend Cx operator*(const Cx& a, const Cx& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend Cx operator*(const T& s, const Cx& a) { return {s * a.re, s * a.im}; }
  friend Cx operator/(const Cx& a, const Cx& b) {
    T d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
  }
  Cx conj() const { return {re, -im}; }
};

template <class T>
T abs(const Cx<T>& z) {
  using std::hypot;
  return hypot(z.re, z.im);
}

template <class T>
T arg(const Cx<T>& z) {
  using std::atan2;
  return atan2(z.im, z.re);
}

using CxR = Cx<real>;

}  // namespace tdl
