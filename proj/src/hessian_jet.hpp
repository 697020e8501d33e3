#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>

namespace windplan {

/// Second-order forward-mode scalar over N seeds: value, gradient and the
/// packed upper triangle of the Hessian.
template <int N>
struct HessianJet
{
  static constexpr int kPacked = N * (N + 1) / 2;

  double v = 0.0;
  std::array<double, N> g{};
  std::array<double, kPacked> h{};

  HessianJet() = default;
  HessianJet(double value) : v(value) {}

  static HessianJet variable(double value, int index)
  {
    HessianJet r(value);
    r.g[std::size_t(index)] = 1.0;
    return r;
  }

  static constexpr int packed_index(int i, int j) { return i * N - i * (i - 1) / 2 + (j - i); }

  double hessian(int i, int j) const { return i <= j ? h[std::size_t(packed_index(i, j))] : h[std::size_t(packed_index(j, i))]; }

  /// Composition with a scalar function of known value and first two derivatives.
  HessianJet apply(double f, double df, double d2f) const
  {
    HessianJet r(f);
    for (int i = 0; i < N; ++i)
      r.g[std::size_t(i)] = df * g[std::size_t(i)];
    int k = 0;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j, ++k)
        r.h[std::size_t(k)] = df * h[std::size_t(k)] + d2f * g[std::size_t(i)] * g[std::size_t(j)];
    return r;
  }

  HessianJet& operator+=(const HessianJet& b)
  {
    v += b.v;
    for (int i = 0; i < N; ++i)
      g[std::size_t(i)] += b.g[std::size_t(i)];
    for (int k = 0; k < kPacked; ++k)
      h[std::size_t(k)] += b.h[std::size_t(k)];
    return *this;
  }
  HessianJet& operator-=(const HessianJet& b)
  {
    v -= b.v;
    for (int i = 0; i < N; ++i)
      g[std::size_t(i)] -= b.g[std::size_t(i)];
    for (int k = 0; k < kPacked; ++k)
      h[std::size_t(k)] -= b.h[std::size_t(k)];
    return *this;
  }
  HessianJet& operator*=(double s)
  {
    v *= s;
    for (auto& x : g)
      x *= s;
    for (auto& x : h)
      x *= s;
    return *this;
  }
  HessianJet& operator*=(const HessianJet& b) { return *this = *this * b; }
  HessianJet& operator+=(double s)
  {
    v += s;
    return *this;
  }
  HessianJet& operator-=(double s)
  {
    v -= s;
    return *this;
  }
  HessianJet& operator/=(double s) { return *this *= 1.0 / s; }

  HessianJet operator-() const
  {
    HessianJet r = *this;
    r *= -1.0;
    return r;
  }

  friend HessianJet operator*(const HessianJet& a, const HessianJet& b)
  {
    HessianJet r(a.v * b.v);
    for (int i = 0; i < N; ++i)
      r.g[std::size_t(i)] = a.v * b.g[std::size_t(i)] + b.v * a.g[std::size_t(i)];
    int k = 0;
    for (int i = 0; i < N; ++i) {
      const double ai = a.g[std::size_t(i)], bi = b.g[std::size_t(i)];
      for (int j = i; j < N; ++j, ++k)
        r.h[std::size_t(k)] = a.v * b.h[std::size_t(k)] + b.v * a.h[std::size_t(k)] + ai * b.g[std::size_t(j)] +
                              a.g[std::size_t(j)] * bi;
    }
    return r;
  }

  friend HessianJet operator+(HessianJet a, const HessianJet& b) { return a += b; }
  friend HessianJet operator-(HessianJet a, const HessianJet& b) { return a -= b; }
  friend HessianJet operator+(HessianJet a, double s) { return a += s; }
  friend HessianJet operator+(double s, HessianJet a) { return a += s; }
  friend HessianJet operator-(HessianJet a, double s) { return a -= s; }
  friend HessianJet operator-(double s, const HessianJet& a) { return -a + s; }
  friend HessianJet operator*(HessianJet a, double s) { return a *= s; }
  friend HessianJet operator*(double s, HessianJet a) { return a *= s; }
  friend HessianJet operator/(HessianJet a, double s) { return a /= s; }
  friend HessianJet operator/(const HessianJet& a, const HessianJet& b)
  {
    const double inv = 1.0 / b.v;
    return a * b.apply(inv, -inv * inv, 2.0 * inv * inv * inv);
  }

  friend bool operator<(const HessianJet& a, const HessianJet& b) { return a.v < b.v; }
  friend bool operator>(const HessianJet& a, const HessianJet& b) { return a.v > b.v; }

  friend HessianJet sin(const HessianJet& a)
  {
    const double s = std::sin(a.v);
    return a.apply(s, std::cos(a.v), -s);
  }
  friend HessianJet cos(const HessianJet& a)
  {
    const double c = std::cos(a.v);
    return a.apply(c, -std::sin(a.v), -c);
  }
  friend HessianJet sqrt(const HessianJet& a)
  {
    const double r = std::sqrt(a.v);
    return a.apply(r, 0.5 / r, -0.25 / (r * a.v));
  }
};

}  // namespace windplan

namespace Eigen {

template <int N>
struct NumTraits<windplan::HessianJet<N>> : NumTraits<double>
{
  using Real = windplan::HessianJet<N>;
  using NonInteger = windplan::HessianJet<N>;
  using Nested = windplan::HessianJet<N>;
  using Literal = windplan::HessianJet<N>;
  enum { IsComplex = 0, IsInteger = 0, IsSigned = 1, RequireInitialization = 1, ReadCost = 1, AddCost = 3, MulCost = 3 };
};

}  // namespace Eigen
