#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mobnet/rng.hpp"

using namespace mobnet;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible values") {
  Stream a(7, 3), b(7, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Stream c(7, 4);
  Stream d(7, 3);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += c.next_u64() == d.next_u64();
  CHECK(same == 0);
}

TEST_CASE("child derivation does not disturb the parent") {
  Stream p(11, 0);
  Stream q(11, 0);
  (void)p.child(Primitive::Arrival, 2).uniform();
  CHECK(p.next_u64() == q.next_u64());
  CHECK(p.child(Primitive::Arrival, 1).id() != p.child(Primitive::Arrival, 2).id());
  CHECK(p.child(Primitive::Arrival, 1).id() != p.child(Primitive::Departure, 1).id());
}

TEST_CASE("uniform lies in the open unit interval and has the right mean") {
  Stream s(1, 1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("exponential and normal moments") {
  Stream s(2, 9);
  const int n = 200000;
  double e1 = 0, z1 = 0, z2 = 0;
  for (int i = 0; i < n; ++i) {
    e1 += s.exponential(2.0);
    const double z = s.normal();
    z1 += z;
    z2 += z * z;
  }
  CHECK(std::abs(e1 / n - 0.5) < 4.0 * 0.5 / std::sqrt(n));
  CHECK(std::abs(z1 / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(z2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("bounded integers are uniform") {
  Stream s(3, 3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = s.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  CHECK(chi2 < 22.46);  // 0.999 quantile of chi-square with 6 dof
  CHECK(s.below(1) == 0);
}
