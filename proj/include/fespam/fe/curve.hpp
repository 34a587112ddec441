// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Thin value types over blst for BLS12-381: scalars, G1, G2 and the
// pairing target group GT.

#include <blst.h>
#include <blst_aux.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

#include "fespam/common/bytes.hpp"
#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"

namespace fespam::fe {

inline constexpr std::string_view kBls12381 = "bls12-381";

class Fr {
 public:
  Fr() = default;

  static Fr from_u64(std::uint64_t v) {
    std::uint64_t limbs[4] = {v, 0, 0, 0};
    Fr r;
    blst_fr_from_uint64(&r.v_, limbs);
    return r;
  }
  static Fr from_i64(std::int64_t v) {
    Fr r = from_u64(v < 0 ? 0 - static_cast<std::uint64_t>(v) : static_cast<std::uint64_t>(v));
    return v < 0 ? -r : r;
  }
  // Uniform up to a 2^-256 bias: 64 random bytes reduced mod r.
  static Fr random(RandomSource& rs) {
    std::uint8_t buf[64];
    rs.fill(buf);
    blst_scalar s;
    blst_scalar_from_be_bytes(&s, buf, sizeof buf);
    Fr r;
    blst_fr_from_scalar(&r.v_, &s);
    return r;
  }
  static Fr from_bytes(std::span<const std::uint8_t> be32) {
    require(be32.size() == 32, Errc::parse_error, "scalar must be 32 bytes");
    blst_scalar s;
    blst_scalar_from_bendian(&s, be32.data());
    require(blst_scalar_fr_check(&s), Errc::parse_error, "scalar not reduced");
    Fr r;
    blst_fr_from_scalar(&r.v_, &s);
    return r;
  }

  std::array<std::uint8_t, 32> to_bytes() const {
    blst_scalar s;
    blst_scalar_from_fr(&s, &v_);
    std::array<std::uint8_t, 32> out;
    blst_bendian_from_scalar(out.data(), &s);
    return out;
  }
  std::array<std::uint8_t, 32> le_bytes() const {
    blst_scalar s;
    blst_scalar_from_fr(&s, &v_);
    std::array<std::uint8_t, 32> out;
    blst_lendian_from_scalar(out.data(), &s);
    return out;
  }

  Fr operator+(const Fr& o) const {
    Fr r;
    blst_fr_add(&r.v_, &v_, &o.v_);
    return r;
  }
  Fr operator-(const Fr& o) const {
    Fr r;
    blst_fr_sub(&r.v_, &v_, &o.v_);
    return r;
  }
  Fr operator*(const Fr& o) const {
    Fr r;
    blst_fr_mul(&r.v_, &v_, &o.v_);
    return r;
  }
  Fr operator-() const {
    Fr r;
    blst_fr_cneg(&r.v_, &v_, true);
    return r;
  }
  Fr& operator+=(const Fr& o) { return *this = *this + o; }
  Fr inverse() const {
    require(!is_zero(), Errc::invalid_argument, "zero has no inverse");
    Fr r;
    blst_fr_eucl_inverse(&r.v_, &v_);
    return r;
  }
  bool is_zero() const {
    static const blst_fr zero{};
    return std::memcmp(&v_, &zero, sizeof v_) == 0;
  }
  friend bool operator==(const Fr& a, const Fr& b) { return std::memcmp(&a.v_, &b.v_, sizeof a.v_) == 0; }

 private:
  blst_fr v_{};
};

namespace detail {

struct P1Ops {
  using Proj = blst_p1;
  using Affine = blst_p1_affine;
  static constexpr std::size_t kCompressed = 48;
  static const Proj* generator() { return blst_p1_generator(); }
  static void add(Proj* o, const Proj* a, const Proj* b) { blst_p1_add_or_double(o, a, b); }
  static void add_affine(Proj* o, const Proj* a, const Affine* b) { blst_p1_add_or_double_affine(o, a, b); }
  static void mult(Proj* o, const Proj* p, const std::uint8_t* s, std::size_t bits) { blst_p1_mult(o, p, s, bits); }
  static void cneg(Proj* p, bool c) { blst_p1_cneg(p, c); }
  static void to_affine(Affine* o, const Proj* p) { blst_p1_to_affine(o, p); }
  static void from_affine(Proj* o, const Affine* a) { blst_p1_from_affine(o, a); }
  static bool equal(const Proj* a, const Proj* b) { return blst_p1_is_equal(a, b); }
  static bool is_inf(const Proj* a) { return blst_p1_is_inf(a); }
  static void compress(std::uint8_t* out, const Affine* a) { blst_p1_affine_compress(out, a); }
  static bool uncompress(Affine* o, const std::uint8_t* in) {
    return blst_p1_uncompress(o, in) == BLST_SUCCESS && blst_p1_affine_in_g1(o);
  }
};

struct P2Ops {
  using Proj = blst_p2;
  using Affine = blst_p2_affine;
  static constexpr std::size_t kCompressed = 96;
  static const Proj* generator() { return blst_p2_generator(); }
  static void add(Proj* o, const Proj* a, const Proj* b) { blst_p2_add_or_double(o, a, b); }
  static void add_affine(Proj* o, const Proj* a, const Affine* b) { blst_p2_add_or_double_affine(o, a, b); }
  static void mult(Proj* o, const Proj* p, const std::uint8_t* s, std::size_t bits) { blst_p2_mult(o, p, s, bits); }
  static void cneg(Proj* p, bool c) { blst_p2_cneg(p, c); }
  static void to_affine(Affine* o, const Proj* p) { blst_p2_to_affine(o, p); }
  static void from_affine(Proj* o, const Affine* a) { blst_p2_from_affine(o, a); }
  static bool equal(const Proj* a, const Proj* b) { return blst_p2_is_equal(a, b); }
  static bool is_inf(const Proj* a) { return blst_p2_is_inf(a); }
  static void compress(std::uint8_t* out, const Affine* a) { blst_p2_affine_compress(out, a); }
  static bool uncompress(Affine* o, const std::uint8_t* in) {
    return blst_p2_uncompress(o, in) == BLST_SUCCESS && blst_p2_affine_in_g2(o);
  }
};

}  // namespace detail

// Projective point; the all-zero value is the point at infinity.
template <typename Ops>
class Point {
 public:
  using Affine = typename Ops::Affine;
  static constexpr std::size_t kCompressedSize = Ops::kCompressed;

  Point() = default;
  explicit Point(const Affine& a) { Ops::from_affine(&p_, &a); }

  static Point generator() {
    Point r;
    r.p_ = *Ops::generator();
    return r;
  }
  static Point identity() { return Point{}; }

  Point operator+(const Point& o) const {
    Point r;
    Ops::add(&r.p_, &p_, &o.p_);
    return r;
  }
  Point& operator+=(const Point& o) {
    Ops::add(&p_, &p_, &o.p_);
    return *this;
  }
  Point& add_affine(const Affine& a) {
    Ops::add_affine(&p_, &p_, &a);
    return *this;
  }
  Point operator-() const {
    Point r = *this;
    Ops::cneg(&r.p_, true);
    return r;
  }
  Point operator*(const Fr& s) const {
    auto le = s.le_bytes();
    Point r;
    Ops::mult(&r.p_, &p_, le.data(), 255);
    return r;
  }
  // Cheap path for the small integers that show up in plaintexts.
  Point times(std::uint64_t k) const {
    if (k == 0 || is_identity()) return {};
    std::uint8_t le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(k >> (8 * i));
    Point r;
    Ops::mult(&r.p_, &p_, le, static_cast<std::size_t>(std::bit_width(k)));
    return r;
  }

  bool is_identity() const { return Ops::is_inf(&p_); }
  Affine affine() const {
    Affine a;
    Ops::to_affine(&a, &p_);
    return a;
  }

  std::array<std::uint8_t, Ops::kCompressed> compress() const {
    std::array<std::uint8_t, Ops::kCompressed> out;
    auto a = affine();
    Ops::compress(out.data(), &a);
    return out;
  }
  static Affine decompress_affine(std::span<const std::uint8_t> in) {
    require(in.size() == Ops::kCompressed, Errc::invalid_group_element, "compressed point has the wrong length");
    Affine a;
    require(Ops::uncompress(&a, in.data()), Errc::invalid_group_element, "point is not in the prime-order subgroup");
    return a;
  }
  static Point decompress(std::span<const std::uint8_t> in) { return Point(decompress_affine(in)); }

  friend bool operator==(const Point& a, const Point& b) { return Ops::equal(&a.p_, &b.p_); }

  const typename Ops::Proj* raw() const { return &p_; }

 private:
  typename Ops::Proj p_{};
};

using G1 = Point<detail::P1Ops>;
using G2 = Point<detail::P2Ops>;

// Element of the order-r subgroup of Fp12*, written multiplicatively.
class Gt {
 public:
  static constexpr std::size_t kEncodedSize = 48 * 12;
  static constexpr std::string_view kCurveId = kBls12381;

  Gt() : v_(*blst_fp12_one()) {}
  explicit Gt(const blst_fp12& v) : v_(v) {}

  static Gt identity() { return Gt{}; }
  static const Gt& generator();

  Gt operator*(const Gt& o) const {
    Gt r;
    blst_fp12_mul(&r.v_, &v_, &o.v_);
    return r;
  }
  Gt& operator*=(const Gt& o) {
    blst_fp12_mul(&v_, &v_, &o.v_);
    return *this;
  }
  // Unitary, so the inverse is the conjugate.
  Gt inverse() const {
    Gt r = *this;
    blst_fp12_conjugate(&r.v_);
    return r;
  }
  Gt sqr() const {
    Gt r;
    blst_fp12_cyclotomic_sqr(&r.v_, &v_);
    return r;
  }
  Gt pow(std::uint64_t e) const {
    Gt acc;
    for (int bit = std::bit_width(e) - 1; bit >= 0; --bit) {
      acc = acc.sqr();
      if ((e >> bit) & 1) acc *= *this;
    }
    return acc;
  }
  Gt pow(std::int64_t e) const {
    if (e >= 0) return pow(static_cast<std::uint64_t>(e));
    return pow(0 - static_cast<std::uint64_t>(e)).inverse();
  }

  // Limbs are fully reduced Montgomery residues, so equal elements give
  // equal fingerprints.
  std::uint64_t fingerprint() const {
    const auto* limbs = reinterpret_cast<const std::uint64_t*>(&v_);
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::size_t i = 0; i < sizeof v_ / 8; ++i) {
      h ^= limbs[i];
      h *= 0x9e3779b97f4a7c15ULL;
      h ^= h >> 29;
    }
    return h;
  }

  Bytes encode() const {
    Bytes out(kEncodedSize);
    blst_bendian_from_fp12(out.data(), &v_);
    return out;
  }
  static Gt decode(std::span<const std::uint8_t> in) {
    require(in.size() == kEncodedSize, Errc::invalid_group_element, "GT encoding has the wrong length");
    // Inverse of blst_bendian_from_fp12: fp6[j].fp2[i].fp[k], i outermost.
    blst_fp12 v;
    std::size_t off = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          blst_fp_from_bendian(&v.fp6[j].fp2[i].fp[k], in.data() + off);
          off += 48;
        }
    Gt g(v);
    // Catches non-canonical field encodings as well as non-members.
    require(g.encode() == Bytes(in.begin(), in.end()) && blst_fp12_in_group(&v), Errc::invalid_group_element,
            "element is not in the target group");
    return g;
  }

  friend bool operator==(const Gt& a, const Gt& b) { return blst_fp12_is_equal(&a.v_, &b.v_); }

  const blst_fp12& raw() const { return v_; }

 private:
  blst_fp12 v_;
};

// prod_i e(p_i, q_i) with a single final exponentiation. Pairs with an
// identity component contribute 1 and are skipped.
inline Gt multi_pairing(std::span<const G1::Affine> ps, std::span<const G2::Affine> qs) {
  require(ps.size() == qs.size(), Errc::invalid_argument, "pairing inputs differ in length");
  std::vector<const blst_p1_affine*> pp;
  std::vector<const blst_p2_affine*> qq;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (blst_p1_affine_is_inf(&ps[i]) || blst_p2_affine_is_inf(&qs[i])) continue;
    pp.push_back(&ps[i]);
    qq.push_back(&qs[i]);
  }
  if (pp.empty()) return Gt::identity();
  blst_fp12 ml, out;
  blst_miller_loop_n(&ml, qq.data(), pp.data(), pp.size());
  blst_final_exp(&out, &ml);
  return Gt(out);
}

inline Gt pairing(const G1& p, const G2& q) {
  G1::Affine a = p.affine();
  G2::Affine b = q.affine();
  return multi_pairing(std::span(&a, 1), std::span(&b, 1));
}

inline const Gt& Gt::generator() {
  static const Gt g = pairing(G1::generator(), G2::generator());
  return g;
}

// Additive group Z_p with p = 2^61 - 1, written multiplicatively so it
// plugs into the same discrete-log code as GT. Only the oracle backend
// uses it; it offers no hardness at all.
class OracleElem {
 public:
  static constexpr std::uint64_t kModulus = (std::uint64_t{1} << 61) - 1;
  static constexpr std::uint64_t kGenerator = 0x1d5a3f0c2b9e8477ULL % kModulus;
  static constexpr std::size_t kEncodedSize = 8;
  static constexpr std::string_view kCurveId = "oracle-z61";

  OracleElem() = default;
  static OracleElem identity() { return {}; }
  static const OracleElem& generator() {
    static const OracleElem g = from_value(kGenerator);
    return g;
  }
  static OracleElem from_value(std::uint64_t v) {
    require(v < kModulus, Errc::invalid_group_element, "value outside Z_p");
    OracleElem e;
    e.v_ = v;
    return e;
  }

  OracleElem operator*(const OracleElem& o) const { return from_raw(add(v_, o.v_)); }
  OracleElem& operator*=(const OracleElem& o) {
    v_ = add(v_, o.v_);
    return *this;
  }
  OracleElem inverse() const { return from_raw(v_ == 0 ? 0 : kModulus - v_); }
  OracleElem pow(std::uint64_t e) const { return from_raw(mulmod(v_, e % kModulus)); }
  OracleElem pow(std::int64_t e) const {
    if (e >= 0) return pow(static_cast<std::uint64_t>(e));
    return pow(0 - static_cast<std::uint64_t>(e)).inverse();
  }
  std::uint64_t fingerprint() const { return v_ * 0x9e3779b97f4a7c15ULL; }
  std::uint64_t value() const { return v_; }

  Bytes encode() const {
    ByteWriter w;
    w.u64(v_);
    return std::move(w).take();
  }
  static OracleElem decode(std::span<const std::uint8_t> in) {
    require(in.size() == kEncodedSize, Errc::invalid_group_element, "oracle element must be 8 bytes");
    ByteReader r(in);
    return from_value(r.u64());
  }

  friend bool operator==(const OracleElem&, const OracleElem&) = default;

 private:
  static OracleElem from_raw(std::uint64_t v) {
    OracleElem e;
    e.v_ = v;
    return e;
  }
  static std::uint64_t add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a + b;
    return s >= kModulus ? s - kModulus : s;
  }
  static std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % kModulus);
  }
  std::uint64_t v_ = 0;
};

// What the discrete-log machinery needs from a group.
template <typename G>
concept DlogGroup = requires(const G a, const G b, std::uint64_t u, std::int64_t s, std::span<const std::uint8_t> bytes) {
  { G::identity() } -> std::same_as<G>;
  { G::generator() } -> std::convertible_to<const G&>;
  { a * b } -> std::same_as<G>;
  { a.inverse() } -> std::same_as<G>;
  { a.pow(u) } -> std::same_as<G>;
  { a.pow(s) } -> std::same_as<G>;
  { a.fingerprint() } -> std::same_as<std::uint64_t>;
  { a.encode() } -> std::same_as<Bytes>;
  { G::decode(bytes) } -> std::same_as<G>;
  { a == b } -> std::convertible_to<bool>;
  { G::kCurveId } -> std::convertible_to<std::string_view>;
};

static_assert(DlogGroup<Gt>);
static_assert(DlogGroup<OracleElem>);

}  // namespace fespam::fe
