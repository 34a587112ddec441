// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Paillier with g = N + 1 over GMP.

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

#include "fespam/common/bytes.hpp"
#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"

namespace fespam::he {

inline constexpr unsigned kRealKeyBits = 2048;
inline constexpr unsigned kTestKeyBits = 256;

inline mpz_class from_bytes(std::span<const std::uint8_t> be) {
  mpz_class z;
  if (!be.empty()) mpz_import(z.get_mpz_t(), be.size(), 1, 1, 1, 0, be.data());
  return z;
}

inline Bytes to_bytes(const mpz_class& z) {
  require(z >= 0, Errc::invalid_argument, "cannot encode a negative big integer");
  std::size_t len = (mpz_sizeinbase(z.get_mpz_t(), 2) + 7) / 8;
  Bytes out(len);
  if (z != 0) mpz_export(out.data(), &len, 1, 1, 1, 0, z.get_mpz_t());
  else out.clear();
  return out;
}

inline mpz_class random_bits(RandomSource& rs, unsigned bits) {
  auto bytes = rs.bytes((bits + 7) / 8);
  mpz_class z = from_bytes(bytes);
  mpz_fdiv_r_2exp(z.get_mpz_t(), z.get_mpz_t(), bits);
  return z;
}

// Uniform in [1, n) with gcd(r, n) = 1.
inline mpz_class random_unit(RandomSource& rs, const mpz_class& n) {
  auto bits = static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
  for (;;) {
    mpz_class r = random_bits(rs, bits);
    if (r == 0 || r >= n) continue;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t());
    if (g == 1) return r;
  }
}

struct PaillierPublicKey {
  mpz_class n;
  mpz_class n2;
  unsigned bits = 0;

  friend bool operator==(const PaillierPublicKey& a, const PaillierPublicKey& b) { return a.n == b.n; }
};

struct PaillierPrivateKey {
  mpz_class lambda;
  mpz_class mu;
};

struct PaillierKeys {
  PaillierPublicKey pub;
  PaillierPrivateKey priv;
};

inline PaillierPublicKey make_public(mpz_class n) {
  PaillierPublicKey pk;
  pk.n = std::move(n);
  pk.n2 = pk.n * pk.n;
  pk.bits = static_cast<unsigned>(mpz_sizeinbase(pk.n.get_mpz_t(), 2));
  return pk;
}

inline PaillierKeys paillier_keygen(unsigned bits, RandomSource& rs) {
  require(bits >= 64 && bits % 2 == 0, Errc::invalid_argument, "key size must be an even number of bits >= 64");
  const unsigned half = bits / 2;
  for (;;) {
    auto prime = [&] {
      mpz_class c = random_bits(rs, half);
      mpz_setbit(c.get_mpz_t(), half - 1);
      mpz_setbit(c.get_mpz_t(), half - 2);  // keeps p*q at full length
      mpz_class p;
      mpz_nextprime(p.get_mpz_t(), c.get_mpz_t());
      return p;
    };
    mpz_class p = prime(), q = prime();
    if (p == q) continue;
    mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;
    mpz_class pm = p - 1, qm = q - 1, lambda, mu;
    mpz_lcm(lambda.get_mpz_t(), pm.get_mpz_t(), qm.get_mpz_t());
    if (mpz_invert(mu.get_mpz_t(), lambda.get_mpz_t(), n.get_mpz_t()) == 0) continue;
    return {make_public(n), {lambda, mu}};
  }
}

inline mpz_class reduce(const PaillierPublicKey& pk, const mpz_class& m) {
  mpz_class r;
  mpz_mod(r.get_mpz_t(), m.get_mpz_t(), pk.n.get_mpz_t());
  return r;
}

// Enc(m) = (1 + mN) r^N mod N^2; m is taken mod N.
inline mpz_class paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m, RandomSource& rs) {
  mpz_class r = random_unit(rs, pk.n), rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), pk.n2.get_mpz_t());
  mpz_class c = (1 + reduce(pk, m) * pk.n) % pk.n2;
  return c * rn % pk.n2;
}

inline void check_ciphertext(const PaillierPublicKey& pk, const mpz_class& c) {
  require(c > 0 && c < pk.n2, Errc::invalid_ciphertext, "ciphertext outside Z_{N^2}");
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), c.get_mpz_t(), pk.n.get_mpz_t());
  require(g == 1, Errc::invalid_ciphertext, "ciphertext is not a unit mod N^2");
}

// Returns m in [0, N).
inline mpz_class paillier_decrypt(const PaillierKeys& k, const mpz_class& c) {
  check_ciphertext(k.pub, c);
  mpz_class u;
  mpz_powm(u.get_mpz_t(), c.get_mpz_t(), k.priv.lambda.get_mpz_t(), k.pub.n2.get_mpz_t());
  mpz_class l = (u - 1) / k.pub.n;
  return l * k.priv.mu % k.pub.n;
}

inline mpz_class paillier_add(const PaillierPublicKey& pk, const mpz_class& a, const mpz_class& b) { return a * b % pk.n2; }

// k (.) Enc(a) = Enc(k a); negative k through its residue mod N.
inline mpz_class paillier_scale(const PaillierPublicKey& pk, const mpz_class& c, const mpz_class& k) {
  mpz_class e = reduce(pk, k), out;
  mpz_powm(out.get_mpz_t(), c.get_mpz_t(), e.get_mpz_t(), pk.n2.get_mpz_t());
  return out;
}

// Residue in [0, N) read as a signed value in (-N/2, N/2].
inline mpz_class to_signed(const PaillierPublicKey& pk, const mpz_class& m) {
  mpz_class half = pk.n / 2;
  return m > half ? m - pk.n : m;
}

inline Bytes serialize_public(const PaillierPublicKey& pk) {
  ByteWriter w;
  w.raw("QHP1");
  w.u32(1);
  w.u32(pk.bits);
  w.blob(to_bytes(pk.n));
  return std::move(w).take();
}

inline PaillierPublicKey parse_public(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QHP1");
  require(r.u32() == 1, Errc::parse_error, "unsupported version");
  auto bits = r.u32();
  require(bits >= 64 && bits <= 8192, Errc::parse_error, "key size out of range");
  auto pk = make_public(from_bytes(r.blob(1024)));
  require(pk.bits == bits && mpz_odd_p(pk.n.get_mpz_t()), Errc::parse_error, "modulus does not match its size");
  r.expect_end();
  return pk;
}

inline Bytes serialize_keys(const PaillierKeys& k) {
  ByteWriter w;
  w.raw("QHS1");
  w.u32(1);
  w.blob(serialize_public(k.pub));
  w.blob(to_bytes(k.priv.lambda));
  w.blob(to_bytes(k.priv.mu));
  return std::move(w).take();
}

inline PaillierKeys parse_keys(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QHS1");
  require(r.u32() == 1, Errc::parse_error, "unsupported version");
  PaillierKeys k;
  k.pub = parse_public(r.blob(2048));
  k.priv.lambda = from_bytes(r.blob(2048));
  k.priv.mu = from_bytes(r.blob(2048));
  r.expect_end();
  // mu must invert lambda mod N or every decryption is garbage.
  mpz_class check = k.priv.lambda * k.priv.mu % k.pub.n;
  require(k.priv.lambda > 0 && check == 1, Errc::parse_error, "private key is inconsistent");
  return k;
}

}  // namespace fespam::he
