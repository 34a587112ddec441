// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Quadratic functional encryption (Dufour-Sans, Gay, Pointcheval) over
// BLS12-381, specialised to forms Q_j = P^T diag(D_j) P, plus an oracle
// backend with the same interface that computes f_j(x) in the clear.
//
// Pairing backend, for x~ = (1, x) of dimension n+1:
//   msk = (s, t) in Zr^(n+1) x Zr^(n+1),  mpk = (g1^s_i, g2^t_i)
//   ct  = (g1^gamma, a_i = g1^(V (x_i, gamma s_i)), b_i = g2^(W (x_i, -t_i)))
//         with W random in GL2 and V = W^-T, so <a_i, b_j> = x_i x_j - gamma s_i t_j
//   sk_j = g2^(sum_k D_jk (P_k.s)(P_k.t))
//   dec  = e(g1^gamma, sk_j) * prod_k e(P_k a, P_k b)^D_jk = gT^f_j(x)
// The projections P_k a are computed once per ciphertext and shared by
// all output keys.

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fespam/common/bytes.hpp"
#include "fespam/common/digest.hpp"
#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"
#include "fespam/fe/bound.hpp"
#include "fespam/fe/curve.hpp"
#include "fespam/fe/dlog.hpp"
#include "fespam/nn/quantize.hpp"
#include "fespam/text/feature_vector.hpp"

namespace fespam::fe {

enum class Backend : std::uint8_t { pairing = 1, oracle = 2 };

inline std::string to_string(Backend b) { return b == Backend::pairing ? "pairing" : "oracle"; }

inline Backend parse_backend(std::string_view s) {
  if (s == "pairing") return Backend::pairing;
  if (s == "oracle") return Backend::oracle;
  fail(Errc::invalid_argument, "unknown backend '" + std::string(s) + "'");
}

inline std::string_view curve_of(Backend b) { return b == Backend::pairing ? Gt::kCurveId : OracleElem::kCurveId; }

inline constexpr std::size_t kMaxDimension = std::size_t{1} << 20;
inline constexpr std::uint32_t kDefaultXMax = 100;

using SealKey = std::array<std::uint8_t, 32>;

struct SetupOptions {
  Backend backend = Backend::pairing;
  std::string curve = std::string(kBls12381);
  std::uint32_t x_max = kDefaultXMax;  // admissible per-entry input range [0, x_max]
};

struct PublicKey {
  Backend backend = Backend::pairing;
  std::uint32_t dim = 0;  // n + 1
  std::uint32_t x_max = kDefaultXMax;
  std::vector<G1> s;  // g1^s_i
  std::vector<G2> t;  // g2^t_i
  SealKey seal{};     // oracle only

  std::size_t n() const noexcept { return dim - 1; }
  Bytes serialize() const;
  static PublicKey parse(std::span<const std::uint8_t> data);
  Digest digest() const { return sha256(serialize()); }
};

struct MasterSecretKey {
  Backend backend = Backend::pairing;
  std::uint32_t dim = 0;
  std::uint32_t x_max = kDefaultXMax;
  Digest mpk_digest{};
  std::vector<Fr> s, t;
  SealKey seal{};

  Bytes serialize() const;
  static MasterSecretKey parse(std::span<const std::uint8_t> data);
};

struct MasterKeys {
  PublicKey mpk;
  MasterSecretKey msk;
};

struct Ciphertext {
  Backend backend = Backend::pairing;
  std::uint32_t dim = 0;
  Digest mpk_digest{};
  // pairing
  G1::Affine gamma{};
  std::vector<std::array<G1::Affine, 2>> a;
  std::vector<std::array<G2::Affine, 2>> b;
  // oracle: x~ sealed under the key's stream; deliberately no accessor.
  std::array<std::uint8_t, 16> nonce{};
  Bytes sealed;

  Bytes serialize() const;
  static Ciphertext parse(std::span<const std::uint8_t> data);
  friend bool operator==(const Ciphertext& x, const Ciphertext& y) { return x.serialize() == y.serialize(); }
};

struct FunctionalKey {
  Backend backend = Backend::pairing;
  std::uint32_t index = 0;
  std::uint64_t bound = 0;
  Digest form_digest{};
  Digest mpk_digest{};
  std::vector<std::int32_t> diag;  // row `index` of W2_q
  G2 key;                          // pairing
  SealKey seal{};                  // oracle

  Bytes serialize() const;
  static FunctionalKey parse(std::span<const std::uint8_t> data);
  friend bool operator==(const FunctionalKey& x, const FunctionalKey& y) { return x.serialize() == y.serialize(); }
};

using GroupElement = std::variant<Gt, OracleElem>;

namespace detail {

inline void put_digest(ByteWriter& w, const Digest& d) { w.raw(d); }
inline Digest get_digest(ByteReader& r) {
  Digest d;
  auto s = r.raw(32);
  std::copy(s.begin(), s.end(), d.begin());
  return d;
}
inline Backend get_backend(ByteReader& r) {
  auto b = r.u8();
  require(b == 1 || b == 2, Errc::parse_error, "unknown backend id");
  return static_cast<Backend>(b);
}
inline void put_curve(ByteWriter& w, Backend b) {
  auto c = curve_of(b);
  w.blob(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(c.data()), c.size()));
}
inline void check_curve(ByteReader& r, Backend b) {
  auto c = r.blob(64);
  require(std::string_view(reinterpret_cast<const char*>(c.data()), c.size()) == curve_of(b), Errc::unsupported_curve,
          "unsupported curve id");
}
inline std::uint32_t get_dim(ByteReader& r) {
  auto d = r.u32();
  require(d >= 2 && d <= kMaxDimension + 1, Errc::parse_error, "dimension out of range");
  return d;
}
inline void check_version(ByteReader& r) { require(r.u32() == 1, Errc::parse_error, "unsupported format version"); }
template <std::size_t N>
std::array<std::uint8_t, N> get_fixed(ByteReader& r) {
  auto s = r.blob(N);
  require(s.size() == N, Errc::parse_error, "field has the wrong length");
  std::array<std::uint8_t, N> out;
  std::copy(s.begin(), s.end(), out.begin());
  return out;
}

// SHA-256 counter-mode stream for the oracle backend's seal.
inline void keystream_xor(const SealKey& key, std::span<const std::uint8_t> nonce, std::span<std::uint8_t> data) {
  for (std::size_t block = 0; block * 32 < data.size(); ++block) {
    ByteWriter ctr;
    ctr.u64(block);
    auto pad = Sha256{}.update("fespam-seal").update(key).update(nonce).update(ctr.bytes()).finish();
    for (std::size_t i = 0; i < 32 && block * 32 + i < data.size(); ++i) data[block * 32 + i] ^= pad[i];
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------- setup

inline MasterKeys setup(std::size_t n, const SetupOptions& opt = {}, std::optional<std::uint64_t> seed = std::nullopt) {
  require(n >= 1, Errc::invalid_argument, "dimension n must be >= 1");
  require(n <= kMaxDimension, Errc::invalid_argument, "dimension n is too large");
  require(opt.backend == Backend::oracle || opt.curve == kBls12381, Errc::unsupported_curve,
          "unsupported curve '" + opt.curve + "'");
  require(opt.x_max >= 1, Errc::invalid_argument, "x_max must be >= 1");
  RandomSource rs = seed ? RandomSource::seeded(*seed) : RandomSource::os();
  MasterKeys k;
  auto dim = static_cast<std::uint32_t>(n + 1);
  k.mpk.backend = k.msk.backend = opt.backend;
  k.mpk.dim = k.msk.dim = dim;
  k.mpk.x_max = k.msk.x_max = opt.x_max;
  if (opt.backend == Backend::pairing) {
    const G1 g1 = G1::generator();
    const G2 g2 = G2::generator();
    for (std::uint32_t i = 0; i < dim; ++i) {
      k.msk.s.push_back(Fr::random(rs));
      k.msk.t.push_back(Fr::random(rs));
      k.mpk.s.push_back(g1 * k.msk.s.back());
      k.mpk.t.push_back(g2 * k.msk.t.back());
    }
  } else {
    rs.fill(k.msk.seal);
    k.mpk.seal = k.msk.seal;
  }
  k.msk.mpk_digest = k.mpk.digest();
  return k;
}

// -------------------------------------------------------------- encrypt

inline Ciphertext encrypt(const PublicKey& mpk, std::span<const std::uint32_t> x, RandomSource& rs) {
  require(x.size() + 1 == mpk.dim, Errc::dimension_mismatch,
          "vector has " + std::to_string(x.size()) + " entries, key expects " + std::to_string(mpk.n()));
  for (std::size_t i = 0; i < x.size(); ++i)
    require(x[i] <= mpk.x_max, Errc::out_of_range_entry,
            "entry " + std::to_string(i) + " = " + std::to_string(x[i]) + " exceeds x_max " + std::to_string(mpk.x_max));
  Ciphertext ct;
  ct.backend = mpk.backend;
  ct.dim = mpk.dim;
  ct.mpk_digest = mpk.digest();
  auto xt = [&](std::size_t i) -> std::uint32_t { return i == 0 ? 1u : x[i - 1]; };

  if (mpk.backend == Backend::oracle) {
    rs.fill(ct.nonce);
    ByteWriter w;
    for (std::size_t i = 0; i < mpk.dim; ++i) w.u32(xt(i));
    ct.sealed = std::move(w).take();
    detail::keystream_xor(mpk.seal, ct.nonce, ct.sealed);
    return ct;
  }

  Fr gamma = Fr::random(rs);
  Fr w[2][2], det;
  do {
    for (auto& row : w)
      for (auto& v : row) v = Fr::random(rs);
    det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
  } while (det.is_zero());
  Fr inv = det.inverse();
  // V = W^-T
  Fr v[2][2] = {{w[1][1] * inv, -(w[1][0] * inv)}, {-(w[0][1] * inv), w[0][0] * inv}};

  const G1 g1 = G1::generator();
  const G2 g2 = G2::generator();
  ct.gamma = (g1 * gamma).affine();
  G1 base1[2] = {g1 * v[0][0], g1 * v[1][0]};
  Fr coef1[2] = {gamma * v[0][1], gamma * v[1][1]};
  G2 base2[2] = {g2 * w[0][0], g2 * w[1][0]};
  Fr coef2[2] = {-w[0][1], -w[1][1]};

  std::vector<blst_p1> pa(2 * mpk.dim);
  std::vector<blst_p2> pb(2 * mpk.dim);
  for (std::size_t i = 0; i < mpk.dim; ++i) {
    auto xi = xt(i);
    for (int r = 0; r < 2; ++r) {
      pa[2 * i + r] = *(base1[r].times(xi) + mpk.s[i] * coef1[r]).raw();
      pb[2 * i + r] = *(base2[r].times(xi) + mpk.t[i] * coef2[r]).raw();
    }
  }
  std::vector<const blst_p1*> ppa(pa.size());
  std::vector<const blst_p2*> ppb(pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ppa[i] = &pa[i];
    ppb[i] = &pb[i];
  }
  std::vector<blst_p1_affine> aa(pa.size());
  std::vector<blst_p2_affine> ab(pb.size());
  blst_p1s_to_affine(aa.data(), ppa.data(), pa.size());
  blst_p2s_to_affine(ab.data(), ppb.data(), pb.size());
  ct.a.resize(mpk.dim);
  ct.b.resize(mpk.dim);
  for (std::size_t i = 0; i < mpk.dim; ++i) {
    ct.a[i] = {aa[2 * i], aa[2 * i + 1]};
    ct.b[i] = {ab[2 * i], ab[2 * i + 1]};
  }
  return ct;
}

inline Ciphertext encrypt(const PublicKey& mpk, std::span<const std::uint32_t> x) {
  auto rs = RandomSource::os();
  return encrypt(mpk, x, rs);
}

inline Ciphertext encrypt(const PublicKey& mpk, const text::FeatureVector& x) { return encrypt(mpk, std::span(x.counts)); }

// ------------------------------------------------------------ key derivation

struct KeyOptions {
  std::uint64_t dlog_capacity = kDefaultDlogCapacity;
};

// One key per output j. The projections P_k.s and P_k.t are shared.
inline std::vector<FunctionalKey> derive_keys(const MasterSecretKey& msk, const nn::QuantizedEncryptedPart& qp,
                                              const KeyOptions& opt = {}) {
  require(qp.n() + 1 == msk.dim, Errc::dimension_mismatch,
          "model expects n = " + std::to_string(qp.n()) + ", keys were set up for n = " + std::to_string(msk.dim - 1));
  auto digest = nn::form_digest(qp);
  std::vector<FunctionalKey> keys(qp.outputs());
  for (std::size_t j = 0; j < qp.outputs(); ++j) {
    auto b = certified_bound(qp, j, msk.x_max);
    require(b <= opt.dlog_capacity, Errc::bound_overflow,
            "certified bound " + std::to_string(b) + " for output " + std::to_string(j) + " exceeds dlog capacity " +
                std::to_string(opt.dlog_capacity) + "; reduce the bit width or feature count");
    auto& k = keys[j];
    k.backend = msk.backend;
    k.index = static_cast<std::uint32_t>(j);
    k.bound = b;
    k.form_digest = digest;
    k.mpk_digest = msk.mpk_digest;
    auto row = qp.quadratic.row(j);
    k.diag.assign(row.begin(), row.end());
    k.seal = msk.seal;
  }
  if (msk.backend == Backend::pairing) {
    std::vector<Fr> ps(qp.hidden()), pt(qp.hidden());
    for (std::size_t k = 0; k < qp.hidden(); ++k) {
      auto row = qp.projection.row(k);
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] == 0) continue;
        Fr c = Fr::from_i64(row[i]);
        ps[k] += c * msk.s[i];
        pt[k] += c * msk.t[i];
      }
    }
    const G2 g2 = G2::generator();
    for (auto& key : keys) {
      Fr e;
      for (std::size_t k = 0; k < qp.hidden(); ++k)
        if (key.diag[k] != 0) e += Fr::from_i64(key.diag[k]) * ps[k] * pt[k];
      key.key = g2 * e;
    }
  }
  return keys;
}

inline FunctionalKey derive_key(const MasterSecretKey& msk, const nn::QuantizedEncryptedPart& qp, std::size_t j,
                                const KeyOptions& opt = {}) {
  require(j < qp.outputs(), Errc::invalid_argument, "output index out of range");
  auto single = qp;
  // Derive from a copy holding only row j so other rows cannot trip the
  // capacity check, then restore the full-form digest.
  single.quadratic = nn::IntMatrix(1, qp.hidden());
  for (std::size_t k = 0; k < qp.hidden(); ++k) single.quadratic(0, k) = qp.quadratic(j, k);
  auto key = derive_keys(msk, single, opt).front();
  key.index = static_cast<std::uint32_t>(j);
  key.form_digest = nn::form_digest(qp);
  return key;
}

// ------------------------------------------------------------ decryption

struct DlogTables {
  const DlogTable<Gt>* pairing = nullptr;
  const DlogTable<OracleElem>* oracle = nullptr;
};

struct DecryptReport {
  double evaluation_seconds = 0;  // projections, pairings, per-key combination
  double dlog_seconds = 0;
  std::uint64_t giant_steps = 0;
  std::uint64_t baby_steps = 0;
};

namespace detail {

inline void check_key(const nn::QuantizedEncryptedPart& form, const Digest& form_digest, const Ciphertext& ct,
                      const FunctionalKey& k) {
  require(k.backend == ct.backend, Errc::key_ciphertext_mismatch, "key and ciphertext use different backends");
  require(k.mpk_digest == ct.mpk_digest, Errc::key_ciphertext_mismatch, "key and ciphertext belong to different public keys");
  require(form.n() + 1 == ct.dim, Errc::key_ciphertext_mismatch, "ciphertext dimension does not match the model");
  require(k.form_digest == form_digest, Errc::digest_mismatch, "key was derived for a different model");
  require(k.index < form.outputs() && k.diag.size() == form.hidden(), Errc::key_ciphertext_mismatch,
          "key shape does not match the model");
  auto row = form.quadratic.row(k.index);
  require(std::equal(row.begin(), row.end(), k.diag.begin()), Errc::digest_mismatch, "key row differs from the model");
}

template <typename P, typename Affine>
P bucket_project(std::span<const std::int32_t> coeffs, const std::vector<Affine>& points, int qmax) {
  std::vector<P> pos(static_cast<std::size_t>(qmax) + 1), neg(static_cast<std::size_t>(qmax) + 1);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    auto c = coeffs[i];
    if (c > 0) pos[static_cast<std::size_t>(c)].add_affine(points[i]);
    else if (c < 0) neg[static_cast<std::size_t>(-c)].add_affine(points[i]);
  }
  P running, total;
  for (int v = qmax; v >= 1; --v) {
    running += pos[static_cast<std::size_t>(v)] + (-neg[static_cast<std::size_t>(v)]);
    total += running;
  }
  return total;
}

// e_k = e(P_k a, P_k b) for every hidden unit k.
inline std::vector<Gt> pairing_projections(const nn::QuantizedEncryptedPart& form, const Ciphertext& ct) {
  int qmax = 0;
  for (auto v : form.projection.flat()) qmax = std::max(qmax, std::abs(v));
  std::vector<G1::Affine> a0(ct.dim), a1(ct.dim);
  std::vector<G2::Affine> b0(ct.dim), b1(ct.dim);
  for (std::size_t i = 0; i < ct.dim; ++i) {
    a0[i] = ct.a[i][0];
    a1[i] = ct.a[i][1];
    b0[i] = ct.b[i][0];
    b1[i] = ct.b[i][1];
  }
  std::vector<Gt> e(form.hidden());
  for (std::size_t k = 0; k < form.hidden(); ++k) {
    auto row = form.projection.row(k);
    std::array<G1::Affine, 2> pa = {bucket_project<G1>(row, a0, qmax).affine(), bucket_project<G1>(row, a1, qmax).affine()};
    std::array<G2::Affine, 2> pb = {bucket_project<G2>(row, b0, qmax).affine(), bucket_project<G2>(row, b1, qmax).affine()};
    e[k] = multi_pairing(pa, pb);
  }
  return e;
}

inline Gt combine(const std::vector<Gt>& e, const Ciphertext& ct, const FunctionalKey& k) {
  G2::Affine sk = k.key.affine();
  Gt out = multi_pairing(std::span(&ct.gamma, 1), std::span(&sk, 1));
  for (std::size_t i = 0; i < e.size(); ++i)
    if (k.diag[i] != 0) out *= e[i].pow(static_cast<std::int64_t>(k.diag[i]));
  return out;
}

inline std::vector<std::uint32_t> unseal(const Ciphertext& ct, const FunctionalKey& k) {
  require(ct.sealed.size() == 4 * static_cast<std::size_t>(ct.dim), Errc::invalid_ciphertext, "sealed payload has the wrong size");
  Bytes plain = ct.sealed;
  keystream_xor(k.seal, ct.nonce, plain);
  ByteReader r(plain);
  std::vector<std::uint32_t> xt(ct.dim);
  for (auto& v : xt) v = r.u32();
  require(xt[0] == 1, Errc::invalid_ciphertext, "ciphertext does not open under this key");
  return xt;
}

// f_j on the opened vector, straight from the factored form.
inline OracleElem oracle_eval(const nn::QuantizedEncryptedPart& form, std::span<const std::uint32_t> xt, const FunctionalKey& k) {
  __int128 acc = 0;
  for (std::size_t c = 0; c < form.hidden(); ++c) {
    if (k.diag[c] == 0) continue;
    auto row = form.projection.row(c);
    __int128 h = 0;
    for (std::size_t i = 0; i < xt.size(); ++i) h += static_cast<__int128>(row[i]) * xt[i];
    acc += static_cast<__int128>(k.diag[c]) * h * h;
  }
  auto p = static_cast<__int128>(OracleElem::kModulus);
  auto r = static_cast<std::uint64_t>(((acc % p) + p) % p);
  return OracleElem::generator().pow(r);
}

}  // namespace detail

// Evaluation phase for one key: returns gT^f_j(x) (or its oracle
// counterpart). The per-ciphertext projections dominate, so decrypting
// several outputs should go through decrypt_all.
inline GroupElement decrypt_eval(const nn::QuantizedEncryptedPart& form, const Ciphertext& ct, const FunctionalKey& key) {
  detail::check_key(form, nn::form_digest(form), ct, key);
  if (ct.backend == Backend::oracle) return detail::oracle_eval(form, detail::unseal(ct, key), key);
  require(ct.a.size() == ct.dim && ct.b.size() == ct.dim, Errc::invalid_ciphertext, "ciphertext is truncated");
  return detail::combine(detail::pairing_projections(form, ct), ct, key);
}

inline std::int64_t dlog_recover(const GroupElement& elem, std::uint64_t bound, const DlogTables& tables = {},
                                 DlogStats* stats = nullptr) {
  if (auto* g = std::get_if<Gt>(&elem)) return dlog_recover(*g, bound, Gt::generator(), tables.pairing, stats);
  return dlog_recover(std::get<OracleElem>(elem), bound, OracleElem::generator(), tables.oracle, stats);
}

// All t outputs: keys must be indices 0..t-1 of one form.
inline std::vector<std::int64_t> decrypt_all(const nn::QuantizedEncryptedPart& form, const Ciphertext& ct,
                                             std::span<const FunctionalKey> keys, const DlogTables& tables = {},
                                             DecryptReport* report = nullptr) {
  require(keys.size() == form.outputs(), Errc::invalid_argument,
          "need " + std::to_string(form.outputs()) + " keys, got " + std::to_string(keys.size()));
  auto digest = nn::form_digest(form);
  for (std::size_t j = 0; j < keys.size(); ++j) {
    require(keys[j].index == j, Errc::invalid_argument, "keys must be ordered by output index");
    detail::check_key(form, digest, ct, keys[j]);
  }
  DecryptReport rep;
  auto t0 = std::chrono::steady_clock::now();
  std::vector<GroupElement> elems;
  elems.reserve(keys.size());
  if (ct.backend == Backend::oracle) {
    auto xt = detail::unseal(ct, keys.front());
    for (const auto& k : keys) elems.emplace_back(detail::oracle_eval(form, xt, k));
  } else {
    require(ct.a.size() == ct.dim && ct.b.size() == ct.dim, Errc::invalid_ciphertext, "ciphertext is truncated");
    auto e = detail::pairing_projections(form, ct);
    for (const auto& k : keys) elems.emplace_back(detail::combine(e, ct, k));
  }
  rep.evaluation_seconds = detail::seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  // Without a persisted table, build one set of baby steps sized for the
  // widest bound and share it across outputs.
  DlogTables use = tables;
  std::optional<DlogTable<Gt>> gt_steps;
  std::optional<DlogTable<OracleElem>> oracle_steps;
  std::uint64_t widest = 0;
  for (const auto& k : keys) widest = std::max(widest, k.bound);
  auto steps_for = [](std::uint64_t bound) {
    auto m = static_cast<std::uint64_t>(std::ceil(std::sqrt(2.0 * static_cast<double>(bound) + 1.0)));
    while (m * m < 2 * bound + 1) ++m;
    return m;
  };
  if (widest > 0 && ct.backend == Backend::pairing && (!use.pairing || use.pairing->m() == 0)) {
    gt_steps = DlogTable<Gt>::build(Gt::generator(), steps_for(widest));
    use.pairing = &*gt_steps;
    rep.baby_steps += gt_steps->m();
  }
  if (widest > 0 && ct.backend == Backend::oracle && (!use.oracle || use.oracle->m() == 0)) {
    oracle_steps = DlogTable<OracleElem>::build(OracleElem::generator(), steps_for(widest));
    use.oracle = &*oracle_steps;
    rep.baby_steps += oracle_steps->m();
  }
  std::vector<std::int64_t> out(keys.size());
  for (std::size_t j = 0; j < keys.size(); ++j) {
    DlogStats st;
    out[j] = dlog_recover(elems[j], keys[j].bound, use, &st);
    rep.giant_steps += st.giant_steps;
    rep.baby_steps += st.baby_steps;
  }
  rep.dlog_seconds = detail::seconds_since(t0);
  if (report) *report = rep;
  return out;
}

// --------------------------------------------------------- serialization

inline Bytes PublicKey::serialize() const {
  ByteWriter w;
  w.raw("QPK1");
  w.u32(1);
  w.u8(static_cast<std::uint8_t>(backend));
  detail::put_curve(w, backend);
  w.u32(dim);
  w.u32(x_max);
  if (backend == Backend::pairing) {
    for (std::size_t i = 0; i < dim; ++i) {
      w.blob(s[i].compress());
      w.blob(t[i].compress());
    }
  } else {
    w.blob(seal);
  }
  return std::move(w).take();
}

inline PublicKey PublicKey::parse(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QPK1");
  detail::check_version(r);
  PublicKey k;
  k.backend = detail::get_backend(r);
  detail::check_curve(r, k.backend);
  k.dim = detail::get_dim(r);
  k.x_max = r.u32();
  require(k.x_max >= 1, Errc::parse_error, "x_max must be >= 1");
  if (k.backend == Backend::pairing) {
    require(r.remaining() >= std::size_t{k.dim} * (8 + 48 + 96), Errc::parse_error, "public key is truncated");
    for (std::size_t i = 0; i < k.dim; ++i) {
      k.s.push_back(G1::decompress(r.blob(48)));
      k.t.push_back(G2::decompress(r.blob(96)));
    }
  } else {
    k.seal = detail::get_fixed<32>(r);
  }
  r.expect_end();
  return k;
}

inline Bytes MasterSecretKey::serialize() const {
  ByteWriter w;
  w.raw("QSK1");
  w.u32(1);
  w.u8(static_cast<std::uint8_t>(backend));
  detail::put_curve(w, backend);
  w.u32(dim);
  w.u32(x_max);
  detail::put_digest(w, mpk_digest);
  if (backend == Backend::pairing) {
    for (std::size_t i = 0; i < dim; ++i) {
      w.blob(s[i].to_bytes());
      w.blob(t[i].to_bytes());
    }
  } else {
    w.blob(seal);
  }
  return std::move(w).take();
}

inline MasterSecretKey MasterSecretKey::parse(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QSK1");
  detail::check_version(r);
  MasterSecretKey k;
  k.backend = detail::get_backend(r);
  detail::check_curve(r, k.backend);
  k.dim = detail::get_dim(r);
  k.x_max = r.u32();
  require(k.x_max >= 1, Errc::parse_error, "x_max must be >= 1");
  k.mpk_digest = detail::get_digest(r);
  if (k.backend == Backend::pairing) {
    require(r.remaining() >= std::size_t{k.dim} * 72, Errc::parse_error, "secret key is truncated");
    for (std::size_t i = 0; i < k.dim; ++i) {
      k.s.push_back(Fr::from_bytes(r.blob(32)));
      k.t.push_back(Fr::from_bytes(r.blob(32)));
    }
  } else {
    k.seal = detail::get_fixed<32>(r);
  }
  r.expect_end();
  return k;
}

inline Bytes Ciphertext::serialize() const {
  ByteWriter w;
  w.raw("QFE1");
  w.u32(1);
  w.u8(static_cast<std::uint8_t>(backend));
  detail::put_curve(w, backend);
  w.u32(dim);
  detail::put_digest(w, mpk_digest);
  if (backend == Backend::pairing) {
    std::uint8_t buf1[48], buf2[96];
    blst_p1_affine_compress(buf1, &gamma);
    w.blob(buf1);
    for (std::size_t i = 0; i < dim; ++i) {
      for (const auto& p : a[i]) {
        blst_p1_affine_compress(buf1, &p);
        w.blob(buf1);
      }
      for (const auto& p : b[i]) {
        blst_p2_affine_compress(buf2, &p);
        w.blob(buf2);
      }
    }
  } else {
    w.blob(nonce);
    w.blob(sealed);
  }
  return std::move(w).take();
}

inline Ciphertext Ciphertext::parse(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QFE1");
  detail::check_version(r);
  Ciphertext ct;
  ct.backend = detail::get_backend(r);
  detail::check_curve(r, ct.backend);
  ct.dim = detail::get_dim(r);
  ct.mpk_digest = detail::get_digest(r);
  if (ct.backend == Backend::pairing) {
    require(r.remaining() == 4 + 48 + std::size_t{ct.dim} * (2 * (4 + 48) + 2 * (4 + 96)), Errc::parse_error,
            "ciphertext payload does not match its dimension");
    ct.gamma = G1::decompress_affine(r.blob(48));
    ct.a.resize(ct.dim);
    ct.b.resize(ct.dim);
    for (std::size_t i = 0; i < ct.dim; ++i) {
      for (auto& p : ct.a[i]) p = G1::decompress_affine(r.blob(48));
      for (auto& p : ct.b[i]) p = G2::decompress_affine(r.blob(96));
    }
  } else {
    ct.nonce = detail::get_fixed<16>(r);
    auto s = r.blob(4 * std::size_t{ct.dim});
    require(s.size() == 4 * std::size_t{ct.dim}, Errc::parse_error, "sealed payload does not match its dimension");
    ct.sealed.assign(s.begin(), s.end());
  }
  r.expect_end();
  return ct;
}

inline Bytes FunctionalKey::serialize() const {
  ByteWriter w;
  w.raw("QFK1");
  w.u32(1);
  w.u8(static_cast<std::uint8_t>(backend));
  w.u32(index);
  w.u64(bound);
  detail::put_digest(w, form_digest);
  detail::put_digest(w, mpk_digest);
  w.u32(static_cast<std::uint32_t>(diag.size()));
  for (auto v : diag) w.u32(static_cast<std::uint32_t>(v));
  if (backend == Backend::pairing) w.blob(key.compress());
  else w.blob(seal);
  return std::move(w).take();
}

inline FunctionalKey FunctionalKey::parse(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QFK1");
  detail::check_version(r);
  FunctionalKey k;
  k.backend = detail::get_backend(r);
  k.index = r.u32();
  k.bound = r.u64();
  require(k.bound < kMaxDlogBound, Errc::parse_error, "bound out of range");
  k.form_digest = detail::get_digest(r);
  k.mpk_digest = detail::get_digest(r);
  auto count = r.u32();
  require(count >= 1 && count <= 4096 && r.remaining() >= std::size_t{count} * 4, Errc::parse_error, "bad diagonal length");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto v = static_cast<std::int32_t>(r.u32());
    require(v >= -127 && v <= 127, Errc::parse_error, "diagonal entry out of range");
    k.diag.push_back(v);
  }
  if (k.backend == Backend::pairing) k.key = G2::decompress(r.blob(96));
  else k.seal = detail::get_fixed<32>(r);
  r.expect_end();
  return k;
}

}  // namespace fespam::fe
