#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fbstrip/free_boundary.hpp"
#include "fbstrip/grid.hpp"
#include "fbstrip/minimize.hpp"
#include "fbstrip/weiss.hpp"

#include "../../vendor/json.hpp"

namespace fbstrip {

using ordered_json = nlohmann::ordered_json;

namespace detail {

// SHA-256 (FIPS 180-4), enough for payload integrity tags.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset() {
    h_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
          0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    len_ = 0;
    buf_used_ = 0;
  }

  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    len_ += n;
    while (n > 0) {
      const std::size_t take = std::min(n, std::size_t(64) - buf_used_);
      std::memcpy(buf_.data() + buf_used_, p, take);
      buf_used_ += take;
      p += take;
      n -= take;
      if (buf_used_ == 64) {
        compress(buf_.data());
        buf_used_ = 0;
      }
    }
  }

  std::string hex_digest() {
    const std::uint64_t bits = len_ * 8;
    std::uint8_t pad = 0x80;
    update(&pad, 1);
    const std::uint8_t zero = 0;
    while (buf_used_ != 56) update(&zero, 1);
    std::uint8_t lenbytes[8];
    for (int i = 0; i < 8; ++i) lenbytes[i] = (std::uint8_t)(bits >> (56 - 8 * i));
    update(lenbytes, 8);
    char out[65];
    for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h_[i]);
    return std::string(out, 64);
  }

 private:
  static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void compress(const std::uint8_t* p) {
    static constexpr std::uint32_t K[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
        0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
        0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
        0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
        0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
        0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
        0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3];
    std::uint32_t e = h_[4], f = h_[5], g = h_[6], h = h_[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = h + S1 + ch + K[i] + w[i];
      const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = S0 + mj;
      h = g; g = f; f = e; e = d + t1;
      d = c; c = b; b = a; a = t1 + t2;
    }
    h_[0] += a; h_[1] += b; h_[2] += c; h_[3] += d;
    h_[4] += e; h_[5] += f; h_[6] += g; h_[7] += h;
  }

  std::array<std::uint32_t, 8> h_;
  std::array<std::uint8_t, 64> buf_;
  std::uint64_t len_ = 0;
  std::size_t buf_used_ = 0;
};

// Doubles as 8 bytes each, least-significant byte first, independent of host
// byte order.
inline std::vector<std::uint8_t> doubles_to_le(const std::vector<double>& v) {
  std::vector<std::uint8_t> out(v.size() * 8);
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::uint64_t bits;
    std::memcpy(&bits, &v[k], 8);
    for (int b = 0; b < 8; ++b) out[8 * k + b] = (std::uint8_t)(bits >> (8 * b));
  }
  return out;
}

inline std::vector<double> le_to_doubles(const std::vector<std::uint8_t>& raw) {
  if (raw.size() % 8 != 0)
    throw ConfigError("field.payload", "byte length is not a multiple of 8");
  std::vector<double> out(raw.size() / 8);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(raw[8 * k + b]) << (8 * b);
    std::memcpy(&out[k], &bits, 8);
  }
  return out;
}

inline std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  Sha256 s;
  s.update(bytes.data(), bytes.size());
  return s.hex_digest();
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& b) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("output_dir", "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(b.data()), (std::streamsize)b.size());
  if (!os) throw ConfigError("output_dir", "write failed for " + path.string());
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("run_dir", "cannot open " + path.string());
  std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(is)),
                              std::istreambuf_iterator<char>());
  return b;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  const auto b = read_bytes(path);
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("output_dir", "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw ConfigError("output_dir", "write failed for " + path.string());
}

// %.17g: enough digits to round-trip any double, fixed formatting rule so
// regenerated artifacts are byte-stable.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void params_to_json(ordered_json& j, const ProblemParams& p) {
  j["m"] = p.m;
  j["h"] = p.h;
  j["gamma"] = p.gamma;
  j["lambda"] = p.lambda;
}

// Field payload <base>.bin plus sidecar <base>.json describing it.
inline void write_field_artifact(const std::filesystem::path& dir, const std::string& base,
                                 const Field& f, const ProblemParams& p, double eps_final) {
  const auto bytes = detail::doubles_to_le(f.values);
  detail::write_bytes(dir / (base + ".bin"), bytes);
  ordered_json side;
  side["schema_version"] = kSchemaVersion;
  side["kind"] = "field";
  side["nx"] = f.grid.nx;
  side["ny"] = f.grid.ny;
  side["y_max"] = f.grid.y_max;
  side["lambda"] = f.grid.lambda;
  params_to_json(side["params"], p);
  side["gamma"] = f.gamma;
  side["datum"] = f.datum;
  side["eps_final"] = eps_final;
  side["encoding"] = "float64-le";
  side["layout"] = "row-major, y-row outer, bottom row first";
  side["payload_sha256"] = detail::sha256_hex(bytes);
  detail::write_text(dir / (base + ".json"), side.dump(2) + "\n");
}

struct FieldArtifact {
  Field field;
  ProblemParams params{};
  double eps_final = 0.0;
};

inline FieldArtifact read_field_artifact(const std::filesystem::path& dir,
                                         const std::string& base) {
  const auto side_path = dir / (base + ".json");
  if (!std::filesystem::exists(side_path))
    throw ConfigError("run_dir", "missing artifact " + side_path.string());
  ordered_json side = ordered_json::parse(detail::read_bytes(side_path));
  const auto bytes = detail::read_bytes(dir / (base + ".bin"));
  if (detail::sha256_hex(bytes) != side.at("payload_sha256").get<std::string>())
    throw ConfigError("run_dir", base + ".bin does not match its recorded sha256");
  FieldArtifact out;
  out.params.m = side.at("params").at("m").get<double>();
  out.params.h = side.at("params").at("h").get<double>();
  out.params.gamma = side.at("params").at("gamma").get<double>();
  out.params.lambda = side.at("params").at("lambda").get<double>();
  out.eps_final = side.at("eps_final").get<double>();
  const Grid g = build_grid(out.params, side.at("nx").get<int>(), side.at("ny").get<int>(),
                            side.at("y_max").get<double>());
  out.field = make_field(g, side.at("datum").get<double>(), side.at("gamma").get<double>());
  auto vals = detail::le_to_doubles(bytes);
  if (vals.size() != out.field.values.size())
    throw ConfigError("run_dir", base + ".bin has the wrong node count");
  out.field.values = std::move(vals);
  return out;
}

// Blow-up patch in the same payload format, sidecar carrying the rescale header.
inline void write_blowup_artifact(const std::filesystem::path& dir, const std::string& base,
                                  const BlowupField& bf) {
  const auto bytes = detail::doubles_to_le(bf.values);
  detail::write_bytes(dir / (base + ".bin"), bytes);
  ordered_json side;
  side["schema_version"] = kSchemaVersion;
  side["kind"] = "blowup_field";
  side["rho"] = bf.rho;
  side["R"] = bf.R;
  side["n"] = bf.n;
  side["dz"] = bf.dz;
  side["threshold"] = bf.threshold;
  params_to_json(side["params"], bf.params);
  side["center"] = {{"x", -0.5 * bf.params.lambda}, {"y", bf.params.gamma}};
  side["encoding"] = "float64-le";
  side["layout"] = "row-major, t-row outer, t = -R row first";
  side["payload_sha256"] = detail::sha256_hex(bytes);
  detail::write_text(dir / (base + ".json"), side.dump(2) + "\n");
}

inline std::string fbcurve_csv(const FBCurve& c) {
  std::string out = "# schema_version=" + std::to_string(kSchemaVersion) + "\n";
  out += "y,g,flag\n";
  for (std::size_t k = 0; k < c.ys.size(); ++k) {
    out += detail::fmt_g17(c.ys[k]);
    out += ',';
    // all_positive rows carry the seam value -lambda/2; only all_zero rows
    // have no crossing at all
    out += c.flags[k] == RowFlag::AllZero ? std::string() : detail::fmt_g17(c.gs[k]);
    out += ',';
    out += to_string(c.flags[k]);
    out += '\n';
  }
  return out;
}

inline std::string weiss_csv(const WeissSeries& s) {
  std::string out = "# schema_version=" + std::to_string(kSchemaVersion) + "\n";
  out += "kind,x1,x2,value\n";
  for (std::size_t i = 0; i < s.radii.size(); ++i) {
    out += "phi,";
    out += detail::fmt_g17(s.radii[i]);
    out += ",,";
    out += detail::fmt_g17(s.phi[i]);
    out += '\n';
  }
  for (const auto& [rho, sigma, res] : s.identity_residuals) {
    out += "identity_residual,";
    out += detail::fmt_g17(rho);
    out += ',';
    out += detail::fmt_g17(sigma);
    out += ',';
    out += detail::fmt_g17(res);
    out += '\n';
  }
  return out;
}

}  // namespace fbstrip
