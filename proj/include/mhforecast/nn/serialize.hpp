#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "mhforecast/error.hpp"
#include "mhforecast/nn/network.hpp"

namespace mhf::nn {

/**
 * Parameter blob layout (all integers little-endian):
 *   8 bytes   magic "MHFNET01"
 *   7 x u32   kind (0 ANN, 1 LSTM, 2 GRU), features, lookback, horizon,
 *             projection, recurrent, flags (bit 0: zero GRU gate bias)
 *   u32       number of ANN hidden layers k, then k x u32 widths
 *   u64       parameter count
 *   count x f64 (IEEE-754 bits as u64) in flat-view order
 */
inline constexpr std::array<char, 8> kBlobMagic{'M', 'H', 'F', 'N', 'E', 'T', '0', '1'};

namespace detail {

inline void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw Error(Errc::parse_error, "truncated parameter blob");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

inline void write_parameters(std::ostream& out, const Network& model) {
  const auto& s = model.spec();
  out.write(kBlobMagic.data(), kBlobMagic.size());
  for (std::uint64_t v : {static_cast<std::uint64_t>(s.kind), std::uint64_t{s.features}, std::uint64_t{s.lookback},
                          std::uint64_t{s.horizon}, std::uint64_t{s.projection}, std::uint64_t{s.recurrent},
                          std::uint64_t{s.zero_gru_gate_bias ? 1u : 0u}, std::uint64_t{s.ann_hidden.size()}}) {
    detail::put_le(out, v, 4);
  }
  for (std::size_t w : s.ann_hidden) detail::put_le(out, w, 4);
  const Vector flat = model.parameters().flatten();
  detail::put_le(out, static_cast<std::uint64_t>(flat.size()), 8);
  for (Eigen::Index i = 0; i < flat.size(); ++i) detail::put_le(out, std::bit_cast<std::uint64_t>(flat[i]), 8);
  if (!out) throw Error(Errc::io_error, "failed writing parameter blob");
}

inline Network read_parameters(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kBlobMagic) throw Error(Errc::parse_error, "not a parameter blob");
  NetworkSpec s;
  const auto kind = detail::get_le(in, 4);
  if (kind > 2) throw Error(Errc::parse_error, "unknown network kind in blob");
  s.kind = static_cast<NetworkKind>(kind);
  s.features = detail::get_le(in, 4);
  s.lookback = detail::get_le(in, 4);
  s.horizon = detail::get_le(in, 4);
  s.projection = detail::get_le(in, 4);
  s.recurrent = detail::get_le(in, 4);
  s.zero_gru_gate_bias = (detail::get_le(in, 4) & 1u) != 0;
  const auto layers = detail::get_le(in, 4);
  if (layers > 64) throw Error(Errc::parse_error, "implausible hidden layer count in blob");
  s.ann_hidden.resize(layers);
  for (auto& w : s.ann_hidden) w = detail::get_le(in, 4);
  const auto count = detail::get_le(in, 8);
  Parameters params = zero_parameters(s);
  if (count != params.size()) throw Error(Errc::parse_error, "parameter count does not match descriptor");
  Vector flat(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = std::bit_cast<double>(detail::get_le(in, 8));
  params.unflatten(flat);
  return {s, std::move(params)};
}

}  // namespace mhf::nn
