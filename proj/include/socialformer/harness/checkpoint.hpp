#pragma once

// Checkpoint layout, all integers and doubles little-endian:
//   magic   8 bytes  "SFCKPT01"
//   u64     length of the config text, then the text (key = value lines)
//   u64     tensor count
//   per tensor, in path order:
//     u64 path length, path bytes, u8 trainable, u64 rows, u64 cols,
//     rows * cols f64 values in column-major order

#include "socialformer/harness/config.hpp"
#include "socialformer/harness/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <system_error>

namespace sf {

inline constexpr char kCheckpointMagic[8] = {'S', 'F', 'C', 'K', 'P', 'T', '0', '1'};

namespace ckpt_detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

struct Reader {
  std::string_view data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (data.size() - pos < n) throw ParseError("checkpoint truncated", pos);
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::uint64_t n) {
    need(static_cast<std::size_t>(n));
    std::string s(data.substr(pos, static_cast<std::size_t>(n)));
    pos += static_cast<std::size_t>(n);
    return s;
  }
};

}  // namespace ckpt_detail

inline std::string checkpoint_bytes(const SocialFormer& model) {
  using namespace ckpt_detail;
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  const auto cfg = config_to_text(model.config());
  put_u64(out, cfg.size());
  out += cfg;
  put_u64(out, model.store().entries().size());
  for (const auto& [path, e] : model.store().entries()) {
    const auto& m = e.var.value();
    put_u64(out, path.size());
    out += path;
    out.push_back(e.trainable ? 1 : 0);
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
  }
  return out;
}

inline void save_checkpoint(const SocialFormer& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write checkpoint '" + path + "'");
  const auto bytes = checkpoint_bytes(model);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write checkpoint '" + path + "'");
}

// Rebuilds the model from the stored config, then overwrites every tensor.
inline std::unique_ptr<SocialFormer> checkpoint_from_bytes(std::string_view bytes) {
  ckpt_detail::Reader r{bytes};
  if (bytes.size() < sizeof kCheckpointMagic || std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw ParseError("not a checkpoint (bad magic)", 0);
  }
  r.pos = sizeof kCheckpointMagic;
  const auto cfg = config_from_text(r.bytes(r.u64()));
  auto model = std::make_unique<SocialFormer>(cfg);
  auto& store = model->store();
  const auto count = r.u64();
  if (count != store.entries().size()) throw ParseError("checkpoint tensor count does not match the model", r.pos);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = r.pos;
    const auto path = r.bytes(r.u64());
    if (!store.contains(path)) throw ParseError("checkpoint tensor '" + path + "' is not part of the model", at);
    r.need(1);
    const bool trainable = r.data[r.pos++] != 0;
    const auto rows = r.u64(), cols = r.u64();
    auto v = store.get(path);
    if (rows != static_cast<std::uint64_t>(v.rows()) || cols != static_cast<std::uint64_t>(v.cols())) {
      throw ParseError("checkpoint tensor '" + path + "' has the wrong shape", at);
    }
    auto& m = v.mutable_value();
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = r.f64();
    store.set_trainable(path, trainable);
  }
  if (r.pos != bytes.size()) throw ParseError("trailing bytes after checkpoint", r.pos);
  return model;
}

inline std::unique_ptr<SocialFormer> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return checkpoint_from_bytes(ss.str());
}

}  // namespace sf
