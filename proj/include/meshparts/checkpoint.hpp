#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "meshparts/config.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/hierarchy.hpp"
#include "meshparts/model.hpp"
#include "meshparts/nmf.hpp"

namespace meshparts {

namespace detail {

// Explicit little-endian byte composition keeps the format host-independent.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) { buf_.append(s); }
  void string(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    if (pos_ >= data_.size()) throw DataError("checkpoint: truncated data");
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string string() {
    const std::uint32_t n = u32();
    if (pos_ + n > data_.size()) throw DataError("checkpoint: truncated string");
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline void write_dense(ByteWriter& w, const DenseMatrix& m) {
  w.u64(m.rows);
  w.u64(m.cols);
  for (double v : m.values) w.f64(v);
}

inline DenseMatrix read_dense(ByteReader& r) {
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  DenseMatrix m(rows, cols);
  for (double& v : m.values) v = r.f64();
  return m;
}

inline void write_sparse(ByteWriter& w, const SparseMatrix& m) {
  w.u64(m.rows());
  w.u64(m.cols());
  w.u64(m.nnz());
  for (const Triplet& t : m.entries()) {
    w.u64(t.row);
    w.u64(t.col);
    w.f64(t.value);
  }
}

inline SparseMatrix read_sparse(ByteReader& r) {
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  const std::uint64_t nnz = r.u64();
  std::vector<Triplet> triplets(nnz);
  for (Triplet& t : triplets) {
    t.row = r.u64();
    t.col = r.u64();
    t.value = r.f64();
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
}

inline void write_mesh(ByteWriter& w, const Mesh& m) {
  write_dense(w, m.vertices);
  w.u64(m.faces.size());
  for (const auto& f : m.faces)
    for (std::uint32_t v : f) w.u32(v);
}

inline Mesh read_mesh(ByteReader& r) {
  Mesh m;
  m.vertices = read_dense(r);
  const std::uint64_t nf = r.u64();
  m.faces.resize(nf);
  for (auto& f : m.faces)
    for (std::uint32_t& v : f) v = r.u32();
  m.validate();
  return m;
}

}  // namespace detail

/// A trained model together with everything inference needs: the decimation
/// hierarchy, the local weights and the configuration echo. Binary container
/// "MPGC": magic, version, then length-prefixed named sections.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  RunConfig config;
  Hierarchy hierarchy;
  LocalWeights weights;
  ModelParams params;
  std::vector<std::array<double, 2>> metrics;  // per epoch: {recon L1, cycle}

  void validate() const {
    config.validate();
    require(hierarchy.transitions() == config.levels, "checkpoint: hierarchy depth mismatch");
    require(weights.w.rows == hierarchy.coarsest().vertex_count(),
            "checkpoint: local weights rows must equal the coarsest vertex count");
    require(weights.w.cols == config.parts, "checkpoint: local weights column count mismatch");
    require(params.projections.size() == config.parts, "checkpoint: projection count mismatch");
    require(params.encoder.size() == hierarchy.transitions() &&
                params.decoder.size() == hierarchy.transitions(),
            "checkpoint: layer count mismatch");
    require(params.enc_fc_w.cols == config.latent, "checkpoint: latent width mismatch");
    for (const ChebLayer& l : params.encoder)
      require(l.order() == config.cheb_order, "checkpoint: Chebyshev order mismatch");
  }
};

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  using detail::ByteWriter;
  ckpt.validate();

  ByteWriter config;
  config.string(config_to_text(ckpt.config));

  ByteWriter hierarchy;
  hierarchy.u32(static_cast<std::uint32_t>(ckpt.hierarchy.levels.size()));
  for (const auto& level : ckpt.hierarchy.levels) {
    detail::write_mesh(hierarchy, level.mesh);
    hierarchy.f64(level.bundle.lambda_max);
    hierarchy.u8(level.bundle.lambda_from_fallback ? 1 : 0);
    detail::write_sparse(hierarchy, level.bundle.adjacency);
    detail::write_sparse(hierarchy, level.bundle.laplacian);
    detail::write_sparse(hierarchy, level.bundle.scaled);
  }
  for (std::size_t t = 0; t < ckpt.hierarchy.transitions(); ++t) {
    detail::write_sparse(hierarchy, ckpt.hierarchy.down[t]);
    detail::write_sparse(hierarchy, ckpt.hierarchy.up[t]);
    hierarchy.u64(ckpt.hierarchy.kept[t].size());
    for (std::uint32_t v : ckpt.hierarchy.kept[t]) hierarchy.u32(v);
  }

  ByteWriter weights;
  detail::write_dense(weights, ckpt.weights.w);
  weights.u64(ckpt.weights.provenance.seed);
  weights.f64(ckpt.weights.provenance.lambda);
  weights.u64(ckpt.weights.provenance.iterations);
  weights.f64(ckpt.weights.provenance.final_objective);

  ByteWriter params;
  std::uint32_t tensor_count = 0;
  ckpt.params.visit([&](const std::string&, const DenseMatrix&) { ++tensor_count; });
  params.u32(tensor_count);
  ckpt.params.visit([&](const std::string& name, const DenseMatrix& m) {
    params.string(name);
    detail::write_dense(params, m);
  });

  ByteWriter metrics;
  metrics.u32(static_cast<std::uint32_t>(ckpt.metrics.size()));
  for (const auto& m : ckpt.metrics) {
    metrics.f64(m[0]);
    metrics.f64(m[1]);
  }

  ByteWriter out;
  out.bytes("MPGC");
  out.u32(Checkpoint::kVersion);
  auto section = [&out](const std::string& name, const ByteWriter& w) {
    out.string(name);
    out.u64(w.data().size());
    out.bytes(w.data());
  };
  section("config", config);
  section("hierarchy", hierarchy);
  section("local_weights", weights);
  section("params", params);
  section("metrics", metrics);
  return out.data();
}

inline Checkpoint deserialize_checkpoint(std::string_view data) {
  detail::ByteReader top(data);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(top.u8());
  if (std::string_view(magic, 4) != "MPGC")
    throw DataError("checkpoint: bad magic bytes (not an MPGC file)");
  const std::uint32_t version = top.u32();
  if (version != Checkpoint::kVersion)
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));

  std::map<std::string, std::string> sections;
  while (!top.done()) {
    const std::string name = top.string();
    const std::uint64_t len = top.u64();
    std::string payload;
    payload.reserve(len);
    for (std::uint64_t i = 0; i < len; ++i) payload.push_back(static_cast<char>(top.u8()));
    if (!sections.emplace(name, std::move(payload)).second)
      throw DataError("checkpoint: duplicate section '" + name + "'");
  }
  for (const char* required : {"config", "hierarchy", "local_weights", "params", "metrics"})
    if (!sections.count(required))
      throw DataError("checkpoint: missing section '" + std::string(required) + "'");

  Checkpoint ckpt;
  {
    detail::ByteReader r(sections["config"]);
    ckpt.config = parse_config_text(r.string());
  }
  {
    detail::ByteReader r(sections["hierarchy"]);
    const std::uint32_t level_count = r.u32();
    for (std::uint32_t i = 0; i < level_count; ++i) {
      Hierarchy::Level level;
      level.mesh = detail::read_mesh(r);
      level.bundle.lambda_max = r.f64();
      level.bundle.lambda_from_fallback = r.u8() != 0;
      level.bundle.adjacency = detail::read_sparse(r);
      level.bundle.laplacian = detail::read_sparse(r);
      level.bundle.scaled = detail::read_sparse(r);
      ckpt.hierarchy.levels.push_back(std::move(level));
    }
    for (std::uint32_t t = 0; t + 1 < level_count; ++t) {
      ckpt.hierarchy.down.push_back(detail::read_sparse(r));
      ckpt.hierarchy.up.push_back(detail::read_sparse(r));
      std::vector<std::uint32_t> kept(r.u64());
      for (std::uint32_t& v : kept) v = r.u32();
      ckpt.hierarchy.kept.push_back(std::move(kept));
    }
  }
  {
    detail::ByteReader r(sections["local_weights"]);
    ckpt.weights.w = detail::read_dense(r);
    ckpt.weights.provenance.seed = r.u64();
    ckpt.weights.provenance.lambda = r.f64();
    ckpt.weights.provenance.iterations = r.u64();
    ckpt.weights.provenance.final_objective = r.f64();
  }
  {
    detail::ByteReader r(sections["params"]);
    const std::uint32_t tensor_count = r.u32();
    std::map<std::string, DenseMatrix> tensors;
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
      std::string name = r.string();
      tensors[name] = detail::read_dense(r);
    }
    const ModelDims dims = ModelDims::from(ckpt.hierarchy, ckpt.config);
    ckpt.params = ModelParams::initialize(dims, 0, ckpt.config.no_projection);
    std::size_t assigned = 0;
    ckpt.params.visit([&](const std::string& name, DenseMatrix& m) {
      auto it = tensors.find(name);
      if (it == tensors.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
      require(m.same_shape(it->second), "checkpoint: tensor '" + name + "' has wrong shape");
      m.values = std::move(it->second.values);
      ++assigned;
    });
    if (assigned != tensor_count)
      throw DataError("checkpoint: unexpected extra tensors in params section");
  }
  {
    detail::ByteReader r(sections["metrics"]);
    const std::uint32_t epochs = r.u32();
    for (std::uint32_t i = 0; i < epochs; ++i) {
      std::array<double, 2> m{r.f64(), r.f64()};
      ckpt.metrics.push_back(m);
    }
  }
  ckpt.validate();
  return ckpt;
}

inline void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  const std::string data = serialize_checkpoint(ckpt);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(data);
}

}  // namespace meshparts
