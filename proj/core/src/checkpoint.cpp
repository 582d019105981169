#include "kgrec/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "kgrec/errors.hpp"

namespace kgrec {

namespace {

constexpr char kMagic[4] = {'K', 'G', 'R', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_i64(std::string& out, std::int64_t v) { put_u64(out, static_cast<std::uint64_t>(v)); }

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(const std::string& data) : data_(data) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void magic() {
    need(4);
    if (std::memcmp(data_.data() + pos_, kMagic, 4) != 0) {
      throw CheckpointError(CheckpointError::Kind::bad_magic, "bad checkpoint magic");
    }
    pos_ += 4;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw CheckpointError(CheckpointError::Kind::truncated, "truncated checkpoint");
    }
  }

  const std::string& data_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::uint64_t idmap_digest(const IdMaps& idmaps) {
  std::uint64_t h = 14695981039346656037ULL;
  const std::vector<std::string>* classes[] = {&idmaps.user_keys, &idmaps.item_keys,
                                               &idmaps.aux_keys, &idmaps.relation_keys};
  unsigned char marker = 0xF0;
  for (const auto* keys : classes) {
    h = fnv_bytes(h, &marker, 1);
    ++marker;
    std::vector<std::string> sorted = *keys;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& key : sorted) {
      h = fnv_bytes(h, key.data(), key.size());
      const unsigned char sep = 0;
      h = fnv_bytes(h, &sep, 1);
    }
  }
  return h;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     std::uint64_t idmap_digest, const std::string& path) {
  std::string blob;
  blob.append(kMagic, 4);
  put_u32(blob, kVersion);
  put_i64(blob, config.embed_dim);
  put_i64(blob, config.num_hops);
  put_f64(blob, config.leaky_slope);
  put_f64(blob, config.learning_rate);
  put_i64(blob, config.epochs);
  put_i64(blob, config.neg_ratio);
  put_i64(blob, config.neighbor_cap);
  put_f64(blob, config.test_fraction);
  put_i64(blob, config.seed);
  blob.push_back(config.optimizer == OptimizerKind::sgd ? 0 : 1);
  blob.push_back(config.attention == AttentionMode::softmax ? 0 : 1);
  put_u64(blob, idmap_digest);
  put_u64(blob, static_cast<std::uint64_t>(params.num_nodes()));
  put_u64(blob, static_cast<std::uint64_t>(params.dim()));
  put_u64(blob, static_cast<std::uint64_t>(params.num_layers()));
  for (int i = 0; i < params.num_nodes(); ++i) {
    for (int j = 0; j < params.dim(); ++j) put_f64(blob, params.node_embeddings(i, j));
  }
  for (const auto& w : params.layer_weights) {
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) put_f64(blob, w(i, j));
    }
  }
  for (const auto& a : params.attention_vecs) {
    for (int i = 0; i < a.size(); ++i) put_f64(blob, a(i));
  }

  // Write-then-rename so a crashed run never leaves a torn checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write " + tmp);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader reader(data);
  reader.magic();
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw CheckpointError(CheckpointError::Kind::bad_version,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config.embed_dim = static_cast<int>(reader.i64());
  ckpt.config.num_hops = static_cast<int>(reader.i64());
  ckpt.config.leaky_slope = reader.f64();
  ckpt.config.learning_rate = reader.f64();
  ckpt.config.epochs = static_cast<int>(reader.i64());
  ckpt.config.neg_ratio = static_cast<int>(reader.i64());
  ckpt.config.neighbor_cap = static_cast<int>(reader.i64());
  ckpt.config.test_fraction = reader.f64();
  ckpt.config.seed = reader.i64();
  ckpt.config.optimizer = reader.u8() == 0 ? OptimizerKind::sgd : OptimizerKind::adam;
  ckpt.config.attention = reader.u8() == 0 ? AttentionMode::softmax : AttentionMode::uniform;
  ckpt.idmap_digest = reader.u64();

  const std::uint64_t num_nodes = reader.u64();
  const std::uint64_t dim = reader.u64();
  const std::uint64_t hops = reader.u64();
  if (dim != static_cast<std::uint64_t>(ckpt.config.embed_dim) ||
      hops != static_cast<std::uint64_t>(ckpt.config.num_hops) || num_nodes == 0) {
    throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                          "checkpoint counts disagree with its config echo");
  }
  const std::uint64_t expected_doubles =
      num_nodes * dim + hops * dim * dim + hops * 2 * dim;
  if (reader.remaining() != expected_doubles * 8) {
    throw CheckpointError(CheckpointError::Kind::truncated,
                          "checkpoint payload size mismatch: expected " +
                              std::to_string(expected_doubles * 8) + " bytes, have " +
                              std::to_string(reader.remaining()));
  }

  ckpt.params.node_embeddings.resize(static_cast<Eigen::Index>(num_nodes),
                                     static_cast<Eigen::Index>(dim));
  for (std::uint64_t i = 0; i < num_nodes; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j) {
      ckpt.params.node_embeddings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          reader.f64();
    }
  }
  ckpt.params.layer_weights.resize(hops);
  for (auto& w : ckpt.params.layer_weights) {
    w.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::uint64_t i = 0; i < dim; ++i) {
      for (std::uint64_t j = 0; j < dim; ++j) {
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = reader.f64();
      }
    }
  }
  ckpt.params.attention_vecs.resize(hops);
  for (auto& a : ckpt.params.attention_vecs) {
    a.resize(static_cast<Eigen::Index>(2 * dim));
    for (std::uint64_t i = 0; i < 2 * dim; ++i) a(static_cast<Eigen::Index>(i)) = reader.f64();
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.embed_dim != expected.embed_dim ||
      ckpt.config.num_hops != expected.num_hops) {
    throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                          "checkpoint shape (d=" + std::to_string(ckpt.config.embed_dim) +
                              ", L=" + std::to_string(ckpt.config.num_hops) +
                              ") does not match expected (d=" +
                              std::to_string(expected.embed_dim) +
                              ", L=" + std::to_string(expected.num_hops) + ")");
  }
  return ckpt;
}

void verify_checkpoint_digest(const Checkpoint& checkpoint, std::uint64_t current_digest) {
  if (checkpoint.idmap_digest != current_digest) {
    throw CheckpointError(CheckpointError::Kind::digest_mismatch,
                          "checkpoint was trained on different data (id-map digest mismatch)");
  }
}

}  // namespace kgrec
