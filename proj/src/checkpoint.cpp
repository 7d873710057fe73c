#include "l2mu/checkpoint.hpp"

#include <stdexcept>
#include <string>

#include "l2mu/binary_io.hpp"
#include "l2mu/errors.hpp"

namespace l2mu {

namespace {

std::array<PopulationParams*, 6> populations(NeuronConfig& n) {
  return {&n.expand, &n.fuse, &n.harm, &n.u, &n.m, &n.h};
}

std::array<const PopulationParams*, 6> populations(const NeuronConfig& n) {
  return {&n.expand, &n.fuse, &n.harm, &n.u, &n.m, &n.h};
}

constexpr std::array<const char*, 9> kDimNames = {"n_channels", "n_expand", "n_fuse", "n_harm", "n_x",
                                                  "n_u",        "n_h",      "n_m",    "d"};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Model<float>& model, const PruneMask* mask) {
  model.validate();
  if (mask != nullptr) mask->check_matches(model);
  const Architecture& a = model.arch;
  ByteWriter w;
  w.put_bytes("L2MU");
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(a.variant));
  for (std::size_t v : {a.n_channels, a.n_expand, a.n_fuse, a.n_harm, a.n_x(), a.n_u, a.n_h, a.n_m(), a.d}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  w.put<double>(a.theta);
  w.put<double>(a.dt);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(a.n_classes));
  for (const PopulationParams* p : populations(model.neurons)) {
    w.put<double>(p->alpha);
    w.put<double>(p->beta);
    w.put<double>(p->threshold);
  }
  const auto tensors = model.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(kTensorNames[k].size()));
    w.put_bytes(kTensorNames[k]);
    w.put<std::uint8_t>(2);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors[k]->rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors[k]->cols()));
    for (float v : tensors[k]->values()) w.put<float>(v);
  }
  w.put<std::uint8_t>(mask != nullptr ? 1 : 0);
  if (mask != nullptr) {
    w.put<double>(mask->target_sparsity);
    for (const auto& keep : mask->keep) {
      for (std::size_t i = 0; i < keep.size(); i += 8) {
        std::uint8_t byte = 0;
        for (std::size_t b = 0; b < 8 && i + b < keep.size(); ++b) {
          if (keep[i + b] != 0) byte |= static_cast<std::uint8_t>(1u << b);
        }
        w.put<std::uint8_t>(byte);
      }
    }
  }
  return w.bytes();
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes);
  if (r.get_string(4, "magic") != "L2MU") throw FormatError("checkpoint: bad magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto variant = r.get<std::uint8_t>("variant");
  if (variant > 1) throw FormatError("checkpoint: unknown variant " + std::to_string(variant));

  std::array<std::uint32_t, 9> dims{};
  for (std::size_t i = 0; i < dims.size(); ++i) dims[i] = r.get<std::uint32_t>(kDimNames[i]);
  Architecture a;
  a.variant = static_cast<NeuronModel>(variant);
  a.n_channels = dims[0];
  a.n_expand = dims[1];
  a.n_fuse = dims[2];
  a.n_harm = dims[3];
  a.n_u = dims[5];
  a.n_h = dims[6];
  a.d = dims[8];
  a.theta = r.get<double>("theta");
  a.dt = r.get<double>("dt");
  a.n_classes = r.get<std::uint32_t>("n_classes");
  if (dims[4] != a.n_x()) throw FormatError("checkpoint: n_x does not equal n_harm");
  if (dims[7] != a.n_m()) throw FormatError("checkpoint: n_m does not equal n_u * d");

  NeuronConfig neurons;
  for (PopulationParams* p : populations(neurons)) {
    p->alpha = r.get<double>("neuron alpha");
    p->beta = r.get<double>("neuron beta");
    p->threshold = r.get<double>("neuron threshold");
  }

  Checkpoint out;
  try {
    out.model = Model<float>::zeros(a, neurons);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: inconsistent architecture: ") + e.what());
  }
  auto tensors = out.model.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    const std::string expected(kTensorNames[k]);
    const auto len = r.get<std::uint16_t>("tensor name length");
    const std::string name = r.get_string(len, "tensor name");
    if (name != expected) throw FormatError("checkpoint: expected tensor " + expected + ", found " + name);
    const auto rank = r.get<std::uint8_t>(expected + " rank");
    if (rank != 2) throw FormatError("checkpoint: " + expected + " rank must be 2");
    const auto rows = r.get<std::uint32_t>(expected + " rows");
    const auto cols = r.get<std::uint32_t>(expected + " cols");
    if (rows != tensors[k]->rows() || cols != tensors[k]->cols()) {
      throw FormatError("checkpoint: " + expected + " shape does not match the architecture");
    }
    for (float& v : tensors[k]->values()) v = r.get<float>(expected + " values");
  }

  const auto has_mask = r.get<std::uint8_t>("mask flag");
  if (has_mask > 1) throw FormatError("checkpoint: bad mask flag");
  if (has_mask == 1) {
    PruneMask mask;
    mask.target_sparsity = r.get<double>("mask sparsity");
    for (std::size_t k = 0; k < kTensorCount; ++k) {
      const std::size_t n = tensors[k]->size();
      auto& keep = mask.keep[k];
      keep.resize(n);
      for (std::size_t i = 0; i < n; i += 8) {
        const auto byte = r.get<std::uint8_t>(std::string(kTensorNames[k]) + " mask");
        for (std::size_t b = 0; b < 8 && i + b < n; ++b) keep[i + b] = (byte >> b) & 1u;
      }
    }
    out.mask = std::move(mask);
  }
  if (!r.at_end()) throw FormatError("checkpoint: trailing bytes after mask section");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const PruneMask* mask) {
  write_file_atomic(path, encode_checkpoint(model, mask));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace l2mu
