#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wclre/adam.hpp"
#include "wclre/encoder.hpp"
#include "wclre/vocab.hpp"

namespace wclre {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format stores little-endian doubles");

// Everything needed to run a model: architecture, vocabulary, label order,
// and parameters. Label order is part of the model; logit k means labels[k].
struct ModelBundle {
  Vocabulary vocab;
  std::vector<RelationLabel> labels;
  EncoderParameters params;

  std::size_t label_index(const RelationLabel& r) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == r) return i;
    throw data_error("unknown label: '" + r.name + "'");
  }
};

namespace detail {

inline constexpr char kMagic[8] = {'W', 'C', 'L', 'R', 'E', '0', '0', '1'};

inline void write_tensors(std::ofstream& out, const EncoderParameters& p) {
  p.for_each_tensor([&](const std::string&, TensorKind, const Mat& m) {
    out.write(reinterpret_cast<const char*>(m.a.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
}

inline void read_tensors(std::ifstream& in, EncoderParameters& p, const std::string& what) {
  p.for_each_tensor([&](const std::string& name, TensorKind, Mat& m) {
    in.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw data_error("truncated checkpoint while reading " + what + " tensor " + name);
  });
}

}  // namespace detail

// Plain-text sidecar listing tensor names and shapes.
inline void write_tensor_sidecar(const std::filesystem::path& path, const EncoderParameters& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write sidecar: " + path.string());
  p.for_each_tensor([&](const std::string& name, TensorKind, const Mat& m) {
    out << name << '\t' << m.rows << '\t' << m.cols << '\n';
  });
}

// Versioned binary checkpoint: magic, JSON config block, then all tensors as
// little-endian doubles in declared order, optionally followed by the Adam
// moment tensors. No timestamps, so identical state gives identical bytes.
inline void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle,
                            const AdamState* adam = nullptr, std::uint64_t step = 0) {
  nlohmann::json header;
  header["version"] = 1;
  const EncoderConfig& c = bundle.params.cfg;
  header["encoder"] = {{"dim", c.dim},       {"layers", c.layers},   {"heads", c.heads},
                       {"ffn", c.ffn},       {"max_len", c.max_len}, {"seed", c.seed},
                       {"min_freq", c.min_freq}};
  std::vector<std::string> vocab_tokens(
      bundle.vocab.id_to_token.begin() + Vocabulary::kNumSpecial, bundle.vocab.id_to_token.end());
  header["vocab"] = vocab_tokens;
  std::vector<std::string> label_names;
  for (const auto& l : bundle.labels) label_names.push_back(l.name);
  header["labels"] = label_names;
  header["has_optimizer"] = adam != nullptr;
  header["step"] = step;
  header["adam_t"] = adam ? adam->t : 0;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write checkpoint: " + path.string());
  out.write(detail::kMagic, sizeof(detail::kMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  detail::write_tensors(out, bundle.params);
  if (adam) {
    detail::write_tensors(out, adam->m);
    detail::write_tensors(out, adam->v);
  }
  if (!out) throw data_error("failed writing checkpoint: " + path.string());
  write_tensor_sidecar(path.string() + ".tensors.txt", bundle.params);
}

struct LoadedCheckpoint {
  ModelBundle bundle;
  std::optional<AdamState> adam;
  std::uint64_t step = 0;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path.string());
  char magic[sizeof(detail::kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), detail::kMagic))
    throw data_error("not a checkpoint file: " + path.string());
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_text(len, '\0');
  in.read(header_text.data(), len);
  if (!in) throw data_error("truncated checkpoint header: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw data_error("corrupt checkpoint header: " + std::string(e.what()));
  }
  if (header.value("version", 0) != 1) throw data_error("unsupported checkpoint version");

  LoadedCheckpoint ck;
  const auto& ej = header["encoder"];
  EncoderConfig cfg;
  cfg.dim = ej["dim"].get<std::size_t>();
  cfg.layers = ej["layers"].get<std::size_t>();
  cfg.heads = ej["heads"].get<std::size_t>();
  cfg.ffn = ej["ffn"].get<std::size_t>();
  cfg.max_len = ej["max_len"].get<std::size_t>();
  cfg.seed = ej["seed"].get<std::uint64_t>();
  cfg.min_freq = ej["min_freq"].get<std::size_t>();

  for (const auto& t : header["vocab"]) ck.bundle.vocab.add_token(t.get<std::string>());
  for (const auto& l : header["labels"])
    ck.bundle.labels.push_back(RelationLabel(l.get<std::string>()));

  ck.bundle.params = EncoderParameters::init(cfg, ck.bundle.vocab.size(), ck.bundle.labels.size());
  detail::read_tensors(in, ck.bundle.params, "parameter");
  ck.step = header.value("step", std::uint64_t{0});
  if (header.value("has_optimizer", false)) {
    AdamState adam = AdamState::init(ck.bundle.params);
    detail::read_tensors(in, adam.m, "adam.m");
    detail::read_tensors(in, adam.v, "adam.v");
    adam.t = header.value("adam_t", std::uint64_t{0});
    ck.adam = std::move(adam);
  }
  in.peek();
  if (!in.eof()) throw data_error("trailing bytes in checkpoint: " + path.string());
  return ck;
}

}  // namespace wclre
