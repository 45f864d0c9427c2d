#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "wclre/encoder.hpp"
#include "wclre/masking.hpp"
#include "wclre/wcl.hpp"

namespace wclre {

// Synthetic-data benchmark: relation-correlated trigger tokens, label-flip
// noise on the distantly supervised side, three pipeline arms per seed.
struct NoiseBenchConfig {
  std::size_t num_relations = 4;
  std::size_t triggers_per_relation = 6;
  std::size_t filler_vocab = 40;
  std::size_t entity_pairs_per_relation = 12;
  std::size_t sentence_len_min = 5;
  std::size_t sentence_len_max = 9;
  std::size_t ha_size = 600;
  std::size_t ds_size = 1800;
  std::size_t test_size = 300;
  double na_fraction = 0.2;
  double noise_rate = 0.3;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  void validate() const {
    if (num_relations < 2) throw data_error("bench num_relations must be >= 2");
    if (triggers_per_relation < 1 || filler_vocab < 1 || entity_pairs_per_relation < 1)
      throw data_error("bench token pools must be non-empty");
    if (sentence_len_min < 3 || sentence_len_max < sentence_len_min)
      throw data_error("bench sentence length range invalid");
    if (ha_size < 1 || ds_size < 1 || test_size < 1) throw data_error("bench sizes must be >= 1");
    if (na_fraction < 0.0 || na_fraction >= 1.0)
      throw data_error("bench na_fraction must be in [0, 1)");
    if (noise_rate < 0.0 || noise_rate >= 1.0)
      throw data_error("bench noise_rate must be in [0, 1)");
    if (seeds.empty()) throw data_error("bench seeds must be non-empty");
  }
};

// Every hyperparameter and default of the two-stage pipeline. Serialized as a
// plain-text [section] / key = value file; unknown keys are rejected.
struct PipelineConfig {
  EncoderConfig encoder;

  struct Wcl {
    std::size_t bags_per_batch = 16;  // G
    std::size_t bag_size = 4;
    double temperature = 0.2;
    bool include_self = false;
    bool outer_anchor_weight = false;
    bool force_unit_confidence = false;  // unweighted-baseline switch
  } wcl;

  struct Mlm {
    MaskingPolicy policy;
    std::size_t na_per_step = 16;  // NA sequences cycled into each MLM step
  } mlm;

  struct Stage0 {  // reliability classifier training
    double lr = 1e-3;
    std::size_t epochs = 10;
    std::size_t batch = 32;
    double clip = 1.0;
  } stage0;

  struct Stage1 {  // contrastive + MLM pre-training
    double lr = 1e-3;
    std::size_t steps = 1000;
    double clip = 1.0;
    double warmup_frac = 0.1;
    std::size_t checkpoint_interval = 100;
  } stage1;

  struct Stage2 {  // supervised fine-tuning
    double lr = 5e-4;
    std::size_t epochs = 10;
    std::size_t batch = 32;
    double clip = 1.0;
  } stage2;

  struct Ds {
    std::size_t cap = 100;
    bool drop_pronouns = false;
    std::string corpus_mode = "line";  // "doc" or "line"
  } ds;

  struct Eval {
    std::string na_label = "NA";
    std::string f1_mode = "exclude_na";  // or "all"
  } eval;

  NoiseBenchConfig bench;

  WclOptions wcl_options() const {
    return {wcl.temperature, wcl.include_self, wcl.outer_anchor_weight};
  }

  void validate() const {
    encoder.validate();
    if (wcl.bags_per_batch < 1 || wcl.bag_size < 1)
      throw data_error("wcl batch shape must be positive");
    if (!(wcl.temperature > 0.0)) throw data_error("temperature must be positive");
    mlm.policy.validate();
    if (stage0.batch < 1 || stage2.batch < 1) throw data_error("batch size must be >= 1");
    if (stage1.steps < 1) throw data_error("stage1 steps must be >= 1");
    if (stage1.warmup_frac < 0.0 || stage1.warmup_frac > 1.0)
      throw data_error("warmup_frac must be in [0, 1]");
    if (stage1.checkpoint_interval < 1) throw data_error("checkpoint_interval must be >= 1");
    if (ds.cap < 1) throw data_error("ds cap must be >= 1");
    if (ds.corpus_mode != "doc" && ds.corpus_mode != "line")
      throw data_error("ds corpus_mode must be 'doc' or 'line'");
    if (eval.na_label.empty()) throw data_error("eval na_label must be non-empty");
    if (eval.f1_mode != "exclude_na" && eval.f1_mode != "all")
      throw data_error("eval f1_mode must be 'exclude_na' or 'all'");
    bench.validate();
  }

  std::string to_text() const;
};

namespace detail {

static_assert(sizeof(std::size_t) >= 8, "seeds are stored in size_t fields");

using ConfigTarget =
    std::variant<std::size_t*, double*, bool*, std::string*, std::vector<std::uint64_t>*>;

struct ConfigEntry {
  std::string section;
  std::string key;
  ConfigTarget target;
};

inline std::vector<ConfigEntry> config_entries(PipelineConfig& c) {
  return {
      {"encoder", "dim", &c.encoder.dim},
      {"encoder", "layers", &c.encoder.layers},
      {"encoder", "heads", &c.encoder.heads},
      {"encoder", "ffn", &c.encoder.ffn},
      {"encoder", "max_len", &c.encoder.max_len},
      {"encoder", "seed", &c.encoder.seed},
      {"encoder", "min_freq", &c.encoder.min_freq},
      {"wcl", "bags_per_batch", &c.wcl.bags_per_batch},
      {"wcl", "bag_size", &c.wcl.bag_size},
      {"wcl", "temperature", &c.wcl.temperature},
      {"wcl", "include_self", &c.wcl.include_self},
      {"wcl", "outer_anchor_weight", &c.wcl.outer_anchor_weight},
      {"wcl", "force_unit_confidence", &c.wcl.force_unit_confidence},
      {"mlm", "mask_rate", &c.mlm.policy.mask_rate},
      {"mlm", "replace_mask", &c.mlm.policy.replace_mask},
      {"mlm", "replace_random", &c.mlm.policy.replace_random},
      {"mlm", "keep", &c.mlm.policy.keep},
      {"mlm", "na_per_step", &c.mlm.na_per_step},
      {"optimizer.stage0", "lr", &c.stage0.lr},
      {"optimizer.stage0", "epochs", &c.stage0.epochs},
      {"optimizer.stage0", "batch", &c.stage0.batch},
      {"optimizer.stage0", "clip", &c.stage0.clip},
      {"optimizer.stage1", "lr", &c.stage1.lr},
      {"optimizer.stage1", "steps", &c.stage1.steps},
      {"optimizer.stage1", "clip", &c.stage1.clip},
      {"optimizer.stage1", "warmup_frac", &c.stage1.warmup_frac},
      {"optimizer.stage1", "checkpoint_interval", &c.stage1.checkpoint_interval},
      {"optimizer.stage2", "lr", &c.stage2.lr},
      {"optimizer.stage2", "epochs", &c.stage2.epochs},
      {"optimizer.stage2", "batch", &c.stage2.batch},
      {"optimizer.stage2", "clip", &c.stage2.clip},
      {"ds", "cap", &c.ds.cap},
      {"ds", "drop_pronouns", &c.ds.drop_pronouns},
      {"ds", "corpus_mode", &c.ds.corpus_mode},
      {"eval", "na_label", &c.eval.na_label},
      {"eval", "f1_mode", &c.eval.f1_mode},
      {"bench", "num_relations", &c.bench.num_relations},
      {"bench", "triggers_per_relation", &c.bench.triggers_per_relation},
      {"bench", "filler_vocab", &c.bench.filler_vocab},
      {"bench", "entity_pairs_per_relation", &c.bench.entity_pairs_per_relation},
      {"bench", "sentence_len_min", &c.bench.sentence_len_min},
      {"bench", "sentence_len_max", &c.bench.sentence_len_max},
      {"bench", "ha_size", &c.bench.ha_size},
      {"bench", "ds_size", &c.bench.ds_size},
      {"bench", "test_size", &c.bench.test_size},
      {"bench", "na_fraction", &c.bench.na_fraction},
      {"bench", "noise_rate", &c.bench.noise_rate},
      {"bench", "seeds", &c.bench.seeds},
  };
}

inline void assign_config_value(const ConfigEntry& entry, const std::string& raw) {
  const std::string where = entry.section + "." + entry.key;
  auto fail = [&](const char* want) {
    throw data_error("config key '" + where + "': expected " + want + ", got '" + raw + "'");
  };
  std::visit(
      [&](auto* target) {
        using T = std::remove_pointer_t<decltype(target)>;
        if constexpr (std::is_same_v<T, std::string>) {
          *target = raw;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (raw == "true")
            *target = true;
          else if (raw == "false")
            *target = false;
          else
            fail("true or false");
        } else if constexpr (std::is_same_v<T, double>) {
          try {
            std::size_t used = 0;
            *target = std::stod(raw, &used);
            if (used != raw.size()) fail("a number");
          } catch (const std::exception&) {
            fail("a number");
          }
        } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
          std::vector<std::uint64_t> values;
          std::stringstream ss(raw);
          std::string item;
          while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) fail("a comma-separated list of non-negative integers");
            try {
              std::size_t used = 0;
              values.push_back(std::stoull(item, &used));
              if (used != item.size()) fail("a comma-separated list of non-negative integers");
            } catch (const std::exception&) {
              fail("a comma-separated list of non-negative integers");
            }
          }
          if (values.empty()) fail("a non-empty list");
          *target = std::move(values);
        } else {  // size_t / uint64_t
          try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(raw, &used);
            if (used != raw.size() || raw[0] == '-') fail("a non-negative integer");
            *target = static_cast<T>(v);
          } catch (const data_error&) {
            throw;
          } catch (const std::exception&) {
            fail("a non-negative integer");
          }
        }
      },
      entry.target);
}

inline std::string format_config_value(const ConfigEntry& entry) {
  return std::visit(
      [&](auto* target) -> std::string {
        using T = std::remove_pointer_t<decltype(target)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return *target;
        } else if constexpr (std::is_same_v<T, bool>) {
          return *target ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", *target);
          return buf;
        } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
          std::string out;
          for (std::size_t i = 0; i < target->size(); ++i) {
            if (i) out += ",";
            out += std::to_string((*target)[i]);
          }
          return out;
        } else {
          return std::to_string(*target);
        }
      },
      entry.target);
}

}  // namespace detail

inline std::string PipelineConfig::to_text() const {
  auto entries = detail::config_entries(const_cast<PipelineConfig&>(*this));
  std::string out;
  std::string section;
  for (const auto& e : entries) {
    if (e.section != section) {
      if (!out.empty()) out += "\n";
      out += "[" + e.section + "]\n";
      section = e.section;
    }
    out += e.key + " = " + detail::format_config_value(e) + "\n";
  }
  return out;
}

// Strict parse: unknown sections or keys are errors, omitted keys keep their
// documented defaults. Lines starting with '#' are comments.
inline PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  auto entries = detail::config_entries(cfg);

  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw data_error("config line " + std::to_string(line_no) + ": malformed section header");
      section = trim(stripped.substr(1, stripped.size() - 2));
      bool known = false;
      for (const auto& e : entries) known = known || e.section == section;
      if (!known)
        throw data_error("config line " + std::to_string(line_no) + ": unknown section '" +
                         section + "'");
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw data_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (section.empty())
      throw data_error("config line " + std::to_string(line_no) + ": key '" + key +
                       "' outside any section");
    bool found = false;
    for (const auto& e : entries) {
      if (e.section == section && e.key == key) {
        detail::assign_config_value(e, value);
        found = true;
        break;
      }
    }
    if (!found)
      throw data_error("config line " + std::to_string(line_no) + ": unknown key '" + section +
                       "." + key + "'");
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Echoes the effective configuration next to an output (file gets
// "<out>.cfg", directory gets "<out>/effective.cfg") for provenance.
inline void write_effective_config(const std::filesystem::path& out_target,
                                   const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path side = fs::is_directory(out_target) ? out_target / "effective.cfg"
                                                     : fs::path(out_target.string() + ".cfg");
  std::ofstream out(side, std::ios::binary);
  if (!out) throw data_error("cannot write config sidecar: " + side.string());
  out << cfg.to_text();
}

}  // namespace wclre
