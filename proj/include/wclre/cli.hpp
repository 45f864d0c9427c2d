#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wclre/bench.hpp"
#include "wclre/config.hpp"
#include "wclre/ds_builder.hpp"
#include "wclre/finetune_eval.hpp"
#include "wclre/pretrain.hpp"
#include "wclre/records.hpp"
#include "wclre/reliability.hpp"

namespace wclre {

namespace cli_detail {

namespace fs = std::filesystem;

inline void ensure_parent_dir(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

inline std::vector<std::vector<std::string>> load_corpus(const fs::path& path,
                                                         const std::string& mode) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  if (files.empty()) throw data_error("corpus has no files: " + path.string());

  std::vector<std::vector<std::string>> sentences;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw data_error("cannot open corpus file: " + file.string());
    if (mode == "doc") {
      std::stringstream ss;
      ss << in.rdbuf();
      auto split = split_sentences(ss.str());
      sentences.insert(sentences.end(), std::make_move_iterator(split.begin()),
                       std::make_move_iterator(split.end()));
    } else {  // one sentence per line
      std::string line;
      while (std::getline(in, line)) {
        auto toks = tokenize_line(line);
        if (!toks.empty()) sentences.push_back(std::move(toks));
      }
    }
  }
  return sentences;
}

inline Dataset load_validated_dataset(const fs::path& path) {
  Dataset ds = load_dataset(path);
  const ValidationReport report = validate_dataset(ds);
  if (!report.ok())
    throw data_error("invalid dataset " + path.string() + ":\n" + report.to_text());
  return ds;
}

inline void write_text(const fs::path& path, const std::string& text) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path.string());
  out << text;
}

inline PipelineConfig load_config(const std::string& path, std::uint64_t* seed_override) {
  PipelineConfig cfg = parse_config(path);
  if (seed_override) cfg.encoder.seed = *seed_override;
  cfg.validate();
  return cfg;
}

inline std::string format_loss_log_line(std::uint64_t step, const StepLosses& l) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%llu\t%.17g\t%.17g\t%.17g\n",
                static_cast<unsigned long long>(step), l.wcl, l.mlm, l.total());
  return buf;
}

struct BuildDsArgs {
  std::string ha, corpus, out;
  std::size_t cap = 100;
  bool drop_pronouns = false;
  std::string corpus_mode = "line";
  std::size_t workers = 1;
};

inline void cmd_build_ds(const BuildDsArgs& args) {
  if (args.corpus_mode != "doc" && args.corpus_mode != "line")
    throw data_error("corpus mode must be 'doc' or 'line'");
  const Dataset ha = load_validated_dataset(args.ha);
  const auto corpus = load_corpus(args.corpus, args.corpus_mode);
  const TripletSet ts = extract_triplets(ha);
  auto [instances, stats] = align_corpus(ts, corpus, args.cap, args.workers);
  if (args.drop_pronouns) instances = filter_pronoun_entities(instances);

  Dataset ds;
  ds.instances = std::move(instances);
  rebuild_label_set(ds);
  ensure_parent_dir(args.out);
  save_dataset(ds, args.out);

  std::size_t na_count = 0;
  for (const auto& inst : ds.instances) na_count += inst.relation.is_na() ? 1 : 0;
  std::string stats_text;
  stats_text += "triplets\t" + std::to_string(ts.triplets.size()) + "\n";
  stats_text += "instances\t" + std::to_string(ds.instances.size()) + "\n";
  stats_text += "na_instances\t" + std::to_string(na_count) + "\n";
  stats_text += "capped_triplets\t" + std::to_string(stats.capped_triplets) + "\n";
  write_text(args.out + ".stats", stats_text);

  std::string flags;
  flags += "[build-ds]\n";
  flags += "ha = " + args.ha + "\n";
  flags += "corpus = " + args.corpus + "\n";
  flags += "cap = " + std::to_string(args.cap) + "\n";
  flags += "drop_pronouns = " + std::string(args.drop_pronouns ? "true" : "false") + "\n";
  flags += "corpus_mode = " + args.corpus_mode + "\n";
  write_text(args.out + ".cfg", flags);
}

}  // namespace cli_detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"wclre: weighted contrastive pre-training pipeline for relation extraction"};
  app.require_subcommand(1);

  cli_detail::BuildDsArgs bd;
  auto* build_ds = app.add_subcommand("build-ds", "construct DS data from an HA dataset");
  build_ds->add_option("--ha", bd.ha, "HA dataset file")->required();
  build_ds->add_option("--corpus", bd.corpus, "corpus file or directory")->required();
  build_ds->add_option("--out", bd.out, "output DS instance file")->required();
  build_ds->add_option("--cap", bd.cap, "per-triplet instance cap");
  build_ds->add_flag("--drop-pronouns", bd.drop_pronouns, "drop pronoun-entity instances");
  build_ds->add_option("--corpus-mode", bd.corpus_mode, "doc|line");
  build_ds->add_option("--workers", bd.workers, "alignment worker count");

  std::string ha_path, ds_path, model_path, config_path, out_path, test_path, init_path,
      resume_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double fraction = 0.25;
  std::string na_label = "NA", f1_mode = "exclude_na";

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
  };

  auto* train_rel = app.add_subcommand("train-reliability", "train the reliability classifier");
  train_rel->add_option("--ha", ha_path, "HA dataset file")->required();
  train_rel->add_option("--config", config_path, "pipeline config")->required();
  train_rel->add_option("--out", out_path, "output model checkpoint")->required();
  add_seed(train_rel);

  auto* score = app.add_subcommand("score", "score DS instances with label confidences");
  score->add_option("--model", model_path, "reliability model checkpoint")->required();
  score->add_option("--ds", ds_path, "DS dataset file")->required();
  score->add_option("--out", out_path, "output scored dataset")->required();

  auto* pretrain_cmd = app.add_subcommand("pretrain", "stage-1 contrastive + MLM pre-training");
  pretrain_cmd->add_option("--ds-scored", ds_path, "scored DS dataset")->required();
  pretrain_cmd->add_option("--config", config_path, "pipeline config")->required();
  pretrain_cmd->add_option("--out", out_path, "checkpoint directory")->required();
  pretrain_cmd->add_option("--resume", resume_path, "resume from a training checkpoint");
  add_seed(pretrain_cmd);

  auto* finetune_cmd = app.add_subcommand("finetune", "stage-2 supervised fine-tuning");
  finetune_cmd->add_option("--init", init_path, "checkpoint path or 'fresh'")->required();
  finetune_cmd->add_option("--ha", ha_path, "HA dataset file")->required();
  finetune_cmd->add_option("--config", config_path, "pipeline config")->required();
  finetune_cmd->add_option("--out", out_path, "output model checkpoint")->required();
  add_seed(finetune_cmd);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "micro-F1 evaluation");
  evaluate_cmd->add_option("--model", model_path, "model checkpoint")->required();
  evaluate_cmd->add_option("--test", test_path, "test dataset file")->required();
  evaluate_cmd->add_option("--na-label", na_label, "no-relation label");
  evaluate_cmd->add_option("--f1-mode", f1_mode, "exclude_na|all");
  evaluate_cmd->add_option("--out", out_path, "report file")->required();

  auto* split_cmd = app.add_subcommand("split", "low-resource random subset");
  split_cmd->add_option("--ha", ha_path, "HA dataset file")->required();
  split_cmd->add_option("--fraction", fraction, "subset fraction in (0, 1]")->required();
  split_cmd->add_option("--seed", seed, "split seed")->required();
  split_cmd->add_option("--out", out_path, "output dataset file")->required();

  auto* bench_cmd = app.add_subcommand("bench-noise", "synthetic label-noise benchmark");
  bench_cmd->add_option("--config", config_path, "pipeline config with a [bench] section")
      ->required();
  bench_cmd->add_option("--out", out_path, "report TSV")->required();

  try {
    app.parse(argc, argv);

    std::uint64_t* seed_override = seed_given ? &seed : nullptr;
    namespace cd = cli_detail;

    if (*build_ds) {
      cd::cmd_build_ds(bd);
    } else if (*train_rel) {
      const PipelineConfig cfg = cd::load_config(config_path, seed_override);
      const Dataset ha = cd::load_validated_dataset(ha_path);
      const ClassifierModel model = train_classifier(ha, cfg);
      cd::ensure_parent_dir(out_path);
      save_checkpoint(out_path, model);
      write_effective_config(out_path, cfg);
    } else if (*score) {
      const LoadedCheckpoint ck = load_checkpoint(model_path);
      const Dataset ds = cd::load_validated_dataset(ds_path);
      const Dataset scored = score_dataset(ck.bundle, ds);
      cd::ensure_parent_dir(out_path);
      save_dataset(scored, out_path);
      PipelineConfig cfg;
      cfg.encoder = ck.bundle.params.cfg;
      write_effective_config(out_path, cfg);
    } else if (*pretrain_cmd) {
      const PipelineConfig cfg = cd::load_config(config_path, seed_override);
      const Dataset ds = cd::load_validated_dataset(ds_path);
      std::filesystem::create_directories(out_path);
      std::optional<PretrainState> resume;
      if (!resume_path.empty()) resume = pretrain_resume(load_checkpoint(resume_path));

      const std::filesystem::path dir(out_path);
      std::ofstream log(dir / "pretrain.log",
                        resume ? std::ios::app : std::ios::trunc);
      if (!log) throw data_error("cannot write pretrain.log");
      const PretrainState state = pretrain(
          ds, cfg, std::move(resume),
          [&](std::uint64_t step, const StepLosses& l) {
            log << cd::format_loss_log_line(step, l);
          },
          [&](const PretrainState& s) {
            save_checkpoint(dir / ("ckpt_" + std::to_string(s.step) + ".bin"), s.model, &s.adam,
                            s.step);
          });
      save_checkpoint(dir / "ckpt_final.bin", state.model, &state.adam, state.step);
      write_effective_config(dir, cfg);
    } else if (*finetune_cmd) {
      const PipelineConfig cfg = cd::load_config(config_path, seed_override);
      const Dataset ha = cd::load_validated_dataset(ha_path);
      std::optional<ModelBundle> init;
      if (init_path != "fresh") init = load_checkpoint(init_path).bundle;
      const ClassifierModel model = finetune(std::move(init), ha, cfg);
      cd::ensure_parent_dir(out_path);
      save_checkpoint(out_path, model);
      write_effective_config(out_path, cfg);
    } else if (*evaluate_cmd) {
      const LoadedCheckpoint ck = load_checkpoint(model_path);
      const Dataset test = cd::load_validated_dataset(test_path);
      const EvalReport report =
          evaluate_model(ck.bundle, test, RelationLabel(na_label), f1_mode_from_string(f1_mode));
      cd::write_text(out_path, eval_report_text(report));
    } else if (*split_cmd) {
      const Dataset ha = cd::load_validated_dataset(ha_path);
      const Dataset subset = low_resource_split(ha, fraction, seed);
      cd::ensure_parent_dir(out_path);
      save_dataset(subset, out_path);
      PipelineConfig cfg;
      cfg.encoder.seed = seed;
      write_effective_config(out_path, cfg);
    } else if (*bench_cmd) {
      const PipelineConfig cfg = cd::load_config(config_path, nullptr);
      const BenchReport report = noise_benchmark(cfg, [](const std::string& m) { log_info(m); });
      cd::write_text(out_path, report.to_tsv());
      write_effective_config(out_path, cfg);
    }
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << '\n';
    return 1;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace wclre
