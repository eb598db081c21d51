// Copyright 2026 The emogen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// emogen: synth | splits | train | generate | evaluate | matrix
//
// Exit codes: 0 success, 1 I/O or unexpected failure, 2 configuration error,
// 3 data error, 4 numeric failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "emogen/emogen.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task response generation with emotion classification heads"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(emogen::kVersion));

  emogen::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write synthetic dialogue and emotion corpora with 8:1:1 splits");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Generator and split seed");
  synth_cmd->add_option("--size", synth.size, "Utterance/response pairs")->check(CLI::Range(10, 100000000));
  synth_cmd->add_option("--cls-size", synth.cls_size, "Examples per classification task")
      ->check(CLI::Range(10, 100000000));

  std::string config;
  std::string splits_out;
  auto* splits_cmd = app.add_subcommand("splits", "Write the train/valid/test files of every manifest task");
  splits_cmd->add_option("--config", config, "Run manifest")->required();
  splits_cmd->add_option("--out", splits_out, "Output directory")->required();

  std::optional<std::string> variant;
  auto* train_cmd = app.add_subcommand("train", "Train one variant of a manifest");
  train_cmd->add_option("--config", config, "Run manifest")->required();
  train_cmd->add_option("--variant", variant, "Variant name; default trains every task at its own weight");

  std::string checkpoint, input, output;
  emogen::BeamConfig beam;
  auto* gen_cmd = app.add_subcommand("generate", "Beam-search one response per input line");
  gen_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  gen_cmd->add_option("--input", input, "Utterances, one per line")->required();
  gen_cmd->add_option("--output", output, "Responses, one per line")->required();
  gen_cmd->add_option("--beams", beam.beam_width, "Beam width")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--no-repeat-ngram", beam.no_repeat_ngram, "Block repeated n-grams of this order (0 = off)");
  gen_cmd->add_option("--length-penalty", beam.length_penalty, "Length penalty exponent");
  gen_cmd->add_option("--max-len", beam.max_len, "Maximum response length in tokens");

  emogen::EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score responses and/or label predictions");
  eval_cmd->add_option("--hyp", eval.hyp, "Generated responses");
  eval_cmd->add_option("--ref", eval.ref, "Reference responses");
  eval_cmd->add_option("--pred", eval.pred, "Predicted labels (LABEL or TEXT<TAB>LABEL per line)");
  eval_cmd->add_option("--gold", eval.gold, "Gold labels (LABEL or TEXT<TAB>LABEL per line)");
  eval_cmd->add_option("--labels", eval.labels, "Label set, one per line");
  eval_cmd->add_option("--output", eval.output, "Report JSON")->required();

  auto* matrix_cmd = app.add_subcommand("matrix", "Train and evaluate every variant of a manifest");
  matrix_cmd->add_option("--config", config, "Run manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth_cmd) {
      emogen::cmd_synth(synth);
    } else if (*splits_cmd) {
      emogen::cmd_splits(emogen::load_manifest(config), splits_out);
    } else if (*train_cmd) {
      const auto row = emogen::cmd_train(emogen::load_manifest(config), variant);
      std::cerr << "[train] best epoch " << row.best_epoch << "\n";
    } else if (*gen_cmd) {
      const auto n = emogen::cmd_generate(checkpoint, input, output, beam);
      std::cerr << "[generate] " << n << " responses\n";
    } else if (*eval_cmd) {
      emogen::cmd_evaluate(eval);
    } else if (*matrix_cmd) {
      const auto rows = emogen::cmd_matrix(emogen::load_manifest(config));
      std::cerr << "[matrix] " << rows.size() << " variants\n";
    }
  } catch (const emogen::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const emogen::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const emogen::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
