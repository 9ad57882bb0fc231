// tools/chainmmi.cpp

// Copyright 2026  The chainmmi Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: loss/gradient evaluation on PCTN arrays and text
// FSTs, toy graph construction, gradient checking and the training demo.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 at least one utterance
// failed numerically (loss, grad) or the gradient check failed.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chainmmi/chainmmi.hpp"
#include "chainmmi/testing.hpp"
#include "chainmmi/train_demo.hpp"

namespace fs = std::filesystem;
using namespace chainmmi;

namespace {

struct LossArgs {
  std::vector<std::string> logits;
  std::string lengths;
  std::vector<std::string> num_fsts;
  std::string den_fst;
  double leak = 1e-5;
  bool per_frame = false;
  std::size_t threads = 0;
  std::string out;
};

struct BuildArgs {
  std::string transcripts;
  std::string phones;
  std::string out;
  double self_loop = 0.5;
  std::string silence;
  double sil_between = 0.2;
  double sil_boundary = 0.8;
  double smoothing = 0.1;
  bool den_weights = false;
};

std::string Num(double v) { return detail::FormatDouble(v); }

std::ifstream OpenInput(const std::string &path) {
  std::ifstream in(path);
  CHAINMMI_CHECK(in.is_open(), "cannot open ", path);
  return in;
}

std::vector<std::size_t> ReadLengths(const std::string &path) {
  std::ifstream in = OpenInput(path);
  std::vector<std::size_t> lengths;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string tok, extra;
    if (!(fields >> tok)) continue;
    std::uint64_t v = 0;
    CHAINMMI_CHECK(detail::ParseUint(tok, &v) && !(fields >> extra), path,
                   ":", lineno, ": expected one non-negative integer");
    lengths.push_back(v);
  }
  return lengths;
}

LogLikBatch LoadLogits(const LossArgs &args) {
  CHAINMMI_CHECK(!args.logits.empty(), "--logits is required");
  if (args.logits.size() == 1) {
    const DenseArray a = ReadArray(args.logits[0]);
    if (a.dims.size() == 3) {
      const std::size_t nb = a.dims[0], tmax = a.dims[1], nd = a.dims[2];
      std::vector<std::size_t> lengths(nb, tmax);
      if (!args.lengths.empty()) lengths = ReadLengths(args.lengths);
      return MakeBatchFromPadded(a.values, nb, tmax, nd, lengths);
    }
    CHAINMMI_CHECK(a.dims.size() == 2, args.logits[0],
                   ": expected a (B, T, D) or (T, D) array");
  }
  CHAINMMI_CHECK(args.lengths.empty(),
                 "--lengths only applies to a single padded (B, T, D) array");
  std::vector<Matrix> seqs;
  for (const auto &path : args.logits) {
    DenseArray a = ReadArray(path);
    CHAINMMI_CHECK(a.dims.size() == 2, path, ": expected a (T, D) array");
    Matrix m;
    m.rows = a.dims[0];
    m.cols = a.dims[1];
    m.data = std::move(a.values);
    seqs.push_back(std::move(m));
  }
  return MakeBatch(seqs);
}

ChainGraph LoadFst(const std::string &path, PdfId num_pdfs) {
  std::ifstream in = OpenInput(path);
  try {
    return ParseFstText(in, num_pdfs);
  } catch (const ChainError &e) {
    throw ChainError(path + ": " + e.what());
  }
}

std::vector<std::string> ExpandFstPaths(const std::vector<std::string> &given) {
  if (given.size() == 1 && fs::is_directory(given[0])) {
    std::vector<std::string> files;
    for (const auto &entry : fs::directory_iterator(given[0]))
      if (entry.is_regular_file()) files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    CHAINMMI_CHECK(!files.empty(), "directory ", given[0], " has no files");
    return files;
  }
  return given;
}

struct LossRun {
  LogLikBatch batch;
  ChainLossResult result;
};

LossRun RunLoss(const LossArgs &args) {
  LogLikBatch batch = LoadLogits(args);
  const auto num_paths = ExpandFstPaths(args.num_fsts);
  CHAINMMI_CHECK(num_paths.size() == batch.batch_size, "got ", num_paths.size(),
                 " numerator FSTs for ", batch.batch_size, " utterances");
  const auto nd = static_cast<PdfId>(batch.num_pdfs);
  std::vector<ChainGraph> nums;
  for (std::size_t k : batch.order) nums.push_back(LoadFst(num_paths[k], nd));
  ChainGraph den = LoadFst(args.den_fst, nd);

  FBOptions opts;
  opts.leak_coefficient = args.leak;
  opts.num_threads = args.threads;
  ChainLossResult res =
      ChainLoss(batch, BatchGraphs(std::move(nums)),
                BroadcastGraph(std::move(den), batch.batch_size), opts,
                args.per_frame);
  return {std::move(batch), std::move(res)};
}

int ReportLoss(const LossRun &run) {
  const auto &res = run.result;
  const auto num = Unsort(res.num_log_probs, 1, run.batch.order);
  const auto den = Unsort(res.den_log_probs, 1, run.batch.order);
  std::vector<char> failed(res.failed.begin(), res.failed.end());
  failed = Unsort(failed, 1, run.batch.order);
  for (const auto &w : res.warnings) std::cerr << "WARNING: " << w << '\n';
  for (std::size_t i = 0; i < num.size(); ++i) {
    if (failed[i]) {
      std::cout << "utt " << i << " failed\n";
      continue;
    }
    std::cout << "utt " << i << " num_logprob " << Num(num[i]) << " den_logprob "
              << Num(den[i]) << " objective " << Num(num[i] - den[i]) << '\n';
  }
  std::cout << "objective " << Num(res.objective) << '\n'
            << "loss " << Num(res.loss) << '\n'
            << "frames " << res.num_frames << '\n'
            << "failed " << res.num_failed << '\n';
  return res.num_failed > 0 ? 2 : 0;
}

void AddLossOptions(CLI::App *cmd, LossArgs &args) {
  cmd->add_option("--logits", args.logits,
                  "PCTN log-likelihoods: one padded (B,T,D) array, or one "
                  "(T,D) array per utterance")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--lengths", args.lengths,
                  "Frame counts for a padded array, one per line")
      ->check(CLI::ExistingFile);
  cmd->add_option("--num-fsts", args.num_fsts,
                  "Numerator text FSTs in utterance order, or a directory "
                  "(files taken in name order)")
      ->required()
      ->check(CLI::ExistingPath);
  cmd->add_option("--den-fst", args.den_fst, "Denominator text FST")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--leak", args.leak, "Leaky-HMM coefficient")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--per-frame", args.per_frame,
                "Divide the reported loss by the number of valid frames");
  cmd->add_option("--threads", args.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
}

void AddLmOptions(CLI::App *cmd, BuildArgs &args) {
  cmd->add_option("--silence", args.silence, "Silence phone to insert");
  cmd->add_option("--sil-between", args.sil_between,
                  "Silence probability between words")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sil-boundary", args.sil_boundary,
                  "Silence probability at sentence boundaries")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--smoothing", args.smoothing, "Add-k smoothing constant")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

BigramLM LoadLm(const BuildArgs &args, const std::vector<Transcript> &corpus) {
  BigramOptions opts;
  if (!args.silence.empty()) opts.silence = args.silence;
  opts.sil_between = args.sil_between;
  opts.sil_boundary = args.sil_boundary;
  opts.smoothing = args.smoothing;
  return EstimateBigram(corpus, opts);
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  CHAINMMI_CHECK(out.is_open(), "cannot open ", path, " for writing");
  out << text;
  CHAINMMI_CHECK(out.good(), "write to ", path, " failed");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"chainmmi: LF-MMI objective and gradient over chain graphs"};
  app.require_subcommand(1);

  LossArgs loss_args;
  auto *loss_cmd = app.add_subcommand("loss", "Evaluate the chain objective");
  AddLossOptions(loss_cmd, loss_args);

  LossArgs grad_args;
  auto *grad_cmd = app.add_subcommand(
      "grad", "Evaluate the objective and write d objective / d logits");
  AddLossOptions(grad_cmd, grad_args);
  grad_cmd->add_option("--out", grad_args.out, "Output PCTN (B,T,D) gradient")
      ->required();

  std::uint64_t gc_seed = 0;
  std::size_t gc_trials = 50;
  double gc_leak = 1e-5;
  auto *gc_cmd = app.add_subcommand(
      "gradcheck", "Compare analytic gradients with finite differences");
  gc_cmd->add_option("--seed", gc_seed, "Random seed")->capture_default_str();
  gc_cmd->add_option("--trials", gc_trials, "Number of random instances")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gc_cmd->add_option("--leak", gc_leak, "Leaky-HMM coefficient")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  BuildArgs num_args;
  auto *num_cmd = app.add_subcommand(
      "make-num", "Build one numerator FST per transcript");
  num_cmd->add_option("--transcripts", num_args.transcripts, "Transcript file")
      ->required()
      ->check(CLI::ExistingFile);
  num_cmd->add_option("--phones", num_args.phones, "Phone table")
      ->required()
      ->check(CLI::ExistingFile);
  num_cmd->add_option("--out-dir", num_args.out, "Output directory")->required();
  num_cmd->add_option("--self-loop", num_args.self_loop, "Self-loop probability")
      ->capture_default_str();
  num_cmd->add_flag("--den-weights", num_args.den_weights,
                    "Weight arcs with the denominator's phone LM");
  AddLmOptions(num_cmd, num_args);

  BuildArgs den_args;
  auto *den_cmd = app.add_subcommand(
      "make-den", "Build the denominator FST from a phone bigram");
  den_cmd->add_option("--transcripts", den_args.transcripts, "Transcript file")
      ->required()
      ->check(CLI::ExistingFile);
  den_cmd->add_option("--phones", den_args.phones, "Phone table")
      ->required()
      ->check(CLI::ExistingFile);
  den_cmd->add_option("--out", den_args.out, "Output FST")->required();
  den_cmd->add_option("--self-loop", den_args.self_loop, "Self-loop probability")
      ->capture_default_str();
  AddLmOptions(den_cmd, den_args);

  TrainDemoConfig demo;
  std::string demo_phones, demo_corpus;
  auto *demo_cmd = app.add_subcommand(
      "train-demo", "Train an affine toy model with the chain objective");
  demo_cmd->add_option("--phones", demo_phones, "Phone table")
      ->required()
      ->check(CLI::ExistingFile);
  demo_cmd->add_option("--corpus", demo_corpus,
                       "Transcript file (synthesized when omitted)")
      ->check(CLI::ExistingFile);
  demo_cmd->add_option("--utterances", demo.num_utterances,
                       "Synthetic corpus size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  demo_cmd->add_option("--frames-per-phone", demo.frames_per_phone,
                       "Frames generated per phone")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  demo_cmd->add_option("--epochs", demo.epochs, "Training epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  demo_cmd->add_option("--lr", demo.learning_rate, "Learning rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  demo_cmd->add_option("--seed", demo.seed, "Random seed")->capture_default_str();
  demo_cmd->add_option("--leak", demo.leak_coefficient, "Leaky-HMM coefficient")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  demo_cmd->add_option("--threads", demo.num_threads, "Worker threads (0 = all cores)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*loss_cmd) return ReportLoss(RunLoss(loss_args));

    if (*grad_cmd) {
      const LossRun run = RunLoss(grad_args);
      const auto &res = run.result;
      const std::vector<double> grad = Unsort(
          res.grad, run.batch.max_frames * run.batch.num_pdfs, run.batch.order);
      const std::vector<std::uint64_t> dims{run.batch.batch_size,
                                            run.batch.max_frames,
                                            run.batch.num_pdfs};
      WriteArray(grad_args.out, dims, grad);
      return ReportLoss(run);
    }

    if (*gc_cmd) {
      FBOptions opts;
      opts.leak_coefficient = gc_leak;
      const GradCheckReport report = RunGradCheck(gc_seed, gc_trials, opts);
      for (std::size_t k = 0; k < report.trials.size(); ++k) {
        const auto &t = report.trials[k];
        std::cout << "trial " << k << " batch " << t.batch_size << " pdfs "
                  << t.num_pdfs << " frames " << t.num_frames << " objective "
                  << Num(t.objective) << " rel_error " << Num(t.rel_error) << '\n';
      }
      std::cout << "max_rel_error " << Num(report.max_rel_error) << " tolerance "
                << report.tolerance << ' '
                << (report.Passed() ? "PASS" : "FAIL") << '\n';
      return report.Passed() ? 0 : 2;
    }

    if (*num_cmd || *den_cmd) {
      const BuildArgs &args = *num_cmd ? num_args : den_args;
      std::ifstream phones_in = OpenInput(args.phones);
      const PhoneTopology topo(ReadPhoneTable(phones_in), args.self_loop);
      std::ifstream corpus_in = OpenInput(args.transcripts);
      const std::vector<Transcript> corpus = ReadTranscripts(corpus_in);
      CHAINMMI_CHECK(!corpus.empty(), args.transcripts, " has no transcripts");

      if (*den_cmd) {
        const BigramLM lm = LoadLm(args, corpus);
        WriteText(args.out, SerializeFstText(BuildDenominator(lm, topo)));
        return 0;
      }
      std::optional<BigramLM> lm;
      if (args.den_weights) lm = LoadLm(args, corpus);
      fs::create_directories(args.out);
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "num_%06zu.fst", i);
        const ChainGraph g =
            BuildNumerator(Flatten(corpus[i]), topo, lm ? &*lm : nullptr);
        WriteText((fs::path(args.out) / name).string(), SerializeFstText(g));
      }
      return 0;
    }

    if (*demo_cmd) {
      std::ifstream phones_in = OpenInput(demo_phones);
      demo.phones = ReadPhoneTable(phones_in);
      if (!demo_corpus.empty()) {
        std::ifstream corpus_in = OpenInput(demo_corpus);
        demo.corpus = ReadTranscripts(corpus_in);
        CHAINMMI_CHECK(!demo.corpus.empty(), demo_corpus, " has no transcripts");
      }
      const TrainDemoReport report = RunTrainDemo(demo, [](std::size_t e, double l) {
        std::cout << "epoch " << e << " loss " << Num(l) << std::endl;
      });
      std::cout << "utterances " << report.num_utterances << " pdfs "
                << report.num_pdfs << " frames " << report.num_frames << '\n'
                << "accuracy initial " << Num(report.initial_accuracy) << " final "
                << Num(report.final_accuracy) << '\n';
      return 0;
    }
  } catch (const std::exception &e) {
    std::cerr << "ERROR: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
