// Copyright 2026 The ihlab Authors
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


// ihlab: generate encoded datasets, run the attacks, evaluate, and replay
// earlier runs from their manifests.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ihlab/ihlab.hpp"

#ifndef IHLAB_VERSION
#define IHLAB_VERSION "dev"
#endif

namespace {

namespace fs = std::filesystem;
using namespace ihlab;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what) {}
};

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Parameters bound to CLI options, remembered for the manifest.
class Params {
 public:
  template <typename T>
  CLI::Option* option(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
    entries_.push_back({name, [&var] {
                          std::ostringstream os;
                          os << std::setprecision(17) << var;
                          return os.str();
                        }});
    return app->add_option("--" + name, var, desc)->capture_default_str();
  }
  CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& desc) {
    entries_.push_back({name, [&var] { return std::string(var ? "true" : "false"); }});
    flags_.push_back(name);
    return app->add_flag("--" + name, var, desc);
  }
  bool is_flag(const std::string& name) const {
    return std::find(flags_.begin(), flags_.end(), name) != flags_.end();
  }
  bool has(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == name; });
  }

  void write_manifest(const std::string& subcommand, const fs::path& dir) const {
    std::ostringstream os;
    os << "subcommand = " << subcommand << '\n' << "version = " << IHLAB_VERSION << '\n';
    for (const auto& [name, value] : entries_) os << name << " = " << value() << '\n';
    fs::create_directories(dir);
    std::ofstream(dir / "manifest.txt") << os.str();
  }

 private:
  std::vector<std::pair<std::string, std::function<std::string()>>> entries_;
  std::vector<std::string> flags_;
};

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  if (!kv.count("subcommand")) throw UsageError("manifest has no subcommand");
  return kv;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string numbered(const std::string& stem, std::size_t i, const Image& img) {
  std::ostringstream os;
  os << stem << std::setw(4) << std::setfill('0') << i << (img.shape().channels == 1 ? ".pgm" : ".ppm");
  return os.str();
}

void write_image_dir(const std::vector<Image>& images, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < images.size(); ++i) write_pnm(images[i], dir / numbered("img", i, images[i]));
}

// A directory of PGM/PPM files (sorted by name) or an IHED image file.
std::vector<Image> load_images(const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      const auto ext = entry.path().extension();
      if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Image> out;
    for (const auto& f : files) out.push_back(read_pnm(f));
    if (out.empty()) throw std::runtime_error("no PGM/PPM images in " + path.string());
    return out;
  }
  return read_images(path).tensors;
}

Box parse_box(const std::string& text) {
  Box b;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> b.lo >> comma >> b.hi) || comma != ',' || !(b.lo < b.hi)) {
    throw UsageError("--box expects lo,hi with lo < hi, got '" + text + "'");
  }
  return b;
}

Shape parse_shape_arg(const std::string& text) {
  try {
    return parse_shape(text);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

void write_metrics(const fs::path& path, const std::vector<std::pair<std::string, double>>& rows) {
  std::ostringstream os;
  os << "metric,value\n" << std::setprecision(10);
  for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
  write_text(path, os.str());
}

// ------------------------------------------------------------------- gen

struct GenArgs {
  int num_private = 40;
  int classes = 10;
  std::string shape = "16x16x1";
  int k = 4;
  int epochs = 30;
  bool no_sign_flip = false;
  int public_pool = 200;
  std::uint32_t seed = 0;
  std::string out;
};

// Encoder seed = --seed; private data uses derive_seed(seed, 1), the public
// pool derive_seed(seed, 2).
void run_gen(const GenArgs& a, const Params& params) {
  const Shape shape = parse_shape_arg(a.shape);
  EncoderConfig cfg;
  cfg.k = a.k;
  cfg.epochs = a.epochs;
  cfg.sign_flip = !a.no_sign_flip;
  cfg.public_pool_size = a.public_pool;
  cfg.seed = a.seed;
  try {
    cfg.validate();
    IHLAB_REQUIRE(a.num_private >= 2, "--num-private must be at least 2");
    IHLAB_REQUIRE(a.classes >= 1 && a.classes <= a.num_private,
                  "--classes must lie in [1, --num-private]");
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const fs::path out = a.out;
  const auto priv = stage("generate", [&] {
    return generate_synthetic(a.num_private, shape, a.classes, derive_seed(a.seed, 1));
  });
  const auto pub = stage("generate", [&] { return generate_public_pool(a.public_pool, shape, derive_seed(a.seed, 2)); });
  const auto ds = stage("encode", [&] { return encode_dataset(priv, pub, cfg); });
  stage("write", [&] {
    fs::create_directories(out);
    write_dataset(ds, out / "encoded.ihed");
    write_images(priv.images, &priv.labels, out / "private.ihed");
    if (!pub.images.empty()) write_images(pub.images, nullptr, out / "public.ihed");
    params.write_manifest("gen", out);
  });
  std::cout << "wrote " << ds.size() << " encodings to " << (out / "encoded.ihed").string() << '\n';
}

// ---------------------------------------------------------------- attack

struct AttackArgs {
  std::string in;
  std::string out;
  int M = 0;
  bool baseline_only = false;
  bool l1 = false;
  std::string box = "0,1";
  int refine_rounds = 2;
  std::uint32_t seed = 1;
  std::string truth;
  std::string originals;
  bool no_eval = false;
  int threads = 0;
};

fs::path sibling(const fs::path& in, const char* name) { return in.parent_path() / name; }

void run_attack_cmd(const AttackArgs& a, const Params& params) {
  const fs::path in = a.in, out = a.out;
  AttackOptions opts;
  opts.clique_growth = a.M;
  opts.baseline_only = a.baseline_only;
  opts.l1 = a.l1;
  opts.box = parse_box(a.box);
  opts.refine_rounds = a.refine_rounds;
  opts.seed = a.seed;
  opts.threads = a.threads;
  if (a.M < 0) throw UsageError("--M must be nonnegative");
  if (a.refine_rounds < 0) throw UsageError("--refine-rounds must be nonnegative");

  // The attack sees only the container; the sidecar is opened afterwards.
  const auto ds = stage("load", [&] { return read_dataset(in); });
  const auto result = stage("pipeline", [&] { return run_attack(ds, CorrelationSimilarity{}, opts); });
  stage("write", [&] {
    fs::create_directories(out);
    write_image_dir(result.images(), out / "recovered");
    write_image_dir(result.baseline, out / "baseline");
    std::ostringstream csv;
    result.assignment.write_csv(csv);
    write_text(out / "assignment.csv", csv.str());
    std::ostringstream t;
    t << "stage,seconds\n";
    for (const auto& [name, secs] : result.timings) t << name << ',' << secs << '\n';
    write_text(out / "timings.csv", t.str());
    params.write_manifest("attack", out);
  });
  std::cout << "recovered " << result.images().size() << " images ("
            << (a.baseline_only ? "abs-mean baseline" : result.reconstruction.method) << ")\n";
  for (const auto& w : result.reconstruction.warnings) std::cerr << "warning: " << w << '\n';

  if (a.no_eval) return;
  const fs::path truth = a.truth.empty() ? truth_path_for(in) : fs::path(a.truth);
  const fs::path originals = a.originals.empty() ? sibling(in, "private.ihed") : fs::path(a.originals);
  if (!fs::exists(truth) || !fs::exists(originals)) return;
  stage("evaluate", [&] {
    const auto records = read_truth(truth);
    const auto orig = load_images(originals);
    const auto ev = evaluate_attack(result, records, orig);
    write_metrics(out / "metrics.csv", {{"assignment_accuracy", ev.assignment_accuracy},
                                        {"mean_ssim", ev.recovered.mean_ssim},
                                        {"mean_psnr", ev.recovered.mean_psnr},
                                        {"mean_rmse", ev.recovered.mean_rmse},
                                        {"baseline_mean_ssim", ev.baseline.mean_ssim}});
    std::ostringstream m;
    ev.recovered.write_csv(m);
    write_text(out / "matches.csv", m.str());
    std::cout << "assignment accuracy " << ev.assignment_accuracy << ", mean SSIM "
              << ev.recovered.mean_ssim << " (baseline " << ev.baseline.mean_ssim << ")\n";
  });
}

// ----------------------------------------------------------- prng-attack

struct PrngArgs {
  std::string in;
  std::string out;
  int window = 20;
  std::uint32_t seed_lo = 0;
  std::string pool;
  std::string originals;
  bool exhaustive = false;
  int threads = 0;
};

void run_prng(const PrngArgs& a, const Params& params) {
  if (a.window < 0 || a.window > 32) throw UsageError("--window must lie in [0, 32]");
  const std::uint64_t hi = std::uint64_t{a.seed_lo} + (std::uint64_t{1} << a.window) - 1;
  if (hi > 0xffffffffull) throw UsageError("--seed-lo + 2^window exceeds the 32-bit seed space");
  const fs::path in = a.in, out = a.out;
  const auto ds = stage("load", [&] { return read_dataset(in); });
  SeedSearchConfig cfg;
  cfg.seed_lo = a.seed_lo;
  cfg.seed_hi = static_cast<std::uint32_t>(hi);
  cfg.threads = a.threads;
  cfg.early_stop = !a.exhaustive;
  const auto res = stage("search", [&] { return search_seed(ds, cfg); });
  if (res.vacuous) throw StageError("search", to_string(SeedVerdict::kVacuous));
  std::ostringstream report;
  report << "tested = " << res.tested << "\nfast_accepts = " << res.fast_accepts
         << "\nseconds = " << res.seconds << '\n';
  if (!res.secrets) {
    write_text(out / "search.txt", report.str() + "seed = none\n");
    params.write_manifest("prng-attack", out);
    throw StageError("search", "no seed in [" + std::to_string(cfg.seed_lo) + ", " +
                                   std::to_string(cfg.seed_hi) + "] reproduces the encodings");
  }
  report << "seed = " << res.secrets->seed << '\n';
  std::optional<PublicPool> pool;
  const fs::path pool_path = a.pool.empty() ? sibling(in, "public.ihed") : fs::path(a.pool);
  if (fs::exists(pool_path)) {
    pool = stage("load", [&] { return PublicPool{read_images(pool_path).tensors}; });
  }
  const auto rec = stage("reconstruct", [&] {
    return exact_reconstruct(ds, *res.secrets, pool ? &*pool : nullptr);
  });
  report << "method = " << rec.method << '\n';
  stage("write", [&] {
    write_image_dir(rec.images, out / "recovered");
    write_text(out / "search.txt", report.str());
    params.write_manifest("prng-attack", out);
  });
  std::cout << "seed " << res.secrets->seed << " after " << res.tested << " candidates in "
            << res.seconds << " s; " << rec.method << '\n';
  const fs::path originals = a.originals.empty() ? sibling(in, "private.ihed") : fs::path(a.originals);
  if (!fs::exists(originals)) return;
  stage("evaluate", [&] {
    const auto orig = load_images(originals);
    IHLAB_REQUIRE(orig.size() == rec.images.size(), "original count mismatch");
    double worst = 0.0, ssim_sum = 0.0;
    for (std::size_t i = 0; i < orig.size(); ++i) {
      worst = std::max(worst, max_abs_error(rec.images[i], orig[i]));
      ssim_sum += ssim(rec.images[i], orig[i]);
    }
    write_metrics(out / "metrics.csv", {{"max_abs_error", worst},
                                        {"mean_ssim", ssim_sum / static_cast<double>(orig.size())}});
    std::cout << "max per-pixel error " << worst << '\n';
  });
}

// ---------------------------------------------------------------- theory

struct TheoryArgs {
  std::string experiment;
  std::string game;
  std::string encoder = "identity";
  double noise_scale = 1.0;
  int trials = theory::kDefaultTrials;
  int n = 0;
  int m = 0;
  int dim = 0;
  double gamma = 0.25;
  double tau = 0.1;
  int epochs = 10;
  double learning_rate = 1.0;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
};

theory::LocalEncoder make_encoder(const TheoryArgs& a, const theory::LearningProblem& p) {
  if (a.encoder == "identity") return theory::LocalEncoder::identity();
  if (a.encoder == "noise") return theory::LocalEncoder::additive_noise(a.noise_scale);
  if (a.encoder == "label-revealing") return theory::LocalEncoder::label_revealing(p, {0, false});
  if (a.encoder == "null") return theory::LocalEncoder::null_encoder();
  throw UsageError("unknown encoder '" + a.encoder + "'");
}

void run_theory(const TheoryArgs& a, const Params& params) {
  using namespace ihlab::theory;
  if (a.experiment.empty() == a.game.empty()) throw UsageError("give exactly one of --experiment and --game");
  if (!a.experiment.empty() && a.experiment != "hybrid" && a.experiment != "rich-class" &&
      a.experiment != "dichotomy") {
    throw UsageError("--experiment must be hybrid, rich-class or dichotomy");
  }
  if (!a.game.empty() && a.game != "dataset" && a.game != "instance") {
    throw UsageError("--game must be dataset or instance");
  }
  if (a.trials <= 0 || a.n < 0 || a.m < 0) throw UsageError("--trials must be positive, --n and --m nonnegative");
  LearnerConfig learner{a.epochs, a.learning_rate};
  ReportRow row;
  std::ostringstream ps;
  ps << "trials=" << a.trials << " seed=" << a.seed;

  if (a.experiment == "hybrid") {
    const auto p = LearningProblem::orthogonal(std::max(a.dim, 2), 2);
    const auto enc = make_encoder(a, p);
    HybridConfig cfg;
    if (a.n > 0) cfg.n = a.n;
    cfg.trials = a.trials;
    cfg.learner = learner;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    const auto r = stage("hybrid", [&] { return run_hybrid_adversary(p, enc, cfg); });
    ps << " n=" << cfg.n;
    row = {"hybrid", enc.name(), ps.str(), 0.0, r.delta_hat, r.endpoint(),
           {r.endpoint() - r.endpoint_slack(), r.endpoint() + r.endpoint_slack()},
           r.endpoint_bound(), r.endpoint() >= r.endpoint_bound() - r.endpoint_slack() && r.telescopes()};
  } else if (a.experiment == "rich-class") {
    RichClassConfig cfg;
    if (a.n > 0) cfg.n = a.n;
    if (a.m > 0) cfg.m = a.m;
    const auto p = LearningProblem::orthogonal(std::max(a.dim, cfg.m), cfg.m);
    const auto enc = make_encoder(a, p);
    cfg.gamma = a.gamma;
    cfg.trials = a.trials;
    cfg.learner = learner;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    if (enc.kind != EncoderKind::kIdentity) cfg.target_error.reset();
    const auto r = stage("rich-class", [&] { return run_rich_class_adversary(p, enc, cfg); });
    ps << " n=" << cfg.n << " m=" << cfg.m << " gamma=" << a.gamma << " richness=" << r.richness.min_probability;
    const auto ci = r.estimate.gap_interval();
    row = {"rich-class", enc.name(), ps.str(), r.epsilon_hat(), 0.0, r.estimate.gap(), ci, r.bound(),
           r.estimate.gap() >= r.bound() - ci.half_width()};
  } else if (a.experiment == "dichotomy") {
    const auto p = LearningProblem::orthogonal(std::max(a.dim, 8), 1);
    const auto enc = make_encoder(a, p);
    DichotomyConfig cfg;
    if (a.m > 0) cfg.m = a.m;
    cfg.tau = a.tau;
    cfg.trials = a.trials;
    cfg.learner = learner;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    const auto r = stage("dichotomy", [&] { return run_dichotomy(p, enc, cfg); });
    ps << " m=" << cfg.m << " tau=" << a.tau << " arm=" << r.arm() << " boosted=" << r.boosted.value();
    if (r.attack) {
      const auto ci = r.attack->interval();
      row = {"dichotomy", enc.name(), ps.str(), r.epsilon_hat, 0.0, r.attack->advantage(), ci,
             r.attack_bound(), r.attack->advantage() >= r.attack_bound() - ci.half_width()};
    } else {
      row = {"dichotomy", enc.name(), ps.str(), r.epsilon_hat, 0.0, r.boosted.value(),
             r.boosted.interval(), r.accuracy_bound(), r.high_accuracy()};
    }
  } else {
    const auto p = LearningProblem::orthogonal(std::max(a.dim, 4), 1);
    const auto enc = make_encoder(a, p);
    const int n = a.n > 0 ? a.n : 16;
    const auto est = stage("game", [&] {
      return a.game == "dataset"
                 ? play_dataset_game(p, differing_element_adversary(p, enc, n), enc, a.trials, a.seed, a.threads)
                 : play_instance_game(p, nearest_instance_adversary(p, enc), enc, n, a.trials, a.seed, a.threads);
    });
    ps << " n=" << n;
    row = {a.game + "-game", enc.name(), ps.str(), 0.0, 0.0, est.advantage(), est.interval(), 0.0, true};
  }

  stage("write", [&] {
    std::ostringstream csv;
    write_report_csv(csv, {row});
    write_text(fs::path(a.out) / "report.csv", csv.str());
    params.write_manifest("theory", a.out);
  });
  std::cout << row.experiment << ' ' << row.encoder << ": advantage " << row.advantage << " ["
            << row.ci.lo << ", " << row.ci.hi << "], bound " << row.bound << ", "
            << (row.pass ? "pass" : "fail") << '\n';
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string recovered;
  std::string originals;
  std::string out;
};

void run_eval(const EvalArgs& a, const Params& params) {
  const auto rec = stage("load", [&] { return load_images(a.recovered); });
  const auto orig = stage("load", [&] { return load_images(a.originals); });
  const auto report = stage("match", [&] { return match_reconstructions(rec, orig); });
  stage("write", [&] {
    std::ostringstream m;
    report.write_csv(m);
    write_text(fs::path(a.out) / "matches.csv", m.str());
    write_metrics(fs::path(a.out) / "metrics.csv", {{"mean_ssim", report.mean_ssim},
                                                    {"mean_psnr", report.mean_psnr},
                                                    {"mean_rmse", report.mean_rmse}});
    params.write_manifest("eval", a.out);
  });
  std::cout << "matched " << rec.size() << " images, mean SSIM " << report.mean_ssim << '\n';
}

// ------------------------------------------------------------------- app

int run(const std::vector<std::string>& argv, int depth = 0);

struct Cli {
  CLI::App app{"ihlab: instance-hiding attack lab"};
  GenArgs gen;
  AttackArgs attack;
  PrngArgs prng;
  TheoryArgs theory;
  EvalArgs eval;
  std::string replay_manifest, replay_out;
  std::map<std::string, Params> params;
  std::map<std::string, CLI::App*> subs;

  Cli() {
    app.require_subcommand(1);
    app.set_version_flag("--version", IHLAB_VERSION);

    auto* g = subs["gen"] = app.add_subcommand("gen", "generate and encode a synthetic dataset");
    auto& pg = params["gen"];
    pg.option(g, "num-private", gen.num_private, "private images |X|");
    pg.option(g, "classes", gen.classes, "label classes");
    pg.option(g, "shape", gen.shape, "image shape HxWxC");
    pg.option(g, "k", gen.k, "images per mix");
    pg.option(g, "epochs", gen.epochs, "encodings per private image per side (N)");
    pg.flag(g, "no-sign-flip", gen.no_sign_flip, "disable the random sign mask");
    pg.option(g, "public-pool", gen.public_pool, "public pool size");
    pg.option(g, "seed", gen.seed, "master seed (also the encoder seed)");
    pg.option(g, "out", gen.out, "output directory")->required();

    auto* at = subs["attack"] = app.add_subcommand("attack", "cluster, assign and reconstruct");
    auto& pa = params["attack"];
    pa.option(at, "in", attack.in, "encoded dataset")->required()->check(CLI::ExistingFile);
    pa.option(at, "out", attack.out, "output directory")->required();
    pa.option(at, "M", attack.M, "clique growth (0 = N/4)");
    pa.flag(at, "baseline-only", attack.baseline_only, "stop after the abs-mean baseline");
    pa.flag(at, "l1", attack.l1, "L1 penalty in the abs-GD recovery");
    pa.option(at, "box", attack.box, "pixel box lo,hi");
    pa.option(at, "refine-rounds", attack.refine_rounds, "residual re-assignment rounds");
    pa.option(at, "seed", attack.seed, "representative sampling seed");
    pa.option(at, "truth", attack.truth, "ground truth for evaluation (default: sidecar)");
    pa.option(at, "originals", attack.originals, "originals for evaluation (default: private.ihed)");
    pa.flag(at, "no-eval", attack.no_eval, "skip evaluation");
    pa.option(at, "threads", attack.threads, "worker threads (0 = all cores)");

    auto* pr = subs["prng-attack"] = app.add_subcommand("prng-attack", "recover the encoder seed");
    auto& pp = params["prng-attack"];
    pp.option(pr, "in", prng.in, "encoded dataset")->required()->check(CLI::ExistingFile);
    pp.option(pr, "out", prng.out, "output directory")->required();
    pp.option(pr, "window", prng.window, "search 2^window seeds");
    pp.option(pr, "seed-lo", prng.seed_lo, "first seed of the window");
    pp.option(pr, "pool", prng.pool, "public pool (default: public.ihed next to --in)");
    pp.option(pr, "originals", prng.originals, "originals for evaluation (default: private.ihed)");
    pp.flag(pr, "exhaustive", prng.exhaustive, "scan the whole window");
    pp.option(pr, "threads", prng.threads, "worker threads (0 = all cores)");

    auto* th = subs["theory"] = app.add_subcommand("theory", "learning-theory simulations");
    auto& pt = params["theory"];
    pt.option(th, "experiment", theory.experiment, "hybrid, rich-class or dichotomy");
    pt.option(th, "game", theory.game, "dataset or instance");
    pt.option(th, "encoder", theory.encoder, "identity, noise, label-revealing or null");
    pt.option(th, "noise-scale", theory.noise_scale, "noise encoder scale");
    pt.option(th, "trials", theory.trials, "game plays");
    pt.option(th, "n", theory.n, "dataset size (0 = default)");
    pt.option(th, "m", theory.m, "concepts (rich-class) or training samples (dichotomy); 0 = default");
    pt.option(th, "dim", theory.dim, "instance dimension (0 = smallest valid)");
    pt.option(th, "gamma", theory.gamma, "richness margin");
    pt.option(th, "tau", theory.tau, "dichotomy slack");
    pt.option(th, "epochs", theory.epochs, "perceptron epochs");
    pt.option(th, "learning-rate", theory.learning_rate, "perceptron step");
    pt.option(th, "seed", theory.seed, "master seed");
    pt.option(th, "threads", theory.threads, "worker threads (0 = all cores)");
    pt.option(th, "out", theory.out, "output directory")->required();

    auto* ev = subs["eval"] = app.add_subcommand("eval", "match reconstructions to originals");
    auto& pe = params["eval"];
    pe.option(ev, "recovered", eval.recovered, "directory of PGM/PPM files or image file")
        ->required()->check(CLI::ExistingPath);
    pe.option(ev, "originals", eval.originals, "directory of PGM/PPM files or image file")
        ->required()->check(CLI::ExistingPath);
    pe.option(ev, "out", eval.out, "output directory")->required();

    auto* rp = subs["replay"] = app.add_subcommand("replay", "re-run a manifest");
    rp->add_option("manifest", replay_manifest, "manifest.txt of an earlier run")
        ->required()->check(CLI::ExistingFile);
    rp->add_option("--out", replay_out, "output directory (default: the manifest's)");
  }

  std::vector<std::string> replay_argv() const {
    const auto kv = read_manifest(replay_manifest);
    const std::string sub = kv.at("subcommand");
    const auto it = params.find(sub);
    if (it == params.end()) throw UsageError("manifest names unknown subcommand '" + sub + "'");
    std::vector<std::string> argv{sub};
    for (const auto& [key, value] : kv) {
      if (key == "subcommand" || key == "version") continue;
      if (!it->second.has(key)) throw UsageError("manifest key '" + key + "' is not a " + sub + " option");
      std::string v = key == "out" && !replay_out.empty() ? replay_out : value;
      if (it->second.is_flag(key)) {
        if (v == "true") argv.push_back("--" + key);
      } else if (!v.empty()) {
        argv.push_back("--" + key);
        argv.push_back(v);
      }
    }
    return argv;
  }
};

int run(const std::vector<std::string>& argv, int depth) {
  Cli cli;
  try {
    std::vector<std::string> rev(argv.rbegin(), argv.rend());
    cli.app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = cli.app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (cli.subs["gen"]->parsed()) run_gen(cli.gen, cli.params["gen"]);
    if (cli.subs["attack"]->parsed()) run_attack_cmd(cli.attack, cli.params["attack"]);
    if (cli.subs["prng-attack"]->parsed()) run_prng(cli.prng, cli.params["prng-attack"]);
    if (cli.subs["theory"]->parsed()) run_theory(cli.theory, cli.params["theory"]);
    if (cli.subs["eval"]->parsed()) run_eval(cli.eval, cli.params["eval"]);
    if (cli.subs["replay"]->parsed()) {
      if (depth > 0) throw UsageError("a manifest cannot replay another manifest");
      return run(cli.replay_argv(), depth + 1);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n";
    for (const auto& [name, sub] : cli.subs) {
      if (sub->parsed()) std::cerr << sub->help();
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
