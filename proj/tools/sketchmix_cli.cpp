#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "sketchmix/bounds.hpp"
#include "sketchmix/error.hpp"
#include "sketchmix/eval.hpp"
#include "sketchmix/freqdesign.hpp"
#include "sketchmix/io.hpp"
#include "sketchmix/parallel.hpp"
#include "sketchmix/recovery.hpp"
#include "sketchmix/sketch.hpp"

namespace fs = std::filesystem;
using namespace sketchmix;
using cli::RunManifest;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kIntegrity = 3, kNumeric = 4 };

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_manifests(RunManifest m, const std::vector<std::string>& outputs, Clock::time_point t0) {
  m.outputs = outputs;
  m.duration_ms = ms_since(t0);
  for (const auto& out : outputs) cli::write_manifest(cli::manifest_path_for(out), m);
}

const std::map<std::string, FreqKind> kKindMap{
    {"gauss", FreqKind::Gaussian}, {"fgr", FreqKind::FoldedGaussianRadius}, {"ar", FreqKind::AdaptedRadius}};
const std::map<std::string, Algorithm> kAlgoMap{
    {"clomp", Algorithm::CLOMP}, {"clompr", Algorithm::CLOMPR}, {"split", Algorithm::Split}};

// ---------------------------------------------------------------------------

struct GenArgs {
  std::size_t dim = 0, components = 0, samples = 0;
  std::uint64_t seed = 0;
  std::string out, model_out;
  std::string weights = "uniform";
};

int run_gen(const GenArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  const Rng master(a.seed);
  Rng prob_rng = master.split(0);
  Rng data_rng = master.split(1);
  const auto prob = gen_synthetic(a.dim, a.components, prob_rng,
                                  a.weights == "dirichlet" ? WeightMode::FlatDirichlet : WeightMode::Uniform);
  io::write_dataset(a.out, mixture_sample(prob.truth, a.samples, data_rng));
  io::write_gmm(a.model_out, prob.truth);
  m.params = {{"dim", a.dim}, {"components", a.components}, {"samples", a.samples}, {"weights", a.weights}};
  m.seed = a.seed;
  save_manifests(std::move(m), {a.out, a.model_out}, t0);
  return kOk;
}

// ---------------------------------------------------------------------------

struct FreqArgs {
  std::string data, out, kind = "ar";
  std::size_t m = 0;
  std::uint64_t seed = 0;
  MeanSigmaOptions opts;
};

int run_freq(const FreqArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  // Only the first n0 items feed the scale estimate.
  io::DatasetReader reader(a.data);
  const Dataset head = reader.next(std::max<std::size_t>(a.opts.n0, 1));
  if (head.rows() == 0) throw FormatError("dataset " + a.data + " has no rows");
  Rng rng(a.seed);
  const FrequencySet set = design_frequencies(head, a.m, kKindMap.at(a.kind), a.opts, rng);
  io::write_freqs(a.out, set);
  m.params = {{"m", a.m},         {"kind", a.kind},       {"n0", a.opts.n0},
              {"m0", a.opts.m0},  {"blocks", a.opts.blocks}, {"iters", a.opts.iterations},
              {"sigma2_bar", set.sigma2_bar}, {"fingerprint", set.fingerprint}};
  m.seed = a.seed;
  m.inputs = {a.data};
  save_manifests(std::move(m), {a.out}, t0);
  return kOk;
}

// ---------------------------------------------------------------------------

struct SketchArgs {
  std::string data, freqs, out;
  std::size_t chunk_size = kDefaultChunkSize;
  unsigned threads = 0;
};

// Streams the file chunk by chunk; the chunking matches sketch_empirical so
// both paths give the same bits.
Sketch stream_sketch(const std::string& path, const FrequencySet& set, std::size_t chunk_size,
                     unsigned threads) {
  io::DatasetReader reader(path);
  if (reader.dim() != set.dim()) {
    throw InvalidArgument("data dimension " + std::to_string(reader.dim()) +
                          " does not match frequency dimension " + std::to_string(set.dim()));
  }
  const unsigned workers = resolve_threads(threads);
  ChunkReducer reducer;
  bool done = false;
  while (!done) {
    std::vector<Dataset> batch;
    for (unsigned w = 0; w < workers; ++w) {
      Dataset chunk = reader.next(chunk_size);
      if (chunk.rows() == 0) {
        done = true;
        break;
      }
      batch.push_back(std::move(chunk));
    }
    std::vector<ComplexVector> partials(batch.size());
    parallel_for(batch.size(), workers, [&](std::size_t c) {
      ComplexVector sums = ComplexVector::Zero(set.m());
      accumulate_charfn(batch[c], set.freqs, sums);
      partials[c] = std::move(sums);
    });
    for (std::size_t c = 0; c < batch.size(); ++c) {
      reducer.push(std::move(partials[c]), static_cast<std::uint64_t>(batch[c].rows()));
    }
  }
  Sketch s;
  s.freq_fingerprint = set.fingerprint;
  if (auto total = reducer.result()) {
    s.count = total->second;
    s.values = total->first / (static_cast<double>(s.count) * std::sqrt(static_cast<double>(set.m())));
  } else {
    s.values = ComplexVector::Zero(set.m());
  }
  return s;
}

int run_sketch(const SketchArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  const FrequencySet set = io::read_freqs(a.freqs);
  const Sketch s = stream_sketch(a.data, set, a.chunk_size, a.threads);
  io::write_sketch(a.out, s);
  m.params = {{"chunk_size", a.chunk_size}, {"count", s.count}, {"fingerprint", set.fingerprint}};
  m.inputs = {a.data, a.freqs};
  save_manifests(std::move(m), {a.out}, t0);
  return kOk;
}

// ---------------------------------------------------------------------------

struct MergeArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int run_merge(const MergeArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  if (a.inputs.size() == 1) {
    const std::string bytes = io::read_file(a.inputs.front());
    io::sketch_from_bytes(bytes);
    io::write_file(a.out, bytes);
  } else {
    Sketch acc = io::read_sketch(a.inputs.front());
    for (std::size_t i = 1; i < a.inputs.size(); ++i) acc = sketch_merge(acc, io::read_sketch(a.inputs[i]));
    io::write_sketch(a.out, acc);
  }
  m.inputs = a.inputs;
  save_manifests(std::move(m), {a.out}, t0);
  return kOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string sketch, freqs, out, algo = "clompr";
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t restarts = 1;
  int max_iters = RecoveryConfig{}.max_inner_iters;
};

int run_estimate(const EstimateArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  const Sketch z = io::read_sketch(a.sketch);
  const FrequencySet set = io::read_freqs(a.freqs);
  RecoveryConfig cfg;
  cfg.K = a.k;
  cfg.algorithm = kAlgoMap.at(a.algo);
  cfg.seed = a.seed;
  cfg.step1_restarts = a.restarts;
  cfg.max_inner_iters = a.max_iters;
  io::write_gmm(a.out, recover(z, set, cfg));
  m.params = {{"k", a.k}, {"algo", a.algo}, {"restarts", a.restarts}, {"max_iters", a.max_iters}};
  m.seed = a.seed;
  m.inputs = {a.sketch, a.freqs};
  save_manifests(std::move(m), {a.out}, t0);
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string truth, est, out, kind = "ar";
  std::size_t samples = kDefaultKlSamples;
  std::size_t m = 10000;
  double sigma2 = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

void emit(const std::vector<std::string>& lines, const std::string& out, RunManifest m,
          Clock::time_point t0) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  std::cout << text << std::flush;
  if (!out.empty()) {
    io::write_file(out, text);
    save_manifests(std::move(m), {out}, t0);
  }
}

int run_eval(const std::string& metric, const EvalArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  const Mixture p = io::read_gmm(a.truth);
  const Mixture q = io::read_gmm(a.est);
  Rng rng(a.seed);
  std::string line;
  if (metric == "kl") {
    const McEstimate e = kl_sym_mc(p, q, a.samples, rng, a.threads);
    if (e.clamp_count > 0) std::cerr << "note: " << e.clamp_count << " log-density values clamped\n";
    line = "kl_sym " + fmt17(e.value) + " " + fmt17(e.stderr_);
    m.params = {{"metric", metric}, {"samples", a.samples}, {"clamped", e.clamp_count}};
  } else {
    const McEstimate e = mmd_mc(p, q, a.sigma2, kKindMap.at(a.kind), a.m, rng);
    line = "mmd " + fmt17(e.value) + " " + fmt17(e.stderr_);
    m.params = {{"metric", metric}, {"m", a.m}, {"sigma2", a.sigma2}, {"kind", a.kind}};
  }
  m.seed = a.seed;
  m.inputs = {a.truth, a.est};
  emit({line}, a.out, std::move(m), t0);
  return kOk;
}

// ---------------------------------------------------------------------------

struct BoundsArgs {
  ParamDomain dom;
  std::size_t k = 1;
  double eta = 0.5, rho = 0.01, a = 1.0;
  std::string out;
};

std::string linear_or_inf(const LogValue& v) {
  const auto lin = v.linear();
  return lin ? fmt17(*lin) : "inf";
}

int run_bounds(const std::string& family, const BoundsArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  const double eps = a.eta * a.eta / 24.0;
  const LogValue D = domination_constant(a.dom, a.a);
  std::vector<std::string> lines;
  if (family == "gmm") {
    const SketchSizeBound b = sketch_size_gmm(a.dom, a.dom.d, a.k, a.eta, a.rho);
    lines = {
        "m_lower_bound " + std::to_string(b.m),
        "m_lower_bound_real " + fmt17(b.value),
        "log_covering_number " + fmt17(covering_bound_gmm(a.dom, a.k, eps).log),
        "D " + linear_or_inf(D),
        "log_D " + fmt17(D.log),
        "A " + fmt17(b.A),
        "branch two_over_eta",
    };
  } else {
    const SketchSizeBound b = sketch_size_single_gauss(a.dom, a.a, a.eta, a.rho);
    lines = {
        "m_lower_bound " + std::to_string(b.m),
        "m_lower_bound_real " + fmt17(b.value),
        "log_covering_number " + fmt17(covering_bound_gauss(a.dom, eps).log),
        "D " + linear_or_inf(D),
        "log_D " + fmt17(D.log),
        "A " + fmt17(b.A),
        std::string("branch ") + (b.uses_domination ? "domination" : "two_over_eta"),
    };
  }
  m.params = {{"family", family},          {"dim", a.dom.d},           {"k", a.k},
              {"eta", a.eta},              {"rho", a.rho},             {"a", a.a},
              {"sigma2_min", a.dom.sigma2_min}, {"sigma2_max", a.dom.sigma2_max},
              {"mean_bound", a.dom.mean_bound}, {"radius", a.dom.radius}};
  emit(lines, a.out, std::move(m), t0);
  return kOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::vector<std::size_t> dims, ks;
  std::vector<double> m_factors;
  std::vector<std::uint64_t> seeds;
  std::string out, algo = "clompr", kind = "ar";
  std::size_t samples = 100000, kl_samples = 100000, mmd_m = 10000;
  std::size_t chunk_size = kDefaultChunkSize;
  unsigned threads = 0;
};

const char* kSweepHeader = "d,K,m,seed,kl,mmd,wall_ms";

using RowKey = std::tuple<std::size_t, std::size_t, std::size_t, std::uint64_t>;

std::size_t sweep_m(double factor, std::size_t d, std::size_t K) {
  const double m = std::round(factor * static_cast<double>((2 * d + 1) * K));
  return m < 1.0 ? 1 : static_cast<std::size_t>(m);
}

// Complete rows of an existing table; a torn last line is dropped.
std::vector<std::string> existing_rows(const fs::path& path) {
  std::string text = io::read_file(path);
  std::vector<std::string> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (header) {
      if (line != kSweepHeader) throw FormatError("sweep table " + path.string() + ": unexpected header");
      header = false;
      continue;
    }
    if (!line.empty()) rows.push_back(std::move(line));
  }
  if (header) throw FormatError("sweep table " + path.string() + ": missing header");
  return rows;
}

RowKey row_key(const std::string& row) {
  std::istringstream in(row);
  std::string d, K, m, seed;
  std::getline(in, d, ',');
  std::getline(in, K, ',');
  std::getline(in, m, ',');
  std::getline(in, seed, ',');
  try {
    return {std::stoul(d), std::stoul(K), std::stoul(m), std::stoull(seed)};
  } catch (const std::exception&) {
    throw FormatError("sweep table: malformed row '" + row + "'");
  }
}

std::string sweep_row(const SweepArgs& a, std::size_t d, std::size_t K, std::size_t m, std::uint64_t seed) {
  const Rng master(seed);
  Rng prob_rng = master.split(0), data_rng = master.split(1), freq_rng = master.split(2);
  Rng kl_rng = master.split(3), mmd_rng = master.split(4);
  const auto prob = gen_synthetic(d, K, prob_rng);
  const Dataset data = mixture_sample(prob.truth, a.samples, data_rng);

  const auto t0 = Clock::now();
  double kl = std::nan(""), mmd = std::nan("");
  FrequencySet set;
  Mixture est;
  bool ok = true;
  try {
    set = design_frequencies(data, m, kKindMap.at(a.kind), MeanSigmaOptions{}, freq_rng);
    const Sketch z = sketch_empirical(data, set, a.chunk_size, a.threads);
    RecoveryConfig cfg;
    cfg.K = K;
    cfg.algorithm = kAlgoMap.at(a.algo);
    cfg.seed = seed;
    est = recover(z, set, cfg);
  } catch (const NumericError& e) {
    std::cerr << "row d=" << d << " K=" << K << " m=" << m << " seed=" << seed << ": " << e.what() << "\n";
    ok = false;
  }
  const auto wall = static_cast<long long>(std::llround(ms_since(t0)));
  if (ok) {
    kl = kl_sym_mc(prob.truth, est, a.kl_samples, kl_rng, a.threads).value;
    mmd = mmd_mc(prob.truth, est, set.sigma2_bar, set.kind, a.mmd_m, mmd_rng).value;
  }
  std::ostringstream row;
  row << d << "," << K << "," << m << "," << seed << "," << fmt17(kl) << "," << fmt17(mmd) << "," << wall;
  return row.str();
}

template <class T>
void fill_list(const std::vector<std::string>& raw, std::vector<T>& out, const std::string& flag) {
  for (const auto& item : raw) {
    if (item.empty()) continue;
    T value{};
    if (!CLI::detail::lexical_cast(item, value)) throw CLI::ValidationError(flag, "not a number: " + item);
    if constexpr (std::is_integral_v<T>) {
      if (flag != "--seeds" && value == 0) throw CLI::ValidationError(flag, "values must be positive");
    } else {
      if (!(value > 0.0)) throw CLI::ValidationError(flag, "values must be positive");
    }
    out.push_back(value);
  }
}

int run_sweep(const SweepArgs& a, RunManifest m) {
  const auto t0 = Clock::now();
  const fs::path out(a.out);
  const fs::path mpath = cli::manifest_path_for(out);
  m.params = {{"samples", a.samples}, {"algo", a.algo}, {"kind", a.kind}, {"kl_samples", a.kl_samples},
              {"mmd_m", a.mmd_m}, {"chunk_size", a.chunk_size}};

  std::set<RowKey> done;
  if (fs::exists(out)) {
    if (!fs::exists(mpath)) throw IntegrityError("sweep table " + a.out + " exists without a manifest");
    const RunManifest prev = cli::read_manifest(mpath);
    if (prev.command != "sweep" || prev.params != m.params) {
      throw InvalidArgument("sweep table " + a.out + " was produced with different parameters");
    }
    const auto rows = existing_rows(out);
    std::string text = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) {
      done.insert(row_key(r));
      text += r + "\n";
    }
    io::write_file(out, text);
  } else {
    io::write_file(out, std::string(kSweepHeader) + "\n");
  }
  m.outputs = {a.out};
  cli::write_manifest(mpath, m);

  std::ofstream table(out, std::ios::app | std::ios::binary);
  for (std::size_t d : a.dims)
    for (std::size_t K : a.ks)
      for (double f : a.m_factors)
        for (std::uint64_t seed : a.seeds) {
          const std::size_t mm = sweep_m(f, d, K);
          if (!done.insert({d, K, mm, seed}).second) continue;
          table << sweep_row(a, d, K, mm, seed) << "\n" << std::flush;
          if (!table) throw FormatError("write failed for " + a.out);
        }
  save_manifests(std::move(m), {a.out}, t0);
  return kOk;
}

// ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args);

int run_replay(const std::string& manifest_path) {
  const RunManifest m = cli::read_manifest(manifest_path);
  if (m.argv.empty() || m.argv.front() == "replay") throw InvalidArgument("manifest has no replayable command");
  return dispatch(m.argv);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Compressive learning of Gaussian mixtures from sketches"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  RunManifest manifest;
  manifest.argv = args;
  std::function<int()> action;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Draw a synthetic GMM and samples from it");
  g->add_option("--dim", gen.dim, "Dimension")->required()->check(CLI::PositiveNumber);
  g->add_option("--components", gen.components, "Number of components")->required()->check(CLI::PositiveNumber);
  g->add_option("--samples", gen.samples, "Number of samples")->required()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Random seed")->required();
  g->add_option("--out", gen.out, "CLDATA01 output")->required();
  g->add_option("--model-out", gen.model_out, "Truth GMM output")->required();
  g->add_option("--weights", gen.weights, "Weight law")->check(CLI::IsMember({"uniform", "dirichlet"}));
  g->callback([&] { action = [&] { return run_gen(gen, manifest); }; });

  FreqArgs freq;
  auto* f = app.add_subcommand("freq", "Design sampling frequencies from data");
  f->add_option("--data", freq.data, "Dataset (CLDATA01 or CSV)")->required();
  f->add_option("--m", freq.m, "Number of frequencies")->required()->check(CLI::PositiveNumber);
  f->add_option("--kind", freq.kind, "Radial law")->check(CLI::IsMember({"gauss", "fgr", "ar"}));
  f->add_option("--seed", freq.seed, "Random seed")->required();
  f->add_option("--out", freq.out, "CLFREQ01 output")->required();
  f->add_option("--n0", freq.opts.n0, "Items used for the scale estimate")->check(CLI::PositiveNumber);
  f->add_option("--m0", freq.opts.m0, "Frequencies per scale round")->check(CLI::PositiveNumber);
  f->add_option("--blocks", freq.opts.blocks, "Peak blocks per round")->check(CLI::PositiveNumber);
  f->add_option("--iters", freq.opts.iterations, "Scale rounds")->check(CLI::PositiveNumber);
  f->callback([&] { action = [&] { return run_freq(freq, manifest); }; });

  SketchArgs sk;
  auto* s = app.add_subcommand("sketch", "Sketch a dataset");
  s->add_option("--data", sk.data, "Dataset (CLDATA01 or CSV)")->required();
  s->add_option("--freqs", sk.freqs, "CLFREQ01 input")->required();
  s->add_option("--out", sk.out, "CLSKCH01 output")->required();
  s->add_option("--chunk-size", sk.chunk_size, "Rows per chunk")->check(CLI::PositiveNumber);
  s->add_option("--threads", sk.threads, "Worker cap (0 = SKETCHMIX_THREADS or all cores)");
  s->callback([&] { action = [&] { return run_sketch(sk, manifest); }; });

  MergeArgs mg;
  auto* mc = app.add_subcommand("merge", "Merge sketches over the same frequencies");
  mc->add_option("--out", mg.out, "CLSKCH01 output")->required();
  mc->add_option("inputs", mg.inputs, "CLSKCH01 inputs")->required();
  mc->callback([&] { action = [&] { return run_merge(mg, manifest); }; });

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Recover a GMM from a sketch");
  e->add_option("--sketch", est.sketch, "CLSKCH01 input")->required();
  e->add_option("--freqs", est.freqs, "CLFREQ01 input")->required();
  e->add_option("--k", est.k, "Number of components")->required()->check(CLI::PositiveNumber);
  e->add_option("--algo", est.algo, "clomp | clompr | split")->check(CLI::IsMember({"clomp", "clompr", "split"}));
  e->add_option("--seed", est.seed, "Random seed")->required();
  e->add_option("--out", est.out, "GMM output")->required();
  e->add_option("--restarts", est.restarts, "Step-1 restarts")->check(CLI::PositiveNumber);
  e->add_option("--max-iters", est.max_iters, "Inner optimizer iteration cap")->check(CLI::PositiveNumber);
  e->callback([&] { action = [&] { return run_estimate(est, manifest); }; });

  EvalArgs ev;
  std::string metric;
  auto* v = app.add_subcommand("eval", "Compare two GMMs");
  v->add_option("metric", metric, "kl | mmd")->required()->check(CLI::IsMember({"kl", "mmd"}));
  v->add_option("--true", ev.truth, "Reference GMM")->required();
  v->add_option("--est", ev.est, "Estimated GMM")->required();
  v->add_option("--samples", ev.samples, "Monte-Carlo samples (kl)")->check(CLI::PositiveNumber);
  v->add_option("--m", ev.m, "Monte-Carlo frequencies (mmd)")->check(CLI::PositiveNumber);
  v->add_option("--sigma2", ev.sigma2, "Frequency scale (mmd)")->check(CLI::PositiveNumber);
  v->add_option("--kind", ev.kind, "Radial law (mmd)")->check(CLI::IsMember({"gauss", "fgr", "ar"}));
  v->add_option("--seed", ev.seed, "Random seed")->required();
  v->add_option("--threads", ev.threads, "Worker cap");
  v->add_option("--out", ev.out, "Also write the metric line here");
  v->callback([&] { action = [&] { return run_eval(metric, ev, manifest); }; });

  BoundsArgs bd;
  std::string family;
  auto* b = app.add_subcommand("bounds", "Sketch-size guarantees");
  b->add_option("family", family, "gmm | gauss")->required()->check(CLI::IsMember({"gmm", "gauss"}));
  b->add_option("--dim", bd.dom.d, "Dimension")->required()->check(CLI::PositiveNumber);
  b->add_option("--k", bd.k, "Number of components")->check(CLI::PositiveNumber);
  b->add_option("--eta", bd.eta, "Additive error level");
  b->add_option("--rho", bd.rho, "Failure probability");
  b->add_option("--sigma2-min", bd.dom.sigma2_min, "Smallest variance");
  b->add_option("--sigma2-max", bd.dom.sigma2_max, "Largest variance");
  b->add_option("--mean-bound", bd.dom.mean_bound, "Bound on mean norms");
  b->add_option("--radius", bd.dom.radius, "Chebyshev radius of the parameter set");
  b->add_option("--a", bd.a, "Gaussian frequency scale");
  b->add_option("--out", bd.out, "Also write the lines here");
  b->callback([&] { action = [&] { return run_bounds(family, bd, manifest); }; });

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Grid of synthetic runs as a CSV table");
  // Lists may be given empty; CLI11 reports a bare flag as one empty string.
  std::vector<std::string> dims_s, ks_s, factors_s, seeds_s;
  const auto any_count = CLI::detail::expected_max_vector_size;
  w->add_option("--dims", dims_s, "Dimensions")->expected(0, any_count);
  w->add_option("--ks", ks_s, "Component counts")->expected(0, any_count);
  w->add_option("--m-factors", factors_s, "m / ((2d+1)K) values")->expected(0, any_count);
  w->add_option("--seeds", seeds_s, "Seeds")->required()->expected(0, any_count);
  w->add_option("--out", sw.out, "CSV output")->required();
  w->add_option("--samples", sw.samples, "Items per run")->check(CLI::PositiveNumber);
  w->add_option("--algo", sw.algo, "clomp | clompr | split")->check(CLI::IsMember({"clomp", "clompr", "split"}));
  w->add_option("--kind", sw.kind, "Radial law")->check(CLI::IsMember({"gauss", "fgr", "ar"}));
  w->add_option("--kl-samples", sw.kl_samples, "Monte-Carlo samples for KL")->check(CLI::PositiveNumber);
  w->add_option("--mmd-m", sw.mmd_m, "Monte-Carlo frequencies for MMD")->check(CLI::PositiveNumber);
  w->add_option("--chunk-size", sw.chunk_size, "Rows per chunk")->check(CLI::PositiveNumber);
  w->add_option("--threads", sw.threads, "Worker cap");
  w->callback([&] {
    fill_list(dims_s, sw.dims, "--dims");
    fill_list(ks_s, sw.ks, "--ks");
    fill_list(factors_s, sw.m_factors, "--m-factors");
    fill_list(seeds_s, sw.seeds, "--seeds");
    action = [&] { return run_sweep(sw, manifest); };
  });

  std::string replay_path;
  auto* r = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  r->add_option("manifest", replay_path, "Manifest JSON")->required();
  r->callback([&] { action = [&] { return run_replay(replay_path); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }
  manifest.command = app.get_subcommands().front()->get_name();
  return action();
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
