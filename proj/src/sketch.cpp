#include "sketchmix/sketch.hpp"

#include <cmath>
#include <string>

#include "sketchmix/error.hpp"
#include "sketchmix/parallel.hpp"

namespace sketchmix {

void accumulate_charfn(const Eigen::Ref<const RowMatrix>& rows, const RowMatrix& freqs,
                       ComplexVector& sums) {
  if (rows.cols() != freqs.cols()) {
    throw InvalidArgument("sketch: data dimension " + std::to_string(rows.cols()) +
                          " does not match frequency dimension " + std::to_string(freqs.cols()));
  }
  const Eigen::Index m = freqs.rows();
  const Eigen::Index d = freqs.cols();
  // Column-major copy of the frequencies so the phase loop runs contiguously over j.
  const Eigen::MatrixXd wt = freqs;
  std::vector<double> re(static_cast<std::size_t>(m), 0.0), im(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index j = 0; j < m; ++j) {
    re[static_cast<std::size_t>(j)] = sums[j].real();
    im[static_cast<std::size_t>(j)] = sums[j].imag();
  }
  std::vector<double> phase(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    std::fill(phase.begin(), phase.end(), 0.0);
    for (Eigen::Index l = 0; l < d; ++l) {
      const double x = rows(i, l);
      const double* col = wt.data() + l * m;
      for (Eigen::Index j = 0; j < m; ++j) phase[static_cast<std::size_t>(j)] += x * col[j];
    }
    for (std::size_t j = 0; j < phase.size(); ++j) {
      re[j] += std::cos(phase[j]);
      im[j] -= std::sin(phase[j]);
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) sums[j] = {re[static_cast<std::size_t>(j)], im[static_cast<std::size_t>(j)]};
}

// ---------------------------------------------------------------------------

SketchAccumulator::SketchAccumulator(const FrequencySet& fs)
    : fs_(&fs), sums_(ComplexVector::Zero(fs.m())) {}

void SketchAccumulator::absorb(const Eigen::Ref<const RowMatrix>& rows) {
  accumulate_charfn(rows, fs_->freqs, sums_);
  count_ += static_cast<std::uint64_t>(rows.rows());
}

void SketchAccumulator::combine(const SketchAccumulator& other) {
  if (other.fs_->fingerprint != fs_->fingerprint) {
    throw IntegrityError("sketches use different frequency sets");
  }
  sums_ += other.sums_;
  count_ += other.count_;
}

Sketch SketchAccumulator::finalize() const {
  Sketch s;
  s.freq_fingerprint = fs_->fingerprint;
  s.count = count_;
  if (count_ == 0) {
    s.values = ComplexVector::Zero(sums_.size());
  } else {
    s.values = sums_ / (static_cast<double>(count_) * std::sqrt(static_cast<double>(sums_.size())));
  }
  return s;
}

// ---------------------------------------------------------------------------

void ChunkReducer::push(ComplexVector partial, std::uint64_t count) {
  stack_.push_back({0, std::move(partial), count});
  while (stack_.size() >= 2 && stack_[stack_.size() - 1].level == stack_[stack_.size() - 2].level) {
    Node right = std::move(stack_.back());
    stack_.pop_back();
    Node& left = stack_.back();
    left.sums += right.sums;
    left.count += right.count;
    ++left.level;
  }
}

std::optional<std::pair<ComplexVector, std::uint64_t>> ChunkReducer::result() const {
  if (stack_.empty()) return std::nullopt;
  ComplexVector acc = stack_.back().sums;
  std::uint64_t count = stack_.back().count;
  for (std::size_t i = stack_.size() - 1; i-- > 0;) {
    acc = stack_[i].sums + acc;
    count += stack_[i].count;
  }
  return std::make_pair(std::move(acc), count);
}

Sketch sketch_empirical(const Dataset& data, const FrequencySet& fs, std::size_t chunk_size,
                        unsigned threads) {
  if (data.cols() != fs.dim()) {
    throw InvalidArgument("sketch_empirical: data dimension " + std::to_string(data.cols()) +
                          " does not match frequency dimension " + std::to_string(fs.dim()));
  }
  if (chunk_size == 0) throw InvalidArgument("sketch_empirical: chunk_size must be positive");
  const auto n = static_cast<std::size_t>(data.rows());
  const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<ComplexVector> partials(chunks);
  parallel_for(chunks, resolve_threads(threads), [&](std::size_t c) {
    const auto begin = static_cast<Eigen::Index>(c * chunk_size);
    const auto len = static_cast<Eigen::Index>(std::min(chunk_size, n - c * chunk_size));
    ComplexVector sums = ComplexVector::Zero(fs.m());
    accumulate_charfn(data.middleRows(begin, len), fs.freqs, sums);
    partials[c] = std::move(sums);
  });

  ChunkReducer reducer;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::uint64_t len = std::min(chunk_size, n - c * chunk_size);
    reducer.push(std::move(partials[c]), len);
  }
  Sketch s;
  s.freq_fingerprint = fs.fingerprint;
  if (auto total = reducer.result()) {
    s.count = total->second;
    s.values = total->first / (static_cast<double>(s.count) * std::sqrt(static_cast<double>(fs.m())));
  } else {
    s.values = ComplexVector::Zero(fs.m());
  }
  return s;
}

Sketch sketch_merge(const Sketch& a, const Sketch& b) {
  if (a.freq_fingerprint != b.freq_fingerprint) {
    throw IntegrityError("sketches use different frequency sets");
  }
  if (a.m() != b.m()) throw IntegrityError("sketches have different lengths");
  if (a.analytic || b.analytic) throw InvalidArgument("analytic sketches cannot be merged");
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  Sketch out;
  out.freq_fingerprint = a.freq_fingerprint;
  out.count = a.count + b.count;
  const double na = static_cast<double>(a.count), nb = static_cast<double>(b.count);
  out.values = (na * a.values + nb * b.values) / (na + nb);
  return out;
}

AtomSketch sketch_atom(const GaussianParams& p, const FrequencySet& fs) {
  if (p.dim() != fs.dim()) throw InvalidArgument("sketch_atom: dimension mismatch");
  const Eigen::Index m = fs.m();
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const Vector phase = fs.freqs * p.mean();
  const Vector log_amp = -0.5 * (fs.freqs.array().square().matrix() * p.variances());
  AtomSketch a;
  a.values.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double amp = scale * std::exp(log_amp[j]);
    a.values[j] = {amp * std::cos(phase[j]), -amp * std::sin(phase[j])};
  }
  // The norm is formed in log space so that vanishing atoms report a tiny
  // positive value instead of underflowing when possible.
  const double peak = log_amp.maxCoeff();
  const double rel = (2.0 * (log_amp.array() - peak)).exp().sum();
  a.norm = scale * std::exp(peak) * std::sqrt(rel);
  return a;
}

Sketch sketch_gmm(const Mixture& mix, const FrequencySet& fs) {
  if (mix.dim() != fs.dim()) throw InvalidArgument("sketch_gmm: dimension mismatch");
  Sketch s;
  s.values = ComplexVector::Zero(fs.m());
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    s.values += mix.weights[static_cast<Eigen::Index>(k)] * sketch_atom(mix.components[k], fs).values;
  }
  s.count = 0;
  s.analytic = true;
  s.freq_fingerprint = fs.fingerprint;
  return s;
}

void check_pairing(const Sketch& sk, const FrequencySet& fs) {
  if (sk.freq_fingerprint != fs.fingerprint || sk.m() != fs.m()) {
    throw IntegrityError("sketch was not computed with this frequency set");
  }
}

}  // namespace sketchmix
