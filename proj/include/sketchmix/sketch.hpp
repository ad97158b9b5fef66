#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sketchmix/freqdesign.hpp"
#include "sketchmix/model.hpp"

namespace sketchmix {

inline constexpr std::size_t kDefaultChunkSize = 65536;

/// Normalized sketch z_j = (1/(n sqrt(m))) sum_i exp(-i w_j . x_i).
///
/// Analytic sketches (computed from a model, not data) carry count 0 and the
/// `analytic` flag; they cannot be merged.
struct Sketch {
  ComplexVector values;
  std::uint64_t count = 0;
  std::uint64_t freq_fingerprint = 0;
  bool analytic = false;

  Eigen::Index m() const noexcept { return values.size(); }
};

/// Adds sum_i exp(-i w_j . x_i) over the rows of `rows` to `sums`, rows in order.
void accumulate_charfn(const Eigen::Ref<const RowMatrix>& rows, const RowMatrix& freqs,
                       ComplexVector& sums);

/// Unnormalized running sums for one pass over a stream of items.
class SketchAccumulator {
 public:
  explicit SketchAccumulator(const FrequencySet& fs);

  void absorb(const Eigen::Ref<const RowMatrix>& rows);
  /// Adds another accumulator over the same frequencies.
  void combine(const SketchAccumulator& other);

  std::uint64_t count() const noexcept { return count_; }
  const ComplexVector& partial_sums() const noexcept { return sums_; }
  Sketch finalize() const;

 private:
  const FrequencySet* fs_;
  ComplexVector sums_;
  std::uint64_t count_ = 0;
};

/// Order-fixed pairwise reduction of per-chunk partial sums.
///
/// Chunks must be pushed in chunk-index order. The result depends only on the
/// sequence of pushed partials, not on who computed them, and never holds more
/// than O(log #chunks) partials at once.
class ChunkReducer {
 public:
  void push(ComplexVector partial, std::uint64_t count);
  /// Sum over everything pushed so far (empty optional if nothing was).
  std::optional<std::pair<ComplexVector, std::uint64_t>> result() const;

 private:
  struct Node {
    unsigned level;
    ComplexVector sums;
    std::uint64_t count;
  };
  std::vector<Node> stack_;
};

/// Sketch of a whole dataset. Rows are cut into chunks of `chunk_size`; each
/// chunk is summed independently (possibly in parallel) and the partials
/// reduced by ChunkReducer, so the result is bit-identical for any `threads`.
Sketch sketch_empirical(const Dataset& data, const FrequencySet& fs,
                        std::size_t chunk_size = kDefaultChunkSize, unsigned threads = 0);

Sketch sketch_merge(const Sketch& a, const Sketch& b);

/// Closed-form sketch of a mixture.
Sketch sketch_gmm(const Mixture& mix, const FrequencySet& fs);

struct AtomSketch {
  ComplexVector values;
  double norm = 0.0;
};

AtomSketch sketch_atom(const GaussianParams& p, const FrequencySet& fs);

/// Throws IntegrityError unless the sketch was built with `fs`.
void check_pairing(const Sketch& sk, const FrequencySet& fs);

}  // namespace sketchmix
