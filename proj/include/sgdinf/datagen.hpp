#ifndef SGDINF_DATAGEN_HPP
#define SGDINF_DATAGEN_HPP

#include <cstdint>
#include <memory>

#include "sgdinf/core_model.hpp"

namespace sgdinf {

/// Immutable sampler for a ProblemSpec: holds the Cholesky factor of the Gram.
class SampleGenerator {
 public:
  explicit SampleGenerator(ProblemSpec spec);

  const ProblemSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim(); }

  /// Fills `out` with sample number `index` (0-based) of stream `replicate`.
  void draw(std::uint64_t seed, std::uint32_t replicate, std::uint64_t index,
            StreamSample& out) const;

 private:
  ProblemSpec spec_;
  Matrix chol_lower_;
};

/**
 * Reproducible sample stream. Sample i of replicate r is a pure function of
 * (spec, seed, r, i), so two handles with equal arguments produce identical
 * sequences and a handle can be rewound or resumed from a checkpoint.
 */
class StreamHandle {
 public:
  StreamHandle(std::shared_ptr<const SampleGenerator> gen, std::uint64_t seed,
               std::uint32_t replicate = 0);
  StreamHandle(const ProblemSpec& spec, std::uint64_t seed,
               std::uint32_t replicate = 0);

  StreamSample next_sample();
  void next_sample(StreamSample& out);

  std::uint64_t position() const { return position_; }
  void seek(std::uint64_t position) { position_ = position; }

  /// A handle positioned at zero over the same stream.
  StreamHandle rewound() const;

  const ProblemSpec& spec() const { return gen_->spec(); }
  bool misspecified() const { return gen_->spec().misspecified(); }
  std::uint64_t seed() const { return seed_; }
  std::uint32_t replicate() const { return replicate_; }

 private:
  std::shared_ptr<const SampleGenerator> gen_;
  std::uint64_t seed_;
  std::uint32_t replicate_;
  std::uint64_t position_ = 0;
};

struct PopulationQuantities {
  Matrix a_sigma;     // E[eps^2 X X^T]
  double sigma;       // E[eps^8]^(1/8)
  double sigma_min;   // sqrt(E[eps^2])
  double lambda_bar;  // sup_u E[(u^T X)^8]^(1/4) for Gaussian X
};

/// Closed forms under noise independent of X. Rejects misspecified specs.
PopulationQuantities population_quantities(const ProblemSpec& spec);

/// Returns a copy of `spec` with the optional diagnostics filled in.
ProblemSpec with_diagnostics(const ProblemSpec& spec);

}  // namespace sgdinf

#endif  // SGDINF_DATAGEN_HPP
