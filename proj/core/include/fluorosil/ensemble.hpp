#ifndef FLUOROSIL_ENSEMBLE_HPP
#define FLUOROSIL_ENSEMBLE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "fluorosil/models.hpp"

namespace fluorosil {

enum class Combiner { average, median };

const std::string& to_string(Combiner c);
Combiner combiner_from_string(const std::string& token);

// Componentwise arithmetic mean of the member output vectors.
std::vector<double> combine_average(
    std::span<const std::vector<double>> outputs);

// Componentwise sample median: the middle order statistic for odd N, the
// mean of the two middle order statistics for even N.
std::vector<double> combine_median(std::span<const std::vector<double>> outputs);

// Pool of independently trained classifiers combined on raw class scores;
// the decision threshold is applied once, after combining.
struct Ensemble {
  std::vector<Classifier> members;
  Combiner combiner = Combiner::average;
  std::vector<std::uint64_t> member_seeds;

  std::size_t size() const { return members.size(); }
};

// Trains one member; the TrainConfig carries the member's seed.
using TrainFn =
    std::function<Classifier(std::size_t member_index, const TrainConfig& cfg)>;

// Trains N members on the identical training set with seeds
// base_seed .. base_seed+N-1. Training failures are rethrown with the member
// index attached.
Ensemble build_ensemble(const TrainFn& train, const TrainConfig& cfg,
                        std::size_t n_members, std::uint64_t base_seed,
                        Combiner combiner = Combiner::average);

// `repetitions` ensembles over disjoint seed blocks:
// repetition r uses base_seed + r*seed_stride (stride must be >= N).
std::vector<Ensemble> repeat_ensembles(const TrainFn& train,
                                       const TrainConfig& cfg,
                                       std::size_t n_members,
                                       std::size_t repetitions,
                                       std::uint64_t base_seed,
                                       std::uint64_t seed_stride,
                                       Combiner combiner = Combiner::average);

// Combined raw outputs for one input.
Outputs ensemble_outputs(const Ensemble& ensemble, std::span<const double> x);
Outputs ensemble_outputs(const Ensemble& ensemble, std::span<const double> x,
                         Combiner combiner);

Classification ensemble_classify(const Ensemble& ensemble,
                                 std::span<const double> x,
                                 const CostPolicy& cost);

void save_ensemble(const Ensemble& ensemble, const TrainConfig& cfg,
                   const std::filesystem::path& directory);
Ensemble load_ensemble(const std::filesystem::path& directory);

}  // namespace fluorosil

#endif
