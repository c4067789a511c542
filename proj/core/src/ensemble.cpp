#include "fluorosil/ensemble.hpp"

#include <algorithm>
#include <fstream>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"

namespace fluorosil {

const std::string& to_string(Combiner c) {
  static const std::string ave = "ave";
  static const std::string med = "med";
  return c == Combiner::average ? ave : med;
}

Combiner combiner_from_string(const std::string& token) {
  if (token == "ave" || token == "average") return Combiner::average;
  if (token == "med" || token == "median") return Combiner::median;
  throw ValidationError("unknown combiner '" + token + "' (expected ave or med)");
}

namespace {

void check_pool(std::span<const std::vector<double>> outputs) {
  if (outputs.empty()) {
    throw ValidationError("combiner: empty classifier pool");
  }
  for (const auto& o : outputs) {
    if (o.size() != outputs.front().size()) {
      throw ValidationError("combiner: member output arity mismatch");
    }
  }
}

}  // namespace

std::vector<double> combine_average(
    std::span<const std::vector<double>> outputs) {
  check_pool(outputs);
  const std::size_t arity = outputs.front().size();
  // Sum deviations from the first member; identical members then combine
  // to the member output exactly.
  std::vector<double> combined(outputs.front());
  for (std::size_t i = 0; i < arity; ++i) {
    double delta = 0.0;
    for (const auto& o : outputs) delta += o[i] - combined[i];
    combined[i] += delta / static_cast<double>(outputs.size());
  }
  return combined;
}

std::vector<double> combine_median(std::span<const std::vector<double>> outputs) {
  check_pool(outputs);
  const std::size_t n = outputs.size();
  const std::size_t arity = outputs.front().size();
  std::vector<double> combined(arity);
  std::vector<double> column(n);
  for (std::size_t i = 0; i < arity; ++i) {
    for (std::size_t m = 0; m < n; ++m) column[m] = outputs[m][i];
    if (n % 2 == 1) {
      const auto mid = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(column.begin(), mid, column.end());
      combined[i] = *mid;
    } else {
      const auto upper = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(column.begin(), upper, column.end());
      const double hi = *upper;
      const double lo = *std::max_element(column.begin(), upper);
      combined[i] = 0.5 * (lo + hi);
    }
  }
  return combined;
}

Ensemble build_ensemble(const TrainFn& train, const TrainConfig& cfg,
                        std::size_t n_members, std::uint64_t base_seed,
                        Combiner combiner) {
  if (n_members == 0) {
    throw ValidationError("build_ensemble: pool size must be >= 1");
  }
  Ensemble ensemble;
  ensemble.combiner = combiner;
  ensemble.members.reserve(n_members);
  for (std::size_t m = 0; m < n_members; ++m) {
    TrainConfig member_cfg = cfg;
    member_cfg.seed = base_seed + m;
    try {
      ensemble.members.push_back(train(m, member_cfg));
    } catch (const NumericalError& e) {
      throw NumericalError("ensemble member " + std::to_string(m) + ": " +
                           e.what());
    }
    ensemble.member_seeds.push_back(member_cfg.seed);
  }
  return ensemble;
}

std::vector<Ensemble> repeat_ensembles(const TrainFn& train,
                                       const TrainConfig& cfg,
                                       std::size_t n_members,
                                       std::size_t repetitions,
                                       std::uint64_t base_seed,
                                       std::uint64_t seed_stride,
                                       Combiner combiner) {
  if (repetitions == 0) {
    throw ValidationError("repeat_ensembles: repetitions must be >= 1");
  }
  if (seed_stride < n_members) {
    throw ValidationError(
        "repeat_ensembles: seed stride below pool size would reuse seeds");
  }
  std::vector<Ensemble> ensembles;
  ensembles.reserve(repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    ensembles.push_back(build_ensemble(
        train, cfg, n_members, base_seed + r * seed_stride, combiner));
  }
  return ensembles;
}

Outputs ensemble_outputs(const Ensemble& ensemble, std::span<const double> x,
                         Combiner combiner) {
  if (ensemble.members.empty()) {
    throw ValidationError("ensemble has no members");
  }
  std::vector<std::vector<double>> outputs;
  outputs.reserve(ensemble.size());
  for (const auto& member : ensemble.members) {
    const Outputs o = classifier_outputs(member, x);
    outputs.push_back({o[0], o[1]});
  }
  const auto combined = combiner == Combiner::average
                            ? combine_average(outputs)
                            : combine_median(outputs);
  return {combined[0], combined[1]};
}

Outputs ensemble_outputs(const Ensemble& ensemble, std::span<const double> x) {
  return ensemble_outputs(ensemble, x, ensemble.combiner);
}

Classification ensemble_classify(const Ensemble& ensemble,
                                 std::span<const double> x,
                                 const CostPolicy& cost) {
  return classify_outputs(ensemble_outputs(ensemble, x), cost);
}

void save_ensemble(const Ensemble& ensemble, const TrainConfig& cfg,
                   const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  std::ofstream manifest(directory / "ensemble.txt");
  if (!manifest) {
    throw ValidationError("cannot write ensemble manifest in " +
                          directory.string());
  }
  manifest << "fluorosil-ensemble v1\n";
  manifest << "combiner " << to_string(ensemble.combiner) << '\n';
  manifest << "members " << ensemble.size() << '\n';
  manifest << "seeds";
  for (auto seed : ensemble.member_seeds) manifest << ' ' << seed;
  manifest << '\n';
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    save_classifier(ensemble.members[m], cfg,
                    directory / ("member_" + std::to_string(m) + ".model"));
  }
}

Ensemble load_ensemble(const std::filesystem::path& directory) {
  std::ifstream manifest(directory / "ensemble.txt");
  if (!manifest) {
    throw ValidationError("cannot open ensemble manifest in " +
                          directory.string());
  }
  const std::string where = (directory / "ensemble.txt").string();
  std::string line;
  if (!std::getline(manifest, line) ||
      detail::trim(line) != "fluorosil-ensemble v1") {
    throw ValidationError(where + ": not an ensemble manifest");
  }
  Ensemble ensemble;
  std::size_t members = 0;
  while (std::getline(manifest, line)) {
    const std::string t = detail::trim(line);
    if (t.rfind("combiner ", 0) == 0) {
      ensemble.combiner = combiner_from_string(t.substr(9));
    } else if (t.rfind("members ", 0) == 0) {
      members = static_cast<std::size_t>(detail::parse_long(t.substr(8), where));
    } else if (t.rfind("seeds", 0) == 0) {
      const auto tokens = detail::split(t, ' ');
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].empty()) continue;
        ensemble.member_seeds.push_back(
            static_cast<std::uint64_t>(detail::parse_long(tokens[i], where)));
      }
    }
  }
  for (std::size_t m = 0; m < members; ++m) {
    auto [model, cfg] = load_classifier(
        directory / ("member_" + std::to_string(m) + ".model"));
    ensemble.members.push_back(std::move(model));
  }
  return ensemble;
}

}  // namespace fluorosil
