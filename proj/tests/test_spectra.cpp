#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fluorosil/errors.hpp"
#include "fluorosil/spectra.hpp"
#include "fluorosil/synthetic.hpp"

using namespace fluorosil;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fluorosil_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Tiny grid for hand-sized cases: one excitation, three emissions.
WavelengthGrid tiny_grid() { return WavelengthGrid({337}, {{400, 405, 410}}); }

}  // namespace

TEST_CASE("standard grid has 160 pairs in three blocks") {
  const auto& grid = WavelengthGrid::standard();
  REQUIRE(grid.block_count() == 3);
  CHECK(grid.excitations() == std::vector<int>{337, 380, 460});
  CHECK(grid.block_size(0) == 59);
  CHECK(grid.block_size(1) == 56);
  CHECK(grid.block_size(2) == 45);
  CHECK(grid.pair_count() == 160);
  CHECK(grid.pairs().size() == 160);

  // The published reduced sets must all be on the grid.
  for (const WavelengthPair p : {WavelengthPair{337, 410}, {337, 430},
                                 {337, 510}, {337, 580}, {380, 410}, {380, 430},
                                 {380, 510}, {380, 580}, {380, 600}, {380, 640},
                                 {460, 580}, {460, 600}, {460, 620}, {460, 640},
                                 {460, 660}}) {
    CHECK(grid.index_of(p).has_value());
  }
  CHECK_FALSE(grid.index_of({500, 500}).has_value());
}

TEST_CASE("grid rejects non-increasing emission lists") {
  CHECK_THROWS_AS(WavelengthGrid({337}, {{400, 400, 405}}), ValidationError);
  CHECK_THROWS_AS(WavelengthGrid({337}, {{410, 405}}), ValidationError);
  CHECK_THROWS_AS(WavelengthGrid({337, 380}, {{400}}), ValidationError);
}

TEST_CASE("histology tokens round-trip; unknown tokens rejected") {
  for (Histology h : kAllHistologies) {
    CHECK(histology_from_string(to_string(h)) == h);
  }
  CHECK(is_sil(Histology::LowGradeSil));
  CHECK(is_sil(Histology::HighGradeSil));
  CHECK_FALSE(is_sil(Histology::Inflammation));
  CHECK_THROWS_WITH_AS(histology_from_string("HSIL"),
                       doctest::Contains("HSIL"), ValidationError);
}

TEST_CASE("synthetic defaults reproduce the published class tallies") {
  const Dataset ds = synthesize_dataset(SynthConfig::defaults());
  CHECK(ds.samples.size() == 180);
  const auto counts = class_counts(ds);
  CHECK(counts == std::array<std::size_t, 5>{94, 13, 15, 23, 35});

  const Dataset test = synthesize_dataset(SynthConfig::defaults_test());
  CHECK(test.samples.size() == 181);
  CHECK(class_counts(test) == std::array<std::size_t, 5>{94, 14, 14, 24, 35});
}

TEST_CASE("synthesis is deterministic for a fixed seed") {
  const Dataset a = synthesize_dataset(SynthConfig::defaults());
  const Dataset b = synthesize_dataset(SynthConfig::defaults());
  CHECK(a == b);

  SynthConfig other = SynthConfig::defaults();
  other.seed = 43;
  CHECK_FALSE(synthesize_dataset(other) == a);
}

TEST_CASE("zero noise degenerates to identical samples per class") {
  SynthConfig cfg = SynthConfig::defaults();
  cfg.patient_effect_scale = 0.0;
  cfg.site_noise_scale = 0.0;
  const Dataset ds = synthesize_dataset(cfg);
  std::array<const SpectralSample*, kHistologyCount> first{};
  for (const auto& s : ds.samples) {
    auto*& ref = first[static_cast<std::size_t>(s.histology)];
    if (ref == nullptr) {
      ref = &s;
    } else {
      CHECK(s.intensities == ref->intensities);
    }
  }
}

TEST_CASE("class mean intensities keep the NS > SIL > NC ordering") {
  const Dataset ds = synthesize_dataset(SynthConfig::defaults());
  const auto& grid = ds.grid;

  for (std::size_t blk : {std::size_t{0}, std::size_t{2}}) {  // 337, 460 nm
    std::array<double, kHistologyCount> sums{};
    std::array<std::size_t, kHistologyCount> counts{};
    for (const auto& s : ds.samples) {
      double integrated = 0.0;
      for (std::size_t e = 0; e < grid.block_size(blk); ++e) {
        integrated += s.intensities[grid.block_offset(blk) + e];
      }
      sums[static_cast<std::size_t>(s.histology)] += integrated;
      counts[static_cast<std::size_t>(s.histology)] += 1;
    }
    const double ns = sums[0] / static_cast<double>(counts[0]);
    const double nc = sums[1] / static_cast<double>(counts[1]);
    const double sil = (sums[3] + sums[4]) / static_cast<double>(counts[3] + counts[4]);
    CHECK(ns > sil);
    CHECK(sil > nc);
  }
}

TEST_CASE("infeasible amplitude orderings are rejected") {
  SynthConfig cfg = SynthConfig::defaults();
  // Make NC brighter than NS at 337 nm.
  std::swap(cfg.amplitudes[0][0], cfg.amplitudes[0][1]);
  CHECK_THROWS_WITH_AS(synthesize_dataset(cfg),
                       doctest::Contains("class ordering"), ValidationError);
}

TEST_CASE("dataset CSV round-trips field by field") {
  SynthConfig cfg = SynthConfig::defaults();
  cfg.class_counts = {4, 2, 1, 2, 3};
  const Dataset ds = synthesize_dataset(cfg);
  const auto path = temp_file("roundtrip.csv");
  save_dataset(ds, path);
  Dataset loaded = load_dataset(path, ds.grid);
  CHECK(loaded == ds);
}

TEST_CASE("loader errors name the offending row and token") {
  const WavelengthGrid grid = tiny_grid();
  const auto path = temp_file("bad.csv");

  SUBCASE("unknown histology token") {
    std::ofstream(path) << "patient_id,site_id,histology,I_337_400,I_337_405,"
                           "I_337_410\n"
                           "p1,s1,NS,1,2,3\n"
                           "p2,s1,HSIL,1,2,3\n";
    CHECK_THROWS_WITH_AS(load_dataset(path, grid),
                         doctest::Contains("row 3"), ValidationError);
    CHECK_THROWS_WITH_AS(load_dataset(path, grid),
                         doctest::Contains("HSIL"), ValidationError);
  }

  SUBCASE("missing intensity column") {
    std::ofstream(path) << "patient_id,site_id,histology,I_337_400,I_337_405\n"
                           "p1,s1,NS,1,2\n";
    CHECK_THROWS_WITH_AS(load_dataset(path, grid),
                         doctest::Contains("expected 3 intensity columns"),
                         ValidationError);
  }

  SUBCASE("non-numeric intensity names row and column") {
    std::ofstream(path) << "patient_id,site_id,histology,I_337_400,I_337_405,"
                           "I_337_410\n"
                           "p1,s1,NS,1,oops,3\n";
    CHECK_THROWS_WITH_AS(load_dataset(path, grid),
                         doctest::Contains("I_337_405"), ValidationError);
  }

  SUBCASE("short row") {
    std::ofstream(path) << "patient_id,site_id,histology,I_337_400,I_337_405,"
                           "I_337_410\n"
                           "p1,s1,NS,1,2\n";
    CHECK_THROWS_WITH_AS(load_dataset(path, grid), doctest::Contains("row 2"),
                         ValidationError);
  }

  SUBCASE("negative intensity rejected") {
    std::ofstream(path) << "patient_id,site_id,histology,I_337_400,I_337_405,"
                           "I_337_410\n"
                           "p1,s1,NS,1,-2,3\n";
    CHECK_THROWS_AS(load_dataset(path, grid), ValidationError);
  }
}

TEST_CASE("dataset validation catches duplicate sites and empty ids") {
  Dataset ds;
  ds.grid = tiny_grid();
  ds.samples.push_back({"p1", "s1", Histology::NormalSquamous, {1, 2, 3}});
  ds.samples.push_back({"p1", "s1", Histology::NormalColumnar, {1, 2, 3}});
  CHECK_THROWS_WITH_AS(ds.validate(), doctest::Contains("duplicate"),
                       ValidationError);

  ds.samples[1].site_id = "s2";
  CHECK_NOTHROW(ds.validate());

  ds.samples[1].patient_id = "";
  CHECK_THROWS_AS(ds.validate(), ValidationError);
}

TEST_CASE("patient-disjoint split covers the dataset") {
  const Dataset ds = synthesize_dataset(SynthConfig::defaults());
  const auto [train, test] = split_train_test(ds, 0.5, true, 11);

  CHECK(train.split_tag == SplitTag::train);
  CHECK(test.split_tag == SplitTag::test);
  CHECK(train.samples.size() + test.samples.size() == ds.samples.size());
  CHECK(train.samples.size() > 70);
  CHECK(train.samples.size() < 110);

  std::set<std::string> train_patients, test_patients;
  for (const auto& s : train.samples) train_patients.insert(s.patient_id);
  for (const auto& s : test.samples) test_patients.insert(s.patient_id);
  for (const auto& p : train_patients) {
    CHECK(test_patients.count(p) == 0);
  }
}

TEST_CASE("split boundary fraction resolves to a 3/1 patient split") {
  SynthConfig cfg = SynthConfig::defaults();
  cfg.class_counts = {8, 2, 0, 2, 4};  // 16 samples, 4 patients of 4 sites
  const Dataset ds = synthesize_dataset(cfg);

  const auto [train, test] = split_train_test(ds, 0.999, true, 1);
  std::set<std::string> train_patients, test_patients;
  for (const auto& s : train.samples) train_patients.insert(s.patient_id);
  for (const auto& s : test.samples) test_patients.insert(s.patient_id);
  CHECK(train_patients.size() == 3);
  CHECK(test_patients.size() == 1);
}

TEST_CASE("split is deterministic and validates its inputs") {
  const Dataset ds = synthesize_dataset(SynthConfig::defaults());
  const auto [a_train, a_test] = split_train_test(ds, 0.6, true, 5);
  const auto [b_train, b_test] = split_train_test(ds, 0.6, true, 5);
  CHECK(a_train == b_train);
  CHECK(a_test == b_test);

  CHECK_THROWS_AS(split_train_test(ds, 0.0, true, 5), ValidationError);
  CHECK_THROWS_AS(split_train_test(ds, 1.0, true, 5), ValidationError);
  CHECK_THROWS_AS(split_train_test(a_train, 0.5, true, 5), ValidationError);

  SynthConfig one_patient = SynthConfig::defaults();
  one_patient.class_counts = {2, 0, 0, 0, 1};
  one_patient.sites_per_patient = 3;
  const Dataset tiny = synthesize_dataset(one_patient);
  CHECK_THROWS_AS(split_train_test(tiny, 0.5, true, 5), ValidationError);
}
