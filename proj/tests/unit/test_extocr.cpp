// Copyright 2026 The lprbench Authors.
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

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <map>

#include "lpr/extocr.hpp"
#include "lpr/imaging.hpp"
#include "lpr/metrics.hpp"
#include "lpr/platesynth.hpp"
#include "support/oracles.hpp"

using namespace lpr;
namespace fs = std::filesystem;

namespace {

std::string engine(const std::string& script) {
  return shell_quote(std::string(LPR_TEST_ENGINES) + "/" + script) + " {input}";
}

class ExtOcr : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(oracle::scratch_dir("extocr"));
    manifest_ = new Manifest(generate_dataset(8, PlateGrammar{}, RenderParams{}, (*dir_ / "data").string(), 3));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete manifest_;
    delete dir_;
  }
  static fs::path* dir_;
  static Manifest* manifest_;
};

fs::path* ExtOcr::dir_ = nullptr;
Manifest* ExtOcr::manifest_ = nullptr;

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[e.path().string()] = oracle::slurp(e.path());
  return files;
}

}  // namespace

TEST(EngineSpecTest, Validation) {
  EXPECT_THROW((EngineSpec{"tess", 100}.validate()), ParameterError);
  EXPECT_THROW((EngineSpec{"tess {input} {input}", 100}.validate()), ParameterError);
  EXPECT_THROW((EngineSpec{"tess {input}", 0}.validate()), ParameterError);
  EXPECT_NO_THROW((EngineSpec{"tess {input} stdout", 100}.validate()));
  EXPECT_EQ(shell_quote("a'b c"), "'a'\\''b c'");
}

TEST(Normalize, TrimAndFilter) {
  const CharSet cs = CharSet::latin_default();
  EXPECT_EQ(normalize_engine_text(" 34abc12\n", true, cs), "34ABC12");
  EXPECT_EQ(normalize_engine_text(" 34abc12\n", false, cs), "34abc12");
  EXPECT_EQ(normalize_engine_text("34 A-B.C12\n\n", true, cs), "34ABC12");
  EXPECT_EQ(normalize_engine_text("\t\n", true, cs), "");
}

TEST_F(ExtOcr, RecognizeContracts) {
  const std::string img = manifest_->image_path(manifest_->entries[0]);
  EXPECT_EQ(recognize_external({engine("fixed.sh"), 5000, true}, img).text, "34ABC12");
  EXPECT_EQ(recognize_external({engine("fixed.sh"), 5000, false}, img).text, "34abc12");
  EXPECT_EQ(recognize_external({engine("read_label.sh"), 5000}, img).text, manifest_->entries[0].label);
  EXPECT_TRUE(recognize_external({"printf '  ' ; : {input}", 5000}, img).empty);
  try {
    recognize_external({engine("fail.sh"), 5000}, img);
    ADD_FAILURE() << "no engine error";
  } catch (const EngineError& e) {
    EXPECT_NE(e.stderr_text().find("engine exploded"), std::string::npos);
  }
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(recognize_external({engine("sleep.sh"), 300}, img), EngineTimeout);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
}

TEST_F(ExtOcr, Availability) {
  EXPECT_TRUE(engine_available({engine("read_label.sh"), 100}));
  EXPECT_TRUE(engine_available({"sh -c true {input}", 100}));
  EXPECT_FALSE(engine_available({"/nonexistent/tesseract {input}", 100}));
  EXPECT_FALSE(engine_available({"no-such-ocr-engine-xyz {input}", 100}));
}

TEST_F(ExtOcr, PerfectAndDropLastEngines) {
  const auto before = snapshot(*dir_ / "data");
  const fs::path tmp = *dir_ / "tmp";
  fs::create_directories(tmp);
  BenchOptions opt;
  opt.temp_root = tmp.string();
  const BenchResult perfect = bench_external({engine("read_label.sh"), 5000}, *manifest_, {}, opt);
  ASSERT_EQ(perfect.records.size(), manifest_->entries.size());
  EXPECT_EQ(evaluate(perfect.records).accuracy, 1.0);
  opt.jobs = 3;
  const BenchResult cropped =
      bench_external({engine("read_label.sh"), 5000}, *manifest_, parse_pipeline({"crop", "binarize"}), opt);
  EXPECT_EQ(evaluate(cropped.records).accuracy, 1.0);
  for (std::size_t i = 0; i < cropped.records.size(); ++i)
    EXPECT_EQ(cropped.records[i].sample_id, manifest_->entries[i].filename);
  const EvalReport dropped = evaluate(bench_external({engine("drop_last.sh"), 5000}, *manifest_, {}, opt).records);
  EXPECT_EQ(dropped.accuracy, 0.0);
  EXPECT_EQ(dropped.tn1, manifest_->entries.size());
  EXPECT_EQ(snapshot(*dir_ / "data"), before);
  EXPECT_TRUE(fs::is_empty(tmp));
}

TEST_F(ExtOcr, FailuresRecordedThenAbort) {
  const std::string victim = manifest_->entries[2].label;
  const BenchResult flaky = bench_external({engine("flaky.sh") + " " + victim, 5000}, *manifest_, {});
  ASSERT_EQ(flaky.records.size(), manifest_->entries.size());
  ASSERT_EQ(flaky.failures.size(), 1u);
  EXPECT_EQ(flaky.failures[0].sample_id, manifest_->entries[2].filename);
  EXPECT_NE(flaky.failures[0].message.find("refusing"), std::string::npos) << flaky.failures[0].message;
  EXPECT_EQ(flaky.records[2].predicted, "");
  EXPECT_EQ(flaky.records[3].predicted, manifest_->entries[3].label);
  EXPECT_THROW(bench_external({engine("fail.sh"), 5000}, *manifest_, {}), BenchAborted);
}
