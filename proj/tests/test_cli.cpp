/*
 * Copyright 2026 The lidarprior Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "lidarprior/cli.hpp"
#include "lidarprior/io.hpp"
#include "lidarprior/plot.hpp"
#include "lidarprior/simgen.hpp"
#include "lidarprior/text.hpp"
#include "test_support.hpp"

#ifndef LIDARPRIOR_CLI_PATH
#error "LIDARPRIOR_CLI_PATH must point at the lidarprior binary"
#endif

namespace lidarprior {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd =
      std::string(LIDARPRIOR_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out[fs::relative(e.path(), root).string()] = text::read_file(e.path().string());
    }
  }
  return out;
}

// One small map/drive pair shared by the tests in this file.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    ASSERT_EQ(run("simgen --mode map --frames 12 -o " + dir_->str("map_run")), 0);
    ASSERT_EQ(run("simgen --mode drive --frames 12 -o " + dir_->str("drive")), 0);
    ASSERT_EQ(run("map " + dir_->str("map_run/manifest.txt") + " -o " + dir_->str("prior.map")),
              0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& name) { return dir_->str(name); }

  static testing::TempDir* dir_;
};

testing::TempDir* CliTest::dir_ = nullptr;

TEST_F(CliTest, MapWritesAPriorMap) {
  EXPECT_TRUE(fs::exists(path("prior.map")));
  const auto map = load_prior_map(path("prior.map"));
  EXPECT_EQ(map.frame_count, 12u);
  EXPECT_EQ(map.ground_planes.size(), 1u);
}

TEST_F(CliTest, MapWithMissingPoseTrackExits2) {
  testing::TempDir d("nopose");
  text::write_file(d.str("m.txt"), "poses: missing.txt\n" + path("drive/frame_000000.bin") + "\n");
  EXPECT_EQ(run("map " + d.str("m.txt") + " -o " + d.str("x.map")), 2);
}

TEST_F(CliTest, MapWithEmptyManifestExits3) {
  testing::TempDir d("empty");
  text::write_file(d.str("m.txt"), "");
  EXPECT_EQ(run("map " + d.str("m.txt") + " -o " + d.str("x.map")), 3);
}

TEST_F(CliTest, BadArgumentsExit2) {
  EXPECT_EQ(run("map"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("map " + path("map_run/manifest.txt") + " -o " + path("x.map") + " --mode nope"),
            2);
  EXPECT_EQ(run("map " + path("map_run/manifest.txt") + " -o " + path("x.map") + " --eps -1"), 2);
}

TEST_F(CliTest, DetectWritesOnePlyPerFrame) {
  testing::TempDir out("det");
  ASSERT_EQ(run("detect " + path("prior.map") + " " + path("drive/manifest.txt") + " -o " +
                out.str()),
            0);
  for (std::size_t k = 0; k < 12; ++k) {
    const auto ply = io::parse_ply_ascii(
        text::read_file(out.str(cli::frame_name("frame", k, ".ply"))));
    const auto cloud = io::load_cloud(path("drive/" + cli::frame_name("frame", k, ".bin")));
    EXPECT_EQ(ply.rows(), cloud.size());
    EXPECT_TRUE(ply.index_of("fg_label"));
    EXPECT_TRUE(ply.index_of("stage_rejected"));
    EXPECT_TRUE(fs::exists(out.str(cli::frame_name("boxes", k, ".txt"))));
  }
  const auto stats = text::read_lines(out.str("stats.tsv"));
  EXPECT_EQ(stats.size(), 13u);
}

TEST_F(CliTest, DetectIsThreadCountIndependent) {
  testing::TempDir a("t1"), b("t3");
  const std::string args = "detect " + path("prior.map") + " " + path("drive/manifest.txt");
  ASSERT_EQ(run(args + " --threads 1 -o " + a.str()), 0);
  ASSERT_EQ(run(args + " --threads 3 -o " + b.str()), 0);
  EXPECT_EQ(read_tree(a.path()), read_tree(b.path()));
}

TEST_F(CliTest, DetectRejectsVersionMismatch) {
  testing::TempDir d("ver");
  auto text = text::read_file(path("prior.map"));
  text.replace(text.find("v1"), 2, "v7");
  text::write_file(d.str("bad.map"), text);
  EXPECT_EQ(run("detect " + d.str("bad.map") + " " + path("drive/manifest.txt") + " -o " +
                    d.str("out"),
                d.str("log")),
            2);
  EXPECT_NE(text::read_file(d.str("log")).find("version"), std::string::npos);

  text::write_file(d.str("cfg.ini"), "version = v2\n");
  EXPECT_EQ(run("detect " + path("prior.map") + " " + path("drive/manifest.txt") + " -c " +
                    d.str("cfg.ini") + " -o " + d.str("out2"),
                d.str("log2")),
            2);
  EXPECT_NE(text::read_file(d.str("log2")).find("version"), std::string::npos);
}

TEST_F(CliTest, DetectWithUnwritableOutDirExits2) {
  testing::TempDir d("unwritable");
  text::write_file(d.str("file"), "x");
  EXPECT_EQ(run("detect " + path("prior.map") + " " + path("drive/manifest.txt") + " -o " +
                d.str("file/sub")),
            2);
}

TEST_F(CliTest, DetectWithCalibrationWritesStageStats) {
  testing::TempDir out("calib");
  ASSERT_EQ(run("detect " + path("prior.map") + " " + path("drive/manifest.txt") +
                " --calibrate 3 -o " + out.str()),
            0);
  EXPECT_TRUE(fs::exists(out.str("stages.tsv")));
}

TEST_F(CliTest, EvalPerfectDetections) {
  testing::TempDir det("perfect");
  for (std::size_t k = 0; k < 12; ++k) {
    const auto labels =
        simgen::parse_labels(text::read_file(path("drive/" + cli::frame_name("labels", k, ".txt"))));
    io::PlyTable t;
    std::vector<double> xs(labels.size(), 0.0), fg(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) fg[i] = simgen::is_foreground(labels[i]) ? 4 : 0;
    t.add_column("float", "x", xs);
    t.add_column("float", "y", xs);
    t.add_column("float", "z", xs);
    t.add_column("int", "fg_label", fg);
    text::write_file(det.str(cli::frame_name("frame", k, ".ply")), io::format_ply_ascii(t));
    fs::copy_file(path("drive/" + cli::frame_name("boxes", k, ".txt")),
                  det.str(cli::frame_name("boxes", k, ".txt")));
  }
  ASSERT_EQ(run("eval " + det.str() + " " + path("drive") + " -o " + det.str("m.tsv")), 0);
  const auto lines = text::read_lines(det.str("m.tsv"));
  ASSERT_EQ(lines.size(), 14u);
  const auto total = text::split_ws(lines.back());
  EXPECT_EQ(total[0], "TOTAL");
  EXPECT_EQ(total[5], "1.000000");   // precision
  EXPECT_EQ(total[6], "1.000000");   // recall
  EXPECT_EQ(total[12], "1.000000");  // box recall
}

TEST_F(CliTest, EvalEmptyDetectionsScoresZeroRecall) {
  testing::TempDir det("nodet");
  ASSERT_EQ(run("eval " + det.str() + " " + path("drive") + " -o " + det.str("../nodet.tsv")), 0);
  const auto lines = text::read_lines(det.str("../nodet.tsv"));
  const auto total = text::split_ws(lines.back());
  EXPECT_EQ(total[6], "0.000000");
  fs::remove(det.str("../nodet.tsv"));
}

TEST_F(CliTest, EvalCountMismatchExits2) {
  testing::TempDir det("mismatch");
  ASSERT_EQ(run("detect " + path("prior.map") + " " + path("drive/manifest.txt") + " -o " +
                det.str()),
            0);
  fs::remove(det.str(cli::frame_name("frame", 11, ".ply")));
  EXPECT_EQ(run("eval " + det.str() + " " + path("drive")), 2);
}

TEST_F(CliTest, SimgenMapModeHasNoDynamicLabels) {
  for (std::size_t k = 0; k < 12; ++k) {
    const auto labels =
        simgen::parse_labels(text::read_file(path("map_run/" + cli::frame_name("labels", k, ".txt"))));
    EXPECT_TRUE(std::none_of(labels.begin(), labels.end(), simgen::is_foreground));
  }
}

TEST_F(CliTest, SimgenIsDeterministic) {
  testing::TempDir a("sa"), b("sb");
  ASSERT_EQ(run("simgen --frames 3 --seed 5 -o " + a.str()), 0);
  ASSERT_EQ(run("simgen --frames 3 --seed 5 --threads 2 -o " + b.str()), 0);
  EXPECT_EQ(read_tree(a.path()), read_tree(b.path()));
}

TEST_F(CliTest, SimgenInvalidSpecNamesField) {
  testing::TempDir d("spec");
  auto spec = text::read_file(path("drive/scene.txt"));
  spec.replace(spec.find("frame_rate = 10"), 15, "frame_rate = -10");
  text::write_file(d.str("scene.txt"), spec);
  EXPECT_EQ(run("simgen -s " + d.str("scene.txt") + " -o " + d.str("out"), d.str("log")), 2);
  EXPECT_NE(text::read_file(d.str("log")).find("frame_rate"), std::string::npos);
}

TEST_F(CliTest, HistogramAndPlot) {
  testing::TempDir d("plot");
  ASSERT_EQ(run("histogram " + path("drive/frame_000000.bin") + " -o " + d.str("h.vdisp") +
                " --labels " + d.str("road.ply")),
            0);
  ASSERT_EQ(run("plot " + d.str("h.vdisp") + " -o " + d.str("h.svg")), 0);
  const auto svg = text::read_file(d.str("h.svg"));
  std::size_t lines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) {
    ++lines;
  }
  EXPECT_EQ(lines, 1u);

  ASSERT_EQ(run("plot " + d.str("road.ply") + " -o " + d.str("colored.ply")), 0);
  const auto in = io::parse_ply_ascii(text::read_file(d.str("road.ply")));
  const auto out = io::parse_ply_ascii(text::read_file(d.str("colored.ply")));
  EXPECT_EQ(in.rows(), out.rows());
  EXPECT_TRUE(out.index_of("red"));

  plot::VDisparityPlot empty;
  empty.histogram.rows = 4;
  empty.histogram.bins = 8;
  empty.histogram.delta_max = 0.5;
  empty.histogram.counts.assign(32, 0);
  text::write_file(d.str("empty.vdisp"), plot::format_vdisp(empty));
  EXPECT_EQ(run("plot " + d.str("empty.vdisp") + " -o " + d.str("empty.svg")), 0);
  EXPECT_EQ(text::read_file(d.str("empty.svg")).find("<polyline"), std::string::npos);

  text::write_file(d.str("junk.txt"), "hello\n");
  EXPECT_EQ(run("plot " + d.str("junk.txt") + " -o " + d.str("junk.svg")), 2);
}

}  // namespace
}  // namespace lidarprior
