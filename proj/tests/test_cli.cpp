#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "tann/checkpoint.hpp"
#include "tann/csvio.hpp"
#include "tann/network.hpp"

using namespace tann;
namespace fs = std::filesystem;

namespace {

struct CliDir {
  fs::path path;
  CliDir() : path("cli_test_dir") {
    std::error_code ec;
    fs::remove_all(path, ec);
    fs::create_directories(path);
  }
  ~CliDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run_cli(const CliDir& dir, const std::string& args) {
  const std::string out_path = dir.file("stdout.txt");
  const std::string err_path = dir.file("stderr.txt");
  const std::string cmd =
      std::string(TANN_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

std::string write_small_montage(const CliDir& dir) {
  const std::string path = dir.file("montage.txt");
  write_file_atomic(path,
                    "# 4 electrodes, 2 regions\n"
                    "a 0 0 left\n"
                    "b 0 1 left\n"
                    "c 0 2 right\n"
                    "d 0 3 right\n");
  return path;
}

std::string synth_args(const CliDir& dir) {
  return "synth --out " + dir.file("data") +
         " --subjects 3 --trials 4 --samples-per-trial 3 --classes 2 --d 2"
         " --class-sep 2 --subject-shift 0.5 --seed 5";
}

std::string train_args(const CliDir& dir, const std::string& out, const std::string& extra = "",
                       int seed = 5) {
  return "train --data " + dir.file("data/manifest.txt") + " --out " + dir.file(out) +
         " --d-f 3 --d-fp 3 --n-prime 2 --local-hidden 4 --global-hidden 4"
         " --batch-size 8 --epochs 2 --lr 0.01 --seed " + std::to_string(seed) +
         (extra.empty() ? "" : " " + extra);
}

size_t count_lines(const std::string& text) {
  size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// Selected columns of a CSV file, one vector per row.
std::vector<std::vector<std::string>> read_csv_columns(const std::string& path,
                                                       const std::vector<size_t>& cols) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> row;
  std::string cell;
  for (char c : read_file(path)) {
    if (c == ',') {
      row.push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      row.push_back(cell);
      cell.clear();
      std::vector<std::string> picked;
      for (size_t k : cols) picked.push_back(row.at(k));
      out.push_back(std::move(picked));
      row.clear();
    } else {
      cell += c;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("synth then train writes the full artifact tree") {
  CliDir dir;

  const RunResult sy = run_cli(dir, synth_args(dir) + " --probe");
  CAPTURE(sy.err);
  REQUIRE(sy.code == 0);
  CHECK(sy.out.find("planted regions:") != std::string::npos);
  CHECK(sy.out.find("probe on planted columns:") != std::string::npos);
  CHECK(fs::exists(dir.file("data/manifest.txt")));
  CHECK(fs::exists(dir.file("data/subj00.ft")));

  const RunResult tr = run_cli(dir, train_args(dir, "run"));
  CAPTURE(tr.err);
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("mean target accuracy") != std::string::npos);
  CHECK(fs::exists(dir.file("run/config.ini")));
  CHECK(fs::exists(dir.file("run/folds.csv")));
  CHECK(fs::exists(dir.file("run/region_map.csv")));
  for (const std::string subj : {"subj00", "subj01", "subj02"}) {
    for (const std::string art :
         {"history.csv", "predictions.csv", "confusion.csv", "attention_local.csv",
          "attention_global.csv", "checkpoint.ckpt"})
      CHECK(fs::exists(dir.file("run/folds/" + subj + "/" + art)));
  }

  const std::string config = read_file(dir.file("run/config.ini"));
  CHECK(config.find("epochs=2") != std::string::npos);
  CHECK(config.find("seed=5") != std::string::npos);

  // one header + one row per epoch
  CHECK(count_lines(read_file(dir.file("run/folds/subj00/history.csv"))) == 3);
  // folds.csv: header + 3 folds + mean + std
  CHECK(count_lines(read_file(dir.file("run/folds.csv"))) == 6);

  SUBCASE("eval and attmap read a trained checkpoint") {
    const std::string ckpt = dir.file("run/folds/subj00/checkpoint.ckpt");
    const RunResult ev = run_cli(dir, "eval --checkpoint " + ckpt + " --data " +
                                          dir.file("data/manifest.txt") + " --out " + dir.file("ev"));
    CAPTURE(ev.err);
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("fold subj00:") != std::string::npos);
    CHECK(ev.out.find("accuracy") != std::string::npos);
    CHECK(fs::exists(dir.file("ev/predictions.csv")));
    CHECK(fs::exists(dir.file("ev/confusion.csv")));
    CHECK(fs::exists(dir.file("ev/region_map.csv")));
    // 12 target samples: header + 12
    CHECK(count_lines(read_file(dir.file("ev/predictions.csv"))) == 13);

    const RunResult am = run_cli(dir, "attmap --checkpoint " + ckpt + " --data " +
                                          dir.file("data/manifest.txt") + " --out " + dir.file("am"));
    CAPTURE(am.err);
    REQUIRE(am.code == 0);
    CHECK(am.out.find("Pre-Frontal") != std::string::npos);
    CHECK(count_lines(read_file(dir.file("am/region_map.csv"))) == 17);
    CHECK(fs::exists(dir.file("am/region_map.csv")));

    // a fold that exists under the protocol but is not the checkpoint's own
    const RunResult other = run_cli(dir, "eval --checkpoint " + ckpt + " --data " +
                                             dir.file("data/manifest.txt") + " --fold subj01");
    CHECK(other.code == 0);
    CHECK(other.out.find("fold subj01:") != std::string::npos);

    const RunResult missing = run_cli(dir, "eval --checkpoint " + ckpt + " --data " +
                                               dir.file("data/manifest.txt") + " --fold nope");
    CHECK(missing.code == 2);
    CHECK(missing.err.find("no fold named") != std::string::npos);
  }

  SUBCASE("train is deterministic across runs") {
    const RunResult again = run_cli(dir, train_args(dir, "run2"));
    REQUIRE(again.code == 0);
    CHECK(read_file(dir.file("run2/folds.csv")) == read_file(dir.file("run/folds.csv")));
    for (const std::string subj : {"subj00", "subj01", "subj02"}) {
      CHECK(file_checksum(dir.file("run2/folds/" + subj + "/checkpoint.ckpt")) ==
            file_checksum(dir.file("run/folds/" + subj + "/checkpoint.ckpt")));
      CHECK(read_file(dir.file("run2/folds/" + subj + "/history.csv")) ==
            read_file(dir.file("run/folds/" + subj + "/history.csv")));
    }

    const RunResult other_seed = run_cli(dir, train_args(dir, "run3", "", 6));
    REQUIRE(other_seed.code == 0);
    // a different base seed draws a different model; losses and weights move
    CHECK(read_file(dir.file("run3/folds/subj00/history.csv")) !=
          read_file(dir.file("run/folds/subj00/history.csv")));
    CHECK(file_checksum(dir.file("run3/folds/subj00/checkpoint.ckpt")) !=
          file_checksum(dir.file("run/folds/subj00/checkpoint.ckpt")));
  }

  SUBCASE("ablated variant skips attention artifacts") {
    const RunResult r1 = run_cli(dir, train_args(dir, "r1", "--variant r1"));
    CAPTURE(r1.err);
    REQUIRE(r1.code == 0);
    CHECK(fs::exists(dir.file("r1/folds.csv")));
    CHECK_FALSE(fs::exists(dir.file("r1/region_map.csv")));
    CHECK_FALSE(fs::exists(dir.file("r1/folds/subj00/attention_local.csv")));

    const std::string ckpt = dir.file("r1/folds/subj00/checkpoint.ckpt");
    const RunResult am = run_cli(dir, "attmap --checkpoint " + ckpt + " --data " +
                                          dir.file("data/manifest.txt"));
    CHECK(am.code == 2);
    CHECK(am.err.find("no region attention branch") != std::string::npos);
  }

  SUBCASE("eval on a checkpoint echoes the end-of-train accuracy") {
    const std::string ckpt = dir.file("run/folds/subj01/checkpoint.ckpt");
    const RunResult ev =
        run_cli(dir, "eval --checkpoint " + ckpt + " --data " + dir.file("data/manifest.txt"));
    REQUIRE(ev.code == 0);
    const size_t at = ev.out.find("accuracy ");
    REQUIRE(at != std::string::npos);
    std::string echoed = ev.out.substr(at + 9);
    echoed = echoed.substr(0, echoed.find('\n'));

    // the subj01 row of folds.csv carries the same formatted value
    const std::string folds = read_file(dir.file("run/folds.csv"));
    const size_t row = folds.find("\nsubj01,");
    REQUIRE(row != std::string::npos);
    std::string line = folds.substr(row + 1);
    line = line.substr(0, line.find('\n'));
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    CHECK(cells[4] == echoed);
  }

  SUBCASE("zero alpha and beta walk the r1 trajectory") {
    const RunResult full = run_cli(dir, train_args(dir, "a0", "--alpha 0 --beta 0"));
    const RunResult r1 = run_cli(dir, train_args(dir, "b0", "--alpha 0 --beta 0 --variant r1"));
    REQUIRE(full.code == 0);
    REQUIRE(r1.code == 0);
    for (const std::string subj : {"subj00", "subj01", "subj02"}) {
      // same classifier loss, accuracy, and schedule columns step for step
      const auto a = read_csv_columns(dir.file("a0/folds/" + subj + "/history.csv"),
                                      {0, 1, 5, 6, 7});
      const auto b = read_csv_columns(dir.file("b0/folds/" + subj + "/history.csv"),
                                      {0, 1, 5, 6, 7});
      CHECK(a == b);
      // and the checkpoints hold bitwise-equal tensors
      const Checkpoint ca = load_checkpoint(dir.file("a0/folds/" + subj + "/checkpoint.ckpt"));
      const Checkpoint cb = load_checkpoint(dir.file("b0/folds/" + subj + "/checkpoint.ckpt"));
      std::string diff;
      for_each_tensor(ca.params, [&](const std::string& name, const Matrix& ta) {
        if (!diff.empty()) return;
        const Matrix* tb = find_tensor(const_cast<ModelParams&>(cb.params), name);
        if (!tb || !bitwise_equal(ta, *tb)) diff = name;
      });
      CHECK(diff.empty());
    }
  }

  SUBCASE("ablate writes one row per variant and seed") {
    const RunResult ab = run_cli(
        dir, "ablate --data " + dir.file("data/manifest.txt") + " --out " + dir.file("ab") +
                 " --d-f 3 --d-fp 3 --n-prime 2 --local-hidden 4 --global-hidden 4"
                 " --batch-size 8 --epochs 1 --lr 0.01 --seed 5 --variants full,r1 --seeds 2");
    CAPTURE(ab.err);
    REQUIRE(ab.code == 0);
    const std::string csv = read_file(dir.file("ab/ablate_results.csv"));
    CHECK(count_lines(csv) == 5);  // header + 2 variants x 2 seeds
    CHECK(csv.find("full,5,") != std::string::npos);
    CHECK(csv.find("full,6,") != std::string::npos);
    CHECK(csv.find("r1,5,") != std::string::npos);
    CHECK(csv.find("r1,6,") != std::string::npos);

    const RunResult bad = run_cli(dir, "ablate --data " + dir.file("data/manifest.txt") +
                                           " --out " + dir.file("ab2") + " --variants full,bogus");
    CHECK(bad.code == 1);
    CHECK(bad.err.find("unknown variant") != std::string::npos);
  }
}

TEST_CASE("gradcheck subcommand") {
  CliDir dir;
  const RunResult ok = run_cli(dir, "gradcheck --max-coords 2 --seed 3");
  CAPTURE(ok.err);
  REQUIRE(ok.code == 0);
  CHECK(ok.out.find("max relative error") != std::string::npos);
  CHECK(ok.out.find("pass") != std::string::npos);

  // an impossible tolerance turns the same audit into a numeric failure
  const RunResult tight = run_cli(dir, "gradcheck --max-coords 2 --seed 3 --tol 1e-15");
  CHECK(tight.code == 3);
  CHECK(tight.err.find("gradient audit failed") != std::string::npos);
}

TEST_CASE("cli exit codes by error class") {
  CliDir dir;
  const std::string montage = write_small_montage(dir);

  CHECK(run_cli(dir, "").code == 1);                    // missing subcommand
  CHECK(run_cli(dir, "frobnicate").code == 1);          // unknown subcommand
  CHECK(run_cli(dir, "synth").code == 1);               // missing required --out
  CHECK(run_cli(dir, "train --data x --out y --bogus-flag").code == 1);

  // usage error raised past the parser
  const RunResult variant = run_cli(dir, "train --data x --out y --variant bogus");
  CHECK(variant.code == 1);
  CHECK(variant.err.find("unknown variant") != std::string::npos);

  // validation errors: bad config value, then missing input file
  const RunResult bad_cfg =
      run_cli(dir, "synth --out " + dir.file("data") +
                       " --trials 5 --classes 2");
  CHECK(bad_cfg.code == 2);

  const RunResult missing =
      run_cli(dir, "train --data " + dir.file("nope/manifest.txt") + " --out " + dir.file("o"));
  CHECK(missing.code == 2);
  CHECK(missing.err.find("cannot open") != std::string::npos);

  CHECK(run_cli(dir, "--help").code == 0);
  CHECK(run_cli(dir, "train --help").code == 0);
}
