#include "mmdq/acceptance.hpp"
#include "mmdq/runner.hpp"
#include "mmdq/version.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int do_run(const std::string& path) {
  mmdq::RunConfig cfg = mmdq::load_run_config(path);
  if (cfg.method == mmdq::Method::IidBaseline) {
    mmdq::baseline_to_files(cfg);
  } else {
    mmdq::ExecutedRun run = mmdq::run_to_files(cfg);
    std::cerr << "run finished: n=" << run.result.trace.records.size()
              << (run.result.trace.stop_reason.empty()
                      ? ""
                      : " (stopped: " + run.result.trace.stop_reason + ")")
              << ", total " << run.total_s << "s\n";
  }
  return 0;
}

int do_compare(const std::vector<std::string>& paths, const std::string& output) {
  std::vector<mmdq::RunConfig> cfgs;
  cfgs.reserve(paths.size());
  for (const auto& p : paths) cfgs.push_back(mmdq::load_run_config(p));
  mmdq::check_shared_sections(cfgs);
  std::vector<mmdq::ExecutedRun> runs;
  std::vector<mmdq::ExecutedBaseline> baselines;
  for (const auto& cfg : cfgs) {
    if (cfg.method == mmdq::Method::IidBaseline)
      baselines.push_back(mmdq::execute_baseline(cfg));
    else
      runs.push_back(mmdq::execute_run(cfg));
  }
  if (output.empty()) {
    mmdq::write_compare_csv(std::cout, runs, baselines);
  } else {
    std::ofstream os(output, std::ios::binary);
    if (!os) throw mmdq::config_error("cannot write output file: " + output);
    mmdq::write_compare_csv(os, runs, baselines);
  }
  return 0;
}

int do_baseline(const std::string& path, int reps) {
  mmdq::RunConfig cfg = mmdq::load_run_config(path);
  if (reps > 0) cfg.repetitions = reps;
  mmdq::baseline_to_files(cfg);
  return 0;
}

int do_verify(bool quick) {
  mmdq::acceptance::Options opt;
  opt.quick = quick;
  const mmdq::acceptance::Report rep = mmdq::acceptance::run_all(opt, std::cout);
  return rep.all_passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"greedy MMD quantisation toolkit"};
  app.set_version_flag("--version", mmdq::kVersion);
  app.require_subcommand(1);

  std::string run_cfg;
  auto* run = app.add_subcommand("run", "run one construction from a config file");
  run->add_option("--config", run_cfg, "JSON config")->required();

  std::vector<std::string> cmp_cfgs;
  std::string cmp_out;
  auto* cmp = app.add_subcommand("compare", "merge several runs into one long CSV");
  cmp->add_option("--config", cmp_cfgs, "JSON configs (repeatable)")->required();
  cmp->add_option("--output", cmp_out, "output CSV (default stdout)");

  std::string base_cfg;
  int base_reps = 0;
  auto* base = app.add_subcommand("baseline", "iid sampling baseline statistics");
  base->add_option("--config", base_cfg, "JSON config")->required();
  base->add_option("--reps", base_reps, "override repetition count");

  bool quick = false;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_flag("--quick", quick, "skip the desk-scale sweeps and timing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return do_run(run_cfg);
    if (cmp->parsed()) return do_compare(cmp_cfgs, cmp_out);
    if (base->parsed()) return do_baseline(base_cfg, base_reps);
    if (verify->parsed()) return do_verify(quick);
  } catch (const mmdq::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
