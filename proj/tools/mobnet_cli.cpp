// mobnet: run one experiment from a config file and write its CSVs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw mobnet::Error(mobnet::ErrorCode::Config, "cannot write " + p.string());
  out << text;
}

void write_report(const mobnet::ExperimentReport& rep, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& t : rep.tables) write_file(dir / (t.name() + ".csv"), t.csv());
  write_file(dir / "verdicts.csv", mobnet::ExperimentReport::verdict_header() + rep.verdict_rows());
  write_file(dir / "report.txt", rep.to_string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification harness for processor-sharing networks with mobile users"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", format = "csv";
  std::uint64_t seed = 0, reps = 0;
  int threads = 0;
  bool seed_given = false;

  for (const auto& name : mobnet::experiment_commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "master seed (overrides [rng] seed)")->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--reps", reps, "replication count override");
    sub->add_option("--threads", threads, "worker threads (0: all)");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = mobnet::Config::load(config_path);
    mobnet::RunOptions opt;
    opt.seed = seed_given ? seed : static_cast<std::uint64_t>(cfg.integer_or("rng", "seed", 1));
    opt.threads = threads;
    const auto rep = mobnet::run_from_config(command, cfg, opt, reps);
    write_report(rep, out_dir);
    std::cout << mobnet::ExperimentReport::verdict_header() << rep.verdict_rows();
    return rep.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "mobnet " << command << ": " << e.what() << "\n";
    return 2;
  }
}
