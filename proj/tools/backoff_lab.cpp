// Command-line front end. Links only the C API of libbackoff.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "backoff/capi.h"

namespace {

const char* kCommands[] = {"classify", "trace",     "simulate", "couple",
                           "hls-check", "veb",      "plotdata"};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read config file '" << path << "'\n";
    std::exit(1);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backoff-lab: simulation and verification of contention-resolution backoff protocols"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string format;
  std::uint64_t seed = 0;
  bool has_seed = false;
  bool synthetic = false;

  for (const char* name : kCommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv or jsonl, overriding the config");
    sub->add_option("--seed", seed, "base seed, overriding the config")
        ->each([&](const std::string&) { has_seed = true; });
    sub->add_flag("--synthetic-constants", synthetic,
                  "force desk-scale constant overrides on");
  }

  CLI11_PARSE(app, argc, argv);
  std::string command = app.get_subcommands().front()->get_name();
  std::string text = read_file(config_path);

  char message[4096] = {0};
  int code = bkp_experiment_run(text.c_str(), command.c_str(), out_dir.c_str(),
                                format.empty() ? nullptr : format.c_str(),
                                synthetic ? 1 : 0, has_seed ? 1 : 0, seed,
                                message, sizeof message);
  if (message[0]) std::cerr << message << "\n";
  if (code == 0)
    std::cout << command << ": ok, artifacts in " << out_dir << "\n";
  else
    std::cerr << command << ": exit " << code << "\n";
  return code;
}
