#include <CLI11.hpp>
#include <iostream>

#include "ndro/commands.hpp"

int main(int argc, char** argv) {
  using namespace ndro::cli;
  CLI::App app{"Distributionally robust learning of a single neuron"};
  app.require_subcommand(1);
  CommandOptions opt;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory (overrides the config)");
    sub->add_option("--format", opt.formats, "Output format: csv, json or svg (repeatable)")
        ->check(CLI::IsMember({"csv", "json", "svg"}));
  };

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  gen->add_option("--config", opt.config, "Experiment config (JSON)")->required();
  gen->add_option("--seed", seed, "Override the generator seed");
  add_common(gen);

  auto* tr = app.add_subcommand("train", "Run the primal-dual method on a dataset");
  tr->add_option("--config", opt.config, "Experiment config (JSON)")->required();
  tr->add_option("--dataset", opt.dataset, "Dataset CSV")->required();
  tr->add_option("--seed", seed, "Override the algorithm seed");
  add_common(tr);

  auto* ver = app.add_subcommand("verify", "Check closed forms and invariants against oracles");
  ver->add_option("--seed", seed, "Seed for the random instances");
  ver->add_option("--instances", opt.instances, "Random instances per suite");
  ver->add_option("--max-n", opt.max_n, "Largest sample count in random instances");
  ver->add_option("--threads", opt.threads, "Worker threads (default NEURON_DRO_THREADS)");
  ver->add_flag("--perturb", opt.perturb, "Corrupt a closed form (negative control)");

  auto* rep = app.add_subcommand("report", "Convergence table and chart from a trace");
  rep->add_option("--trace", opt.trace, "Trace CSV written by train")->required();
  add_common(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  for (auto* sub : {gen, tr, ver})
    if (sub->parsed() && sub->count("--seed")) opt.seed = seed;

  if (gen->parsed()) return cmd_generate(opt, std::cout, std::cerr);
  if (tr->parsed()) return cmd_train(opt, std::cout, std::cerr);
  if (ver->parsed()) return cmd_verify(opt, std::cout, std::cerr);
  return cmd_report(opt, std::cout, std::cerr);
}
