#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "slq/csv.hpp"
#include "slq/errors.hpp"
#include "slq/runner.hpp"

namespace {

struct CmdArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool exact = false;
  CLI::App* cmd = nullptr;
};

void add_common(CLI::App* cmd, CmdArgs& args) {
  args.cmd = cmd;
  cmd->add_option("config", args.config, "experiment config file")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out, "override the output directory");
  cmd->add_flag("--exact-functionals", args.exact,
                "use the deterministic functional oracle (requires C = D = 0)");
}

slq::RunFlags flags_of(const CmdArgs& args) {
  slq::RunFlags flags;
  if (args.cmd->count("--seed")) flags.seed_override = args.seed;
  if (args.cmd->count("--out")) flags.out_override = args.out;
  flags.exact_functionals = args.exact;
  return flags;
}

int fail(const std::string& kind, const std::string& message, int code) {
  nlohmann::json rec;
  rec["error"] = kind;
  rec["message"] = message;
  rec["exit_code"] = code;
  std::cerr << rec.dump() << "\n";
  return code;
}

void print_report(const slq::RunReport& rep) {
  using slq::format_double;
  std::cout << "converged: " << (rep.converged ? "yes" : "no") << "\n"
            << "iterations: " << rep.iterations << "\n"
            << "gain_gap: " << format_double(rep.gain_gap) << "\n"
            << "eq11_residual: " << format_double(rep.eq11) << "\n"
            << "eq13_residual: " << format_double(rep.eq13) << "\n"
            << "eq25_rel: " << format_double(rep.nonuniqueness.eq25_rel) << "\n"
            << "eq26_rel: " << format_double(rep.nonuniqueness.eq26_rel) << "\n"
            << "wall_seconds: " << format_double(rep.wall_seconds) << "\n";
  for (const std::string& a : rep.artifacts) std::cout << "artifact: " << a << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inverse reinforcement learning for stochastic LQ systems"};
  app.require_subcommand(1);

  CmdArgs run_args, compare_args, dump_args;
  add_common(app.add_subcommand("run", "run the configured IRL experiment"), run_args);
  add_common(app.add_subcommand("compare", "run both algorithms and emit paired gaps"),
             compare_args);
  add_common(app.add_subcommand("dump-paths", "simulate and dump raw behavior paths"),
             dump_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    slq::RunReport rep;
    bool needs_convergence = true;
    if (app.got_subcommand("run")) {
      rep = slq::run_experiment(run_args.config, flags_of(run_args));
    } else if (app.got_subcommand("compare")) {
      rep = slq::compare_algorithms(compare_args.config, flags_of(compare_args));
    } else {
      rep = slq::dump_paths(dump_args.config, flags_of(dump_args));
      needs_convergence = false;
    }
    print_report(rep);
    if (needs_convergence && !rep.converged)
      return fail("convergence", "iteration did not converge within max_iter", 4);
    return 0;
  } catch (const slq::ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const slq::ExcitationError& e) {
    return fail("excitation", e.what(), 3);
  } catch (const slq::ConvergenceError& e) {
    return fail("convergence", e.what(), 4);
  } catch (const slq::NumericalError& e) {
    return fail("numerical", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
