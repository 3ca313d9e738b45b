#ifndef SGDINF_CLI_HPP
#define SGDINF_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgdinf/core_model.hpp"
#include "sgdinf/experiments.hpp"

namespace sgdinf::cli {

inline constexpr const char* kVersion = "sgdinf 0.1.0";
inline constexpr const char* kOutDirEnv = "SGDINF_OUT_DIR";

enum class ExitCode : int { ok = 0, config_error = 2, numeric_failure = 3 };

enum class Verb { run, ci, wald, mc_ks, mc_coverage, mc_relerr, bench, gen_config };
std::string to_string(Verb v);
std::optional<Verb> verb_from_string(const std::string& name);

struct CliCommand {
  Verb verb = Verb::run;
  std::optional<std::string> config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  int workers = 1;
  bool trace_blocks = false;
};

struct ExperimentSettings {
  std::size_t replicates = 1000;
  std::vector<std::uint64_t> t_grid;
  std::vector<int> d_grid;
  std::vector<double> alpha_grid;
  Standardization standardization = Standardization::estimated_v_hat;
  std::vector<double> levels;
  bool with_ols = true;
  std::vector<std::uint64_t> bench_t_grid;
  std::vector<int> bench_d_grid;
  int bench_repeats = 5;
  std::uint64_t bench_ols_t = 2048;
  std::vector<int> bench_ols_d_grid;
};

/// A fully merged and checked configuration.
struct ResolvedConfig {
  nlohmann::json json;  // defaults <- file <- overrides
  RunConfig run;
  ProblemSpec problem;
  ExperimentBase base;
  ExperimentSettings experiment;
  std::optional<std::uint64_t> stream_length;  // dyadic mode when run.t is empty
  std::vector<std::string> warnings;
};

/// Built-in defaults. The returned object has no seed.
nlohmann::json default_config();

/// Parses JSON text, or the key/value form:
///
///   # comment
///   seed = 7
///   [schedule]
///   alpha = 0.6
///
/// Values are read as JSON when they parse, else as bare strings.
nlohmann::json parse_config_text(const std::string& text);

/// Applies "a.b.c=value" to `config`. Throws ContractError on a malformed pair.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Checks the merged config; appends one message per violation to `errors`.
std::optional<ResolvedConfig> resolve_config(const nlohmann::json& merged,
                                             std::vector<std::string>& errors);

struct ParseOutcome {
  std::optional<CliCommand> command;
  std::optional<ResolvedConfig> config;
  std::vector<std::string> errors;
  int exit_code = 0;
  bool finished = false;  // help or version printed
};

/// Parses argv, loads and merges the config and validates it. Nothing runs.
ParseOutcome parse_and_validate(int argc, const char* const* argv,
                                std::ostream& out);

/// Runs one pass (known t or dyadic) and writes result.json, plus
/// block_trace.csv when tracing. Returns the result document.
nlohmann::json run_single(const ResolvedConfig& config, const CliCommand& cmd);

/// Full program: parse, dispatch, map errors to exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err);

}  // namespace sgdinf::cli

#endif  // SGDINF_CLI_HPP
