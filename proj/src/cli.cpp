#include "sgdinf/cli.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "sgdinf/datagen.hpp"
#include "sgdinf/inference.hpp"
#include "sgdinf/oracle.hpp"
#include "sgdinf/sgd_engine.hpp"
#include "sgdinf/variance_estimator.hpp"

namespace sgdinf::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Verb v) {
  switch (v) {
    case Verb::run: return "run";
    case Verb::ci: return "ci";
    case Verb::wald: return "wald";
    case Verb::mc_ks: return "mc-ks";
    case Verb::mc_coverage: return "mc-coverage";
    case Verb::mc_relerr: return "mc-relerr";
    case Verb::bench: return "bench";
    case Verb::gen_config: return "gen-config";
  }
  return "unknown";
}

std::optional<Verb> verb_from_string(const std::string& name) {
  for (Verb v : {Verb::run, Verb::ci, Verb::wald, Verb::mc_ks, Verb::mc_coverage,
                 Verb::mc_relerr, Verb::bench, Verb::gen_config}) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

json default_config() {
  return json{
      {"t", 100000},
      {"dim", 10},
      {"schedule", {{"eta", 2.0}, {"alpha", 0.75}}},
      {"problem",
       {{"gram", "identity"},
        {"rho", 0.5},
        {"beta_star", "default"},
        {"noise", {{"family", "gaussian"}, {"scale", 1.0}, {"dof", 33.0}}},
        {"misspecification", 0.0}}},
      {"theta0", "beta_star"},
      {"functionals", json::array({{{"coordinate", 0}}, {{"coordinate", -1}}})},
      {"block_policy",
       {{"mode", "capped"}, {"c0", 1.0}, {"include_log_factor", false}, {"min_blocks", 4}}},
      {"confidence_level", 0.95},
      {"experiment",
       {{"replicates", 1000},
        {"standardization", "estimated_v_hat"},
        {"with_ols", true},
        {"bench",
         {{"t_grid", {65536, 131072}},
          {"d_grid", {256, 512}},
          {"repeats", 5},
          {"ols_t", 2048},
          {"ols_d_grid", {256, 512}}}}}},
  };
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json parse_scalar(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

void set_path(json& root, const std::string& dotted, json value) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (key.empty()) throw ContractError("empty key in '" + dotted + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

const json* find_path(const json& root, const std::string& dotted) {
  const json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (!node->is_object()) return nullptr;
    const auto it = node->find(key);
    if (it == node->end() || it->is_null()) return nullptr;
    node = &*it;
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

// Field readers: nullopt when absent; a message when present but malformed.
class Reader {
 public:
  Reader(const json& root, std::vector<std::string>& errors)
      : root_(root), errors_(errors) {}

  bool has(const std::string& path) const { return find_path(root_, path) != nullptr; }

  std::optional<double> number(const std::string& path) {
    const json* p = find_path(root_, path);
    if (!p) return std::nullopt;
    if (!p->is_number()) return fail<double>(path + " must be a number");
    return p->get<double>();
  }

  std::optional<std::uint64_t> count(const std::string& path) {
    const json* p = find_path(root_, path);
    if (!p) return std::nullopt;
    return count_of(*p, path);
  }

  std::optional<std::uint64_t> count_of(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      return std::uint64_t(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d < 1.8e19 && std::floor(d) == d) return std::uint64_t(d);
    }
    return fail<std::uint64_t>(path + " must be a non-negative integer");
  }

  std::optional<std::string> string(const std::string& path) {
    const json* p = find_path(root_, path);
    if (!p) return std::nullopt;
    if (!p->is_string()) return fail<std::string>(path + " must be a string");
    return p->get<std::string>();
  }

  std::optional<bool> boolean(const std::string& path) {
    const json* p = find_path(root_, path);
    if (!p) return std::nullopt;
    if (!p->is_boolean()) return fail<bool>(path + " must be true or false");
    return p->get<bool>();
  }

  std::optional<Vector> vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) return fail<Vector>(path + " must be a non-empty array");
    Vector out(Eigen::Index(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) return fail<Vector>(path + " must contain numbers only");
      out[Eigen::Index(i)] = v[i].get<double>();
    }
    return out;
  }

  template <class T>
  std::optional<T> fail(std::string msg) {
    errors_.push_back(std::move(msg));
    return std::nullopt;
  }

  void error(std::string msg) { errors_.push_back(std::move(msg)); }

 private:
  const json& root_;
  std::vector<std::string>& errors_;
};

template <class T>
std::vector<T> read_grid(Reader& r, const json& root, const std::string& path,
                         T fallback) {
  const json* p = find_path(root, path);
  if (!p) return {fallback};
  if (!p->is_array() || p->empty()) {
    r.error(path + " must be a non-empty array");
    return {};
  }
  std::vector<T> out;
  for (const auto& v : *p) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) {
        r.error(path + " must contain numbers only");
        return {};
      }
      out.push_back(v.get<double>());
    } else {
      auto c = r.count_of(v, path);
      if (!c) return {};
      out.push_back(T(*c));
    }
  }
  return out;
}

std::optional<NoiseLaw> read_noise(Reader& r) {
  const auto family_name = r.string("problem.noise.family").value_or("gaussian");
  const double scale = r.number("problem.noise.scale").value_or(1.0);
  const double dof = r.number("problem.noise.dof").value_or(33.0);
  try {
    switch (noise_family_from_string(family_name)) {
      case NoiseFamily::gaussian: return NoiseLaw::gaussian(scale);
      case NoiseFamily::student_t: return NoiseLaw::student_t(dof, scale);
      case NoiseFamily::rademacher_scaled: return NoiseLaw::rademacher(scale);
    }
  } catch (const ContractError& e) {
    r.error(std::string("problem.noise: ") + e.what());
  }
  return std::nullopt;
}

std::vector<FunctionalSpec> read_functionals(Reader& r, const json& root) {
  std::vector<FunctionalSpec> out;
  const json* p = find_path(root, "functionals");
  if (!p || !p->is_array() || p->empty()) {
    r.error("functionals must be a non-empty array");
    return out;
  }
  for (std::size_t i = 0; i < p->size(); ++i) {
    const json& f = (*p)[i];
    const std::string where = "functionals[" + std::to_string(i) + "]";
    if (!f.is_object()) {
      r.error(where + " must be an object");
      continue;
    }
    FunctionalSpec spec;
    if (f.contains("label") && f["label"].is_string()) spec.label = f["label"];
    if (f.contains("coordinate")) {
      if (!f["coordinate"].is_number_integer()) {
        r.error(where + ".coordinate must be an integer");
        continue;
      }
      spec.kind = FunctionalSpec::Kind::coordinate;
      spec.index = f["coordinate"].get<int>();
    } else if (f.value("ones", false)) {
      spec.kind = FunctionalSpec::Kind::normalized_ones;
    } else if (f.contains("a")) {
      auto a = r.vector(f["a"], where + ".a");
      if (!a) continue;
      spec.kind = FunctionalSpec::Kind::explicit_vector;
      spec.a = *a;
    } else {
      r.error(where + " needs one of coordinate, ones or a");
      continue;
    }
    out.push_back(std::move(spec));
  }
  return out;
}

void check_eigen_conditions(const ProblemSpec& problem, const StepSchedule& schedule,
                            std::vector<std::string>& warnings) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(problem.gram, Eigen::EigenvaluesOnly);
  const double lmin = solver.eigenvalues().minCoeff();
  const double lmax = solver.eigenvalues().maxCoeff();
  std::ostringstream msg;
  if (schedule.eta() * lmin <= 1.0) {
    msg << "eta * lambda_min(A) = " << schedule.eta() * lmin
        << " <= 1: the minimum-eigenvalue condition may fail and short blocks"
           " bias v_hat low";
    warnings.push_back(msg.str());
  }
  if (schedule.step(1) * lmax >= 1.0) {
    warnings.push_back("first step times lambda_max(A) >= 1: early iterates are"
                       " not contractive and the bias oracle is unreliable");
  }
}

}  // namespace

json parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ContractError("config is not a valid JSON object");
    }
    return j;
  }
  json root = json::object();
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ContractError("line " + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    set_path(root, full, parse_scalar(trim(line.substr(eq + 1))));
  }
  return root;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ContractError("override '" + assignment + "' must look like key=value");
  }
  set_path(config, trim(assignment.substr(0, eq)),
           parse_scalar(trim(assignment.substr(eq + 1))));
}

std::optional<ResolvedConfig> resolve_config(const json& merged,
                                             std::vector<std::string>& errors) {
  const std::size_t errors_before = errors.size();
  ResolvedConfig rc;
  rc.json = merged;
  Reader r(rc.json, errors);

  const auto seed = r.count("seed");
  if (!seed && !r.has("seed")) errors.push_back("seed is required");

  // Explicit beta* fixes the dimension.
  std::optional<Vector> beta;
  if (const json* b = find_path(rc.json, "problem.beta_star"); b && b->is_array()) {
    beta = r.vector(*b, "problem.beta_star");
    if (beta) rc.json["dim"] = beta->size();
  } else if (b && !(b->is_string() && b->get<std::string>() == "default")) {
    errors.push_back("problem.beta_star must be \"default\" or an array");
  }
  const auto dim_raw = r.count("dim");
  const int dim = dim_raw ? int(*dim_raw) : 0;
  if (dim_raw && dim < 1) errors.push_back("dim must be at least 1");
  if (!dim_raw && !r.has("dim")) errors.push_back("dim is required");

  const auto t = r.count("t");
  if (t && *t < 8) errors.push_back("t must be at least 8");
  if (!t) {
    rc.stream_length = r.count("stream_length");
    if (!rc.stream_length) {
      errors.push_back("either t or stream_length is required");
    } else if (*rc.stream_length < 16) {
      errors.push_back("stream_length must be at least 16");
    }
  }

  const double eta = r.number("schedule.eta").value_or(1.0);
  const double alpha = r.number("schedule.alpha").value_or(0.75);
  if (!(eta > 0.0) || !std::isfinite(eta)) errors.push_back("eta must be positive");
  if (!(alpha > 0.5 && alpha < 1.0)) errors.push_back("alpha must lie in (0.5, 1)");

  GramKind gram_kind = GramKind::identity;
  const auto gram_name = r.string("problem.gram").value_or("identity");
  if (gram_name == "toeplitz") {
    gram_kind = GramKind::toeplitz;
  } else if (gram_name != "identity") {
    errors.push_back("problem.gram must be identity or toeplitz");
  }
  const double rho = r.number("problem.rho").value_or(0.5);
  if (gram_kind == GramKind::toeplitz && !(std::abs(rho) < 1.0)) {
    errors.push_back("problem.rho must lie in (-1, 1)");
  }
  const auto noise = read_noise(r);
  const double misspec = r.number("problem.misspecification").value_or(0.0);
  if (!std::isfinite(misspec)) errors.push_back("problem.misspecification must be finite");

  ThetaInit theta_policy = ThetaInit::beta_star;
  Vector theta_explicit;
  if (const json* th = find_path(rc.json, "theta0")) {
    if (th->is_string() && *th == "zero") {
      theta_policy = ThetaInit::zero;
    } else if (th->is_string() && *th == "beta_star") {
      theta_policy = ThetaInit::beta_star;
    } else if (th->is_array()) {
      if (auto v = r.vector(*th, "theta0")) {
        theta_policy = ThetaInit::explicit_vector;
        theta_explicit = *v;
      }
    } else {
      errors.push_back("theta0 must be \"zero\", \"beta_star\" or an array");
    }
  }

  const auto functionals = read_functionals(r, rc.json);

  BlockPolicy policy;
  const auto mode = r.string("block_policy.mode").value_or("capped");
  if (mode == "paper") {
    policy.mode = BlockMode::paper;
  } else if (mode != "capped") {
    errors.push_back("block_policy.mode must be capped or paper");
  }
  policy.c0 = r.number("block_policy.c0").value_or(1.0);
  policy.include_log_factor = r.boolean("block_policy.include_log_factor").value_or(false);
  if (const auto mb = r.count("block_policy.min_blocks")) policy.min_blocks = int(*mb);

  const double level = r.number("confidence_level").value_or(0.95);

  // Experiment section.
  auto& ex = rc.experiment;
  if (const auto reps = r.count("experiment.replicates")) {
    ex.replicates = *reps;
    if (ex.replicates < 1) errors.push_back("experiment.replicates must be at least 1");
  }
  ex.t_grid = read_grid<std::uint64_t>(r, rc.json, "experiment.t_grid",
                                       t.value_or(rc.stream_length.value_or(0)));
  ex.d_grid = read_grid<int>(r, rc.json, "experiment.d_grid", dim);
  ex.alpha_grid = read_grid<double>(r, rc.json, "experiment.alpha_grid", alpha);
  ex.levels = read_grid<double>(r, rc.json, "experiment.levels", level);
  for (double l : ex.levels) {
    if (!(l > 0.0 && l < 1.0)) errors.push_back("experiment.levels must lie in (0, 1)");
  }
  try {
    ex.standardization = standardization_from_string(
        r.string("experiment.standardization").value_or("estimated_v_hat"));
  } catch (const ContractError& e) {
    errors.push_back(std::string("experiment.standardization: ") + e.what());
  }
  if (ex.standardization == Standardization::theoretical_variance && misspec != 0.0) {
    errors.push_back("theoretical_variance standardization needs a well-specified problem");
  }
  ex.with_ols = r.boolean("experiment.with_ols").value_or(true);
  ex.bench_t_grid = read_grid<std::uint64_t>(r, rc.json, "experiment.bench.t_grid", 65536);
  ex.bench_d_grid = read_grid<int>(r, rc.json, "experiment.bench.d_grid", 256);
  if (const auto rep = r.count("experiment.bench.repeats")) ex.bench_repeats = int(*rep);
  if (const auto ot = r.count("experiment.bench.ols_t")) ex.bench_ols_t = *ot;
  ex.bench_ols_d_grid = read_grid<int>(r, rc.json, "experiment.bench.ols_d_grid", 256);
  for (int d : ex.d_grid) {
    if (beta && d != dim) errors.push_back("experiment.d_grid must equal dim when beta_star is explicit");
  }

  if (errors.size() > errors_before) return std::nullopt;

  // Structural pieces are well-formed; build and run the model checks.
  try {
    rc.base.problem = ProblemTemplate{gram_kind, rho, *noise, misspec, beta};
    rc.base.eta = eta;
    rc.base.theta0_policy = theta_policy;
    rc.base.functionals = functionals;
    rc.base.seed = *seed;
    rc.problem = rc.base.problem.build(dim);

    rc.run.t = t;
    rc.run.schedule = StepSchedule(eta, alpha, dim);
    rc.run.theta0_policy = theta_policy;
    rc.run.theta0_explicit = theta_explicit;
    for (const auto& f : functionals) rc.run.functionals.push_back(f.build(dim));
    rc.run.confidence_level = level;
    rc.run.seed = seed;
  } catch (const ContractError& e) {
    errors.push_back(e.what());
    return std::nullopt;
  }

  // Paper-mode block length may not fit; fall back to the capped policy.
  if (policy.mode == BlockMode::paper) {
    std::vector<std::uint64_t> horizons = ex.t_grid;
    if (t) horizons.push_back(*t);
    for (std::uint64_t h : horizons) {
      try {
        for (double a : ex.alpha_grid) {
          for (int d : ex.d_grid) block_size(policy, h, d, a);
        }
      } catch (const ContractError& e) {
        rc.warnings.push_back(std::string(e.what()) + "; falling back to capped");
        policy.mode = BlockMode::capped;
        rc.json["block_policy"]["mode"] = "capped";
        break;
      }
    }
  }
  rc.run.block_policy = policy;
  rc.base.block_policy = policy;

  for (auto& msg : validate(rc.run)) errors.push_back(std::move(msg));
  for (std::uint64_t gt : ex.t_grid) {
    for (int d : ex.d_grid) {
      for (double a : ex.alpha_grid) {
        for (auto& msg : validate(GridPoint{gt, d, a})) {
          errors.push_back("experiment grid: " + msg);
        }
      }
    }
  }
  if (errors.size() > errors_before) return std::nullopt;
  check_eigen_conditions(rc.problem, rc.run.schedule, rc.warnings);
  return rc;
}

ParseOutcome parse_and_validate(int argc, const char* const* argv, std::ostream& out) {
  ParseOutcome result;
  CliCommand cmd;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) cmd.out_dir = env;

  CLI::App app{"Streaming inference for online least-squares SGD", "sgdinf"};
  app.set_version_flag("--version", kVersion);
  std::string verb_name;
  app.add_option("verb", verb_name,
                 "run | ci | wald | mc-ks | mc-coverage | mc-relerr | bench | gen-config")
      ->required();
  std::string config_path;
  app.add_option("--config", config_path, "config file (JSON or key/value)");
  app.add_option("--out", cmd.out_dir, "output directory (default $SGDINF_OUT_DIR or .)");
  app.add_option("--set", cmd.overrides, "override key=value (dotted keys)")->take_all();
  app.add_option("--workers", cmd.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--trace-blocks", cmd.trace_blocks, "write per-block estimates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    result.finished = true;
    return result;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    result.finished = true;
    return result;
  } catch (const CLI::ParseError& e) {
    result.errors.push_back(e.what());
    result.exit_code = int(ExitCode::config_error);
    return result;
  }

  const auto verb = verb_from_string(verb_name);
  if (!verb) {
    result.errors.push_back("unknown verb: " + verb_name);
    result.exit_code = int(ExitCode::config_error);
    return result;
  }
  cmd.verb = *verb;
  if (!config_path.empty()) cmd.config_path = config_path;
  result.command = cmd;

  json merged = default_config();
  if (cmd.verb == Verb::gen_config) merged["seed"] = 1;
  try {
    if (cmd.config_path) {
      std::ifstream in(*cmd.config_path);
      if (!in) throw ContractError("cannot read config file " + *cmd.config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      merged.merge_patch(parse_config_text(buf.str()));
    }
    for (const auto& o : cmd.overrides) apply_override(merged, o);
  } catch (const ContractError& e) {
    result.errors.push_back(e.what());
  } catch (const json::exception& e) {
    result.errors.push_back(e.what());
  }
  if (result.errors.empty()) result.config = resolve_config(merged, result.errors);
  if (!result.errors.empty()) {
    result.config.reset();
    result.exit_code = int(ExitCode::config_error);
  }
  return result;
}

namespace {

std::vector<Vector> directions_of(const std::vector<Functional>& fs) {
  std::vector<Vector> out;
  for (const auto& f : fs) out.push_back(f.a);
  return out;
}

std::vector<std::string> preamble(const ResolvedConfig& rc) {
  return {kVersion, "config " + rc.json.dump()};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

json run_single(const ResolvedConfig& rc, const CliCommand& cmd) {
  const RunConfig& cfg = rc.run;
  const ProblemSpec& problem = rc.problem;
  const auto gen = std::make_shared<const SampleGenerator>(problem);
  StreamHandle stream(gen, *cfg.seed, 0);
  const Vector theta0 = initial_theta(cfg, problem);
  const std::uint64_t t = cfg.t ? *cfg.t : *rc.stream_length;

  json doc;
  doc["version"] = kVersion;
  doc["mode"] = cfg.t ? "known_t" : "dyadic";
  doc["t"] = t;

  std::vector<double> v_hat;
  Vector theta_t;
  std::ostringstream trace;
  StreamSample s;
  if (cfg.t) {
    OnlinePass pass(t, cfg.schedule, theta0, directions_of(cfg.functionals),
                    cfg.block_policy);
    if (cmd.trace_blocks) {
      for (const auto& line : preamble(rc)) trace << "# " << line << "\n";
      trace << "block,functional,v_block\n";
      pass.estimator().set_observer(
          [&](std::uint64_t block, std::size_t k, double value) {
            trace << block << "," << cfg.functionals[k].label << ","
                  << format_g9(value) << "\n";
          });
    }
    for (std::uint64_t i = 0; i < t; ++i) {
      stream.next_sample(s);
      pass.consume(s);
    }
    v_hat = pass.v_hat();
    theta_t = pass.sgd().theta;
    doc["block_length"] = pass.estimator().block_length();
    doc["completed_blocks"] = pass.estimator().completed_blocks();
  } else {
    SgdState sgd = SgdState::start(theta0, cfg.schedule);
    DyadicEstimator dyadic(cfg.schedule, theta0, directions_of(cfg.functionals),
                           cfg.block_policy);
    for (std::uint64_t i = 0; i < t; ++i) {
      stream.next_sample(s);
      apply_step(sgd, s);
      dyadic.update(s);
    }
    for (std::size_t k = 0; k < cfg.functionals.size(); ++k) {
      v_hat.push_back(dyadic.estimate(k));
    }
    theta_t = sgd.theta;
    doc["epoch"] = std::bit_width(t) - 2;
  }

  std::optional<EigenSystem> eig;
  std::optional<Matrix> a_sigma;
  if (!problem.misspecified()) {
    eig = eigendecompose(problem.gram);
    a_sigma = population_quantities(problem).a_sigma;
  }

  bool any_degenerate = false;
  json rows = json::array();
  for (std::size_t k = 0; k < cfg.functionals.size(); ++k) {
    const auto& f = cfg.functionals[k];
    const double estimate = f.a.dot(theta_t);
    const auto ci = confidence_interval(estimate, v_hat[k], cfg.confidence_level, f.label);
    const auto b = bias(f, problem.gram, theta0, problem.beta_star, cfg.schedule, t);
    any_degenerate = any_degenerate || ci.degenerate;
    json row{{"label", f.label},
             {"a", vector_json(f.a)},
             {"estimate", estimate},
             {"v_hat", v_hat[k]},
             {"ci_lo", ci.lo()},
             {"ci_hi", ci.hi()},
             {"level", ci.level},
             {"degenerate", ci.degenerate},
             {"truth", f.a.dot(problem.beta_star)},
             {"bias", b.value},
             {"bias_reliable", b.reliable}};
    row["theoretical_variance"] =
        eig ? json(theoretical_variance(f, *eig, *a_sigma, cfg.schedule, t)) : json();
    rows.push_back(std::move(row));
  }
  doc["functionals"] = std::move(rows);
  doc["degenerate"] = any_degenerate;
  doc["theta_t"] = vector_json(theta_t);
  doc["warnings"] = rc.warnings;
  doc["config"] = rc.json;

  fs::create_directories(cmd.out_dir);
  write_file(fs::path(cmd.out_dir) / "result.json", doc.dump(2) + "\n");
  if (cmd.trace_blocks && cfg.t) {
    write_file(fs::path(cmd.out_dir) / "block_trace.csv", trace.str());
  }
  return doc;
}

namespace {

void write_ci_csv(const ResolvedConfig& rc, const json& doc, const fs::path& path) {
  std::ostringstream o;
  for (const auto& line : preamble(rc)) o << "# " << line << "\n";
  o << "functional,estimate,v_hat,lo,hi,level,degenerate\n";
  for (const auto& f : doc["functionals"]) {
    o << f["label"].get<std::string>() << "," << format_g9(f["estimate"]) << ","
      << format_g9(f["v_hat"]) << "," << format_g9(f["ci_lo"]) << ","
      << format_g9(f["ci_hi"]) << "," << format_g9(f["level"]) << ","
      << (f["degenerate"].get<bool>() ? 1 : 0) << "\n";
  }
  write_file(path, o.str());
}

void run_wald(ResolvedConfig rc, const CliCommand& cmd, std::ostream& out) {
  if (!rc.run.t) throw ContractError("wald needs a known t");
  const int d = rc.problem.dim();
  rc.run.functionals.clear();
  for (int j = 0; j < d; ++j) rc.run.functionals.push_back(Functional::coordinate(d, j));
  CliCommand quiet = cmd;
  quiet.trace_blocks = false;
  const json doc = run_single(rc, quiet);
  Vector theta_t(d);
  for (int j = 0; j < d; ++j) theta_t[j] = doc["theta_t"][std::size_t(j)];
  const double significance = 1.0 - rc.run.confidence_level;

  std::ostringstream o;
  for (const auto& line : preamble(rc)) o << "# " << line << "\n";
  o << "coord,estimate,v_hat,z,p_value,reject\n";
  for (int j = 0; j < d; ++j) {
    const double v = doc["functionals"][std::size_t(j)]["v_hat"];
    o << j << "," << format_g9(theta_t[j]) << "," << format_g9(v) << ",";
    if (!(v > 0.0)) {
      // Degenerate estimate: the statistic is undefined.
      o << "nan,nan,0\n";
      continue;
    }
    const auto w = wald_test(theta_t, j, v, significance);
    o << format_g9(w.z) << "," << format_g9(w.p_value) << "," << (w.reject_at ? 1 : 0)
      << "\n";
  }
  write_file(fs::path(cmd.out_dir) / "wald.csv", o.str());
  out << o.str();
}

std::vector<GridPoint> grid_of(const ExperimentSettings& ex) {
  std::vector<GridPoint> out;
  for (int d : ex.d_grid) {
    for (double a : ex.alpha_grid) {
      for (std::uint64_t t : ex.t_grid) out.push_back({t, d, a});
    }
  }
  return out;
}

void check_experiment_base(const ResolvedConfig& rc) {
  if (rc.run.theta0_policy == ThetaInit::explicit_vector) {
    throw ContractError("experiments support theta0 = zero or beta_star only");
  }
}

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto parsed = parse_and_validate(argc, argv, out);
  if (parsed.finished) return 0;
  if (parsed.exit_code != 0) {
    for (const auto& e : parsed.errors) err << "config error: " << e << "\n";
    out << json{{"valid", false}, {"errors", parsed.errors}}.dump() << "\n";
    return parsed.exit_code;
  }
  CliCommand cmd = *parsed.command;
  ResolvedConfig& rc = *parsed.config;
  rc.base.workers = cmd.workers;
  for (const auto& w : rc.warnings) err << "warning: " << w << "\n";

  try {
    fs::create_directories(cmd.out_dir);
    const fs::path dir(cmd.out_dir);
    switch (cmd.verb) {
      case Verb::gen_config: {
        write_file(dir / "config.json", rc.json.dump(2) + "\n");
        out << rc.json.dump(2) << "\n";
        break;
      }
      case Verb::run: {
        const json doc = run_single(rc, cmd);
        for (const auto& f : doc["functionals"]) {
          out << f["label"].get<std::string>() << " estimate " << format_g9(f["estimate"])
              << " v_hat " << format_g9(f["v_hat"]) << " ci [" << format_g9(f["ci_lo"])
              << ", " << format_g9(f["ci_hi"]) << "]\n";
        }
        break;
      }
      case Verb::ci: {
        const json doc = run_single(rc, cmd);
        write_ci_csv(rc, doc, dir / "ci.csv");
        out << "wrote " << (dir / "ci.csv").string() << "\n";
        break;
      }
      case Verb::wald:
        run_wald(rc, cmd, out);
        break;
      case Verb::mc_ks: {
        check_experiment_base(rc);
        const auto grid = grid_of(rc.experiment);
        const auto rows = run_ks_experiment(rc.base, grid, rc.experiment.replicates,
                                            rc.experiment.standardization);
        std::ofstream f(dir / "ks.csv", std::ios::binary);
        write_ks_csv(f, rows, preamble(rc));
        write_ks_csv(out, rows);
        break;
      }
      case Verb::mc_coverage: {
        check_experiment_base(rc);
        std::vector<CoverageReport> rows;
        for (const auto& g : grid_of(rc.experiment)) {
          for (double level : rc.experiment.levels) {
            auto part = run_coverage_experiment(rc.base, g, rc.experiment.replicates,
                                                level, rc.experiment.with_ols);
            rows.insert(rows.end(), part.begin(), part.end());
          }
        }
        std::ofstream f(dir / "coverage.csv", std::ios::binary);
        write_coverage_csv(f, rows, preamble(rc));
        write_coverage_csv(out, rows);
        break;
      }
      case Verb::mc_relerr: {
        check_experiment_base(rc);
        const auto grid = grid_of(rc.experiment);
        const auto rows =
            run_relative_error_experiment(rc.base, grid, rc.experiment.replicates);
        for (const auto& r : rows) {
          if (r.insufficient_replicates) {
            err << "warning: fewer than 100 replicates at t=" << r.grid.t << "\n";
          }
        }
        std::ofstream f(dir / "relerr.csv", std::ios::binary);
        write_relerr_csv(f, rows, preamble(rc));
        write_relerr_csv(out, rows);
        break;
      }
      case Verb::bench: {
        const auto& ex = rc.experiment;
        BenchOptions opts;
        opts.alpha = rc.run.schedule.alpha();
        opts.eta = rc.run.schedule.eta();
        opts.repeats = ex.bench_repeats;
        opts.seed = rc.base.seed;
        opts.ols = false;
        auto rows = run_scaling_bench(ex.bench_t_grid, ex.bench_d_grid, opts);
        opts.ols = true;
        opts.sgd = false;
        const std::vector<std::uint64_t> ols_t{ex.bench_ols_t};
        const auto ols_rows = run_scaling_bench(ols_t, ex.bench_ols_d_grid, opts);
        rows.insert(rows.end(), ols_rows.begin(), ols_rows.end());
        std::ofstream f(dir / "bench.csv", std::ios::binary);
        write_bench_csv(f, rows, preamble(rc));
        write_bench_csv(out, rows);
        break;
      }
    }
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return int(ExitCode::numeric_failure);
  } catch (const ContractError& e) {
    err << "config error: " << e.what() << "\n";
    return int(ExitCode::config_error);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sgdinf::cli
