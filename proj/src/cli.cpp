#include "dvarimax/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dvarimax/error.hpp"
#include "dvarimax/io.hpp"
#include "dvarimax/spectral.hpp"

namespace dvarimax::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "input",     "output",      "seed",        "threads",
      "timing",    "n",           "p",           "r",
      "theta",     "varepsilon2", "noise",       "alpha",
      "rho",       "step_size",   "grad_tol",    "max_iters",
      "variant",   "init",        "draws",       "slices",
      "mom_improved", "mom_subtraction", "auto_fallback", "r_max",
      "sweep",     "values",      "replications"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw Error(ErrorKind::Config, "key '" + key + "': invalid value '" + value +
                                     "' (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() ||
      !std::isfinite(out)) {
    bad_value(key, value, "a finite real number");
  }
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    bad_value(key, value, "an integer");
  }
  return out;
}

std::uint64_t to_uint64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    bad_value(key, value, "an unsigned 64-bit integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

// Reads keys and records the resolved value of each.
class Resolver {
 public:
  explicit Resolver(const KeyValues& entries) : entries_(entries) {}

  std::optional<std::string> raw(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    return note(key, raw(key).value_or(fallback));
  }
  double real(const std::string& key, double fallback) {
    const auto v = raw(key);
    const double out = v ? to_double(key, *v) : fallback;
    note(key, format_short(out));
    return out;
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback,
                       std::int64_t min_value) {
    const auto v = raw(key);
    const std::int64_t out = v ? to_int(key, *v) : fallback;
    if (out < min_value) {
      bad_value(key, std::to_string(out), ">= " + std::to_string(min_value));
    }
    note(key, std::to_string(out));
    return out;
  }
  bool flag(const std::string& key, bool fallback) {
    const auto v = raw(key);
    const bool out = v ? to_bool(key, *v) : fallback;
    note(key, out ? "true" : "false");
    return out;
  }

  std::string note(const std::string& key, std::string value) {
    resolved_[key] = value;
    return value;
  }
  std::map<std::string, std::string> take() { return std::move(resolved_); }

 private:
  const KeyValues& entries_;
  std::map<std::string, std::string> resolved_;
};

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "simulate") return Command::Simulate;
  if (name == "estimate") return Command::Estimate;
  if (name == "benchmark") return Command::Benchmark;
  throw Error(ErrorKind::Config, "unknown command '" + name +
                                     "' (expected simulate, estimate, benchmark)");
}

const char* to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Estimate: return "estimate";
    case Command::Benchmark: return "benchmark";
  }
  return "estimate";
}

KeyValues parse_config_text(std::string_view text, const std::string& source) {
  KeyValues out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::string content = trim(line);
    if (content.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Parse, source + ":" + std::to_string(line_no) +
                                        ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorKind::Parse,
                  source + ":" + std::to_string(line_no) + ": empty key");
    }
    out[key] = value;
    if (end == text.size()) break;
  }
  return out;
}

KeyValues parse_config_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void apply_override(KeyValues& entries, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorKind::Config,
                "--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = trim(std::string_view(assignment).substr(0, eq));
  if (key.empty()) throw Error(ErrorKind::Config, "--set with empty key");
  entries[key] = trim(std::string_view(assignment).substr(eq + 1));
}

CliConfig resolve_config(Command command, const KeyValues& entries) {
  for (const auto& [key, value] : entries) {
    if (!known_keys().contains(key)) {
      throw Error(ErrorKind::Config, "unknown key '" + key + "'");
    }
  }
  CliConfig c;
  c.command = command;
  Resolver res(entries);
  res.note("command", to_string(command));

  c.input = res.str("input", command == Command::Estimate ? "X.csv" : "");
  c.output = res.str("output", ".");

  if (const auto seed = res.raw("seed")) {
    c.synthetic.seed = to_uint64("seed", *seed);
    c.seed_given = true;
  } else if (command == Command::Benchmark) {
    throw Error(ErrorKind::Config, "benchmark requires an explicit 'seed'");
  } else {
    c.synthetic.seed = entropy_seed();
  }
  res.note("seed", std::to_string(c.synthetic.seed));

  c.synthetic.n = res.integer("n", 900, 2);
  c.synthetic.p = res.integer("p", 300, 1);
  const std::string r_text = res.raw("r").value_or("5");
  if (r_text == "auto") {
    if (command != Command::Estimate) {
      throw Error(ErrorKind::Config, "r = auto is only valid for estimate");
    }
    c.rank_auto = true;
    res.note("r", "auto");
  } else {
    c.synthetic.r = res.integer("r", 5, 1);
  }
  c.r_max = res.integer("r_max", 10, 1);
  c.synthetic.theta = res.real("theta", 0.1);
  c.synthetic.varepsilon2 = res.real("varepsilon2", 0.1);

  const std::string noise = res.str("noise", "identity");
  if (noise == "identity") {
    c.synthetic.noise_kind = IdentityNoise{};
  } else if (noise == "heteroscedastic") {
    c.synthetic.noise_kind = HeteroscedasticNoise{res.real("alpha", 0.1)};
  } else if (noise == "toeplitz") {
    c.synthetic.noise_kind = ToeplitzNoise{res.real("rho", 0.5)};
  } else {
    bad_value("noise", noise, "identity, heteroscedastic or toeplitz");
  }

  c.solve.step_size = res.real("step_size", 1e-5);
  c.solve.grad_tol = res.real("grad_tol", 1e-6);
  c.solve.max_iters = static_cast<int>(res.integer("max_iters", 5000, 1));
  c.solve.validate(1);

  c.variants.clear();
  for (const auto& name : split_list(res.str("variant", "base"))) {
    c.variants.push_back(parse_variant(name));
  }
  if (c.variants.empty()) bad_value("variant", "", "at least one variant");

  const std::optional<int> draws =
      res.raw("draws") ? std::optional<int>(static_cast<int>(res.integer("draws", 1, 1)))
                       : std::nullopt;
  const std::optional<int> slices =
      res.raw("slices") ? std::optional<int>(static_cast<int>(res.integer("slices", 1, 1)))
                        : std::nullopt;
  const Index r_for_defaults = c.rank_auto ? c.r_max : c.synthetic.r;
  res.note("draws", std::to_string(draws.value_or(default_draws(r_for_defaults))));
  res.note("slices", std::to_string(slices.value_or(default_slices(r_for_defaults))));
  const bool mom_improved = res.flag("mom_improved", false);

  c.inits.clear();
  for (const auto& name : split_list(res.str("init", "mom"))) {
    if (name == "random") {
      c.inits.emplace_back(RandomInit{});
    } else if (name == "multi_random") {
      c.inits.emplace_back(MultiRandomInit{draws});
    } else if (name == "mom") {
      c.inits.emplace_back(MomInit{slices, mom_improved});
    } else {
      bad_value("init", name, "random, multi_random or mom");
    }
  }
  if (c.inits.empty()) bad_value("init", "", "at least one scheme");

  const std::string sub = res.str("mom_subtraction", "as_written");
  if (sub == "as_written") {
    c.mom_subtraction = MomSubtraction::AsWritten;
  } else if (sub == "lemma_consistent") {
    c.mom_subtraction = MomSubtraction::LemmaConsistent;
  } else {
    bad_value("mom_subtraction", sub, "as_written or lemma_consistent");
  }

  c.auto_fallback = res.flag("auto_fallback", command == Command::Benchmark);
  c.threads = static_cast<int>(res.integer("threads", 1, 1));
  c.timing = res.flag("timing", false);

  c.sweep = parse_sweep(res.str("sweep", "n"));
  const auto values = res.raw("values");
  if (values) {
    for (const auto& v : split_list(*values)) c.sweep_values.push_back(to_double("values", v));
    if (c.sweep_values.empty()) bad_value("values", *values, "a comma-separated list");
  } else {
    switch (c.sweep) {
      case SweepParameter::N: c.sweep_values = {static_cast<double>(c.synthetic.n)}; break;
      case SweepParameter::P: c.sweep_values = {static_cast<double>(c.synthetic.p)}; break;
      case SweepParameter::R: c.sweep_values = {static_cast<double>(c.synthetic.r)}; break;
      case SweepParameter::Varepsilon2: c.sweep_values = {c.synthetic.varepsilon2}; break;
      case SweepParameter::Theta: c.sweep_values = {c.synthetic.theta}; break;
    }
  }
  std::string joined;
  for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
    if (i > 0) joined += ',';
    joined += format_short(c.sweep_values[i]);
  }
  res.note("values", joined);
  c.replications = static_cast<int>(res.integer("replications", 100, 1));

  if (command != Command::Estimate) c.synthetic.validate();
  if (command == Command::Estimate && (c.variants.size() != 1 || c.inits.size() != 1)) {
    throw Error(ErrorKind::Config, "estimate takes a single variant and init");
  }
  c.resolved = res.take();
  return c;
}

ExperimentGrid make_grid(const CliConfig& config) {
  ExperimentGrid grid;
  grid.base = config.synthetic;
  grid.sweep = config.sweep;
  grid.values = config.sweep_values;
  grid.variants = config.variants;
  grid.init_schemes = config.inits;
  grid.replications = config.replications;
  grid.master_seed = config.synthetic.seed;
  grid.solve = config.solve;
  grid.mom_subtraction = config.mom_subtraction;
  grid.threads = config.threads;
  grid.timing = config.timing;
  return grid;
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::Io,
                "cannot create output directory '" + dir.string() + "': " + ec.message());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

void cmd_simulate(const CliConfig& config, std::ostream& log) {
  const Dataset data = generate_dataset(config.synthetic);
  ensure_dir(config.output);
  const auto& s = config.synthetic;
  const std::string comment = "p=" + std::to_string(s.p) + " n=" + std::to_string(s.n) +
                              " r=" + std::to_string(s.r) +
                              " seed=" + std::to_string(s.seed);
  write_matrix_csv(config.output / "X.csv", data.observations.data(), comment);
  write_matrix_csv(config.output / "lambda_true.csv", data.truth.loading, comment);
  write_matrix_csv(config.output / "z_true.csv", data.truth.factors, comment);
  log << "wrote X.csv, lambda_true.csv, z_true.csv to " << config.output.string() << '\n';
}

void cmd_estimate(const CliConfig& config, std::ostream& log) {
  const ObservationMatrix x(read_matrix_csv(config.input));
  const Index min_dim = std::min(x.p(), x.n());
  Index r = config.synthetic.r;
  std::optional<Index> selected;
  if (config.rank_auto) {
    const PcaDecomposition probe = eigendecompose(x, 1);
    r = select_rank(std::span<const double>(probe.eigvals.data(),
                                            static_cast<std::size_t>(probe.eigvals.size())),
                    std::min(config.r_max, min_dim));
    selected = r;
  }
  if (r > min_dim) {
    throw Error(ErrorKind::Config, "r = " + std::to_string(r) +
                                       " exceeds min(p, n) = " + std::to_string(min_dim));
  }

  EstimateOptions options;
  options.variant = config.variants.front();
  options.init = config.inits.front();
  options.solve = config.solve;
  options.mom_subtraction = config.mom_subtraction;
  options.auto_fallback = config.auto_fallback;
  const Stream rng = Stream::derive(config.synthetic.seed, Purpose::Estimate);
  const LoadingEstimate est = estimate_loading(x, r, options, rng);
  const Matrix z_hat = predict_factors(est.decomposition, est.q_check);

  ensure_dir(config.output);
  const std::string comment = "p=" + std::to_string(x.p()) + " n=" + std::to_string(x.n()) +
                              " r=" + std::to_string(r) +
                              " seed=" + std::to_string(config.synthetic.seed);
  write_matrix_csv(config.output / "lambda_hat.csv", est.lambda_hat, comment);
  write_matrix_csv(config.output / "q_check.csv", est.q_check, comment);
  write_matrix_csv(config.output / "z_hat.csv", z_hat, comment);

  nlohmann::ordered_json diag;
  diag["config"] = config.resolved;
  diag["p"] = x.p();
  diag["n"] = x.n();
  diag["r"] = r;
  diag["selected_rank"] = selected ? nlohmann::json(*selected) : nlohmann::json(nullptr);
  diag["variant_used"] = to_string(est.diagnostics.variant_used);
  diag["fallback"] = est.diagnostics.fallback;
  diag["iterations"] = est.diagnostics.iter_counts;
  diag["grad_norms"] = est.diagnostics.grad_norms;
  std::vector<bool> conv = est.diagnostics.converged;
  diag["converged"] = conv;
  diag["min_singular_q_hat"] = est.diagnostics.min_singular;
  diag["near_duplicate"] = est.diagnostics.near_duplicate;
  std::vector<double> eig(est.decomposition.eigvals.data(),
                          est.decomposition.eigvals.data() + r);
  diag["eigenvalues"] = eig;
  if (x.p() > r) {
    diag["noise_var_hat"] = noise_variance_estimate(est.decomposition, x.p());
  } else {
    diag["noise_var_hat"] = nullptr;
  }
  if (config.timing) diag["runtime_ms"] = est.diagnostics.runtime_ms;
  auto os = open_out(config.output / "diagnostics.json");
  os << diag.dump(2) << '\n';
  log << "estimated r=" << r << " loadings; wrote results to " << config.output.string()
      << '\n';
}

void cmd_benchmark(const CliConfig& config, std::ostream& log) {
  const ExperimentGrid grid = make_grid(config);
  const std::vector<ExperimentRecord> records = run_experiment(grid);
  const std::vector<SummaryRow> summary = aggregate(records);
  ensure_dir(config.output);
  {
    auto os = open_out(config.output / "records.csv");
    write_records_csv(os, records);
  }
  {
    auto os = open_out(config.output / "summary.csv");
    write_summary_csv(os, summary);
  }
  int failures = 0;
  for (const auto& row : summary) failures += row.n_fail;
  log << "benchmark: " << records.size() << " records, " << summary.size()
      << " cells, " << failures << " failed replications\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PCA with deflation varimax: loading estimation and benchmarks",
               "dvarimax"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  bool version = false;
  app.add_option("command", command, "simulate | estimate | benchmark");
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--set", overrides, "override a config key (key=value)")
      ->allow_extra_args(false);
  app.add_flag("--version", version, "print version and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  if (version) {
    out << "dvarimax " << kVersion << '\n';
    return 0;
  }
  if (command.empty()) {
    err << app.help();
    return 2;
  }
  try {
    const Command cmd = parse_command(command);
    KeyValues entries;
    if (!config_path.empty()) entries = parse_config_file(config_path);
    for (const auto& o : overrides) apply_override(entries, o);
    const CliConfig config = resolve_config(cmd, entries);
    switch (cmd) {
      case Command::Simulate: cmd_simulate(config, out); break;
      case Command::Estimate: cmd_estimate(config, out); break;
      case Command::Benchmark: cmd_benchmark(config, out); break;
    }
    return 0;
  } catch (const Error& e) {
    err << "dvarimax: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config:
      case ErrorKind::Parameter:
      case ErrorKind::Dimension:
        return 2;
      case ErrorKind::Io:
      case ErrorKind::Parse:
        return 3;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    err << "dvarimax: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dvarimax::cli
