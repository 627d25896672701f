// senskit command-line front end: design generation, black-box model
// evaluation, Sobol'/Shapley/stochastic sensitivity analysis, and plot-data
// extraction. Every command writes a manifest.json next to its results;
// `senskit replay --manifest <file>` re-runs the recorded invocation and
// reproduces the result files byte for byte.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "senskit/errors.hpp"
#include "senskit/gp.hpp"
#include "senskit/rng.hpp"
#include "senskit/sampling.hpp"
#include "senskit/shapley.hpp"
#include "senskit/sobol.hpp"
#include "senskit/stochsa.hpp"
#include "senskit/testbed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "senskit 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitExternal = 4;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iso_timestamp() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end != s.c_str() && *end == '\0';
}

CsvTable read_csv(std::istream& is, const std::string& what) {
  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!parse_double(cells[j], row[j])) {
        numeric = false;
        break;
      }
    }
    if (first) {
      first = false;
      if (!numeric) {
        header = cells;
        continue;
      }
    }
    if (!numeric) throw senskit::InputError(what + ": malformed numeric row: " + line);
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw senskit::InputError(what + ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  CsvTable t;
  t.header = std::move(header);
  if (rows.empty()) {
    t.values.resize(0, static_cast<Eigen::Index>(t.header.size()));
    return t;
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return t;
}

CsvTable read_csv_file(const fs::path& path, const std::string& what) {
  std::ifstream is(path);
  if (!is) throw senskit::InputError(what + ": cannot open " + path.string());
  return read_csv(is, what);
}

Eigen::VectorXd read_response_file(const fs::path& path) {
  const CsvTable t = read_csv_file(path, "responses");
  if (t.values.size() == 0) throw senskit::InputError("responses: file is empty");
  if (t.values.cols() != 1) throw senskit::InputError("responses: expected a single column");
  return t.values.col(0);
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw senskit::InputError("cannot write " + path.string());
  os << content;
}

// Options shared by the model-driven commands.
struct ModelArgs {
  std::string model;
  std::string spec_path;
  int aux_d = 4;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double rho = 0.0;

  void attach(CLI::App* cmd, bool spec_allowed = true) {
    cmd->add_option("--model", model,
                    "builtin model: polynomial, ishigami, linear_gaussian, "
                    "additive_uniform, sine_hetero");
    if (spec_allowed) {
      cmd->add_option("--spec", spec_path, "input-space JSON document");
    }
    cmd->add_option("--d", aux_d, "dimension for additive_uniform");
    cmd->add_option("--sigma1", sigma1, "linear_gaussian sigma1");
    cmd->add_option("--sigma2", sigma2, "linear_gaussian sigma2");
    cmd->add_option("--rho", rho, "linear_gaussian correlation");
  }

  senskit::BenchmarkOptions benchmark_options() const {
    senskit::BenchmarkOptions o;
    o.d = aux_d;
    o.sigma1 = sigma1;
    o.sigma2 = sigma2;
    o.rho = rho;
    return o;
  }

  senskit::InputSpec load_spec() const {
    if (!model.empty()) {
      return senskit::BenchmarkModel::by_name(model, benchmark_options()).input_spec();
    }
    if (spec_path.empty()) {
      throw senskit::InputError("either --model or --spec is required");
    }
    std::ifstream is(spec_path);
    if (!is) throw senskit::InputError("cannot open spec file " + spec_path);
    json j;
    try {
      is >> j;
    } catch (const json::exception& e) {
      throw senskit::InputError(std::string("spec file is not valid JSON: ") + e.what());
    }
    return senskit::InputSpec::from_json(j);
  }
};

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::string input_spec_path;
  std::uint64_t seed = 0;
  long n = 0;
  int r_bootstrap = 0;
  std::string started;

  void write(const fs::path& out_dir) const {
    json j;
    j["command"] = command;
    j["argv"] = argv;
    j["input_spec_path"] = input_spec_path;
    j["seed"] = seed;
    j["n"] = n;
    j["r_bootstrap"] = r_bootstrap;
    j["timestamps"] = {{"started", started}, {"finished", iso_timestamp()}};
    j["tool_version"] = kToolVersion;
    write_text_file(out_dir / "manifest.json", j.dump(2) + "\n");
  }
};

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out.empty() ? "." : out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) {
    throw senskit::InputError("cannot create output directory " + dir.string());
  }
  return dir;
}

std::string design_csv_text(const Eigen::MatrixXd& points,
                            const std::vector<std::string>& names) {
  std::ostringstream os;
  senskit::write_design_csv(os, points, names);
  return os.str();
}

std::string responses_csv_text(const Eigen::VectorXd& y) {
  std::ostringstream os;
  os << "y\n";
  for (Eigen::Index i = 0; i < y.size(); ++i) os << fmt17(y(i)) << '\n';
  return os.str();
}

// --- command implementations -------------------------------------------------

int run_cli(const std::vector<std::string>& args);

struct DesignCmd {
  ModelArgs model;
  int n = 1000;
  std::string sampler = "sobol";
  std::uint64_t seed = 42;
  std::string out = ".";
};

void cmd_design(const DesignCmd& c, const std::vector<std::string>& argv) {
  const senskit::InputSpec spec = c.model.load_spec();
  const auto pf = senskit::pick_freeze_unit(c.n, spec.dimension(),
                                            senskit::generator_from_name(c.sampler), c.seed);
  const Eigen::MatrixXd scaled = senskit::scale_pick_freeze(pf, spec);
  Manifest m{"design", argv, c.model.spec_path, c.seed, c.n, 0, iso_timestamp()};
  const fs::path dir = ensure_out_dir(c.out);
  write_text_file(dir / "design.csv", design_csv_text(scaled, spec.names()));
  m.write(dir);
  std::cout << "wrote " << (dir / "design.csv").string() << " ("
            << scaled.rows() << " rows, N=" << c.n << ", d=" << spec.dimension() << ")\n";
}

struct EvaluateCmd {
  ModelArgs model;
  std::string design_path;
  std::string exec;
  std::string out = ".";
};

Eigen::VectorXd run_external_model(const std::string& command, const fs::path& design_path,
                                   Eigen::Index expected_rows) {
  const fs::path out_path =
      fs::temp_directory_path() /
      ("senskit_responses_" + std::to_string(static_cast<long>(::getpid())) + ".txt");
  const std::string shell = command + " < '" + design_path.string() + "' > '" +
                            out_path.string() + "'";
  const int status = std::system(shell.c_str());
  if (status != 0) {
    std::error_code ec;
    fs::remove(out_path, ec);
    throw senskit::ExternalModelError("external model exited with nonzero status: " + command);
  }
  Eigen::VectorXd y;
  try {
    y = read_response_file(out_path);
  } catch (const senskit::Error& e) {
    std::error_code ec;
    fs::remove(out_path, ec);
    throw senskit::ExternalModelError(std::string("external model output unreadable: ") + e.what());
  }
  std::error_code ec;
  fs::remove(out_path, ec);
  if (y.size() != expected_rows) {
    throw senskit::ExternalModelError(
        "external model emitted " + std::to_string(y.size()) + " responses for " +
        std::to_string(expected_rows) + " design rows");
  }
  if (!y.allFinite()) {
    throw senskit::ExternalModelError("external model emitted non-finite responses");
  }
  return y;
}

void cmd_evaluate(const EvaluateCmd& c, const std::vector<std::string>& argv) {
  if (c.design_path.empty()) throw senskit::InputError("evaluate: --design is required");
  const CsvTable design = read_csv_file(c.design_path, "design");
  if (design.values.rows() == 0) throw senskit::InputError("evaluate: design has no rows");

  Eigen::VectorXd y;
  if (!c.exec.empty()) {
    y = run_external_model(c.exec, c.design_path, design.values.rows());
  } else if (!c.model.model.empty()) {
    const auto model =
        senskit::BenchmarkModel::by_name(c.model.model, c.model.benchmark_options());
    y = model.eval(design.values);
  } else {
    throw senskit::InputError("evaluate: one of --model or --exec is required");
  }

  Manifest m{"evaluate", argv, c.model.spec_path, 0, design.values.rows(), 0, iso_timestamp()};
  const fs::path dir = ensure_out_dir(c.out);
  write_text_file(dir / "responses.csv", responses_csv_text(y));
  m.write(dir);
  std::cout << "wrote " << (dir / "responses.csv").string() << " (" << y.size()
            << " responses)\n";
}

struct SobolCmd {
  ModelArgs model;
  std::string design_path;
  std::string responses_path;
  int n = 5000;
  int r = 1000;
  double level = 0.95;
  std::string first = "saltelli";
  std::string ci = "normal";
  std::string sampler = "sobol";
  std::uint64_t seed = 42;
  std::string out = ".";
  std::string format = "csv,json";
};

senskit::EstimatorOptions estimator_options(const SobolCmd& c,
                                            const std::vector<std::string>& names) {
  senskit::EstimatorOptions opts;
  if (c.first == "saltelli") {
    opts.first = senskit::FirstOrderEstimator::Saltelli;
  } else if (c.first == "jansen") {
    opts.first = senskit::FirstOrderEstimator::Jansen;
  } else {
    throw senskit::InputError("sobol: --first must be saltelli or jansen");
  }
  if (c.ci == "normal") {
    opts.ci = senskit::CiKind::Normal;
  } else if (c.ci == "percentile") {
    opts.ci = senskit::CiKind::Percentile;
  } else {
    throw senskit::InputError("sobol: --ci must be normal or percentile");
  }
  opts.bootstrap_replicates = c.r;
  opts.level = c.level;
  opts.seed = c.seed;
  opts.names = names;
  return opts;
}

void write_table_outputs(const senskit::SensitivityTable& table, const fs::path& dir,
                         const std::string& format) {
  if (format.find("csv") != std::string::npos) {
    std::ostringstream os;
    senskit::write_table_csv(os, table);
    write_text_file(dir / "indices.csv", os.str());
  }
  if (format.find("json") != std::string::npos) {
    write_text_file(dir / "indices.json", senskit::table_to_json(table).dump(2) + "\n");
  }
  senskit::print_table(std::cout, table);
}

void cmd_sobol(const SobolCmd& c, const std::vector<std::string>& argv) {
  senskit::SensitivityTable table;
  std::string spec_path = c.model.spec_path;
  if (!c.responses_path.empty()) {
    const Eigen::VectorXd y = read_response_file(c.responses_path);
    if (c.n < 2 || y.size() % (c.n) != 0) {
      throw senskit::InputError("sobol: response count must be a multiple of --n");
    }
    const int d = static_cast<int>(y.size() / c.n) - 2;
    if (d < 1) {
      throw senskit::InputError("sobol: response count implies no factors (need n*(d+2) rows)");
    }
    std::vector<std::string> names;
    if (!c.design_path.empty()) {
      names = read_csv_file(c.design_path, "design").header;
    }
    table = senskit::estimate_indices(y, c.n, d, estimator_options(c, names));
  } else {
    const auto model =
        senskit::BenchmarkModel::by_name(c.model.model.empty() ? "polynomial" : c.model.model,
                                         c.model.benchmark_options());
    const senskit::InputSpec& spec = model.input_spec();
    const auto pf = senskit::pick_freeze_unit(c.n, spec.dimension(),
                                              senskit::generator_from_name(c.sampler), c.seed);
    const Eigen::MatrixXd x = senskit::scale_pick_freeze(pf, spec);
    const Eigen::VectorXd y = model.eval(x);
    table = senskit::estimate_indices(y, c.n, spec.dimension(),
                                      estimator_options(c, spec.names()));
  }

  Manifest m{"sobol", argv, spec_path, c.seed, c.n, c.r, iso_timestamp()};
  const fs::path dir = ensure_out_dir(c.out);
  write_table_outputs(table, dir, c.format);
  m.write(dir);
}

struct ShapleyCmd {
  ModelArgs model;
  int m_permutations = 2000;
  int n_outer = 1;
  int n_inner = 3;
  int n_var = 10000;
  std::uint64_t seed = 42;
  std::string out = ".";
  std::string format = "csv,json";
};

void cmd_shapley(const ShapleyCmd& c, const std::vector<std::string>& argv) {
  if (c.model.model.empty()) {
    throw senskit::InputError("shapley: --model is required (builtin models only)");
  }
  const auto model =
      senskit::BenchmarkModel::by_name(c.model.model, c.model.benchmark_options());
  const senskit::InputSpec& spec = model.input_spec();
  senskit::ShapleyConfig cfg;
  cfg.m_permutations = c.m_permutations;
  cfg.n_outer = c.n_outer;
  cfg.n_inner = c.n_inner;
  cfg.n_var = c.n_var;
  cfg.seed = c.seed;
  const auto est = senskit::estimate_shapley(
      [&](const Eigen::MatrixXd& x) { return model.eval(x); }, spec, cfg);

  const fs::path dir = ensure_out_dir(c.out);
  std::ostringstream csv;
  csv << "parameter,shapley,std.error\n";
  json rows = json::array();
  std::cout << "\nShapley effects (M = " << c.m_permutations << " permutations)\n";
  std::cout << "    shapley std.error parameter\n";
  for (int i = 0; i < spec.dimension(); ++i) {
    csv << spec.names()[static_cast<std::size_t>(i)] << ',' << fmt17(est.phi(i)) << ','
        << fmt17(est.std_error(i)) << '\n';
    rows.push_back({{"parameter", spec.names()[static_cast<std::size_t>(i)]},
                    {"shapley", est.phi(i)},
                    {"std.error", est.std_error(i)}});
    char buf[80];
    std::snprintf(buf, sizeof buf, "%d: %7.3f %9.3f %10s", i + 1, est.phi(i),
                  est.std_error(i), spec.names()[static_cast<std::size_t>(i)].c_str());
    std::cout << buf << '\n';
  }
  char buf[80];
  std::snprintf(buf, sizeof buf, "Sum of Shapley effects: %.7g | V(Y) estimate: %.7g",
                est.phi.sum(), est.total_variance);
  std::cout << buf << '\n';

  if (c.format.find("csv") != std::string::npos) {
    write_text_file(dir / "shapley.csv", csv.str());
  }
  if (c.format.find("json") != std::string::npos) {
    json j = {{"rows", rows}, {"total_variance", est.total_variance}};
    write_text_file(dir / "shapley.json", j.dump(2) + "\n");
  }
  Manifest m{"shapley", argv, c.model.spec_path, c.seed, c.m_permutations, 0, iso_timestamp()};
  m.write(dir);
}

struct StochsaCmd {
  ModelArgs model;
  int design_size = 200;
  int replicates = 20;
  int n = 2000;
  int r = 200;
  double noise_var = -1.0;  // wraps a deterministic builtin with N(0, c) noise
  std::uint64_t seed = 42;
  std::string sampler = "sobol";
  std::string out = ".";
};

void cmd_stochsa(const StochsaCmd& c, const std::vector<std::string>& argv) {
  if (c.model.model.empty()) {
    throw senskit::InputError("stochsa: --model is required (builtin models only)");
  }
  const auto model =
      senskit::BenchmarkModel::by_name(c.model.model, c.model.benchmark_options());
  if (!model.stochastic() && c.noise_var < 0.0) {
    throw senskit::InputError(
        "stochsa: model is deterministic; pass --noise-var to inject noise "
        "(0 is allowed)");
  }
  const double noise_sd = c.noise_var > 0.0 ? std::sqrt(c.noise_var) : 0.0;
  const senskit::StochasticSimulator sim =
      [&](const Eigen::MatrixXd& x, std::uint64_t rep_seed) {
        if (model.stochastic()) return model.eval_noisy(x, rep_seed);
        Eigen::VectorXd y = model.eval(x);
        if (noise_sd > 0.0) {
          senskit::CounterRng rng(rep_seed);
          for (Eigen::Index i = 0; i < y.size(); ++i) {
            y(i) += noise_sd * senskit::standard_normal_quantile(
                                   rng.uniform_open(static_cast<std::uint64_t>(i)));
          }
        }
        return y;
      };

  senskit::StochSaOptions opts;
  opts.sampler = senskit::generator_from_name(c.sampler);
  opts.n = c.n;
  opts.seed = c.seed;
  opts.estimator.bootstrap_replicates = c.r;
  opts.estimator.seed = c.seed;
  const auto result = senskit::end_to_end_stochastic_sa(sim, model.input_spec(),
                                                        c.design_size, c.replicates, opts);

  const fs::path dir = ensure_out_dir(c.out);
  senskit::print_table(std::cout, result.input_table);
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "s_t_eps (seed-variable total index): %.5f (std.error %.5f)\n"
                "variance decomposition: v_mean %.6g + e_var %.6g = v_total %.6g\n"
                "simulator calls: %ld\n",
                result.s_t_eps, result.s_t_eps_std_error,
                result.variance_decomposition.v_mean, result.variance_decomposition.e_var,
                result.variance_decomposition.v_total, result.simulator_calls);
  std::cout << buf;
  write_text_file(dir / "stochsa.json", senskit::stochsa_to_json(result).dump(2) + "\n");
  std::ostringstream csv;
  senskit::write_table_csv(csv, result.input_table);
  write_text_file(dir / "indices.csv", csv.str());
  Manifest m{"stochsa", argv, c.model.spec_path, c.seed, c.n, c.r, iso_timestamp()};
  m.write(dir);
}

struct GpFitCmd {
  std::string design_path;
  std::string responses_path;
  std::string noise = "zero";  // zero | constant | fixed
  std::string noise_file;
  std::string kernel = "matern52";
  int restarts = 5;
  std::uint64_t seed = 42;
  std::string out = ".";
};

void cmd_gp_fit(const GpFitCmd& c, const std::vector<std::string>& argv) {
  const CsvTable design = read_csv_file(c.design_path, "design");
  const Eigen::VectorXd y = read_response_file(c.responses_path);
  if (design.values.rows() != y.size()) {
    throw senskit::InputError("gp-fit: design and responses row counts differ");
  }
  senskit::NoiseModel noise;
  if (c.noise == "zero") {
    noise = senskit::ZeroNoise{};
  } else if (c.noise == "constant") {
    noise = senskit::ConstantUnknownNoise{};
  } else if (c.noise == "fixed") {
    if (c.noise_file.empty()) {
      throw senskit::InputError("gp-fit: --noise fixed requires --noise-file");
    }
    noise = senskit::FixedNoise{read_response_file(c.noise_file)};
  } else {
    throw senskit::InputError("gp-fit: --noise must be zero, constant or fixed");
  }
  senskit::FitOptions opts;
  if (c.kernel == "matern52") {
    opts.kind = senskit::KernelKind::Matern52;
  } else if (c.kernel == "squared_exponential") {
    opts.kind = senskit::KernelKind::SquaredExponential;
  } else {
    throw senskit::InputError("gp-fit: --kernel must be matern52 or squared_exponential");
  }
  opts.restarts = c.restarts;
  opts.seed = c.seed;
  const senskit::GpModel model = senskit::fit_gp(design.values, y, noise, opts);

  const fs::path dir = ensure_out_dir(c.out);
  write_text_file(dir / "gp.json", model.to_json().dump(2) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof buf, "fitted GP: log-likelihood %.6g, trend %.6g\n",
                model.log_likelihood(), model.trend());
  std::cout << buf << "wrote " << (dir / "gp.json").string() << '\n';
  Manifest m{"gp-fit", argv, "", c.seed, design.values.rows(), 0, iso_timestamp()};
  m.write(dir);
}

struct GpPredictCmd {
  std::string model_path;
  std::string points_path;
  std::string out = ".";
};

void cmd_gp_predict(const GpPredictCmd& c, const std::vector<std::string>& argv) {
  std::ifstream is(c.model_path);
  if (!is) throw senskit::InputError("gp-predict: cannot open " + c.model_path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw senskit::InputError(std::string("gp-predict: model file is not valid JSON: ") +
                              e.what());
  }
  const senskit::GpModel model = senskit::GpModel::from_json(j);
  const CsvTable points = read_csv_file(c.points_path, "points");
  if (points.values.cols() != model.design().cols()) {
    throw senskit::InputError("gp-predict: point dimension does not match the model");
  }
  std::ostringstream os;
  os << "mean,var,noise_var\n";
  for (Eigen::Index i = 0; i < points.values.rows(); ++i) {
    const senskit::GpPrediction p = model.predict(points.values.row(i));
    os << fmt17(p.mean) << ',' << fmt17(p.var) << ',' << fmt17(p.noise_var) << '\n';
  }
  const fs::path dir = ensure_out_dir(c.out);
  write_text_file(dir / "predictions.csv", os.str());
  std::cout << "wrote " << (dir / "predictions.csv").string() << " ("
            << points.values.rows() << " rows)\n";
  Manifest m{"gp-predict", argv, "", 0, points.values.rows(), 0, iso_timestamp()};
  m.write(dir);
}

struct PlotdataCmd {
  std::string kind;
  std::string design_path;
  std::string responses_path;
  int n = 0;
  int nbins = 0;
  int d = 2;
  int n_points = 100;
  int n_seeds = 50;
  std::uint64_t seed = 42;
  std::string out = ".";
};

void cmd_plotdata(const PlotdataCmd& c, const std::vector<std::string>& argv) {
  const fs::path dir = ensure_out_dir(c.out);
  std::ostringstream os;
  std::string filename;

  if (c.kind == "histogram") {
    const Eigen::VectorXd y = read_response_file(c.responses_path);
    const int nbins = c.nbins > 0 ? c.nbins : 30;
    if (nbins < 2) throw senskit::InputError("plotdata: need at least 2 bins");
    const double lo = y.minCoeff();
    const double hi = y.maxCoeff();
    const double width = (hi - lo) > 0.0 ? (hi - lo) / nbins : 1.0;
    std::vector<long> counts(static_cast<std::size_t>(nbins), 0);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      int b = static_cast<int>((y(i) - lo) / width);
      b = std::min(std::max(b, 0), nbins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    os << "bin_low,bin_high,count\n";
    for (int b = 0; b < nbins; ++b) {
      os << fmt17(lo + b * width) << ',' << fmt17(lo + (b + 1) * width) << ','
         << counts[static_cast<std::size_t>(b)] << '\n';
    }
    filename = "histogram.csv";
  } else if (c.kind == "scatterbins") {
    if (c.n < 1) throw senskit::InputError("plotdata: scatterbins requires --n");
    const CsvTable design = read_csv_file(c.design_path, "design");
    const Eigen::VectorXd y = read_response_file(c.responses_path);
    if (design.values.rows() != y.size()) {
      throw senskit::InputError("plotdata: design and responses row counts differ");
    }
    if (design.values.rows() < c.n) {
      throw senskit::InputError("plotdata: fewer rows than --n");
    }
    const int nbins = c.nbins > 0 ? c.nbins : 20;
    if (nbins < 2) throw senskit::InputError("plotdata: need at least 2 bins");
    // Mean of Y | X_i over equal-width bins of the A block.
    os << "parameter,bin_mid,mean_y,count\n";
    for (Eigen::Index j = 0; j < design.values.cols(); ++j) {
      const auto x = design.values.col(j).head(c.n);
      const double lo = x.minCoeff();
      const double hi = x.maxCoeff();
      const double width = (hi - lo) > 0.0 ? (hi - lo) / nbins : 1.0;
      std::vector<double> sum(static_cast<std::size_t>(nbins), 0.0);
      std::vector<long> count(static_cast<std::size_t>(nbins), 0);
      for (int i = 0; i < c.n; ++i) {
        int b = static_cast<int>((x(i) - lo) / width);
        b = std::min(std::max(b, 0), nbins - 1);
        sum[static_cast<std::size_t>(b)] += y(i);
        ++count[static_cast<std::size_t>(b)];
      }
      const std::string name = static_cast<std::size_t>(j) < design.header.size()
                                   ? design.header[static_cast<std::size_t>(j)]
                                   : "x" + std::to_string(j + 1);
      for (int b = 0; b < nbins; ++b) {
        if (count[static_cast<std::size_t>(b)] == 0) continue;
        os << name << ',' << fmt17(lo + (b + 0.5) * width) << ','
           << fmt17(sum[static_cast<std::size_t>(b)] / count[static_cast<std::size_t>(b)])
           << ',' << count[static_cast<std::size_t>(b)] << '\n';
      }
    }
    filename = "scatterbins.csv";
  } else if (c.kind == "discrepancy_compare") {
    os << "seed,mc,lhs,sobol\n";
    const double d2_sobol =
        senskit::l2_star_discrepancy(senskit::sobol_sequence(c.n_points, c.d));
    for (int s = 0; s < c.n_seeds; ++s) {
      const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(s);
      const double d2_mc =
          senskit::l2_star_discrepancy(senskit::mc_sample(c.n_points, c.d, seed));
      const double d2_lhs =
          senskit::l2_star_discrepancy(senskit::lhs_sample(c.n_points, c.d, seed));
      os << seed << ',' << fmt17(d2_mc) << ',' << fmt17(d2_lhs) << ',' << fmt17(d2_sobol)
         << '\n';
    }
    filename = "discrepancy.csv";
  } else {
    throw senskit::InputError(
        "plotdata: --kind must be histogram, scatterbins or discrepancy_compare");
  }

  write_text_file(dir / filename, os.str());
  std::cout << "wrote " << (dir / filename).string() << '\n';
  Manifest m{"plotdata", argv, "", c.seed, c.n, 0, iso_timestamp()};
  m.write(dir);
}

int cmd_replay(const std::string& manifest_path, const std::string& out_override) {
  std::ifstream is(manifest_path);
  if (!is) throw senskit::InputError("replay: cannot open manifest " + manifest_path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw senskit::InputError(std::string("replay: manifest is not valid JSON: ") + e.what());
  }
  std::vector<std::string> argv;
  try {
    argv = j.at("argv").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw senskit::InputError("replay: manifest has no argv record");
  }
  if (!out_override.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
      if (argv[i] == "--out") {
        argv[i + 1] = out_override;
        replaced = true;
      }
    }
    if (!replaced) {
      argv.push_back("--out");
      argv.push_back(out_override);
    }
  }
  return run_cli(argv);
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"variance-based sensitivity analysis toolkit"};
  app.require_subcommand(1);

  DesignCmd design;
  auto* design_cmd = app.add_subcommand("design", "generate a scaled pick-freeze design");
  design.model.attach(design_cmd);
  design_cmd->add_option("--n", design.n, "pick-freeze block size N");
  design_cmd->add_option("--sampler", design.sampler, "mc, lhs or sobol");
  design_cmd->add_option("--seed", design.seed, "generator seed");
  design_cmd->add_option("--out", design.out, "output directory");

  EvaluateCmd evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "run a model over a design CSV");
  evaluate.model.attach(evaluate_cmd);
  evaluate_cmd->add_option("--design", evaluate.design_path, "design CSV path")->required();
  evaluate_cmd->add_option("--exec", evaluate.exec,
                           "external command: reads the design CSV on stdin, prints one "
                           "response per row");
  evaluate_cmd->add_option("--out", evaluate.out, "output directory");

  SobolCmd sobol;
  auto* sobol_cmd = app.add_subcommand("sobol", "estimate first/total-order Sobol' indices");
  sobol.model.attach(sobol_cmd);
  sobol_cmd->add_option("--design", sobol.design_path, "design CSV (for parameter names)");
  sobol_cmd->add_option("--responses", sobol.responses_path,
                        "responses CSV ordered like the pick-freeze design");
  sobol_cmd->add_option("--n", sobol.n, "pick-freeze block size N");
  sobol_cmd->add_option("--R", sobol.r, "bootstrap replicates (0 disables)");
  sobol_cmd->add_option("--level", sobol.level, "confidence level");
  sobol_cmd->add_option("--first", sobol.first, "first-order estimator: saltelli or jansen");
  sobol_cmd->add_option("--ci", sobol.ci, "confidence interval kind: normal or percentile");
  sobol_cmd->add_option("--sampler", sobol.sampler, "mc, lhs or sobol");
  sobol_cmd->add_option("--seed", sobol.seed, "generator/bootstrap seed");
  sobol_cmd->add_option("--out", sobol.out, "output directory");
  sobol_cmd->add_option("--format", sobol.format, "outputs to write: csv,json");

  ShapleyCmd shapley;
  auto* shapley_cmd = app.add_subcommand("shapley", "estimate Shapley effects");
  shapley.model.attach(shapley_cmd);
  shapley_cmd->add_option("--M", shapley.m_permutations, "random permutations");
  shapley_cmd->add_option("--n-outer", shapley.n_outer, "outer loop size per nu2");
  shapley_cmd->add_option("--n-inner", shapley.n_inner, "inner loop size per nu2 (>= 2)");
  shapley_cmd->add_option("--n-var", shapley.n_var, "samples for the V(Y) normalizer");
  shapley_cmd->add_option("--seed", shapley.seed, "seed");
  shapley_cmd->add_option("--out", shapley.out, "output directory");
  shapley_cmd->add_option("--format", shapley.format, "outputs to write: csv,json");

  StochsaCmd stochsa;
  auto* stochsa_cmd =
      app.add_subcommand("stochsa", "stochastic-simulator SA through GP surrogates");
  stochsa.model.attach(stochsa_cmd);
  stochsa_cmd->add_option("--design-size", stochsa.design_size, "unique design sites");
  stochsa_cmd->add_option("--replicates", stochsa.replicates, "replicates per site (>= 2)");
  stochsa_cmd->add_option("--n", stochsa.n, "pick-freeze block size for surrogate SA");
  stochsa_cmd->add_option("--R", stochsa.r, "bootstrap replicates");
  stochsa_cmd->add_option("--noise-var", stochsa.noise_var,
                          "additive noise variance for deterministic builtins");
  stochsa_cmd->add_option("--seed", stochsa.seed, "seed");
  stochsa_cmd->add_option("--sampler", stochsa.sampler, "mc, lhs or sobol");
  stochsa_cmd->add_option("--out", stochsa.out, "output directory");

  GpFitCmd gp_fit;
  auto* gp_fit_cmd = app.add_subcommand("gp-fit", "fit a GP surrogate to design/response CSVs");
  gp_fit_cmd->add_option("--design", gp_fit.design_path, "design CSV path")->required();
  gp_fit_cmd->add_option("--responses", gp_fit.responses_path, "responses CSV path")->required();
  gp_fit_cmd->add_option("--noise", gp_fit.noise, "zero, constant or fixed");
  gp_fit_cmd->add_option("--noise-file", gp_fit.noise_file,
                         "per-site noise variances (with --noise fixed)");
  gp_fit_cmd->add_option("--kernel", gp_fit.kernel, "matern52 or squared_exponential");
  gp_fit_cmd->add_option("--restarts", gp_fit.restarts, "optimizer restarts");
  gp_fit_cmd->add_option("--seed", gp_fit.seed, "seed");
  gp_fit_cmd->add_option("--out", gp_fit.out, "output directory");

  GpPredictCmd gp_predict;
  auto* gp_predict_cmd =
      app.add_subcommand("gp-predict", "batch predictions from a stored GP model");
  gp_predict_cmd->add_option("--model-json", gp_predict.model_path, "gp.json path")->required();
  gp_predict_cmd->add_option("--points", gp_predict.points_path, "points CSV path")->required();
  gp_predict_cmd->add_option("--out", gp_predict.out, "output directory");

  PlotdataCmd plotdata;
  auto* plotdata_cmd = app.add_subcommand("plotdata", "emit plot-ready CSV data");
  plotdata_cmd->add_option("--kind", plotdata.kind,
                           "histogram, scatterbins or discrepancy_compare")->required();
  plotdata_cmd->add_option("--design", plotdata.design_path, "design CSV path");
  plotdata_cmd->add_option("--responses", plotdata.responses_path, "responses CSV path");
  plotdata_cmd->add_option("--n", plotdata.n, "pick-freeze block size of the design");
  plotdata_cmd->add_option("--nbins", plotdata.nbins, "bin count (30 histogram, 20 scatter)");
  plotdata_cmd->add_option("--d", plotdata.d, "dimension for discrepancy_compare");
  plotdata_cmd->add_option("--points", plotdata.n_points, "points per design (discrepancy)");
  plotdata_cmd->add_option("--seeds", plotdata.n_seeds, "seed count (discrepancy)");
  plotdata_cmd->add_option("--seed", plotdata.seed, "base seed");
  plotdata_cmd->add_option("--out", plotdata.out, "output directory");

  std::string replay_manifest;
  std::string replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a recorded manifest");
  replay_cmd->add_option("--manifest", replay_manifest, "manifest.json path")->required();
  replay_cmd->add_option("--out", replay_out, "override output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitInput;
  }

  try {
    if (design_cmd->parsed()) {
      cmd_design(design, args);
    } else if (evaluate_cmd->parsed()) {
      cmd_evaluate(evaluate, args);
    } else if (sobol_cmd->parsed()) {
      cmd_sobol(sobol, args);
    } else if (shapley_cmd->parsed()) {
      cmd_shapley(shapley, args);
    } else if (stochsa_cmd->parsed()) {
      cmd_stochsa(stochsa, args);
    } else if (gp_fit_cmd->parsed()) {
      cmd_gp_fit(gp_fit, args);
    } else if (gp_predict_cmd->parsed()) {
      cmd_gp_predict(gp_predict, args);
    } else if (plotdata_cmd->parsed()) {
      cmd_plotdata(plotdata, args);
    } else if (replay_cmd->parsed()) {
      return cmd_replay(replay_manifest, replay_out);
    }
  } catch (const senskit::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const senskit::DegeneracyError& e) {
    std::cerr << "error (numerical degeneracy): " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const senskit::ExternalModelError& e) {
    std::cerr << "error (external model): " << e.what() << '\n';
    return kExitExternal;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}
