// SPDX-License-Identifier: Apache-2.0
//
// maft: command-line front end over the C API.
//
// Exit codes: 0 success, 2 usage or invalid argument, 3 validation or I/O
// failure, 4 numerical failure, 1 internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maft/maft.h"

namespace {

using nlohmann::json;

// Component delays of the bench setup: 30 GHz modulator, 45 MHz detector,
// 1 GHz RF amplifier, 10 m of propagation.
constexpr const char* kExperimentLatency =
    R"({"mzm_bandwidth_hz": 30e9, "pd_bandwidth_hz": 45e6, "rf_bandwidth_hz": 1e9, "fiber_m": 10})";

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code(maft_status s) {
  switch (s) {
    case MAFT_OK: return 0;
    case MAFT_INVALID_ARGUMENT: return 2;
    case MAFT_VALIDATION:
    case MAFT_IO: return 3;
    case MAFT_NUMERICAL: return 4;
    case MAFT_INTERNAL: return 1;
  }
  return 1;
}

void check(maft_status s) {
  if (s != MAFT_OK) throw Failure{exit_code(s), maft_last_error()};
}

// Owns a string returned by the library.
class Text {
 public:
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { maft_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ == nullptr ? std::string() : std::string(p_); }

 private:
  char* p_ = nullptr;
};

struct NetworkDeleter {
  void operator()(maft_network* n) const { maft_network_free(n); }
};
struct DatasetDeleter {
  void operator()(maft_dataset* d) const { maft_dataset_free(d); }
};
using Network = std::unique_ptr<maft_network, NetworkDeleter>;
using Dataset = std::unique_ptr<maft_dataset, DatasetDeleter>;

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  int threads = 0;
  bool verbose = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{3, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes `content` to <out>/<name>, or to stdout when no directory is given
// and `to_stdout` is set.
void emit(const Globals& g, const std::string& name, const std::string& content, bool to_stdout) {
  if (g.out.empty()) {
    if (to_stdout) {
      std::cout << content;
      if (!content.empty() && content.back() != '\n') std::cout << '\n';
    }
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(g.out, ec);
  const auto path = std::filesystem::path(g.out) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure{3, "cannot write '" + path.string() + "'"};
  f << content;
  if (!content.empty() && content.back() != '\n') f << '\n';
  if (!f) throw Failure{3, "error writing '" + path.string() + "'"};
  if (g.verbose) std::cerr << "wrote " << path.string() << '\n';
}

void require_format(const Globals& g) {
  if (g.format != "json" && g.format != "csv") throw Failure{2, "--format must be json or csv"};
}

struct NetworkSource {
  std::string spec_path;
  std::string example;
};

void add_network_options(CLI::App* cmd, NetworkSource& src) {
  cmd->add_option("--spec", src.spec_path, "network spec JSON file");
  cmd->add_option("--example", src.example, "bundled example name (see `maft examples`)");
}

Network load_network(const NetworkSource& src, const Globals& g, std::vector<double>* example_input = nullptr) {
  maft_network* h = nullptr;
  if (!src.spec_path.empty() && !src.example.empty()) throw Failure{2, "give either --spec or --example, not both"};
  if (!src.spec_path.empty()) {
    check(maft_network_from_json(read_file(src.spec_path).c_str(), &h));
  } else if (!src.example.empty()) {
    Text input;
    check(maft_network_builtin(src.example.c_str(), g.seed, &h, input.out()));
    if (example_input != nullptr) *example_input = json::parse(input.str()).get<std::vector<double>>();
  } else {
    throw Failure{2, "a network is required: --spec FILE or --example NAME"};
  }
  return Network(h);
}

Dataset load_dataset(const std::string& path) {
  maft_dataset* h = nullptr;
  check(maft_dataset_load(path.c_str(), &h));
  return Dataset(h);
}

// Rows of the trace CSV that belong to the last stage.
std::string last_stage_csv(const std::string& trace) {
  std::istringstream in(trace);
  std::string header, line, last_stage;
  std::getline(in, header);
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    const auto stage = line.substr(0, line.find(','));
    if (stage != last_stage) {
      rows.clear();
      last_stage = stage;
    }
    rows.push_back(line);
  }
  std::string out = header + '\n';
  for (const auto& r : rows) out += r + '\n';
  return out;
}

// ---- plan -----------------------------------------------------------------

struct PlanArgs {
  std::string scheme;
  std::int64_t n = 0, r = 0, n0 = 0, r0 = 0;
  std::string dfx, dfy;
};

void cmd_plan(const PlanArgs& a, const Globals& g) {
  require_format(g);
  json req = {{"scheme", a.scheme}, {"n", a.n}, {"r", a.r}, {"dfx_hz", a.dfx}, {"n0", a.n0}};
  if (a.scheme == "custom") {
    if (a.dfy.empty()) throw Failure{2, "custom plans need --dfy"};
    req["dfy_hz"] = a.dfy;
    req["r0"] = a.r0;
  }
  Text plan, csv, margins;
  check(maft_plan_create(req.dump().c_str(), plan.out()));
  check(maft_plan_enumeration_csv(plan.str().c_str(), csv.out()));
  check(maft_plan_margins(plan.str().c_str(), margins.out()));
  emit(g, "plan.json", plan.str(), g.format == "json");
  emit(g, "enumeration.csv", csv.str(), g.format == "csv");
  emit(g, "margins.txt", margins.str(), false);
  if (g.out.empty() || g.verbose) std::cerr << margins.str();
}

// ---- encode ---------------------------------------------------------------

void cmd_encode(const std::string& plan_path, const std::vector<double>& x, const Globals& g) {
  require_format(g);
  Text out;
  check(maft_plan_encode(read_file(plan_path).c_str(), x.data(), x.size(), g.format.c_str(), out.out()));
  emit(g, g.format == "csv" ? "input_spectrum.csv" : "input_spectrum.json", out.str(), true);
}

// ---- simulate -------------------------------------------------------------

void cmd_simulate(NetworkSource src, std::vector<double> x, const std::string& path, const Globals& g) {
  require_format(g);
  std::vector<double> example_input;
  auto net = load_network(src, g, &example_input);
  if (x.empty()) x = example_input;
  if (x.empty()) throw Failure{2, "an input vector is required (--input)"};
  Text readout, trace;
  check(maft_network_simulate(net.get(), x.data(), x.size(), path.c_str(), readout.out(), trace.out()));
  emit(g, "readout.json", readout.str(), g.format == "json");
  emit(g, "trace.csv", trace.str(), false);
  emit(g, "output_spectrum.csv", last_stage_csv(trace.str()), g.format == "csv");
}

// ---- infer ----------------------------------------------------------------

std::string confusion_csv(const json& results) {
  std::ostringstream os;
  const auto& m = results.at("confusion");
  os << "true\\predicted";
  for (std::size_t j = 0; j < m.size(); ++j) os << ',' << j;
  os << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << i;
    for (const auto& v : m[i]) os << ',' << v.get<std::int64_t>();
    os << '\n';
  }
  return os.str();
}

void cmd_infer(const NetworkSource& src, const std::string& data_path, bool per_sample, const Globals& g) {
  require_format(g);
  auto net = load_network(src, g);
  auto data = load_dataset(data_path);
  Text results;
  check(maft_network_evaluate(net.get(), data.get(), g.threads, per_sample ? 1 : 0, results.out()));
  const auto j = json::parse(results.str());
  emit(g, "results.json", results.str(), g.format == "json");
  emit(g, "confusion.csv", confusion_csv(j), g.format == "csv");
  std::cerr << "accuracy " << j.at("accuracy").get<double>() << " on " << j.at("confusion").size() << " classes\n";
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data, test;
  double lr = 0.1;
  int epochs = 10;
  int batch = 32;
  std::string loss = "cross_entropy";
  std::string gradient = "analytic";
  double fd_step = 1e-5;
};

void cmd_train(const NetworkSource& src, const TrainArgs& a, const Globals& g) {
  auto net = load_network(src, g);
  auto train = load_dataset(a.data);
  Dataset test;
  if (!a.test.empty()) test = load_dataset(a.test);
  const json config = {{"learning_rate", a.lr}, {"epochs", a.epochs},   {"batch_size", a.batch},
                       {"seed", g.seed},        {"loss", a.loss},       {"gradient", a.gradient},
                       {"fd_step", a.fd_step},  {"threads", g.threads}};
  Text history, spec;
  check(maft_network_train(net.get(), train.get(), test.get(), config.dump().c_str(), history.out()));
  check(maft_network_to_json(net.get(), spec.out()));
  emit(g, "history.json", history.str(), true);
  emit(g, "trained_spec.json", spec.str(), false);
  const auto h = json::parse(history.str());
  if (g.verbose) {
    for (const auto& e : h.at("history")) {
      std::cerr << "epoch " << e.at("epoch") << " loss " << e.at("loss") << " train " << e.at("train_accuracy")
                << " test " << e.at("test_accuracy") << '\n';
    }
  }
  if (h.value("diverged", false)) throw Failure{4, "training diverged: " + h.value("message", std::string())};
}

// ---- fit ------------------------------------------------------------------

void cmd_fit(const std::string& model, const std::string& data, const std::string& synth, const Globals& g) {
  Text out;
  if (!synth.empty()) {
    check(maft_fit_synthesize(read_file(synth).c_str(), out.out()));
    emit(g, "fit_data.json", out.str(), true);
    return;
  }
  if (data.empty()) throw Failure{2, "--data is required"};
  const auto text = read_file(data);
  if (model == "linear") {
    check(maft_fit_linear(text.c_str(), out.out()));
  } else if (model == "nonlinear") {
    check(maft_fit_nonlinear(text.c_str(), out.out()));
  } else {
    throw Failure{2, "--model must be linear or nonlinear"};
  }
  emit(g, "fit.json", out.str(), true);
  const auto j = json::parse(out.str());
  if (!j.value("warning", std::string()).empty()) std::cerr << "warning: " << j.at("warning").get<std::string>() << '\n';
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string request, plan, link;
  std::optional<std::string> latency;
  double bandwidth = 0.0, pd_bandwidth = 0.0;
  std::vector<double> sweep;
};

void cmd_analyze(const AnalyzeArgs& a, const Globals& g) {
  require_format(g);
  json req = a.request.empty() ? json::object() : json::parse(read_file(a.request));
  if (!a.plan.empty()) req["plan"] = json::parse(read_file(a.plan));
  if (a.bandwidth > 0.0) req["bandwidth_hz"] = a.bandwidth;
  if (a.pd_bandwidth > 0.0) req["pd_bandwidth_hz"] = a.pd_bandwidth;
  if (!a.link.empty()) req["link"] = json::parse(read_file(a.link));
  if (a.latency) req["latency"] = json::parse(a.latency->empty() ? kExperimentLatency : read_file(*a.latency));
  if (!a.sweep.empty()) {
    if (a.sweep.size() != 3) throw Failure{2, "--sweep takes MIN,MAX,POINTS"};
    const std::string link = req.contains("link") ? req["link"].dump() : "{}";
    Text csv;
    check(maft_gain_sweep_csv(link.c_str(), a.sweep[0], a.sweep[1], static_cast<int>(a.sweep[2]), csv.out()));
    emit(g, "gain_sweep.csv", csv.str(), g.format == "csv");
    if (req.empty()) return;
  }
  if (req.empty()) throw Failure{2, "nothing to analyze: give --plan, --link, --latency, --request or --sweep"};
  Text report;
  check(maft_analyze(req.dump().c_str(), report.out()));
  emit(g, "report.json", report.str(), g.format == "json");
  const auto r = json::parse(report.str());
  if (r.contains("latency")) {
    std::cerr << "latency " << r["latency"]["total_s"].get<double>() * 1e9 << " ns\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-encoded optical neural network simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_version_flag("--version", std::string(maft_version()));
  Globals g;
  app.add_option("--seed", g.seed, "seed for random initialization and shuffling")->capture_default_str();
  app.add_option("--out", g.out, "output directory (default: stdout)");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (0: MAFT_THREADS or all cores)");
  app.add_flag("-v,--verbose", g.verbose, "progress on stderr");

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "frequency layout of one layer, its spurious tones and margins");
  plan->add_option("--scheme", pa.scheme, "reduction, expansion or custom")
      ->required()
      ->check(CLI::IsMember({"reduction", "expansion", "custom"}));
  plan->add_option("--n", pa.n, "inputs N")->required();
  plan->add_option("--r", pa.r, "outputs R")->required();
  plan->add_option("--dfx", pa.dfx, "input tone spacing in Hz (e.g. 1e6 or 1000/3)")->required();
  plan->add_option("--dfy", pa.dfy, "output tone spacing in Hz (custom)");
  plan->add_option("--n0", pa.n0, "input offset in units of dfx");
  plan->add_option("--r0", pa.r0, "output offset in units of dfy (custom)");

  std::string plan_path;
  std::vector<double> x;
  auto* encode = app.add_subcommand("encode", "input tones of a vector on a plan");
  encode->add_option("--plan", plan_path, "plan JSON")->required();
  encode->add_option("--input", x, "comma-separated input vector")->delimiter(',')->required();

  NetworkSource net_src;
  std::string path = "auto";
  bool fig2b = false, fig2c = false, fig2d = false;
  auto* simulate = app.add_subcommand("simulate", "forward pass with every intermediate spectrum");
  add_network_options(simulate, net_src);
  simulate->add_flag("--fig2b", fig2b, "2x2 layout with all eight partial sums separated");
  simulate->add_flag("--fig2c", fig2c, "2x2 reduction layout");
  simulate->add_flag("--fig2d", fig2d, "2x2 expansion layout");
  simulate->add_option("--input", x, "comma-separated input vector (default: the example's)")->delimiter(',');
  simulate->add_option("--path", path, "multiplication path")->check(CLI::IsMember({"auto", "tones", "time"}));

  std::string data_path;
  bool per_sample = false;
  auto* infer = app.add_subcommand("infer", "classify a dataset and report the confusion matrix");
  add_network_options(infer, net_src);
  infer->add_option("--data", data_path, "dataset CSV (label,v1,...,vN)")->required();
  infer->add_flag("--per-sample", per_sample, "include every readout in the results");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train the weights offline with mini-batch SGD");
  add_network_options(train, net_src);
  train->add_option("--data", ta.data, "training CSV")->required();
  train->add_option("--test", ta.test, "test CSV evaluated after each epoch");
  train->add_option("--lr", ta.lr, "learning rate")->capture_default_str();
  train->add_option("--epochs", ta.epochs, "epochs")->capture_default_str();
  train->add_option("--batch", ta.batch, "mini-batch size")->capture_default_str();
  train->add_option("--loss", ta.loss, "loss")->check(CLI::IsMember({"cross_entropy", "mse"}))->capture_default_str();
  train->add_option("--gradient", ta.gradient, "gradient method")
      ->check(CLI::IsMember({"analytic", "finite_difference"}))
      ->capture_default_str();
  train->add_option("--fd-step", ta.fd_step, "finite-difference step")->capture_default_str();

  std::string model = "nonlinear", fit_data, synth;
  auto* fit = app.add_subcommand("fit", "fit the linear scale or the sine transfer to measurements");
  fit->add_option("--model", model, "linear or nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
  fit->add_option("--data", fit_data, "measurement JSON");
  fit->add_option("--synthesize", synth, "request JSON; writes synthetic measurements instead of fitting");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "throughput, link gain and latency figures");
  analyze->add_option("--request", aa.request, "analysis request JSON");
  analyze->add_option("--plan", aa.plan, "plan JSON for the throughput report");
  analyze->add_option("--bandwidth", aa.bandwidth, "modulator bandwidth B in Hz (default: highest plan tone)");
  analyze->add_option("--pd-bandwidth", aa.pd_bandwidth, "detector bandwidth in Hz");
  analyze->add_option("--link", aa.link, "link budget JSON");
  analyze->add_option("--latency", aa.latency, "latency budget JSON (no value: the bench setup)")
      ->expected(0, 1);
  analyze->add_option("--sweep", aa.sweep, "gain sweep over laser power: MIN,MAX,POINTS")->delimiter(',');

  app.add_subcommand("examples", "list the bundled examples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (plan->parsed()) {
      cmd_plan(pa, g);
    } else if (encode->parsed()) {
      cmd_encode(plan_path, x, g);
    } else if (simulate->parsed()) {
      const int picked = int(fig2b) + int(fig2c) + int(fig2d);
      if (picked > 1) throw Failure{2, "choose one of --fig2b, --fig2c, --fig2d"};
      if (picked == 1) {
        if (!net_src.spec_path.empty() || !net_src.example.empty()) {
          throw Failure{2, "--fig2* cannot be combined with --spec or --example"};
        }
        net_src.example = fig2b ? "fig2b" : fig2c ? "fig2c" : "fig2d";
      }
      cmd_simulate(net_src, x, path, g);
    } else if (infer->parsed()) {
      cmd_infer(net_src, data_path, per_sample, g);
    } else if (train->parsed()) {
      cmd_train(net_src, ta, g);
    } else if (fit->parsed()) {
      cmd_fit(model, fit_data, synth, g);
    } else if (analyze->parsed()) {
      cmd_analyze(aa, g);
    } else {
      Text names;
      check(maft_builtin_names(names.out()));
      emit(g, "examples.json", names.str(), true);
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.exit_code;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
