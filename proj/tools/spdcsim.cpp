// Command-line driver for the simulated entangled-photon bench.
//
//   spdcsim chsh|anglescan|polscan|circuit-test|validate --config PATH
//           [--seed N] [--out DIR] [--mode event|rate] [--input CSV] [--trace CSV]
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 degenerate fit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spdc/spdc.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDegenerateFit = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::string out_dir = ".";
  std::string input_csv;
  std::string trace_csv;
};

spdc::ApparatusConfig load_config(const Options& opt, bool required) {
  spdc::ApparatusConfig cfg;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw spdc::ConfigError("cannot open config file " + opt.config_path);
    cfg = spdc::parse_config(in);
  } else if (required) {
    throw spdc::ConfigError("--config is required");
  }
  if (opt.seed) cfg.protocol.seed = *opt.seed;
  if (opt.mode) cfg.protocol.mode = *opt.mode == "rate" ? spdc::SimulationMode::rate : spdc::SimulationMode::event;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const Options& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  const auto path = fs::path(opt.out_dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::vector<spdc::CountRecord> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open input " + path);
  return spdc::read_count_records(in);
}

void write_trace(const Options& opt, const std::vector<spdc::DetectionEvent>& trace) {
  if (opt.trace_csv.empty()) return;
  std::ofstream os(opt.trace_csv, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + opt.trace_csv);
  spdc::write_event_trace(os, trace);
}

int cmd_chsh(const Options& opt) {
  const auto cfg = load_config(opt, true);
  std::vector<spdc::DetectionEvent> trace;
  const auto run = opt.input_csv.empty() ? spdc::run_chsh(cfg, cfg.protocol.mode, opt.trace_csv.empty() ? nullptr : &trace)
                                         : spdc::analyse_chsh(read_records(opt.input_csv), cfg);
  const auto doc = spdc::chsh_document(run);
  {
    auto os = open_output(opt, "chsh.csv");
    spdc::write_count_records(os, run.raw);
  }
  {
    auto os = open_output(opt, "chsh_result.txt");
    os << doc;
  }
  write_trace(opt, trace);
  std::cout << doc;
  return 0;
}

int cmd_anglescan(const Options& opt) {
  const auto cfg = load_config(opt, true);
  const auto points = spdc::run_anglescan(cfg, cfg.protocol.mode);
  {
    auto os = open_output(opt, "anglescan.csv");
    spdc::write_anglescan_csv(os, points);
  }
  auto os = open_output(opt, "anglescan_curves.dat");
  spdc::write_anglescan_curves(os, points);
  spdc::write_anglescan_curves(std::cout, points);
  return 0;
}

int cmd_polscan(const Options& opt) {
  const auto cfg = load_config(opt, true);
  std::vector<spdc::DetectionEvent> trace;
  const auto run = opt.input_csv.empty()
                       ? spdc::run_polscan(cfg, cfg.protocol.mode, opt.trace_csv.empty() ? nullptr : &trace)
                       : spdc::analyse_polscan(read_records(opt.input_csv), cfg);
  const auto doc = spdc::polscan_document(run);
  {
    auto os = open_output(opt, "polscan.csv");
    spdc::write_count_records(os, run.records);
  }
  {
    auto os = open_output(opt, "polscan_fit.csv");
    spdc::write_polscan_annotated(os, run);
  }
  {
    auto os = open_output(opt, "polscan_result.txt");
    os << doc;
  }
  write_trace(opt, trace);
  std::cout << doc;
  return 0;
}

int cmd_circuit_test(const Options& opt) {
  const auto cfg = load_config(opt, false);
  const auto& p = cfg.protocol;
  const auto map = spdc::circuit_window_map(cfg.circuit, p.circuit_dt_min_ns, p.circuit_dt_max_ns, p.circuit_dt_step_ns);
  {
    auto os = open_output(opt, "circuit_window.csv");
    spdc::write_window_map(os, map);
  }
  std::cout << "# t_B - t_A (ns)  coincidence\n";
  for (const auto& pt : map) std::cout << spdc::format_number(pt.dt_ns) << ' ' << (pt.coincident ? '#' : '.') << '\n';
  std::cout << "expected window: [" << spdc::format_number(-cfg.circuit.b_delay_ns) << ", "
            << spdc::format_number(cfg.circuit.input_pulse_width_ns - cfg.circuit.b_delay_ns) << ") ns\n";
  return 0;
}

int cmd_validate(const Options& opt) {
  const auto cfg = load_config(opt, true);
  const auto src = spdc::source_rates(cfg);
  std::cout << "config OK\n"
            << "pair_rate_into_irises: " << spdc::format_number(src.pair) << '\n'
            << "expected_open_coinc_rate: " << spdc::format_number(spdc::expected_open_coinc_rate(cfg)) << '\n'
            << "expected_chsh_S: " << spdc::format_number(spdc::expected_chsh_s(cfg)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for a two-crystal SPDC entangled-photon coincidence experiment"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config_path, "Apparatus configuration file")->check(CLI::ExistingFile);
    if (config_required) c->required();
    sub->add_option("--seed", opt.seed, "Override the protocol seed");
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--mode", opt.mode, "Simulation mode")->check(CLI::IsMember({"event", "rate"}));
  };

  auto* chsh = app.add_subcommand("chsh", "Sixteen-setting CHSH measurement");
  add_common(chsh, true);
  chsh->add_option("--input", opt.input_csv, "Analyse an existing count-record CSV instead of simulating");
  chsh->add_option("--trace", opt.trace_csv, "Write the click trace of the first setting (event mode)");

  auto* angle = app.add_subcommand("anglescan", "Coincidences versus detector-rail angles");
  add_common(angle, true);

  auto* pol = app.add_subcommand("polscan", "Coincidences versus polarizer B angle, with fit");
  add_common(pol, true);
  pol->add_option("--input", opt.input_csv, "Fit an existing count-record CSV instead of simulating");
  pol->add_option("--trace", opt.trace_csv, "Write the click trace of the first setting (event mode)");

  auto* circuit = app.add_subcommand("circuit-test", "Print the coincidence window map of the circuit");
  add_common(circuit, false);

  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  add_common(validate, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (chsh->parsed()) return cmd_chsh(opt);
    if (angle->parsed()) return cmd_anglescan(opt);
    if (pol->parsed()) return cmd_polscan(opt);
    if (circuit->parsed()) return cmd_circuit_test(opt);
    if (validate->parsed()) return cmd_validate(opt);
  } catch (const spdc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const spdc::DegenerateFitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kExitDegenerateFit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
