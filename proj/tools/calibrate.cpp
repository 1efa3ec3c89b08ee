// Regenerates the shipped default calibration from a base configuration.
//
//   spdc-calibrate --base config/base.cfg --out config/default.cfg

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spdc/spdc.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tune peak pair rate and source purity to the calibration targets"};
  std::string base_path, out_path;
  spdc::CalibrationTargets targets;
  app.add_option("--base", base_path, "Base configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Output configuration (stdout if omitted)");
  app.add_option("--coinc-rate", targets.matched_coinc_rate, "Matched-angle coincidence rate, polarizers removed (cps)")
      ->capture_default_str();
  app.add_option("--chsh-s", targets.chsh_s, "Expected CHSH S at the configured angles")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(base_path);
    const auto cfg = spdc::calibrate(spdc::parse_config(in), targets);
    std::ofstream file;
    if (!out_path.empty()) {
      const auto dir = std::filesystem::path(out_path).parent_path();
      if (!dir.empty()) std::filesystem::create_directories(dir);
      file.open(out_path, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write " + out_path);
    }
    std::ostream& os = out_path.empty() ? std::cout : file;
    os << "# Generated by spdc-calibrate from " << std::filesystem::path(base_path).filename().string() << "\n"
       << "# targets: matched coincidence rate " << spdc::format_number(targets.matched_coinc_rate)
       << " cps (polarizers removed), CHSH S " << spdc::format_number(targets.chsh_s) << "\n\n";
    spdc::serialize_config(os, cfg);
  } catch (const spdc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
