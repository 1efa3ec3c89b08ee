#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "spdc/config.hpp"
#include "spdc/records_io.hpp"

using namespace spdc;

namespace {

ApparatusConfig random_config(std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto coin = [&] { return std::bernoulli_distribution(0.5)(rng); };
  ApparatusConfig c;
  c.pump = PumpState(u(0, 180), u(0, 6.28));
  c.source = {u(0, 1), u(-3, 3)};
  c.spectral.lambda_pump_nm = u(380, 420);
  c.spectral.band_min_nm = u(650, 760);
  c.spectral.band_max_nm = u(900, 1000);
  c.spectral.filter_edge_nm = u(770, 880);
  c.spectral.filter_steepness_nm = u(0, 10);
  c.spectral.shape = static_cast<SpectralShape>(std::uniform_int_distribution<int>(0, 2)(rng));
  c.spectral.spectral_width_nm = u(5, 60);
  c.geometry = {u(1, 6), u(1, 6), u(0.3, 2), u(10, 5000), u(0.1, 1)};
  c.polarizer_a_deg = u(-180, 180);
  c.polarizer_a_in = coin();
  c.polarizer_b_in = coin();
  c.detector_a = {u(0, 1), u(0, 1e3), u(0, 1e4), u(0, 100)};
  c.detector_b = {u(0, 1), u(0, 1e3), u(0, 1e4), u(0, 100)};
  c.circuit.input_pulse_width_ns = u(10, 40);
  c.circuit.b_delay_ns = u(6.5, 19.5);
  c.circuit.output_pulse_width_ns = u(100, 400);
  c.circuit.allow_out_of_range_delay = coin();
  auto& p = c.protocol;
  p.kind = static_cast<ProtocolKind>(std::uniform_int_distribution<int>(0, 3)(rng));
  p.seed = rng();
  p.mode = coin() ? SimulationMode::event : SimulationMode::rate;
  p.duration_s = u(0.1, 100);
  p.chsh_angles = {u(0, 90), u(0, 90), u(0, 90), u(0, 90)};
  p.subtract_accidentals = coin();
  p.replicas = std::uniform_int_distribution<int>(0, 1000)(rng);
  p.anglescan_theta_a_deg = {u(1, 3), u(3, 6)};
  p.anglescan_theta_b_deg = {u(1, 7)};
  p.polscan_beta_deg = {0.0, u(1, 179), 180.0};
  p.fit_free_theta = coin();
  p.fit_free_phi = coin();
  p.fit_free_purity = coin();
  p.circuit_dt_min_ns = u(-50, -1);
  p.circuit_dt_max_ns = u(1, 50);
  p.circuit_dt_step_ns = u(0.1, 2);
  return c;
}

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    (void)parse_config(text);
    ADD_FAILURE() << "no error for:\n" << text;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const ApparatusConfig c;
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, RandomRoundTrip) {
  std::mt19937_64 rng(12345);
  for (int i = 0; i < 500; ++i) {
    const auto c = random_config(rng);
    ASSERT_NO_THROW(c.validate());
    const auto text = serialize_config(c);
    EXPECT_EQ(parse_config(text), c) << text;
  }
}

TEST(Config, EmptyInputGivesDefaults) {
  EXPECT_EQ(parse_config(""), ApparatusConfig{});
  EXPECT_EQ(parse_config("# only a comment\n\n"), ApparatusConfig{});
}

TEST(Config, PartialFileKeepsOtherDefaults) {
  const auto c = parse_config("[crystals]\npurity = 0.5  # trailing comment\n[protocol]\nmode = rate\n");
  EXPECT_EQ(c.source.purity, 0.5);
  EXPECT_EQ(c.protocol.mode, SimulationMode::rate);
  EXPECT_EQ(c.geometry, GeometryModel{});
}

TEST(Config, PumpAngleIsNormalized) {
  const auto c = parse_config("[laser]\npol_angle_deg = 225\n[quartz_plate]\nphase_rad = -1\n");
  EXPECT_DOUBLE_EQ(c.pump.pol_angle_deg, 45.0);
  EXPECT_NEAR(c.pump.phase_rad, 2.0 * kPi - 1.0, 1e-15);
}

TEST(Config, Errors) {
  expect_config_error("[nonsense]\n", "unknown section");
  expect_config_error("[crystals]\nflux = 3\n", "unknown key");
  expect_config_error("purity = 0.5\n", "outside of any section");
  expect_config_error("[crystals\n", "unterminated");
  expect_config_error("[crystals]\npurity 0.5\n", "key = value");
  expect_config_error("[crystals]\npurity = half\n", "line 2");
  expect_config_error("[crystals]\npurity = 1.5\n", "purity");
  expect_config_error("[detector_b]\nefficiency = -0.1\n", "efficiency");
  expect_config_error("[circuit]\nb_delay_ns = 30\n", "delay");
  expect_config_error("[filters]\nspectrum = lorentzian\n", "spectrum");
  expect_config_error("[protocol]\nmode = quantum\n", "mode");
  expect_config_error("[protocol]\nseed = -4\n", "seed");
  expect_config_error("[protocol]\nchsh_angles_deg = 0, 45, 22.5\n", "four angles");
  expect_config_error("[protocol]\nduration_s = 0\n", "duration");
  expect_config_error("[polarizer_a]\nin_place = maybe\n", "line 2");
}

TEST(Config, DelayOutsideSpecNeedsOverride) {
  const auto c = parse_config("[circuit]\nb_delay_ns = 30\nallow_out_of_range_delay = true\n");
  EXPECT_EQ(c.circuit.b_delay_ns, 30.0);
}

TEST(RecordsIo, CountRecordRoundTrip) {
  std::vector<CountRecord> recs = {{0, 22.5, 15, 30123, 29870, 2211}, {90, 112.5, 15.5, 1e-3, 0, 7.25}};
  std::stringstream ss;
  write_count_records(ss, recs);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kPolarizerColumns);
  EXPECT_EQ(read_count_records(ss), recs);
}

TEST(RecordsIo, ReadErrors) {
  std::istringstream no_header("0,0,1,2,3,4\n");
  EXPECT_THROW(read_count_records(no_header), CsvError);
  std::istringstream short_row(std::string(kPolarizerColumns) + "\n0,0,1,2,3\n");
  EXPECT_THROW(read_count_records(short_row), CsvError);
  std::istringstream bad_number(std::string(kPolarizerColumns) + "\n0,0,1,2,x,4\n");
  EXPECT_THROW(read_count_records(bad_number), CsvError);
}

TEST(RecordsIo, FormatNumberRoundTrips) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = d(rng);
    EXPECT_EQ(parse_number(format_number(x)), x);
  }
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(2.5), "2.5");
}
