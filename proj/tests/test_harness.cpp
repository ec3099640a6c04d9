#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include "drg/harness/studies.hpp"

using namespace drg;
using namespace drg::harness;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("drg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  fs::path path_;
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DRG_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return std::string(DRG_CONFIG_DIR) + "/" + name; }

std::string message_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalDocumentGetsDefaults) {
  const ExperimentSpec s = parse_config_text(R"({"problem": "top", "method": "ia", "h": 0.1, "t_end": 10})");
  EXPECT_EQ(s.problem, ProblemId::top);
  EXPECT_EQ(s.method, "ia");
  EXPECT_EQ(s.h, 0.1);
  EXPECT_EQ(s.t_end, 10.0);
  EXPECT_EQ(s.fp_tol, 1e-14);
  EXPECT_EQ(s.settings.nq, 16);
  EXPECT_EQ(s.norm, Norm::ambient);
  EXPECT_EQ(s.reference, ReferencePolicy::automatic);
  EXPECT_EQ(s.reference_s, 4);
  EXPECT_EQ(s.reference_factor, 100.0);
  EXPECT_TRUE(s.h_list.empty());
}

TEST(Config, HListMustDecrease) {
  EXPECT_NE(message_of(R"({"h_list": [0.5, 0.5]})").find("h_list"), std::string::npos);
  EXPECT_NE(message_of(R"({"h_list": [0.25, 0.5]})").find("strictly decreasing"), std::string::npos);
  EXPECT_EQ(message_of(R"({"h_list": [0.5, 0.25]})"), "");
}

TEST(Config, UnknownMethodListsValidIds) {
  const std::string msg = message_of(R"({"method": "rk4"})");
  EXPECT_NE(msg.find("rk4"), std::string::npos);
  for (const auto& id : method_ids()) EXPECT_NE(msg.find(id), std::string::npos) << id;
}

TEST(Config, UnknownKeyIsRejected) {
  const std::string msg = message_of(R"({"problem": "top", "stepsize": 0.1})");
  EXPECT_NE(msg.find("stepsize"), std::string::npos);
  EXPECT_NE(msg.find("valid keys"), std::string::npos);
}

TEST(Config, TypeAndValueErrorsNameTheKey) {
  EXPECT_NE(message_of(R"({"h": "0.1"})").find("h:"), std::string::npos);
  EXPECT_NE(message_of(R"({"nq": 2.5})").find("nq"), std::string::npos);
  EXPECT_NE(message_of(R"({"h": -1})").find("h:"), std::string::npos);
  EXPECT_NE(message_of(R"({"problem": "pendulum"})").find("problem"), std::string::npos);
  EXPECT_NE(message_of(R"({"initial": [1, 0]})").find("initial"), std::string::npos);
  EXPECT_NE(message_of(R"({"initial": [0, 0, 0]})").find("zero"), std::string::npos);
  EXPECT_NE(message_of(R"({"method": "mmp"})").find("chain"), std::string::npos);
  EXPECT_NE(message_of(R"({"reference": "exact"})").find("reference"), std::string::npos);
  EXPECT_NE(message_of("[1, 2]").find("object"), std::string::npos);
  EXPECT_NE(message_of("{\"h\": ").find("malformed"), std::string::npos);
}

TEST(Config, SpinStatesAreNormalized) {
  const ExperimentSpec s = parse_config_text(R"({"initial": [0, 3, 4]})");
  ASSERT_TRUE(s.initial);
  EXPECT_NEAR(s.initial->norm(), 1.0, 1e-15);
  EXPECT_NEAR((*s.initial)(2), 0.8, 1e-15);
}

TEST(Config, SampleConfigsParse) {
  for (const auto& entry : fs::directory_iterator(DRG_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(parse_config(entry.path().string())) << entry.path();
  }
  EXPECT_THROW(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST(Csv, RoundTripIsValueIdentical) {
  CsvTable t;
  t.header = {"t", "x0", "H"};
  t.rows = {{0.0, 1.0 / 3.0, -2.5e-300}, {0.1, std::nan(""), 12345678.901234567}, {1e-17, -0.0, 1.0 / 7.0}};
  t.comments = {{"slope", "1.0000000000000002"}};
  std::stringstream buf;
  write_csv(buf, t);
  const CsvTable back = read_csv(buf);
  EXPECT_EQ(back.header, t.header);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (std::isnan(t.rows[r][c])) {
        EXPECT_TRUE(std::isnan(back.rows[r][c]));
      } else {
        EXPECT_EQ(back.rows[r][c], t.rows[r][c]);
      }
    }
  }
  EXPECT_EQ(back.comment("slope"), "1.0000000000000002");
}

TEST(Csv, SeventeenSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
}

TEST(Csv, RejectsRaggedRows) {
  std::stringstream bad("a,b\n1,2\n3\n");
  EXPECT_THROW(read_csv(bad), std::runtime_error);
  EXPECT_THROW(read_csv(std::string("/nonexistent/file.csv")), IoError);
}

TEST(SlopeFit, ExactPowerLaw) {
  std::vector<double> h;
  std::vector<double> err;
  for (int k = 0; k < 8; ++k) {
    h.push_back(std::ldexp(1.0, -k));
    err.push_back(0.3 * std::pow(h.back(), 4));
  }
  const SlopeFit fit = fit_slope(h, err, 0.0, 1.0);
  EXPECT_NEAR(fit.slope, 4.0, 1e-12);
  EXPECT_EQ(fit.points, 8);
}

TEST(SlopeFit, WindowDropsRoundOffAndFailures) {
  const std::vector<double> h = {1, 0.5, 0.25, 0.125, 0.0625};
  const std::vector<double> err = {std::nan(""), 1e-2, 2.5e-3, 1e-13, 3e-14};
  const SlopeFit fit = fit_slope(h, err, 1e-11, 0.5);
  EXPECT_EQ(fit.points, 2);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(fit_slope(h, err, 1e-2, 0.5).slope));
}

TEST(OrderStudy, ExactReferenceSelfTest) {
  ExperimentSpec s = parse_config_text(R"({"problem": "chain", "t_end": 10})");
  const ProblemSetup setup = make_problem(s);
  const Vector ref = reference_state(s, setup, {1.0});
  EXPECT_EQ(error_norm(setup.problem, Norm::ambient, ref, *exact_state(setup, 10.0)), 0.0);
  EXPECT_EQ(error_norm(setup.problem, Norm::riemannian, ref, ref), 0.0);
}

TEST(OrderStudy, ItohAbeOnOscillator) {
  const ExperimentSpec s = parse_config_text(
      R"({"problem": "oscillator", "method": "ia", "t_end": 1, "h_list": [0.25, 0.125, 0.0625, 0.03125]})");
  const OrderStudyResult res = order_study(s);
  EXPECT_EQ(res.reference, "exact");
  ASSERT_EQ(res.rows.size(), 4u);
  // separable quadratic H: each divided difference is (u_j + v_j) / 2, so IA
  // coincides with the average DRG and is second order here
  EXPECT_NEAR(res.fit.slope, 2.0, 0.2);
  const CsvTable t = res.table();
  EXPECT_EQ(t.header, (std::vector<std::string>{"h", "err_ambient", "err_riemannian"}));
  EXPECT_EQ(t.comment("slope"), format_number(res.fit.slope));
}

TEST(OrderStudy, ChainThirdCollocation) {
  const OrderStudyResult res = order_study(parse_config_text(
      R"({"problem": "chain", "method": "coll", "collocation_s": 3, "t_end": 10, "reference": "exact"})"));
  EXPECT_NEAR(res.fit.slope, 6.0, 0.3);
}

TEST(OrderStudy, FailedStepSizesBecomeNaNRows) {
  const OrderStudyResult res = order_study(parse_config_text(
      R"({"problem": "chain", "method": "mp", "t_end": 2, "h_list": [1, 0.5, 0.25, 0.125]})"));
  EXPECT_TRUE(res.rows[0].failure.has_value());
  EXPECT_TRUE(std::isnan(res.rows[0].err_ambient));
  EXPECT_FALSE(res.rows[3].failure.has_value());
  EXPECT_NEAR(res.fit.slope, 2.0, 0.3);
}

TEST(Run, ZeroStepRunHasHeaderAndInitialRow) {
  const ExperimentSpec s = parse_config_text(R"({"problem": "chain", "spins": 3, "t_end": 0})");
  const CsvTable t = trajectory_table(run(s));
  ASSERT_EQ(t.header.size(), 1u + 9u + 2u);
  EXPECT_EQ(t.header.front(), "t");
  EXPECT_EQ(t.header[9], "x8");
  EXPECT_EQ(t.header.back(), "dH");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].back(), 0.0);
}

TEST(Run, ItohAbeLongRunPreservesEnergy) {
  const RunRecord rec = run(parse_config(config("top_run_ia.json")));
  ASSERT_TRUE(rec.ok()) << *rec.error;
  EXPECT_EQ(rec.size(), 1001u);
  EXPECT_LE(rec.max_energy_error(), 1e-10);
}

TEST(Run, RerunsAreBitIdentical) {
  const TempDir dir;
  const ExperimentSpec s = parse_config_text(R"({"problem": "top", "method": "sia", "h": 0.5, "t_end": 50})");
  write_csv(dir.file("a.csv"), trajectory_table(run(s)));
  write_csv(dir.file("b.csv"), trajectory_table(run(s)));
  std::ifstream a(dir.file("a.csv"));
  std::ifstream b(dir.file("b.csv"));
  const std::string ta((std::istreambuf_iterator<char>(a)), {});
  const std::string tb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, tb);
}

TEST(Run, MethodIdsAndAdjoint) {
  MethodSettings s;
  for (const auto& id : method_ids()) EXPECT_EQ(make_method(id, s).name(), id);
  EXPECT_EQ(make_method("ia", s).gradient().center, CenterKind::left);
  EXPECT_EQ(make_method("mp", s).gradient().center, CenterKind::chordal_midpoint);
  s.adjoint = true;
  EXPECT_TRUE(make_method("ia", s).is_adjoint());
  EXPECT_EQ(make_method("ia", s).name(), "ia*");
  EXPECT_THROW(make_method("coll", s), ConfigError);
}

TEST(Drift, ColumnsPerMethodAndImplicitMidpointDrifts) {
  const DriftStudyResult res = drift_study(parse_config(config("top_drift.json")));
  const CsvTable t = res.table();
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "avf", "mp", "ia", "sia", "imp"}));
  EXPECT_EQ(t.rows.size(), 1001u);
  double worst_drg = 0.0;
  for (std::size_t i = 0; i < res.methods.size(); ++i) {
    ASSERT_TRUE(res.records[i].ok()) << res.methods[i];
    for (const auto& s : res.records[i].states) EXPECT_LE(manifold_defect(AnyProblem(SpinningTop()), s), 1e-12);
    if (res.methods[i] == "imp") continue;
    const double bound = res.methods[i] == "avf" ? 1e-9 : 1e-10;
    EXPECT_LE(res.max_drift(i), bound) << res.methods[i];
    worst_drg = std::max(worst_drg, res.max_drift(i));
  }
  EXPECT_GE(res.max_drift(4), 1e3 * worst_drg);
}

TEST(Drift, FailuresArePaddedWithNaN) {
  DriftStudyResult res;
  res.methods = {"a", "b"};
  RunRecord full;
  full.times = {0, 1, 2};
  full.energies = {1, 1, 1};
  full.states.resize(3);
  RunRecord cut = full;
  cut.times.resize(1);
  cut.energies.resize(1);
  cut.states.resize(1);
  cut.error = "stopped";
  res.records = {cut, full};
  const CsvTable t = res.table();
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[2][0], 2.0);
  EXPECT_TRUE(std::isnan(t.rows[2][1]));
  EXPECT_EQ(t.rows[2][2], 0.0);
}

TEST(Levels, CoarseItohAbeStaysOnTheFineLevelSet) {
  const auto trs = level_curve_study(parse_config_text(R"({"problem": "top", "t_end": 20})"));
  ASSERT_EQ(trs.size(), 10u);
  for (std::size_t i = 0; i < trs.size(); i += 2) {
    const RunRecord& coarse = trs[i].record;
    const RunRecord& fine = trs[i + 1].record;
    ASSERT_TRUE(coarse.ok() && fine.ok()) << trs[i].label;
    EXPECT_EQ(trs[i].label, "ic" + std::to_string(i / 2) + "_ia");
    EXPECT_EQ(coarse.size(), 21u);
    EXPECT_EQ(fine.size(), 2001u);
    for (double e : coarse.energies) EXPECT_NEAR(e, fine.energies.back(), 1e-8);
  }
}

TEST(Levels, SinglePointRun) {
  const auto trs = level_curve_study(
      parse_config_text(R"({"problem": "top", "t_end": 0, "initial_conditions": [[1, 1, 1]]})"));
  ASSERT_EQ(trs.size(), 2u);
  EXPECT_EQ(trs[0].record.size(), 1u);
  EXPECT_NEAR(trs[0].record.states[0](0), 1.0 / std::sqrt(3.0), 1e-15);
}

TEST(Levels, OnlyForTheTop) {
  EXPECT_THROW(level_curve_study(parse_config_text(R"({"problem": "chain"})")), ConfigError);
}

TEST(Cli, ExitCodes) {
  const TempDir dir;
  EXPECT_EQ(run_cli("run --config \"" + config("top_run_ia.json") + "\" --out \"" + dir.file("run.csv") + "\""), 0);
  const CsvTable t = read_csv(dir.file("run.csv"));
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "x0", "x1", "x2", "H", "dH"}));
  EXPECT_EQ(t.rows.size(), 1001u);

  const std::string order_cfg =
      dir.write("order.json", R"({"problem": "oscillator", "method": "mp", "t_end": 1, "h_list": [0.5, 0.25, 0.125]})");
  EXPECT_EQ(run_cli("order --config \"" + order_cfg + "\" --norm riemannian --out \"" + dir.file("o.csv") + "\""), 0);
  EXPECT_NEAR(std::stod(read_csv(dir.file("o.csv")).comment("slope")), 2.0, 0.2);

  const std::string levels_cfg = dir.write("levels.json", R"({"problem": "top", "t_end": 2, "initial_conditions": [[0, 0.6, 0.8]]})");
  EXPECT_EQ(run_cli("levels --config \"" + levels_cfg + "\" --out \"" + dir.file("lv.csv") + "\""), 0);
  EXPECT_TRUE(fs::exists(dir.file("lv_ic0_ia.csv")));
  EXPECT_TRUE(fs::exists(dir.file("lv_ic0_sia.csv")));

  const std::string bad = dir.write("bad.json", R"({"problem": "top", "colour": "red"})");
  EXPECT_EQ(run_cli("run --config \"" + bad + "\""), 2);
  EXPECT_EQ(run_cli("run --config \"" + dir.file("missing.json") + "\""), 2);
  EXPECT_EQ(run_cli("run"), 2);
  EXPECT_EQ(run_cli("run --config \"" + config("top_run_ia.json") + "\" --norm sup"), 2);

  const std::string stiff = dir.write("stiff.json", R"({"problem": "top", "method": "mp", "h": 1, "t_end": 3, "fp_max_iter": 1})");
  EXPECT_EQ(run_cli("run --config \"" + stiff + "\" --out \"" + dir.file("stiff.csv") + "\""), 1);
  EXPECT_EQ(read_csv(dir.file("stiff.csv")).rows.size(), 1u);

  const std::string ok = dir.write("ok.json", R"({"problem": "top", "t_end": 1})");
  EXPECT_EQ(run_cli("run --config \"" + ok + "\" --out /nonexistent/dir/run.csv"), 3);
}
