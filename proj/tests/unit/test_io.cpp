#include <gtest/gtest.h>

#include <hardyheat/io.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace hardyheat;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(HARDYHEAT_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string capture(const std::string& args) {
  const std::string file = testing::TempDir() + "/cli_capture.out";
  run(args + " --out " + file);
  std::ifstream in(file);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Io, NumberFormatting) {
  EXPECT_EQ(format_number(0.1, 17), "0.10000000000000001");
  EXPECT_EQ(format_number(2.0 / 3.0, 10), "0.6666666667");
  EXPECT_EQ(format_number(INFINITY, 17), "inf");
  EXPECT_EQ(format_number(-INFINITY, 10), "-inf");
  EXPECT_EQ(format_number(NAN, 17), "nan");
  const double x = 0.6366197723675814;
  EXPECT_EQ(std::stod(format_number(x, 17)), x);
}

TEST(Io, JsonDump) {
  Json j = {{"b", 0.1}, {"a", INFINITY}, {"c", {1.0, 2.5}}, {"n", 3}};
  const std::string s = dump_json(j);
  EXPECT_NE(s.find("\"a\": \"inf\""), std::string::npos);
  EXPECT_NE(s.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(s.find("[1, 2.5]"), std::string::npos);
  EXPECT_LT(s.find("\"a\""), s.find("\"b\""));
  EXPECT_EQ(Json::parse(s)["n"], 3);
}

TEST(Io, CsvTable) {
  CsvTable t{{"x", "n", "s"}, {{1.0 / 3.0, 7LL, std::string("ok")}}};
  std::ostringstream os;
  t.write(os);
  EXPECT_EQ(os.str(), "x,n,s\n0.3333333333,7,ok\n");
}

TEST(Io, CorpusRoundTrip) {
  const auto c = load_corpus(HARDYHEAT_DATA_DIR "/corpus_v1.json");
  ASSERT_EQ(c.size(), 20u);
  int g = 0, b = 0, p = 0;
  for (const auto& f : c) {
    g += f.kind == TestKind::Gaussian;
    b += f.kind == TestKind::RadialBump;
    p += f.kind == TestKind::Product;
  }
  EXPECT_EQ(g, 8);
  EXPECT_EQ(b, 8);
  EXPECT_EQ(p, 4);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.json"), DomainError);
}

TEST(Cli, KappaExamples) {
  const Json j = Json::parse(capture("kappa --d 3 --alpha 1 --beta 0.5"));
  EXPECT_EQ(j["schema"], 1);
  EXPECT_NEAR(j["kappa_beta"].get<double>(), 0.5, 1e-14);
  EXPECT_NE(capture("kappa --d 3 --alpha 1 --kappa-star --format csv").find("0.6366197724"), std::string::npos);
  const std::string curve = capture("kappa --d 3 --alpha 1 --curve 101 --format csv");
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 102);
}

TEST(Cli, SeriesAtZeroCouplingIsFreeKernel) {
  const Json j = Json::parse(capture("series --d 2 --alpha 1 --kappa 0 --t 1 --x 1,0 --y -1,0"));
  EXPECT_DOUBLE_EQ(j["series"]["sum"].get<double>(), cauchy_kernel(2, 1.0, 2.0));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("kappa --d 3 --alpha 1 --beta 0.5"), 0);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("kappa --bogus"), 2);
  EXPECT_EQ(run("nosuchcommand"), 2);
  EXPECT_EQ(run("kappa --d 2 --alpha 2.5"), 2);
  EXPECT_EQ(run("series --d 2 --alpha 1 --t 1 --x 1,0 --y 0,1"), 2);
  EXPECT_EQ(run("series --d 2 --alpha 1 --kappa 0.1 --delta 0.1 --t 1 --x 1,0 --y 0,1"), 2);
  EXPECT_EQ(run("series --d 2 --alpha 1 --kappa 0.1 --t 1 --x 1,0,0 --y 0,1"), 2);
  EXPECT_EQ(run("series --d 2 --alpha 1 --kappa supercritical:0.9 --t 1 --x 1,0 --y 0,1"), 2);
  EXPECT_EQ(run("verify --d 2 --alpha 1 --kappa supercritical:1.05 --suite bounds"), 2);
  EXPECT_EQ(run("verify --d 2 --alpha 1 --kappa 0.1 --suite chapman-kolmogorov"), 0);
}

TEST(Cli, BudgetFlushesPartialResults) {
  const std::string file = testing::TempDir() + "/budget.json";
  EXPECT_EQ(run("verify --d 2 --alpha 1 --kappa 0.1 --suite all --paths 2000 --budget 1e-6 --out " + file), 3);
  std::ifstream in(file);
  const Json j = Json::parse(in);
  EXPECT_EQ(j["complete"], false);
  EXPECT_EQ(j["status"], "budget-exceeded");
}

TEST(Cli, McCsvColumns) {
  const std::string s = capture("mc --d 2 --alpha 1 --kappa 0.1 --x 1,0 --paths 500 --format csv");
  EXPECT_EQ(s.substr(0, s.find('\n')), "mean,std_error,ess,capped_fraction,n_paths,n_steps,seed");
}
