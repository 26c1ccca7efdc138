// End-to-end tests of the qplab binary: exit codes, JSON payloads, cache
// behavior (second run does zero kernel work), determinism of serialized
// sweeps, and backend equality through the full stack.
//
// QPLAB_BIN is injected by the build; every test works in its own fresh
// scratch directory under /tmp.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

struct RunResult {
  int rc = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Runs the CLI with stderr captured to a side file.
RunResult run(const std::string& scratch, const std::string& args) {
  const std::string err_path = scratch + "/stderr.txt";
  const std::string cmd =
      std::string(QPLAB_BIN) + " " + args + " 2>" + err_path;
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

std::string make_scratch() {
  char tmpl[] = "/tmp/qplab_cli_XXXXXX";
  const char* dir = mkdtemp(tmpl);
  REQUIRE(dir != nullptr);
  return dir;
}

void write_config(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

// Small free-family config: exact oracles, fast numerics.
std::string free_config(const std::string& scratch) {
  const std::string path = scratch + "/exp.ini";
  write_config(path,
               "[family]\n"
               "potential = zero\n"
               "lambda = 0\n"
               "energy = 0\n"
               "frequency = golden\n"
               "[numerics]\n"
               "grid_n = 256\n"
               "le_steps = 100000\n"
               "bisect_tol = 1e-6\n"
               "[sweep]\n"
               "g0 = 1e-2\n"
               "ratio = 2\n"
               "count = 6\n"
               "[output]\n"
               "dir = " +
                   scratch + "/out\n");
  return path;
}

long long kernel_invocations(const std::string& stderr_text) {
  const auto pos = stderr_text.rfind("kernel_invocations=");
  REQUIRE(pos != std::string::npos);
  return std::atoll(stderr_text.c_str() + pos + 19);
}

}  // namespace

TEST_CASE("malformed config exits 1 and names the offending key") {
  const std::string scratch = make_scratch();
  const std::string path = scratch + "/bad.ini";
  write_config(path,
               "[family]\npotential = zero\n[numerics]\ngrid_n = 4\n");
  const RunResult r = run(scratch, "--config " + path + " edge");
  CHECK(r.rc == 1);
  CHECK(r.err.find("grid_n") != std::string::npos);

  write_config(path, "[family]\nunknown_key = 3\n");
  const RunResult s = run(scratch, "--config " + path + " edge");
  CHECK(s.rc == 1);
  CHECK(s.err.find("unknown_key") != std::string::npos);
}

TEST_CASE("le reproduces the free-family closed form through the CLI") {
  const std::string scratch = make_scratch();
  const std::string cfg = free_config(scratch);
  const RunResult r = run(scratch, "--config " + cfg + " le -t -3");
  CHECK(r.rc == 0);
  const auto doc = nlohmann::json::parse(r.out);
  // L = log((3 + sqrt(5))/2), dL/dt = -1/sqrt(5).
  CHECK(doc.at("L").get<double>() ==
        doctest::Approx(0.9624236501192069).epsilon(1e-10));
  CHECK(doc.at("L_method").get<std::string>() == "bundle_integral");
  CHECK(doc.at("dLdt").get<double>() ==
        doctest::Approx(-0.4472135954999579).epsilon(1e-8));
  CHECK(doc.at("agreement").get<double>() < 1e-6);
  CHECK(doc.at("estimates").at("norm_growth").at("L").get<double>() ==
        doctest::Approx(0.9624236501192069).epsilon(1e-6));
}

TEST_CASE("le at an elliptic parameter still reports norm growth, exit 2") {
  const std::string scratch = make_scratch();
  const std::string cfg = free_config(scratch);
  const RunResult r = run(scratch, "--config " + cfg + " le -t 0");
  CHECK(r.rc == 2);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("L_method").get<std::string>() == "norm_growth");
  CHECK(doc.at("estimates").at("bundle_integral").is_null());
  CHECK(doc.at("dLdt").is_null());
  CHECK(std::fabs(doc.at("L").get<double>()) < 1e-6);
}

TEST_CASE("edge finds t0 = -2 and the second run does zero kernel work") {
  const std::string scratch = make_scratch();
  const std::string cfg = free_config(scratch);
  const RunResult cold = run(scratch, "--config " + cfg + " edge");
  CHECK(cold.rc == 0);
  const auto doc = nlohmann::json::parse(cold.out);
  CHECK(std::fabs(doc.at("t0").get<double>() + 2.0) <= 2e-6);
  CHECK(doc.at("width").get<double>() <= 1e-6);
  CHECK(kernel_invocations(cold.err) > 0);

  const RunResult warm = run(scratch, "--config " + cfg + " edge");
  CHECK(warm.rc == 0);
  CHECK(warm.out == cold.out);
  CHECK(kernel_invocations(warm.err) == 0);
}

TEST_CASE("sweep is deterministic and cached; fit reuses the csv") {
  const std::string scratch = make_scratch();
  const std::string cfg = free_config(scratch);

  const RunResult first = run(scratch, "--config " + cfg + " sweep");
  CHECK(first.rc == 0);

  // The cache directory is out/<12 hex>/: find sweep.csv under it.
  std::string csv_path;
  {
    FILE* pipe =
        popen(("ls " + scratch + "/out/*/sweep.csv").c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 512> buf;
    if (fgets(buf.data(), buf.size(), pipe)) csv_path = buf.data();
    pclose(pipe);
    while (!csv_path.empty() &&
           (csv_path.back() == '\n' || csv_path.back() == '\r'))
      csv_path.pop_back();
  }
  REQUIRE(!csv_path.empty());
  const std::string csv_first = slurp(csv_path);
  CHECK(csv_first.rfind("t,gap,d_min,theta_c,L,", 0) == 0);

  // Warm rerun: summary reprinted byte-identically, zero kernel work.
  const RunResult warm = run(scratch, "--config " + cfg + " sweep");
  CHECK(warm.rc == 0);
  CHECK(warm.out == first.out);
  CHECK(kernel_invocations(warm.err) == 0);

  // Forced recompute reproduces the csv byte for byte.
  const RunResult redo = run(scratch, "--config " + cfg + " --no-cache sweep");
  CHECK(redo.rc == 0);
  CHECK(slurp(csv_path) == csv_first);

  // The summary carries the expected square-root laws.
  const auto doc = nlohmann::json::parse(first.out);
  CHECK(doc.at("fits").at("d_min").at("exponent").get<double>() ==
        doctest::Approx(0.5).epsilon(0.02));
  CHECK(doc.at("fits").at("holder").at("exponent").get<double>() ==
        doctest::Approx(0.5).epsilon(0.02));
  CHECK(doc.at("theorem_bound").at("ratio").get<double>() ==
        doctest::Approx(1.0).epsilon(0.05));

  // fit reuses the cached csv (no kernel work) and honors --l0.
  const RunResult refit = run(scratch, "--config " + cfg + " fit --l0 0");
  CHECK(refit.rc == 0);
  CHECK(kernel_invocations(refit.err) == 0);
  const auto refit_doc = nlohmann::json::parse(refit.out);
  CHECK(refit_doc.at("fits").at("holder").at("exponent").get<double>() ==
        doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("fit without a cached sweep exits 1 with guidance") {
  const std::string scratch = make_scratch();
  const std::string cfg = free_config(scratch);
  const RunResult r = run(scratch, "--config " + cfg + " fit");
  CHECK(r.rc == 1);
  CHECK(r.err.find("run sweep first") != std::string::npos);
}

TEST_CASE("scalar and auto backends produce identical bytes") {
  const std::string scratch = make_scratch();
  const std::string cfg = free_config(scratch);
  const RunResult a = run(scratch, "--config " + cfg + " le -t -2.263");
  const RunResult b =
      run(scratch, "--simd scalar --config " + cfg + " le -t -2.263");
  CHECK(a.rc == 0);
  CHECK(b.rc == 0);
  CHECK(a.out == b.out);

  const RunResult bogus =
      run(scratch, "--simd neon --config " + cfg + " le -t -2.263");
  CHECK(bogus.rc == 1);
  CHECK(bogus.err.find("neon") != std::string::npos);
}

TEST_CASE("verify writes a report through the CLI and exits 0") {
  const std::string scratch = make_scratch();
  const std::string cfg = free_config(scratch);
  const RunResult r = run(scratch, "--config " + cfg + " verify -t -2.01");
  CHECK(r.rc == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("t").get<double>() == doctest::Approx(-2.01));
  CHECK(doc.at("d_min").get<double>() ==
        doctest::Approx(0.2002498439450079).epsilon(1e-4));
  // The free difference field is flat in theta: the quadratic-dip and
  // growth clauses must be reported as violated, not papered over.
  bool saw_a2c = false;
  for (const auto& v : doc.at("violations"))
    if (v.at("clause").get<std::string>() == "A2c") saw_a2c = true;
  CHECK(saw_a2c);
}
