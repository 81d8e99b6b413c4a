// End-to-end checks of the command-line tool: artifact schemas, closed-form
// agreement on tiny configs, exit codes. Invoked by ctest with the binary
// path as argv[1].

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nlprecode/bussgang.hpp"
#include "nlprecode/channel.hpp"
#include "nlprecode/precoders.hpp"

namespace fs = std::filesystem;
using namespace nlprecode;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "[ok]  " : "[FAIL]", what.c_str());
  if (!ok) ++g_failures;
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_test <path-to-nlprecode>\n");
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path work = fs::temp_directory_path() / "nlprecode_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string w = work.string();

  // dataset generation round-trips through the loader
  check(run(bin + " gen-channels --M 8 --K 2 --n 40 --seed 3 --file " + w + "/ch.mmc --out " +
            w + "/gen") == 0,
        "gen-channels runs");
  const auto set = channel::load_channels(w + "/ch.mmc");
  check(set.M == 8 && set.K == 2 && set.samples.size() == 40 && set.seed == 3,
        "generated dataset header");
  const auto regen = channel::gen_rayleigh(8, 2, 40, 3);
  check(regen.samples[7] == set.samples[7], "dataset regenerates bit-for-bit from its seed");

  // eval on a linear PA matches the closed form for zero forcing
  {
    std::ofstream cfg(work / "lin.json");
    cfg << R"({"M":8,"K":2,"pa":{"kind":"linear"},"channels":{"test":")" << w
        << R"(/ch.mmc"}})";
  }
  check(run(bin + " eval --precoders zf --snr-db=0,10 --config " + w + "/lin.json --out " + w +
            "/eval") == 0,
        "eval runs");
  {
    const auto lines = lines_of(slurp(work / "eval" / "eval.csv"));
    check(lines.size() == 3 && lines[0] == "snr_db,precoder,sum_rate", "eval.csv schema");
    // recompute the closed form: SNIDR_k = alpha^2 / sigma^2
    double expected = 0.0;
    const double p_t = 8.0, sigma2 = p_t / std::pow(10.0, 10.0 / 10.0);
    for (const CMat& h : set.samples) {
      const auto wzf = precoders::zf(h, p_t);
      const double a2 = std::norm((h.transpose() * wzf.w)(0, 0));
      expected += 2.0 * std::log2(1.0 + a2 / sigma2);
    }
    expected /= static_cast<double>(set.samples.size());
    const double got = std::stod(lines[2].substr(lines[2].rfind(',') + 1));
    check(std::abs(got - expected) < 1e-4, "zero-forcing rate matches the closed form");
  }

  // manifest records the run
  check(slurp(work / "eval" / "manifest.json").find("config_hash") != std::string::npos,
        "manifest written with a config hash");

  // complexity report
  check(run(bin + " complexity --M 64 --K 4 --out " + w + "/cx") == 0, "complexity runs");
  {
    const std::string j = slurp(work / "cx" / "complexity.json");
    check(j.find("dab_over_gnn") != std::string::npos, "complexity JSON has the ratio");
    const auto pos = j.find("\"dab_over_gnn\": ");
    const double ratio = std::stod(j.substr(pos + 16));
    check(ratio >= 1e6, "iterative-benchmark-to-network ratio is at least 1e6");
  }

  // coefficient table dump
  check(run(bin + " pa dump-table --out " + w + "/table") == 0, "pa dump-table runs");
  {
    const auto lines = lines_of(slurp(work / "table" / "pa_table.csv"));
    check(lines.size() == 1 + 7 * 6, "pa_table.csv has 7 rows x 6 coefficients");
    check(lines[0] == "ibo_db,coeff,re,im", "pa_table.csv schema");
    bool found = false;
    for (const auto& l : lines)
      if (l.find("-3.0,beta3,-0.11114393,-0.0630816977") == 0) found = true;
    check(found, "table row for -3 dB beta3 is verbatim");
  }

  // radiation pattern artifact
  check(run(bin + " radiation --M 8 --precoder mrt --angles 150 --grid 30 --config /dev/null"
                  " --out " +
            w + "/rad") != 0,
        "radiation with an unreadable config fails");
  {
    std::ofstream cfg(work / "rad.json");
    cfg << R"({"M":8,"K":1,"pa":{"kind":"appendix11"},"ibo_db":-3.0})";
  }
  check(run(bin + " radiation --precoder mrt --angles 150 --grid 5 --config " + w +
            "/rad.json --out " + w + "/rad") == 0,
        "radiation runs");
  {
    const auto lines = lines_of(slurp(work / "rad" / "pattern_mrt.csv"));
    check(lines.size() == 1 + 37 && lines[0] == "theta_deg,p_lin_db,p_dist_db,p_sdr_db",
          "pattern CSV schema");
  }

  // error paths
  check(run(bin + " eval --precoders zf --snr-db=0 --out " + w + "/bad1") == 2,
        "missing dataset exits with the config code");
  {
    std::ofstream cfg(work / "broken.json");
    cfg << "{\n  \"M\": 8,\n  \"K\": oops\n}";
  }
  check(run(bin + " eval --config " + w + "/broken.json --out " + w + "/bad2") == 2,
        "malformed config exits with the config code");
  {
    // verify the message carries line/column information
    const std::string cmd = bin + " eval --config " + w + "/broken.json --out " + w +
                            "/bad2 2>" + w + "/err.txt";
    std::system(cmd.c_str());
    const std::string err = slurp(work / "err.txt");
    check(err.find("broken.json:3") != std::string::npos, "parse errors carry the line number");
  }
  check(run(bin + " eval --precoders nosuch --snr-db=0 --config " + w + "/lin.json --out " + w +
            "/bad3") == 2,
        "unknown precoder exits with the config code");

  std::printf("\n%s (%d failures)\n", g_failures == 0 ? "CLI TESTS PASSED" : "CLI TESTS FAILED",
              g_failures);
  fs::remove_all(work);
  return g_failures == 0 ? 0 : 1;
}
