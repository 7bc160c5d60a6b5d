// Command-line proof runner and explorer.
//
//   prove a525 --case 2          verify one numbered case
//   prove a47 --period 9         prove one period directly
//   prove all                    run every case of both systems
//   prove explore attractor --a 5.25 --out att.csv
//
// Certificates land in certs/ (override with --certs-dir).  Exit codes:
// 0 everything proved, 1 a proof failed, 2 bad invocation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rigor/rigor.hpp"

namespace {

struct Cli {
  std::string system;
  int case_no = 0;
  int period = 0;
  bool run_all = false;
  std::string kind;
  double a = 4.7;
  double a_min = 4.2, a_max = 5.8;
  int steps = 200;
  std::string out;
  std::string certs_dir = "certs";
  // global overrides
  int order = 0;
  double tol = 0;
  std::string grid;
  std::string representation;
  int jobs = 1;
};

rigor::RunOptions options_from(const Cli& cli) {
  rigor::RunOptions opt;
  if (cli.order > 0) opt.order = cli.order;
  if (cli.tol > 0) opt.tolerance = cli.tol;
  if (!cli.grid.empty()) {
    int w = 0, h = 0;
    if (std::sscanf(cli.grid.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1)
      throw rigor::UsageError("--grid expects WxH, e.g. 500x10");
    opt.grid = rigor::GridSpec{w, h};
  }
  if (!cli.representation.empty())
    opt.representation = rigor::representation_from_string(cli.representation);
  opt.jobs = cli.jobs;
  return opt;
}

std::string cert_path(const Cli& cli, const rigor::Certificate& c) {
  // "a525/1" -> certs/a525-case1.cert, "a47/period-9" -> certs/a47-period9.cert
  std::string name = c.id;
  auto slash = name.find('/');
  std::string system = name.substr(0, slash);
  std::string rest = name.substr(slash + 1);
  if (rest.rfind("period-", 0) == 0)
    name = system + "-period" + rest.substr(7);
  else
    name = system + "-case" + rest;
  return cli.certs_dir + "/" + name + ".cert";
}

int report(const Cli& cli, const std::vector<rigor::Certificate>& certs) {
  std::filesystem::create_directories(cli.certs_dir);
  bool all_proved = true;
  for (const auto& c : certs) {
    std::string path = cert_path(cli, c);
    rigor::write_certificate(path, c);
    std::printf("%-16s %s  %7.1fs  %s%s\n", c.id.c_str(), c.proved ? "proved" : "FAILED",
                c.duration_seconds, path.c_str(),
                c.failing_stage.empty() ? "" : ("  [" + c.failing_stage + "]").c_str());
    all_proved = all_proved && c.proved;
  }
  return all_proved ? 0 : 1;
}

int run_explore(const Cli& cli) {
  rigor::ExploreSettings s;
  std::ofstream out(cli.out);
  if (!out) throw rigor::UsageError("cannot open output file " + cli.out);
  rigor::CsvRows rows;
  std::string header;
  if (cli.kind == "bifurcation") {
    header = "a,y";
    rows = rigor::bifurcation_scan(cli.a_min, cli.a_max, cli.steps, s, &std::cerr);
  } else if (cli.kind == "attractor") {
    header = "y,z";
    rows = rigor::attractor_scan(cli.a, s, &std::cerr);
  } else if (cli.kind == "modelmap") {
    header = "y,y_next";
    rows = rigor::model_map_scan(cli.a, s, &std::cerr);
  } else {
    throw rigor::UsageError("unknown explore kind " + cli.kind);
  }
  rigor::write_csv(out, header, rows);
  std::fprintf(stderr, "explore: wrote %zu rows to %s\n", rows.size(), cli.out.c_str());
  return rows.empty() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  CLI::App app{"verified periodic-orbit proofs for a quadratic flow"};
  app.require_subcommand(1);

  app.add_option("--order", cli.order, "Taylor order override");
  app.add_option("--tol", cli.tol, "integration tolerance override");
  app.add_option("--grid", cli.grid, "main grid override, WxH");
  app.add_option("--representation", cli.representation,
                 "interval-hull | parallelepiped | doubleton");
  app.add_option("--jobs", cli.jobs, "worker threads");
  app.add_option("--certs-dir", cli.certs_dir, "certificate output directory");

  for (const char* sys : {"a525", "a47"}) {
    CLI::App* s = app.add_subcommand(sys, std::string("prove a case of ") + sys);
    auto* c = s->add_option("--case", cli.case_no, "case number");
    auto* p = s->add_option("--period", cli.period, "orbit period");
    c->excludes(p);
    s->callback([&cli, sys] { cli.system = sys; });
  }
  app.add_subcommand("all", "run every case of both systems")->callback([&cli] {
    cli.run_all = true;
  });
  CLI::App* ex = app.add_subcommand("explore", "emit non-validated figure data");
  ex->add_option("kind", cli.kind, "bifurcation | attractor | modelmap")->required();
  ex->add_option("--a", cli.a, "parameter value (attractor, modelmap)");
  ex->add_option("--a-min", cli.a_min, "parameter range start (bifurcation)");
  ex->add_option("--a-max", cli.a_max, "parameter range end (bifurcation)");
  ex->add_option("--steps", cli.steps, "parameter grid size (bifurcation)");
  ex->add_option("--out", cli.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cli.run_all) return report(cli, rigor::prove_all(options_from(cli)));
    if (!cli.kind.empty()) return run_explore(cli);
    rigor::RunOptions opt = options_from(cli);
    rigor::EdgeCache cache;
    opt.cache = &cache;
    std::vector<rigor::Certificate> certs;
    if (cli.period > 0)
      certs.push_back(rigor::prove_period(cli.system, cli.period, opt));
    else if (cli.case_no > 0)
      certs.push_back(rigor::run_case(cli.system, cli.case_no, opt));
    else
      throw rigor::UsageError("pick --case N or --period N");
    return report(cli, certs);
  } catch (const rigor::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
