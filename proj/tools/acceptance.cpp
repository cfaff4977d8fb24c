// Acceptance suite: criteria 1 to 12 on the reference problem, one line each.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "thinflow/lab.hpp"
#include "thinflow/parallel.hpp"

using namespace thinflow::lab;

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "acceptance";
  thinflow::set_thread_count(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  const auto cfg = reference_study();
  const auto tol = default_tolerances();
  ConvergenceReport report;
  report.tolerances = tol;
  report.config = {{"suite", "acceptance"}};
  for (const auto& stage : study_stages(cfg, tol)) {
    report.merge(stage.run());
    std::fflush(stdout);
  }
  report_emit(report, out / "report.json");

  int failed = 0;
  for (int k = 1; k <= 12; ++k) {
    const std::string id = "C" + std::to_string(k);
    const auto* c = report.find(id);
    if (!c) {
      std::cout << "FAIL " << id << "  not run\n";
      ++failed;
      continue;
    }
    const bool pass = c->verdict == Verdict::pass;
    failed += !pass;
    std::cout << (pass ? "PASS " : "FAIL ") << summary_line(*c) << "\n";
  }
  std::cout << "supporting checks:\n";
  for (const auto& c : report.criteria)
    if (c.id.size() > 3 || c.id[0] != 'C') std::cout << "  " << summary_line(c) << "\n";
  std::cout << (failed ? std::to_string(failed) + " of 12 criteria failed" : "all 12 criteria pass") << "\n";
  return failed ? 1 : 0;
}
