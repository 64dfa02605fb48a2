// Acceptance suite: runs every criterion at the pinned tolerances and
// prints one pass/fail line per criterion.  Exit code 0 iff all pass.

#include <plurisym/harness.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>

int main()
{
    using namespace plurisym;
    RunConfig cfg;              // pinned defaults: n=1, l in {0.5,1,2}, 1e6 samples,
    cfg.seed = 20260811;        // corpus of 20, grid [-20,0] with 2001 nodes
    auto t0 = std::chrono::steady_clock::now();

    SuiteReport rep;
    try {
        rep = run_suite(cfg);
    } catch(const std::exception& e) {
        std::fprintf(stderr, "acceptance suite aborted: %s\n", e.what());
        return 1;
    }

    for(const auto& c : rep.criteria)
        std::printf("[%s] criterion %2d %-28s %s\n", c.pass ? "PASS" : "FAIL",
                    c.id, c.name.c_str(), c.detail.c_str());

    std::ofstream out("acceptance_report.json", std::ios::binary);
    out << rep.json.dump(2) << "\n";

    auto dt = std::chrono::duration_cast<std::chrono::seconds>(
        std::chrono::steady_clock::now() - t0).count();
    std::printf("%s (%llds, report in acceptance_report.json)\n",
                rep.all_pass ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED",
                static_cast<long long>(dt));
    return rep.all_pass ? 0 : 1;
}
