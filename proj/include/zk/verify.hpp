#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "zk/experiments.hpp"

namespace zk {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string summary;                               // one line, human readable
    std::vector<std::pair<std::string, double>> metrics;
    double seconds = 0.0;
};

struct VerifyOptions {
    std::vector<int> only;              // empty: all criteria 1..11
    CollisionConfig collision;          // criteria 9 and 10
    StabilityConfig stability;
    std::function<void(const std::string&)> log;  // progress lines
};

// Per-criterion checks. Each one catches its own exceptions and reports them
// as a failure with the message in the summary.
CriterionResult check_ground_state(Lab& lab);
CriterionResult check_bessel(Lab& lab);
CriterionResult check_q_tail(Lab& lab);
CriterionResult check_interaction(Lab& lab);
CriterionResult check_ansatz(Lab& lab);
CriterionResult check_z_ode(Lab& lab);
CriterionResult check_linearized(Lab& lab);
CriterionResult check_evolution(Lab& lab);
// 9 and 10 share one collision run
std::pair<CriterionResult, CriterionResult> check_collision(Lab& lab, const CollisionConfig& cc,
                                                            const StabilityConfig& sc,
                                                            const std::function<void(const std::string&)>& log);
CriterionResult check_modulation(Lab& lab);

std::vector<CriterionResult> run_acceptance(Lab& lab, const VerifyOptions& opt);

// "[PASS] 4 interaction asymptotics: ..." style line
std::string format_line(const CriterionResult& r);

}  // namespace zk
