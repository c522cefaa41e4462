#pragma once

// The acceptance suite: ten end-to-end checks, each at its stated tolerance.

#include <functional>
#include <string>
#include <vector>

namespace oledmag {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    int threads = 0;
    std::vector<int> only;  // empty = all
};

int acceptance_criterion_count();
std::string acceptance_criterion_name(int id);

CriterionResult run_criterion(int id, const AcceptanceOptions& options);

// Runs the selected criteria in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace oledmag
