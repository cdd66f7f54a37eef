#pragma once

#include <string>
#include <vector>

/// Model invariants shared by the standalone property runner, the unit
/// tests and the acceptance binary.
namespace properties {

struct Outcome {
    std::string name;
    bool pass;
    /// Worst observed violation against its pinned limit.
    std::string detail;
};

Outcome lambda_normalization();
Outcome mixture_density_normalization();
Outcome sigma_mix_bounds();
Outcome put_call_parity();
Outcome price_monotone_convex();
Outcome flat_smile_degeneracy();
Outcome seed_determinism();

std::vector<Outcome> run_all();

}  // namespace properties
