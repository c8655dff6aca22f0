// Structural verification: each check exercises one discrete identity,
// conservation law, or analytic oracle and reports pass/fail with measured
// numbers. Fault-injection fixtures emulate two known bug classes inside the
// check wrappers (core operators stay untouched) to prove the checks can
// catch them.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace mst {

struct FaultInjection {
  bool flip_fp_sign = false;        // sign error in the drift-diffusion flux
  bool corrupt_quadrature = false;  // wrong weight on the first quadrature cell
};

struct CheckResult {
  std::string name;
  bool pass = false;
  nlohmann::json details;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
  std::string warning;

  nlohmann::json to_json() const;
};

// Registry order; run_verify preserves the order of the requested names.
const std::vector<std::string>& verify_check_names();

// Runs the named checks. Unknown names throw std::invalid_argument. An empty
// list produces an empty passing report with a warning.
VerifyReport run_verify(const std::vector<std::string>& checks,
                        std::uint64_t seed, const FaultInjection& inject = {});

}  // namespace mst
