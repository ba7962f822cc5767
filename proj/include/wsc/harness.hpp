#pragma once

#include <cstdint>
#include <iosfwd>

#include "wsc/sobolev.hpp"

namespace wsc {

struct CheckRecord {
  std::string name;       // theorem anchor
  std::string spec_id;
  std::vector<double> scales;
  double measured = 0;    // headline quantity (fraction or max error)
  double threshold = 0;
  bool pass = false;
  bool inconclusive = false;
  double unstable_mass_fraction = 0;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckRecord> records;
  std::uint64_t seed = 0;
  std::string environment;

  bool all_pass() const {
    for (auto& r : records)
      if (!r.inconclusive && !r.pass) return false;
    return true;
  }
};

struct HarnessThresholds {
  double containment_tol = 1e-6;
  double containment_mass = 0.99;
  double dim_drop_mass = 0.90;
  double tensor_fiber_dgr = 0.1;
  double tensor_fiber_mass = 0.95;
  double tensor_energy_rel = 0.10;
  double lip_tol = 5e-2;
  double lip_mass = 0.99;
  double divergence_tol = 1e-6;
  double divergence_refine_tol = 0.05;
  double tangency_mass = 0.95;
  double inconclusive_unstable = 0.10;
};

CheckRecord verify_T_leq_V(const MeasureSpec& spec, const SweepSchedule& schedule,
                           const HarnessThresholds& thr = {},
                           const std::string& spec_id = "spec");

CheckRecord verify_dim_drop(const MeasureSpec& spec, const SweepSchedule& schedule,
                            const HarnessThresholds& thr = {},
                            const std::string& spec_id = "spec");

std::vector<CheckRecord> verify_tensorization(const MeasureSpec& specA,
                                              const MeasureSpec& specB,
                                              const SweepSchedule& schedule,
                                              const std::vector<Expr>& f_family,
                                              const HarnessThresholds& thr = {},
                                              const std::string& spec_id = "product");

CheckRecord verify_lip_equality(const MeasureSpec& spec, const SweepSchedule& schedule,
                                const std::vector<Expr>& f_family,
                                const HarnessThresholds& thr = {},
                                const std::string& spec_id = "spec");

CheckRecord verify_divergence_tangency(const MeasureSpec& spec,
                                       const SweepSchedule& schedule, int trials,
                                       std::uint64_t seed,
                                       const HarnessThresholds& thr = {},
                                       const std::string& spec_id = "spec");

struct SuiteCase {
  std::string name;
  MeasureSpec spec;
  SweepSchedule schedule;
  // set for product cases so tensorisation can run against the factors
  std::optional<MeasureSpec> factor_a, factor_b;
};

struct SuiteConfig {
  std::vector<SuiteCase> cases;
  std::vector<std::string> f_family_text;  // parsed per case dimension
  std::uint64_t seed = 7;
  int divergence_trials = 8;
  HarnessThresholds thresholds;
};

SuiteConfig default_suite();
VerificationReport run_suite(const SuiteConfig& config);

std::vector<Expr> family_for_dim(const std::vector<std::string>& texts, int n);

void write_report_txt(const VerificationReport& rep, std::ostream& os);
void write_report_csv(const VerificationReport& rep, std::ostream& os);

}  // namespace wsc
