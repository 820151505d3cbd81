#pragma once

// Default timing and contention parameters, fitted against published
// endpoints by a small deterministic oracle and committed as a fixture.

#include "vre/deployer.hpp"
#include "vre/simcloud.hpp"
#include "vre/workloads.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vre::calib {

enum class Relation { equal, at_most, at_least };
std::string_view to_string(Relation r);

struct CalibrationTarget {
   std::string name;
   double target_value = 0;
   /// equal: allowed |achieved - target|. Bounds: allowed violation.
   double tolerance = 0;
   Relation relation = Relation::equal;
   std::string source;

   bool operator==(const CalibrationTarget&) const = default;
};

struct TargetOutcome {
   CalibrationTarget target;
   double achieved = 0;
   double residual = 0;
   std::string parameter;

   bool met() const { return residual <= target.tolerance; }
   bool operator==(const TargetOutcome&) const = default;
};

struct SearchRecord {
   std::string parameter;
   std::string method;  // "grid" or "closed_form"
   double lo = 0, hi = 0, step = 0;
   double chosen = 0;

   bool operator==(const SearchRecord&) const = default;
};

struct Provenance {
   int oracle_version = 1;
   std::vector<TargetOutcome> targets;
   std::vector<SearchRecord> searches;
   std::vector<std::string> free_defaults;
   std::vector<std::string> under_determined;

   bool operator==(const Provenance&) const = default;
};

struct WorkloadDefaults {
   double gamma = 0;
   int n_base = 10;
   double per_storage_bw_mbps = 1000;
   double strong_units = 100000;
   double weak_base_units = 25000;
   std::map<std::string, work::ToolProfile> tools;
   /// tool -> storage node count -> efficiency knee (largest N with speedup >= 0.9 N).
   std::map<std::string, std::map<int, int>> knees;

   bool operator==(const WorkloadDefaults&) const = default;
};

struct CalibrationFixture {
   std::string reference_provider = "openstack-sim";
   /// Timing part only; flavors and quota come from the built-in catalog.
   std::map<std::string, cloud::ProviderProfile> providers;
   deploy::StrategyParams decentralized;
   deploy::StrategyParams centralized;
   WorkloadDefaults workloads;
   Provenance provenance;

   /// Full profile (timings merged with the catalog). Throws ValidationError.
   cloud::ProviderProfile profile(std::string_view name) const;
   const deploy::StrategyParams& strategy(spec::Strategy kind) const;
   const work::ToolProfile& tool(std::string_view name) const;
   /// Strong-scaling plan for `tool` with the fixture's data size and bandwidth.
   work::RunPlan strong_plan(std::string_view tool, int storage_nodes) const;
   work::RunPlan weak_plan(std::string_view tool, int storage_nodes) const;

   bool operator==(const CalibrationFixture&) const = default;
};

inline constexpr double knee_threshold = 0.9;

std::vector<CalibrationTarget> default_targets();

/// Fits every parameter a target constrains, starting from the free defaults.
/// Throws ValidationError when a target is unknown or cannot be met.
CalibrationFixture calibrate(const std::vector<CalibrationTarget>& targets);

/// Value of a named target metric under `fixture`, from the closed-form models.
double metric(const CalibrationFixture& fixture, std::string_view target_name);

/// Re-evaluates every recorded target against the fixture's own parameters.
std::vector<TargetOutcome> plug_back(const CalibrationFixture& fixture);

/// Contention coefficient giving WSE(n) = wse relative to n_base.
double gamma_for_wse(double wse, int n_base, int n);

/// Steady-state (image cached) benchmark deploy time at k, with a fixed jitter factor.
double benchmark_time(const cloud::ProviderProfile& profile, const deploy::StrategyParams& params, int k, double jitter = 1.0);

std::string render_fixture(const CalibrationFixture& fixture);
CalibrationFixture parse_fixture(std::string_view document);

/// The committed fixture, compiled into the vre_fixture library.
std::string_view committed_fixture_text();
const CalibrationFixture& default_calibration();

}
