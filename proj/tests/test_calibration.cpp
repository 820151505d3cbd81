#include "oracles.hpp"

#include "vre/calibration.hpp"
#include "vre/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace vre;
using calib::CalibrationTarget;

namespace {

const calib::CalibrationFixture& fx() {
   return calib::default_calibration();
}

double oracle_bench(const calib::CalibrationFixture& f, std::string_view provider, spec::Strategy kind, int k, double jitter) {
   auto p = f.profile(provider);
   const auto& s = f.strategy(kind);
   return oracle::deploy_time(p, s.selfconfig_s, kind == spec::Strategy::centralized, s.push_rtt_s, s.tasks_per_node,
                              s.provisioner_serialize_s, s.parallelism_cap, s.vanilla_download_mb, 8 * k + 1, true, jitter);
}

CalibrationTarget find(const std::string& name) {
   for (const auto& t : calib::default_targets())
      if (t.name == name) return t;
   FAIL("no target " << name);
   return {};
}

}

TEST_SUITE("calibration") {

TEST_CASE("gamma inverts the weak-scaling endpoint") {
   CHECK(calib::gamma_for_wse(0.83, 10, 40) == doctest::Approx((1 / 0.83 - 1) / 30).epsilon(1e-15));
   CHECK(fx().workloads.gamma == doctest::Approx(6.83e-3).epsilon(1e-3));
   CHECK(1.0 / (1.0 + fx().workloads.gamma * 30) == doctest::Approx(0.83).epsilon(1e-12));
   CHECK(calib::gamma_for_wse(1.0, 10, 40) == 0.0);
}

TEST_CASE("targets are well formed") {
   std::set<std::string> names;
   for (const auto& t : calib::default_targets()) {
      CHECK(t.tolerance > 0);
      CHECK_FALSE(t.source.empty());
      CHECK(names.insert(t.name).second);
   }
   CHECK(names.size() == 6);
}

TEST_CASE("refit reproduces the committed fixture") {
   auto fitted = calib::calibrate(calib::default_targets());
   CHECK(calib::render_fixture(fitted) == calib::committed_fixture_text());
   CHECK(fitted == fx());
   CHECK(calib::parse_fixture(calib::render_fixture(fitted)) == fitted);
}

TEST_CASE("plug-back meets every tolerance") {
   auto outcomes = calib::plug_back(fx());
   REQUIRE(outcomes.size() == fx().provenance.targets.size());
   for (const auto& o : outcomes) {
      CHECK_MESSAGE(o.met(), o.target.name);
      CHECK(o.achieved == calib::metric(fx(), o.target.name));
   }
}

TEST_CASE("metrics agree with an independent evaluation of the timing model") {
   const double ratio = oracle_bench(fx(), "openstack-sim", spec::Strategy::centralized, 8, 1) /
                        oracle_bench(fx(), "openstack-sim", spec::Strategy::decentralized, 8, 1);
   CHECK(calib::metric(fx(), "centralized_over_decentralized_64") == doctest::Approx(ratio).epsilon(1e-6));
   CHECK(ratio >= 8);
   CHECK(ratio <= 16);

   const double eps = fx().centralized.jitter_epsilon;
   double cen_min = 1e9, dec_max = 0;
   for (int k : {1, 2, 4}) {
      cen_min = std::min(cen_min, oracle_bench(fx(), "openstack-sim", spec::Strategy::centralized, 2 * k, 1 - eps) /
                                      oracle_bench(fx(), "openstack-sim", spec::Strategy::centralized, k, 1 + eps));
      dec_max = std::max(dec_max, oracle_bench(fx(), "openstack-sim", spec::Strategy::decentralized, 2 * k, 1 + eps) /
                                      oracle_bench(fx(), "openstack-sim", spec::Strategy::decentralized, k, 1 - eps));
   }
   CHECK(calib::metric(fx(), "centralized_doubling_min") == doctest::Approx(cen_min).epsilon(1e-6));
   CHECK(calib::metric(fx(), "decentralized_doubling_max") == doctest::Approx(dec_max).epsilon(1e-6));
   CHECK(cen_min >= 1.7);
   CHECK(dec_max <= 1.25);

   const double aws = oracle_bench(fx(), "aws-sim", spec::Strategy::decentralized, 4, 1) /
                      oracle_bench(fx(), "aws-sim", spec::Strategy::decentralized, 2, 1);
   CHECK(calib::metric(fx(), "aws_knee_ratio_32") == doctest::Approx(aws).epsilon(1e-6));
   const double azure = oracle_bench(fx(), "azure-sim", spec::Strategy::decentralized, 8, 1) /
                        oracle_bench(fx(), "azure-sim", spec::Strategy::decentralized, 4, 1);
   CHECK(calib::metric(fx(), "azure_knee_ratio_64") == doctest::Approx(azure).epsilon(1e-6));
}

TEST_CASE("provider ordering") {
   // azure has the slowest constant; gcp and openstack scale best
   auto t = [&](std::string_view p, int k) { return oracle_bench(fx(), p, spec::Strategy::decentralized, k, 1); };
   for (const auto& p : {"aws-sim", "gcp-sim", "openstack-sim"}) CHECK(t("azure-sim", 1) > t(p, 1));
   for (const auto& p : {"aws-sim", "azure-sim"}) {
      CHECK(t("gcp-sim", 8) / t("gcp-sim", 1) < t(p, 8) / t(p, 1));
      CHECK(t("openstack-sim", 8) / t("openstack-sim", 1) < t(p, 8) / t(p, 1));
   }
}

TEST_CASE("a single target with one free parameter fits exactly") {
   auto f = calib::calibrate({find("wse_40")});
   REQUIRE(f.provenance.targets.size() == 1);
   CHECK(f.provenance.targets[0].residual <= 1e-12);
   CHECK(f.workloads.gamma == fx().workloads.gamma);
}

TEST_CASE("bad target sets are refused") {
   auto impossible = find("centralized_over_decentralized_64");
   impossible.target_value = 500;
   impossible.tolerance = 1;
   CHECK_THROWS_AS(calib::calibrate({impossible}), ValidationError);
   auto unknown = find("wse_40");
   unknown.name = "speed_of_light";
   CHECK_THROWS_AS(calib::calibrate({unknown}), ValidationError);
   auto zero = find("wse_40");
   zero.tolerance = 0;
   CHECK_THROWS_AS(calib::calibrate({zero}), ValidationError);
}

TEST_CASE("every fitted parameter is traceable") {
   std::set<std::string> fitted;
   for (const auto& s : fx().provenance.searches) {
      fitted.insert(s.parameter);
      if (s.method == "grid") {
         CHECK(s.chosen >= s.lo);
         CHECK(s.chosen <= s.hi);
         CHECK(s.step > 0);
      }
   }
   for (const auto& t : fx().provenance.targets) CHECK(fitted.count(t.parameter));
   CHECK(fitted.count("workloads.gamma"));
   CHECK(fitted.count("strategies.centralized.provisioner_serialize_s"));
   CHECK_FALSE(fx().provenance.free_defaults.empty());
   CHECK_FALSE(fx().provenance.under_determined.empty());
}

TEST_CASE("documented knees match the model") {
   for (const auto& [storage, knee] : fx().workloads.knees.at("csi-like"))
      CHECK(work::efficiency_knee(fx().strong_plan("csi-like", storage)) == knee);
}

TEST_CASE("fixture parsing is strict") {
   std::string text(calib::committed_fixture_text());
   CHECK_THROWS_AS(calib::parse_fixture(text + "surprise: 1\n"), ValidationError);
   CHECK_THROWS_AS(calib::parse_fixture("oracle_version: 1\n"), ValidationError);
   CHECK_THROWS_AS(fx().profile("nowhere-sim"), ValidationError);
   auto p = fx().profile("aws-sim");
   CHECK(p.public_ip_quota == builtin_catalog("aws-sim").public_ip_quota);
   CHECK(p.flavor_catalog.size() == builtin_catalog("aws-sim").flavors.size());
}

}
