// Acceptance runner: one line per criterion, nonzero exit if any fails.

#include "oracles.hpp"
#include "properties.hpp"

#include "vre/calibration.hpp"
#include "vre/catalog.hpp"
#include "vre/cli.hpp"
#include "vre/deployer.hpp"
#include "vre/edgenet.hpp"
#include "vre/spec_model.hpp"
#include "vre/util.hpp"
#include "vre/workloads.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <unistd.h>

using namespace vre;

namespace {

struct Outcome {
   bool pass = false;
   std::string detail;
};

const calib::CalibrationFixture& fixture() {
   return calib::default_calibration();
}

Outcome nipio_exactness() {
   struct Case {
      const char* fqdn;
      std::uint32_t expect;
   };
   const Case cases[] = {{"foo.10.0.0.1.nip.io", oracle::quad(10, 0, 0, 1)}, {"bar.10.0.0.2.nip.io", oracle::quad(10, 0, 0, 2)}};
   edge::DnsZone zone;
   for (const auto& c : cases) {
      auto direct = edge::resolve_nipio(c.fqdn);
      auto zoned = edge::resolve(zone, c.fqdn);
      if (direct.value() != c.expect || zoned.value() != c.expect)
         return {false, fmt::format("{} resolved to {} / {}", c.fqdn, direct.str(), zoned.str())};
   }
   return {true, "foo.10.0.0.1.nip.io -> 10.0.0.1, bar.10.0.0.2.nip.io -> 10.0.0.2"};
}

Outcome strategy_scaling() {
   const auto& fx = fixture();
   deploy::BenchmarkConfig cfg;
   cfg.scales = {1, 2, 4, 8};
   cfg.trials = 5;
   cfg.strategies = {fx.decentralized, fx.centralized};
   cfg.profile = fx.profile(fx.reference_provider);
   auto rows = deploy::run_scaling_benchmark(cfg);

   // times[strategy][non-master nodes] = all trials
   std::map<spec::Strategy, std::map<int, std::vector<double>>> times;
   for (const auto& r : rows) times[r.strategy][r.nodes_total].push_back(r.deploy_time_s);
   for (const auto& [s, by_n] : times)
      for (const auto& [n, ts] : by_n)
         if (ts.size() != 5) return {false, fmt::format("{} at {} nodes has {} trials", spec::to_string(s), n, ts.size())};

   // Every (trial at 2n, trial at n) pair, so the bound holds per trial and in the worst case.
   double dec_worst = 0, cen_worst = std::numeric_limits<double>::infinity();
   for (int n : {8, 16, 32}) {
      const auto& d_lo = times[spec::Strategy::decentralized][n];
      const auto& d_hi = times[spec::Strategy::decentralized][2 * n];
      const auto& c_lo = times[spec::Strategy::centralized][n];
      const auto& c_hi = times[spec::Strategy::centralized][2 * n];
      dec_worst = std::max(dec_worst, *std::max_element(d_hi.begin(), d_hi.end()) / *std::min_element(d_lo.begin(), d_lo.end()));
      cen_worst = std::min(cen_worst, *std::min_element(c_hi.begin(), c_hi.end()) / *std::max_element(c_lo.begin(), c_lo.end()));
   }
   auto mean = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / double(v.size());
   };
   const double ratio = mean(times[spec::Strategy::centralized][64]) / mean(times[spec::Strategy::decentralized][64]);
   double ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0;
   for (double c : times[spec::Strategy::centralized][64])
      for (double d : times[spec::Strategy::decentralized][64]) {
         ratio_lo = std::min(ratio_lo, c / d);
         ratio_hi = std::max(ratio_hi, c / d);
      }
   const bool ok = dec_worst <= 1.25 && cen_worst >= 1.7 && ratio_lo >= 8.0 && ratio_hi <= 16.0;
   return {ok, fmt::format("{}: worst decentralized doubling {:.4f} (<= 1.25), worst centralized doubling {:.4f} (>= 1.7), "
                           "centralized/decentralized at 64 = {:.3f} (trial pairs {:.3f}..{:.3f}, in [8,16])",
                           fx.reference_provider, dec_worst, cen_worst, ratio, ratio_lo, ratio_hi)};
}

Outcome image_cache() {
   const auto& fx = fixture();
   std::string detail;
   for (const auto& provider : known_providers()) {
      auto profile = fx.profile(provider);
      cloud::CloudState cloud(profile);
      auto spec = spec::default_benchmark_spec(1, provider);
      auto first = deploy::apply(spec::diff_spec({}, spec), cloud, fx.decentralized, 11);
      deploy::destroy(cloud);
      auto second = deploy::apply(spec::diff_spec(cloud.inventory(), spec), cloud, fx.decentralized, 11);
      const double gain = first.deploy_time_s - second.deploy_time_s;
      if (gain != profile.image_import_s)
         return {false, fmt::format("{}: second deploy faster by {} s, image import is {} s", provider, format_double(gain),
                                    format_double(profile.image_import_s))};
      detail += fmt::format("{}{} {}s", detail.empty() ? "" : ", ", provider, format_double(gain));
   }
   return {true, "gain equals image_import_s exactly: " + detail};
}

Outcome strong_scaling() {
   const auto& fx = fixture();
   const auto& catalog = builtin_catalog(fx.reference_provider);

   work::RunPlan ideal = fx.strong_plan("csi-like", 3);
   ideal.tool.io_bytes_per_unit = 0;
   ideal.tool.fixed_overhead_s = 0;
   auto small = work::benchmark_cluster(catalog, 8, 3);
   for (const auto& r : work::speedup_series(ideal, small, {1, 2, 4, 8}))
      if (r.speedup != double(r.vcpus)) return {false, fmt::format("io=0 speedup({}) = {}", r.vcpus, format_double(*r.speedup))};

   const int knee = fx.workloads.knees.at("csi-like").at(3);
   const int beyond = 2 * knee;
   auto plan = fx.strong_plan("csi-like", 3);
   auto cluster = work::benchmark_cluster(catalog, beyond, 3);
   std::vector<int> ns;
   for (int n = 1; n <= beyond; ++n) ns.push_back(n);
   for (const auto& r : work::speedup_series(plan, cluster, ns)) {
      const double s = *r.speedup, n = double(r.vcpus);
      if (r.vcpus <= knee && !(s >= 0.9 * n && s <= n * (1 + 1e-12)))
         return {false, fmt::format("speedup({}) = {:.3f} is not within 10% of linear below the knee {}", r.vcpus, s, knee)};
      if (r.vcpus > knee && !(s < n && s < 0.9 * n))
         return {false, fmt::format("speedup({}) = {:.3f} is not sublinear past the knee {}", r.vcpus, s, knee)};
   }
   const int k1 = work::efficiency_knee(fx.strong_plan("csi-like", 1));
   const int k5 = work::efficiency_knee(fx.strong_plan("csi-like", 5));
   const bool documented = k1 == fx.workloads.knees.at("csi-like").at(1) && k5 == fx.workloads.knees.at("csi-like").at(5) &&
                           work::efficiency_knee(plan) == knee;
   return {k1 < k5 && documented,
           fmt::format("io=0 speedup exact at 1,2,4,8; csi-like 3 storage within 10% up to N={} and sublinear to N={}; "
                       "knee 1 storage {} < 5 storage {}",
                       knee, beyond, k1, k5)};
}

Outcome weak_scaling() {
   const auto& fx = fixture();
   auto plan = fx.weak_plan("csi-like", 3);
   auto cluster = work::benchmark_cluster(builtin_catalog(fx.reference_provider), 40, 3);
   auto rows = work::wse_series(plan, cluster, {10, 20, 30, 40}, fx.workloads.n_base);
   std::string values;
   bool monotone = true;
   for (std::size_t i = 0; i < rows.size(); ++i) {
      values += fmt::format("{}WSE({})={:.4f}", i ? ", " : "", rows[i].vcpus, *rows[i].wse);
      if (i && *rows[i].wse > *rows[i - 1].wse) monotone = false;
   }
   const bool ok = rows.size() == 4 && *rows[0].wse == 1.0 && *rows[3].wse >= 0.78 && *rows[3].wse <= 0.88 && monotone;
   return {ok, values};
}

Outcome failure_convergence() {
   const auto base = props::convergence_base(fixture());
   const int trials = 1000;
   for (int i = 0; i < trials; ++i)
      if (auto v = props::failure_convergence_trial(base, mix_seed(6, std::uint64_t(i))); !v.empty())
         return {false, fmt::format("interleaving {}: {}", i, v)};
   return {true, fmt::format("{} interleavings, 0 violations", trials)};
}

int run_cli(std::vector<std::string> args, std::string& out) {
   args.insert(args.begin(), "vre");
   std::vector<const char*> argv;
   for (const auto& a : args) argv.push_back(a.c_str());
   std::ostringstream o, e;
   int rc = cli::run(int(argv.size()), argv.data(), o, e);
   out = o.str() + e.str();
   return rc;
}

Outcome idempotence() {
   const auto& fx = fixture();
   auto spec = spec::parse_spec("provider: gcp-sim\nseed: 7\nnodes:\n  service: 4\n  storage: 2\n  edge: 1\n");
   cloud::CloudState cloud(fx.profile(spec.provider));
   deploy::apply(spec::diff_spec({}, spec), cloud, fx.strategy(spec.strategy), spec.seed);
   if (!spec::diff_spec(cloud.inventory(), spec).empty()) return {false, "library plan after apply is not empty"};

   auto dir = std::filesystem::temp_directory_path() / fmt::format("vre-acceptance-{}", ::getpid());
   std::filesystem::remove_all(dir);
   std::string out;
   if (run_cli({"init", "openstack-sim", dir.string()}, out) != 0) return {false, "init failed: " + out};
   if (run_cli({"apply", dir.string()}, out) != 0) return {false, "apply failed: " + out};
   run_cli({"plan", dir.string()}, out);
   std::filesystem::remove_all(dir);
   if (out.find("No changes.") == std::string::npos) return {false, "plan after apply: " + out};

   std::string a, b;
   const std::vector<std::string> bench = {"--seed", "42", "bench", "deploy", "--trials", "5"};
   if (run_cli(bench, a) != 0 || run_cli(bench, b) != 0) return {false, "bench deploy failed: " + a};
   if (a != b) return {false, "benchmark CSV differs between two runs"};
   deploy::BenchmarkConfig cfg;
   cfg.scales = {1, 2, 4, 8};
   cfg.strategies = {fx.decentralized, fx.centralized};
   cfg.profile = fx.profile("openstack-sim");
   cfg.seed = 42;
   if (deploy::reports_csv(deploy::run_scaling_benchmark(cfg)) != deploy::reports_csv(deploy::run_scaling_benchmark_serial(cfg)))
      return {false, "parallel and serial benchmark CSV differ"};
   return {true, fmt::format("plan after apply empty (library and CLI); benchmark CSV byte-identical across runs ({} bytes, digest {})",
                             a.size(), digest_hex(a))};
}

Outcome safety() {
   const int sequences = 10000, steps = 60;
   for (int i = 0; i < sequences; ++i)
      if (auto v = props::safety_sequence(fixture(), mix_seed(8, std::uint64_t(i)), steps); !v.empty())
         return {false, fmt::format("sequence {}: {}", i, v)};
   return {true, fmt::format("{} random sequences of {} operations, 0 violations", sequences, steps)};
}

Outcome secret_hygiene() {
   const auto base = props::deploy_spec(props::five_service_spec(), fixture());
   std::mt19937_64 rng(9);
   const int trials = 1000;
   for (int i = 0; i < trials; ++i) {
      auto secret = props::random_secret(rng);
      if (auto v = props::secret_hygiene_trial(base, secret); !v.empty()) return {false, fmt::format("secret #{}: {}", i, v)};
   }
   return {true, fmt::format("{} random secrets, none emitted", trials)};
}

Outcome calibration_plug_back() {
   const auto fitted = calib::calibrate(calib::default_targets());
   const auto text = calib::render_fixture(fitted);
   if (text != calib::committed_fixture_text()) return {false, "refit does not reproduce the compiled-in fixture"};
   std::ifstream in(VRE_FIXTURE_PATH, std::ios::binary);
   std::stringstream disk;
   disk << in.rdbuf();
   if (disk.str() != text) return {false, std::string("refit does not reproduce ") + VRE_FIXTURE_PATH};
   for (const auto& o : calib::plug_back(fixture()))
      if (!o.met()) return {false, fmt::format("{} residual {} exceeds {}", o.target.name, o.residual, o.target.tolerance)};
   return {true, fmt::format("fixture reproduced bit-exactly ({} bytes); all {} targets met", text.size(),
                             fitted.provenance.targets.size())};
}

}

int main() {
   const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"nip.io resolution exactness", nipio_exactness},
      {"deployment-strategy scaling", strategy_scaling},
      {"image-cache effect", image_cache},
      {"strong scaling", strong_scaling},
      {"weak scaling", weak_scaling},
      {"orchestrator failure convergence", failure_convergence},
      {"plan/apply idempotence and determinism", idempotence},
      {"quota and capacity safety", safety},
      {"secret hygiene", secret_hygiene},
      {"calibration plug-back", calibration_plug_back},
   };
   int failed = 0;
   for (std::size_t i = 0; i < criteria.size(); ++i) {
      const auto start = std::chrono::steady_clock::now();
      Outcome o;
      try {
         o = criteria[i].second();
      } catch (const std::exception& e) {
         o = {false, std::string("exception: ") + e.what()};
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      failed += !o.pass;
      std::cout << fmt::format("[{:2}] {} {}: {} ({:.2f} s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail, secs)
                << std::flush;
   }
   std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - std::size_t(failed), criteria.size());
   return failed == 0 ? 0 : 1;
}
