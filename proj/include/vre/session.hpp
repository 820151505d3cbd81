#pragma once

// A deployment directory on disk: the editable cluster.yaml, the applied
// state under .vre/, and user-provided secret files under secrets/.

#include "vre/calibration.hpp"
#include "vre/edgenet.hpp"
#include "vre/orchestrator.hpp"
#include "vre/simcloud.hpp"
#include "vre/spec_model.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace vre::cli {

namespace fs = std::filesystem;

struct LockRecord {
   std::string provider;
   std::uint64_t seed = 0;
   /// digest_hex of the state file written by the last successful apply.
   std::string digest;
};

/// Everything an applied cluster consists of.
struct Deployment {
   spec::ClusterSpec spec;
   cloud::CloudState cloud;
   orch::ClusterState cluster;
   edge::DnsZone zone;
   edge::RouteTable routes;
};

class DeployDirectory {
   public:
   explicit DeployDirectory(fs::path root) : root_(std::move(root)) {}

   /// Writes the commented template spec. Fails on a non-empty directory or unknown provider.
   static DeployDirectory init(std::string_view provider, const fs::path& root);

   const fs::path& root() const { return root_; }
   fs::path spec_path() const { return root_ / "cluster.yaml"; }
   fs::path state_dir() const { return root_ / ".vre"; }
   fs::path state_path() const { return state_dir() / "state.json"; }
   fs::path lock_path() const { return state_dir() / "lock.json"; }
   fs::path events_path() const { return state_dir() / "events.csv"; }
   fs::path apply_guard_path() const { return state_dir() / "apply.lock"; }
   fs::path secrets_dir() const { return root_ / "secrets"; }

   /// Throws StateError unless the directory holds a cluster.yaml.
   void require_initialized() const;
   spec::ClusterSpec read_spec() const;

   bool has_cluster() const { return fs::exists(state_path()); }
   std::optional<LockRecord> read_lock() const;

   /// Loads the applied cluster, checking the lock digest. Nullopt when nothing is applied.
   std::optional<Deployment> load(const calib::CalibrationFixture& fixture) const;
   /// Persists state, event log and lock (in that order, so a crash never leaves a stale lock).
   void save(const Deployment& d, std::uint64_t seed) const;
   /// Removes applied state; cluster.yaml and secrets stay.
   void clear() const;

   /// Reads secrets/<name>; throws ValidationError when absent.
   std::string read_secret(const std::string& name) const;

   private:
   fs::path root_;
};

/// Template spec text for `init`.
std::string template_spec(std::string_view provider);

/// Exclusive per-directory apply guard (created with O_EXCL, removed on destruction).
class ApplyGuard {
   public:
   explicit ApplyGuard(const DeployDirectory& dir);
   ~ApplyGuard();
   ApplyGuard(const ApplyGuard&) = delete;
   ApplyGuard& operator=(const ApplyGuard&) = delete;

   private:
   fs::path path_;
};

}
