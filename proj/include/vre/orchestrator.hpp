#pragma once

// Miniature container orchestrator: worst-fit scheduling, replica groups with
// rescheduling on node failure, overlay addressing, service discovery,
// volume claims and secrets.

#include "vre/simcloud.hpp"
#include "vre/spec_model.hpp"
#include "vre/util.hpp"

#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vre::orch {

enum class ContainerKind { short_lived, long_running };
enum class ContainerState { pending, running, succeeded, failed };
using ClaimKind = cloud::VolumeKind;

std::string_view to_string(ContainerKind k);
std::string_view to_string(ContainerState s);
std::optional<ContainerKind> parse_container_kind(std::string_view text);
std::optional<ClaimKind> parse_claim_kind(std::string_view text);

inline constexpr double reschedule_delay_s = 10.0;
inline constexpr std::string_view redacted = "<redacted>";

struct NodeView {
   std::string id;
   spec::Role role = spec::Role::service;
   /// Picks the node's overlay subnet 10.244.<index>.0/24.
   int index = 0;
   int capacity_vcpus = 0;
   double allocated_vcpus = 0;
   bool healthy = true;
   bool schedulable = true;
   Ipv4 private_ip;
   std::optional<Ipv4> public_ip;

   double free_vcpus() const { return double(capacity_vcpus) - allocated_vcpus; }
};

struct ContainerRecord {
   std::string id;
   std::string image;
   double vcpus_request = 1;
   ContainerKind kind = ContainerKind::long_running;
   ContainerState state = ContainerState::pending;
   std::optional<std::string> node;
   std::optional<Ipv4> overlay_ip;
   std::optional<std::string> replica_group;
   std::vector<std::string> mounted_claims;
   std::vector<std::string> mounted_secrets;

   bool terminal() const { return state == ContainerState::succeeded || state == ContainerState::failed; }
};

struct ServiceRecord {
   std::string name;
   std::string selector;
   std::vector<Ipv4> endpoints;
   bool exposed = false;
};

struct ClaimRecord {
   std::string name;
   ClaimKind kind = ClaimKind::shared_posix;
   std::string backing_volume;
   int concurrent_mounts = 0;
};

struct ContainerSpec {
   std::string image;
   double vcpus = 1;
   ContainerKind kind = ContainerKind::long_running;
   std::optional<std::string> replica_group;
   std::vector<std::string> claims;
   std::optional<std::string> id;
};

struct Placement {
   enum class Outcome { placed, pending, refused };
   Outcome outcome = Outcome::pending;
   std::optional<std::string> node;
   std::optional<Ipv4> overlay_ip;
};

//---------------------------------------------------------------------------
struct GroupSpec {
   std::string name;
   std::string image;
   int replicas = 1;
   double vcpus = 1;
   ContainerKind kind = ContainerKind::long_running;
   bool expose = false;
   std::vector<std::string> claims;
   std::vector<std::string> secrets;
};

struct ClaimSpec {
   std::string name;
   ClaimKind kind = ClaimKind::shared_posix;
   int size_gb = 10;
};

/// Stand-in for a package-manager chart: named container groups plus the
/// claims and secrets they reference.
struct PackageManifest {
   std::vector<GroupSpec> groups;
   std::vector<ClaimSpec> claims;
   std::vector<std::string> secrets;
};

PackageManifest parse_manifest(std::string_view document);
void validate(const PackageManifest& manifest);

struct InstallResult {
   std::vector<std::string> containers;
   std::vector<std::string> services;
   std::vector<std::string> exposed_services;
   std::vector<std::string> claims;
};

/// Supplies bytes for a secret the cluster does not hold yet.
using SecretSource = std::function<std::string(const std::string& name)>;

enum class Origin { inside, outside };

//---------------------------------------------------------------------------
class ClusterState {
   public:
   explicit ClusterState(bool master_schedulable = false) : master_schedulable_(master_schedulable) {}

   double clock() const { return clock_; }
   bool master_schedulable() const { return master_schedulable_; }

   // nodes
   const NodeView& add_node(const std::string& id, spec::Role role, int capacity_vcpus, Ipv4 private_ip,
                            std::optional<Ipv4> public_ip = std::nullopt);
   /// Brings the node set in line with the cloud: adds ready VMs, drops destroyed ones, fails failed ones.
   void sync_nodes(const cloud::CloudState& cloud);
   /// Routes a fired cloud event (VM failure) into the orchestrator.
   void on_cloud_event(const cloud::Event& event);
   const std::map<std::string, NodeView>& nodes() const { return nodes_; }
   const NodeView& node(const std::string& id) const;

   // containers
   std::string create_container(const ContainerSpec& spec);
   /// Worst-fit placement of a pending container; stays pending if nothing fits.
   Placement schedule(const std::string& container);
   /// Ends a running container. Long-running containers can only fail.
   void complete(const std::string& container, bool success);
   const std::map<std::string, ContainerRecord>& containers() const { return containers_; }
   const ContainerRecord& container(const std::string& id) const;

   /// Marks `node` failed at `at`: members of replica groups go pending and are
   /// rescheduled at at + reschedule_delay_s; other running containers fail.
   void reschedule_on_failure(const std::string& node, double at);
   /// Processes due rescheduling attempts up to `t`.
   void advance_to(double t);
   std::optional<double> next_retry() const;

   /// Degraded: master down, or replica-group members left pending after a retry.
   bool degraded() const { return degraded_ || control_plane_down_; }
   bool control_plane_down() const { return control_plane_down_; }

   // services
   const std::map<std::string, ServiceRecord>& services() const { return services_; }
   void add_service(const std::string& name, const std::string& selector, bool exposed);
   /// Cluster-internal DNS; refuses queries from outside the overlay.
   std::vector<Ipv4> resolve_internal(const std::string& name, Origin origin = Origin::inside) const;
   std::map<std::string, std::vector<Ipv4>> dns_internal() const;

   // claims and secrets
   const std::map<std::string, ClaimRecord>& claims() const { return claims_; }
   void add_claim(const std::string& name, ClaimKind kind, const std::string& backing_volume);
   void put_secret(const std::string& name, std::string bytes);
   bool has_secret(const std::string& name) const { return secrets_.count(name) > 0; }
   std::vector<std::string> secret_names() const;
   const ContainerRecord& mount_secret(const std::string& container, const std::string& secret);

   /// Installs every group; on capacity exhaustion the cluster (and any volume it
   /// created in `cloud`) is restored and StateError is thrown.
   InstallResult install_package(const PackageManifest& manifest, cloud::CloudState* cloud, const SecretSource& secrets);

   double schedulable_free_vcpus() const;
   /// Deterministic JSON, sorted keys; secret bytes replaced with "<redacted>".
   nlohmann::json render() const;
   std::string render_text() const { return render().dump(2) + "\n"; }
   /// Inverse of render(); secret values must be re-supplied with put_secret.
   static ClusterState from_json(const nlohmann::json& j);

   /// Recomputes every invariant from scratch; returns the first violation or empty.
   std::string check_invariants() const;

   const std::vector<std::string>& log() const { return log_; }

   private:
   void refresh_endpoints();
   void place_pending();
   void release(ContainerRecord& c);
   std::optional<Ipv4> free_overlay_ip(const NodeView& node) const;
   bool claims_mountable(const ContainerRecord& c) const;
   void note(std::string kind, const std::string& subject, const std::string& detail = {});

   bool master_schedulable_ = false;
   double clock_ = 0;
   int next_node_index_ = 0;
   std::uint64_t next_container_ = 0;
   bool degraded_ = false;
   bool control_plane_down_ = false;
   std::map<std::string, NodeView> nodes_;
   std::map<std::string, ContainerRecord> containers_;
   std::map<std::string, ServiceRecord> services_;
   std::map<std::string, ClaimRecord> claims_;
   std::map<std::string, std::string> secrets_;
   std::set<double> retries_;
   std::vector<std::string> log_;
};

}
