#pragma once

// Deterministic discrete-event model of an IaaS provider: compute, block and
// shared volumes, object buckets, public IP quota and a virtual clock.

#include "vre/catalog.hpp"
#include "vre/spec_model.hpp"
#include "vre/util.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vre::cloud {

struct ProviderProfile {
   std::string name;
   double vm_boot_s = 0;
   double api_call_s = 0;
   int api_parallelism = 1;
   double image_import_s = 0;
   /// Shared path to the package mirror, megabits/second.
   double uplink_bw_mbps = 1;
   int public_ip_quota = 0;
   std::map<std::string, Flavor> flavor_catalog;
   /// Optional throttling knee: batches of at least `knee_vms` VMs boot
   /// `knee_extra_boot_s` slower. Disabled when knee_vms == 0.
   int knee_vms = 0;
   double knee_extra_boot_s = 0;

   /// Boot duration for a VM created in a batch of `batch_vms`.
   double boot_s(int batch_vms) const;
   void validate() const;
   bool operator==(const ProviderProfile&) const = default;
};

enum class VmState { booting, configuring, ready, failed };
enum class BootImage { preprovisioned, vanilla };
enum class VolumeKind { block, shared_posix, object_bucket };

std::string_view to_string(VmState s);
std::string_view to_string(BootImage b);
std::string_view to_string(VolumeKind k);

struct VmRecord {
   std::string id;
   spec::ResourceDescriptor descriptor;
   Flavor flavor;
   Ipv4 private_ip;
   std::optional<Ipv4> public_ip;
   VmState state = VmState::booting;
   BootImage boot_image = BootImage::preprovisioned;
   /// Volume created together with the VM and released with it.
   std::optional<std::string> owned_volume;

   spec::Role role() const { return descriptor.role; }
};

struct VolumeRecord {
   std::string id;
   int size_gb = 0;
   VolumeKind kind = VolumeKind::block;
   /// Block volumes hold at most one entry.
   std::vector<std::string> attached;

   std::optional<std::string> attached_to() const {
      if (attached.empty()) return std::nullopt;
      return attached.front();
   }
};

struct BlobDescriptor {
   std::string bucket;
   std::string key;
   std::uint64_t size_bytes = 0;
   std::uint64_t version = 0;
   double committed_at = 0;

   bool operator==(const BlobDescriptor&) const = default;
};

enum class EventKind {
   api_call,
   image_imported,
   vm_created,
   vm_booted,
   vm_ready,
   vm_failed,
   vm_destroyed,
   volume_created,
   volume_attached,
   volume_detached,
   volume_deleted,
   download_done,
};

std::string_view to_string(EventKind k);

struct Event {
   double time = 0;
   std::uint64_t seq = 0;
   EventKind kind = EventKind::api_call;
   std::string subject;
   std::string detail;

   bool operator==(const Event&) const = default;
};

/// Everything needed to create one VM at a given point on the timeline.
struct ProvisionRequest {
   spec::ResourceDescriptor descriptor;
   spec::NodeSpec node;
   BootImage image = BootImage::preprovisioned;
   /// Time the create API call completes.
   double created_at = 0;
   double boot_duration = 0;
};

inline constexpr std::string_view preprovisioned_image = "vre-node-image";

class CloudState {
   public:
   explicit CloudState(ProviderProfile profile);

   const ProviderProfile& profile() const { return profile_; }
   double clock() const { return clock_; }

   /// Queues an event; `at` must not precede the clock. Returns its sequence number.
   std::uint64_t schedule(double at, EventKind kind, std::string subject, std::string detail = {});
   /// Fires all events with time <= t in (time, seq) order and moves the clock to t.
   std::vector<Event> advance_to(double t);
   /// Fires everything queued; the clock ends at the last event time.
   std::vector<Event> run_until_idle();
   bool idle() const { return queue_.empty(); }
   std::optional<double> next_event_time() const;

   // images
   bool image_cached(std::string_view image) const { return images_.count(std::string(image)) > 0; }
   /// Schedules an import starting at `start`; returns completion time. No-op if cached or pending.
   double import_image(std::string_view image, double start);
   std::optional<double> image_available_at(std::string_view image) const;

   // compute
   VmRecord& provision_vm(const ProvisionRequest& request);
   /// Schedules configuring -> ready for a VM at `at`.
   void schedule_ready(const std::string& vm, double at, std::string detail = {});
   /// Schedules a failure. Returns nullopt (and does nothing) if the VM already failed.
   std::optional<std::uint64_t> inject_failure(const std::string& vm, double at);
   void schedule_destroy(const std::string& vm, double at);
   const VmRecord& vm(const std::string& id) const;
   const std::map<std::string, VmRecord>& vms() const { return vms_; }
   /// Descriptors of every live (not destroyed) VM.
   std::vector<spec::ResourceDescriptor> inventory() const;

   // storage
   const VolumeRecord& create_volume(VolumeKind kind, int size_gb, std::optional<std::string> id = std::nullopt);
   const VolumeRecord& attach_volume(const std::string& vm, const std::string& volume);
   const VolumeRecord& detach_volume(const std::string& vm, const std::string& volume);
   void delete_volume(const std::string& volume);
   const VolumeRecord& volume(const std::string& id) const;
   const std::map<std::string, VolumeRecord>& volumes() const { return volumes_; }

   // object storage
   const VolumeRecord& create_bucket(const std::string& bucket);
   BlobDescriptor object_put(const std::string& bucket, const std::string& key, std::uint64_t size_bytes);
   BlobDescriptor object_get(const std::string& bucket, const std::string& key) const;

   // network
   const std::set<Ipv4>& public_ips() const { return public_ips_; }
   int public_ips_free() const { return profile_.public_ip_quota - int(public_ips_.size()); }

   const std::vector<Event>& event_log() const { return log_; }
   void clear_event_log() { log_.clear(); }

   friend void to_json(nlohmann::json& j, const CloudState& c);
   friend void from_json(const nlohmann::json& j, CloudState& c);
   CloudState() = default;

   private:
   void fire(const Event& e);
   VmRecord& vm_mut(const std::string& id);
   VolumeRecord& volume_mut(const std::string& id);

   ProviderProfile profile_;
   double clock_ = 0;
   std::uint64_t next_seq_ = 0;
   std::uint32_t next_private_ = 0;
   std::uint32_t next_public_ = 0;
   std::uint32_t next_volume_ = 0;
   std::uint64_t next_version_ = 0;
   std::map<std::string, VmRecord> vms_;
   std::map<std::string, VolumeRecord> volumes_;
   std::map<std::string, std::map<std::string, BlobDescriptor>> buckets_;
   std::set<Ipv4> public_ips_;
   std::set<std::string> images_;
   std::map<std::string, double> image_pending_;
   std::vector<Event> queue_;
   std::vector<Event> log_;
};

/// CSV `time_s,seq,kind,subject,detail`.
std::string event_log_csv(const std::vector<Event>& events);

}
