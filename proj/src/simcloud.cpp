#include "vre/simcloud.hpp"

#include "vre/error.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace vre::cloud {

namespace {

// min-heap on (time, seq)
bool later(const Event& a, const Event& b) {
   return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
}

constexpr Ipv4 private_base = Ipv4::from_octets(10, 0, 0, 2);
constexpr Ipv4 public_base = Ipv4::from_octets(198, 18, 0, 1);

}

double ProviderProfile::boot_s(int batch_vms) const {
   if (knee_vms > 0 && batch_vms >= knee_vms) return vm_boot_s + knee_extra_boot_s;
   return vm_boot_s;
}

void ProviderProfile::validate() const {
   if (vm_boot_s < 0 || api_call_s < 0 || image_import_s < 0 || knee_extra_boot_s < 0)
      throw ValidationError("provider profile '" + name + "': times must be non-negative");
   if (api_parallelism < 1) throw ValidationError("provider profile '" + name + "': api_parallelism must be >= 1");
   if (!(uplink_bw_mbps > 0)) throw ValidationError("provider profile '" + name + "': uplink bandwidth must be positive");
   if (public_ip_quota < 0) throw ValidationError("provider profile '" + name + "': negative IP quota");
}

std::string_view to_string(VmState s) {
   switch (s) {
      case VmState::booting: return "booting";
      case VmState::configuring: return "configuring";
      case VmState::ready: return "ready";
      case VmState::failed: return "failed";
   }
   return "?";
}

std::string_view to_string(BootImage b) {
   return b == BootImage::preprovisioned ? "preprovisioned" : "vanilla";
}

std::string_view to_string(VolumeKind k) {
   switch (k) {
      case VolumeKind::block: return "block";
      case VolumeKind::shared_posix: return "shared_posix";
      case VolumeKind::object_bucket: return "object_bucket";
   }
   return "?";
}

std::string_view to_string(EventKind k) {
   switch (k) {
      case EventKind::api_call: return "api_call";
      case EventKind::image_imported: return "image_imported";
      case EventKind::vm_created: return "vm_created";
      case EventKind::vm_booted: return "vm_booted";
      case EventKind::vm_ready: return "vm_ready";
      case EventKind::vm_failed: return "vm_failed";
      case EventKind::vm_destroyed: return "vm_destroyed";
      case EventKind::volume_created: return "volume_created";
      case EventKind::volume_attached: return "volume_attached";
      case EventKind::volume_detached: return "volume_detached";
      case EventKind::volume_deleted: return "volume_deleted";
      case EventKind::download_done: return "download_done";
   }
   return "?";
}

CloudState::CloudState(ProviderProfile profile) : profile_(std::move(profile)) {
   profile_.validate();
}

std::uint64_t CloudState::schedule(double at, EventKind kind, std::string subject, std::string detail) {
   if (at < clock_) throw CloudError(fmt::format("cannot schedule {} at {} before clock {}", to_string(kind), at, clock_));
   Event e{at, next_seq_++, kind, std::move(subject), std::move(detail)};
   queue_.push_back(std::move(e));
   std::push_heap(queue_.begin(), queue_.end(), later);
   return queue_.back().seq;
}

std::optional<double> CloudState::next_event_time() const {
   if (queue_.empty()) return std::nullopt;
   return queue_.front().time;
}

std::vector<Event> CloudState::advance_to(double t) {
   if (t < clock_) throw CloudError(fmt::format("time regression: advance_to({}) with clock at {}", t, clock_));
   std::vector<Event> fired;
   while (!queue_.empty() && queue_.front().time <= t) {
      std::pop_heap(queue_.begin(), queue_.end(), later);
      Event e = std::move(queue_.back());
      queue_.pop_back();
      clock_ = e.time;
      fire(e);
      log_.push_back(e);
      fired.push_back(std::move(e));
   }
   clock_ = t;
   return fired;
}

std::vector<Event> CloudState::run_until_idle() {
   std::vector<Event> fired;
   while (auto next = next_event_time()) {
      auto batch = advance_to(*next);
      fired.insert(fired.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
   }
   return fired;
}

void CloudState::fire(const Event& e) {
   switch (e.kind) {
      case EventKind::image_imported:
         images_.insert(e.subject);
         image_pending_.erase(e.subject);
         break;
      case EventKind::vm_booted:
         if (auto it = vms_.find(e.subject); it != vms_.end() && it->second.state == VmState::booting)
            it->second.state = VmState::configuring;
         break;
      case EventKind::vm_ready:
         if (auto it = vms_.find(e.subject); it != vms_.end() && it->second.state != VmState::failed)
            it->second.state = VmState::ready;
         break;
      case EventKind::vm_failed:
         if (auto it = vms_.find(e.subject); it != vms_.end()) it->second.state = VmState::failed;
         break;
      case EventKind::vm_destroyed: {
         auto it = vms_.find(e.subject);
         if (it == vms_.end()) break;
         if (it->second.public_ip) public_ips_.erase(*it->second.public_ip);
         for (auto& [id, vol] : volumes_) std::erase(vol.attached, e.subject);
         if (it->second.owned_volume) volumes_.erase(*it->second.owned_volume);
         vms_.erase(it);
         break;
      }
      default: break;
   }
}

double CloudState::import_image(std::string_view image, double start) {
   std::string name(image);
   if (images_.count(name)) return start;
   if (auto it = image_pending_.find(name); it != image_pending_.end()) return it->second;
   double done = start + quantize_time(profile_.image_import_s);
   image_pending_[name] = done;
   schedule(done, EventKind::image_imported, name);
   return done;
}

std::optional<double> CloudState::image_available_at(std::string_view image) const {
   if (images_.count(std::string(image))) return clock_;
   if (auto it = image_pending_.find(std::string(image)); it != image_pending_.end()) return it->second;
   return std::nullopt;
}

VmRecord& CloudState::provision_vm(const ProvisionRequest& request) {
   const auto& d = request.descriptor;
   auto flavor = profile_.flavor_catalog.find(request.node.flavor.name);
   if (flavor == profile_.flavor_catalog.end())
      throw CloudError("unknown flavor '" + request.node.flavor.name + "' on provider '" + profile_.name + "'");
   if (vms_.count(d.name)) throw CloudError("VM '" + d.name + "' already exists");
   if (request.created_at < clock_) throw CloudError("VM '" + d.name + "' created in the past");
   if (request.image == BootImage::preprovisioned) {
      auto available = image_available_at(preprovisioned_image);
      if (!available || *available > request.created_at)
         throw CloudError("image '" + std::string(preprovisioned_image) + "' not imported before creating '" + d.name + "'");
   }
   if (request.node.public_ip_required && public_ips_free() <= 0)
      throw CloudError(fmt::format("public IP quota exceeded (quota {}) while creating '{}'", profile_.public_ip_quota, d.name));
   if (next_private_ >= 65534 - 2) throw CloudError("private address space 10.0.0.0/16 exhausted");

   VmRecord vm;
   vm.id = d.name;
   vm.descriptor = d;
   vm.flavor = flavor->second;
   vm.private_ip = Ipv4(private_base.value() + next_private_++);
   if (request.node.public_ip_required) {
      vm.public_ip = Ipv4(public_base.value() + next_public_++);
      public_ips_.insert(*vm.public_ip);
   }
   vm.boot_image = request.image;
   vm.state = VmState::booting;
   auto& stored = vms_[vm.id] = std::move(vm);

   schedule(request.created_at, EventKind::vm_created, stored.id, std::string(to_string(request.image)));
   schedule(request.created_at + request.boot_duration, EventKind::vm_booted, stored.id);
   if (request.node.block_volume_gb > 0) {
      auto volume_id = "volume-" + stored.id;
      auto& vol = volumes_[volume_id];
      vol.id = volume_id;
      vol.size_gb = request.node.block_volume_gb;
      vol.kind = VolumeKind::block;
      vol.attached = {stored.id};
      stored.owned_volume = volume_id;
      schedule(request.created_at, EventKind::volume_created, volume_id, "block");
      schedule(request.created_at + quantize_time(profile_.api_call_s), EventKind::volume_attached, volume_id, stored.id);
   }
   return stored;
}

void CloudState::schedule_ready(const std::string& vm, double at, std::string detail) {
   vm_mut(vm);
   schedule(at, EventKind::vm_ready, vm, std::move(detail));
}

std::optional<std::uint64_t> CloudState::inject_failure(const std::string& vm, double at) {
   auto& record = vm_mut(vm);
   if (record.state == VmState::failed) return std::nullopt;
   if (record.state != VmState::ready) throw CloudError("cannot fail VM '" + vm + "' before it is ready");
   return schedule(at, EventKind::vm_failed, vm, "injected");
}

void CloudState::schedule_destroy(const std::string& vm, double at) {
   vm_mut(vm);
   schedule(at, EventKind::vm_destroyed, vm);
}

const VmRecord& CloudState::vm(const std::string& id) const {
   auto it = vms_.find(id);
   if (it == vms_.end()) throw CloudError("unknown VM '" + id + "'");
   return it->second;
}

VmRecord& CloudState::vm_mut(const std::string& id) {
   auto it = vms_.find(id);
   if (it == vms_.end()) throw CloudError("unknown VM '" + id + "'");
   return it->second;
}

std::vector<spec::ResourceDescriptor> CloudState::inventory() const {
   std::vector<spec::ResourceDescriptor> out;
   for (const auto& [id, vm] : vms_) out.push_back(vm.descriptor);
   return out;
}

const VolumeRecord& CloudState::create_volume(VolumeKind kind, int size_gb, std::optional<std::string> id) {
   std::string name = id ? *id : indexed_name("vol", int(next_volume_++));
   if (volumes_.count(name)) throw CloudError("volume '" + name + "' already exists");
   if (size_gb < 0) throw CloudError("negative volume size");
   auto& vol = volumes_[name];
   vol.id = name;
   vol.size_gb = size_gb;
   vol.kind = kind;
   schedule(clock_ + quantize_time(profile_.api_call_s), EventKind::volume_created, name, std::string(to_string(kind)));
   return vol;
}

const VolumeRecord& CloudState::attach_volume(const std::string& vm, const std::string& volume) {
   const auto& record = this->vm(vm);
   auto& vol = volume_mut(volume);
   if (vol.kind == VolumeKind::block && !vol.attached.empty())
      throw CloudError("block volume '" + volume + "' is already attached to '" + vol.attached.front() + "'");
   if (std::find(vol.attached.begin(), vol.attached.end(), record.id) != vol.attached.end())
      throw CloudError("volume '" + volume + "' is already attached to '" + vm + "'");
   vol.attached.push_back(record.id);
   schedule(clock_ + quantize_time(profile_.api_call_s), EventKind::volume_attached, volume, vm);
   return vol;
}

const VolumeRecord& CloudState::detach_volume(const std::string& vm, const std::string& volume) {
   auto& vol = volume_mut(volume);
   auto it = std::find(vol.attached.begin(), vol.attached.end(), vm);
   if (it == vol.attached.end()) throw CloudError("volume '" + volume + "' is not attached to '" + vm + "'");
   vol.attached.erase(it);
   schedule(clock_ + quantize_time(profile_.api_call_s), EventKind::volume_detached, volume, vm);
   return vol;
}

void CloudState::delete_volume(const std::string& volume) {
   volume_mut(volume);
   volumes_.erase(volume);
   buckets_.erase(volume);
   schedule(clock_ + quantize_time(profile_.api_call_s), EventKind::volume_deleted, volume);
}

const VolumeRecord& CloudState::volume(const std::string& id) const {
   auto it = volumes_.find(id);
   if (it == volumes_.end()) throw CloudError("unknown volume '" + id + "'");
   return it->second;
}

VolumeRecord& CloudState::volume_mut(const std::string& id) {
   auto it = volumes_.find(id);
   if (it == volumes_.end()) throw CloudError("unknown volume '" + id + "'");
   return it->second;
}

const VolumeRecord& CloudState::create_bucket(const std::string& bucket) {
   const auto& vol = create_volume(VolumeKind::object_bucket, 0, bucket);
   buckets_[bucket];
   return vol;
}

BlobDescriptor CloudState::object_put(const std::string& bucket, const std::string& key, std::uint64_t size_bytes) {
   auto it = buckets_.find(bucket);
   if (it == buckets_.end()) throw CloudError("unknown bucket '" + bucket + "'");
   BlobDescriptor blob{bucket, key, size_bytes, ++next_version_, clock_};
   it->second[key] = blob;
   return blob;
}

BlobDescriptor CloudState::object_get(const std::string& bucket, const std::string& key) const {
   auto it = buckets_.find(bucket);
   if (it == buckets_.end()) throw CloudError("unknown bucket '" + bucket + "'");
   auto blob = it->second.find(key);
   if (blob == it->second.end()) throw CloudError("object '" + key + "' not found in bucket '" + bucket + "'");
   return blob->second;
}

std::string event_log_csv(const std::vector<Event>& events) {
   std::string out = "time_s,seq,kind,subject,detail\n";
   for (const auto& e : events)
      out += fmt::format("{},{},{},{},{}\n", format_double(e.time), e.seq, to_string(e.kind), e.subject, e.detail);
   return out;
}

//---------------------------------------------------------------------------
// persistence
//---------------------------------------------------------------------------
namespace {

template <typename Enum>
Enum enum_from(const std::string& text, std::initializer_list<Enum> values) {
   for (auto v : values)
      if (to_string(v) == text) return v;
   throw StateError("corrupt state: unknown enum value '" + text + "'");
}

}

void to_json(nlohmann::json& j, const CloudState& c) {
   using nlohmann::json;
   json vms = json::object();
   for (const auto& [id, vm] : c.vms_) {
      json v;
      v["role"] = spec::to_string(vm.descriptor.role);
      v["index"] = vm.descriptor.index;
      v["flavor"] = vm.flavor.name;
      v["public_ip_required"] = vm.descriptor.public_ip;
      v["volume_gb"] = vm.descriptor.volume_gb;
      v["private_ip"] = vm.private_ip.str();
      v["public_ip"] = vm.public_ip ? json(vm.public_ip->str()) : json(nullptr);
      v["state"] = to_string(vm.state);
      v["boot_image"] = to_string(vm.boot_image);
      v["owned_volume"] = vm.owned_volume ? json(*vm.owned_volume) : json(nullptr);
      vms[id] = v;
   }
   json volumes = json::object();
   for (const auto& [id, vol] : c.volumes_) volumes[id] = {{"size_gb", vol.size_gb}, {"kind", to_string(vol.kind)}, {"attached", vol.attached}};
   json buckets = json::object();
   for (const auto& [name, objects] : c.buckets_) {
      json b = json::object();
      for (const auto& [key, blob] : objects)
         b[key] = {{"size_bytes", blob.size_bytes}, {"version", blob.version}, {"committed_at", blob.committed_at}};
      buckets[name] = b;
   }
   json queue = json::array();
   for (const auto& e : c.queue_) queue.push_back({e.time, e.seq, to_string(e.kind), e.subject, e.detail});
   std::vector<std::string> ips;
   for (auto ip : c.public_ips_) ips.push_back(ip.str());
   j = json{{"provider", c.profile_.name},
            {"clock_s", c.clock_},
            {"next_seq", c.next_seq_},
            {"next_private", c.next_private_},
            {"next_public", c.next_public_},
            {"next_volume", c.next_volume_},
            {"next_version", c.next_version_},
            {"vms", vms},
            {"volumes", volumes},
            {"buckets", buckets},
            {"public_ips", ips},
            {"images", c.images_},
            {"image_pending", c.image_pending_},
            {"queue", queue}};
}

void from_json(const nlohmann::json& j, CloudState& c) {
   try {
      c.clock_ = j.at("clock_s").get<double>();
      c.next_seq_ = j.at("next_seq").get<std::uint64_t>();
      c.next_private_ = j.at("next_private").get<std::uint32_t>();
      c.next_public_ = j.at("next_public").get<std::uint32_t>();
      c.next_volume_ = j.at("next_volume").get<std::uint32_t>();
      c.next_version_ = j.at("next_version").get<std::uint64_t>();
      c.vms_.clear();
      for (const auto& [id, v] : j.at("vms").items()) {
         VmRecord vm;
         vm.id = id;
         auto role = spec::parse_role(v.at("role").get<std::string>());
         if (!role) throw StateError("corrupt state: bad role for '" + id + "'");
         vm.descriptor = {id, *role, v.at("index").get<int>(), v.at("flavor").get<std::string>(),
                          v.at("public_ip_required").get<bool>(), v.at("volume_gb").get<int>()};
         auto flavor = c.profile_.flavor_catalog.find(vm.descriptor.flavor);
         if (flavor == c.profile_.flavor_catalog.end()) throw StateError("corrupt state: unknown flavor for '" + id + "'");
         vm.flavor = flavor->second;
         auto ip = Ipv4::parse(v.at("private_ip").get<std::string>());
         if (!ip) throw StateError("corrupt state: bad private ip for '" + id + "'");
         vm.private_ip = *ip;
         if (!v.at("public_ip").is_null()) vm.public_ip = Ipv4::parse(v.at("public_ip").get<std::string>());
         vm.state = enum_from(v.at("state").get<std::string>(),
                              {VmState::booting, VmState::configuring, VmState::ready, VmState::failed});
         vm.boot_image = enum_from(v.at("boot_image").get<std::string>(), {BootImage::preprovisioned, BootImage::vanilla});
         if (!v.at("owned_volume").is_null()) vm.owned_volume = v.at("owned_volume").get<std::string>();
         c.vms_[id] = std::move(vm);
      }
      c.volumes_.clear();
      for (const auto& [id, v] : j.at("volumes").items()) {
         VolumeRecord vol;
         vol.id = id;
         vol.size_gb = v.at("size_gb").get<int>();
         vol.kind = enum_from(v.at("kind").get<std::string>(), {VolumeKind::block, VolumeKind::shared_posix, VolumeKind::object_bucket});
         vol.attached = v.at("attached").get<std::vector<std::string>>();
         c.volumes_[id] = std::move(vol);
      }
      c.buckets_.clear();
      for (const auto& [name, objects] : j.at("buckets").items()) {
         auto& b = c.buckets_[name];
         for (const auto& [key, o] : objects.items())
            b[key] = {name, key, o.at("size_bytes").get<std::uint64_t>(), o.at("version").get<std::uint64_t>(),
                      o.at("committed_at").get<double>()};
      }
      c.queue_.clear();
      for (const auto& e : j.at("queue")) {
         auto kind = enum_from(e.at(2).get<std::string>(),
                               {EventKind::api_call, EventKind::image_imported, EventKind::vm_created, EventKind::vm_booted,
                                EventKind::vm_ready, EventKind::vm_failed, EventKind::vm_destroyed, EventKind::volume_created,
                                EventKind::volume_attached, EventKind::volume_detached, EventKind::volume_deleted,
                                EventKind::download_done});
         c.queue_.push_back({e.at(0).get<double>(), e.at(1).get<std::uint64_t>(), kind, e.at(3).get<std::string>(),
                             e.at(4).get<std::string>()});
      }
      std::make_heap(c.queue_.begin(), c.queue_.end(), later);
      c.public_ips_.clear();
      for (const auto& ip : j.at("public_ips")) {
         auto parsed = Ipv4::parse(ip.get<std::string>());
         if (!parsed) throw StateError("corrupt state: bad public ip");
         c.public_ips_.insert(*parsed);
      }
      c.images_ = j.at("images").get<std::set<std::string>>();
      c.image_pending_ = j.at("image_pending").get<std::map<std::string, double>>();
      c.log_.clear();
   } catch (const nlohmann::json::exception& e) {
      throw StateError(std::string("corrupt cloud state: ") + e.what());
   }
}

}
