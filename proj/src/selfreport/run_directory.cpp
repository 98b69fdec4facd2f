#include "selfreport/run_directory.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <thread>

#include <openssl/evp.h>

#include "selfreport/error.hpp"

namespace selfreport {
namespace {

constexpr std::string_view kManifest = "manifest.json";

class ManifestLock {
 public:
  explicit ManifestLock(const std::filesystem::path& root) {
    const auto path = root / ".manifest.lock";
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) raise(ErrorKind::io, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      raise(ErrorKind::io, "cannot lock " + path.string());
    }
  }
  ~ManifestLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  ManifestLock(const ManifestLock&) = delete;
  ManifestLock& operator=(const ManifestLock&) = delete;

 private:
  int fd_ = -1;
};

Json stages_of(const Json& manifest) {
  auto it = manifest.find("stages");
  return it != manifest.end() && it->is_array() ? *it : Json::array();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char hash[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), hash, &length, EVP_sha256(), nullptr) != 1) {
    raise(ErrorKind::io, "sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[hash[i] >> 4];
    out += kHex[hash[i] & 0xf];
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." +
                   std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) + "." +
                   std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) raise(ErrorKind::io, "failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(ErrorKind::io, "cannot move " + tmp + " into place: " + ec.message());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

Json StageRecord::to_json() const {
  Json in = Json::object();
  for (const auto& [path, digest] : inputs) in[path] = digest;
  Json out = Json::object();
  for (const auto& [path, digest] : outputs) out[path] = digest;
  return Json{{"name", name},       {"kind", kind},     {"status", status}, {"input_digest", input_digest},
              {"params", params},   {"inputs", in},     {"outputs", out},   {"counts", counts},
              {"command", command}};
}

StageRecord StageRecord::from_json(const Json& document) {
  StageRecord record;
  record.name = document.value("name", "");
  record.kind = document.value("kind", "");
  record.status = document.value("status", "");
  record.input_digest = document.value("input_digest", "");
  record.params = document.value("params", Json::object());
  const Json inputs = document.value("inputs", Json::object());
  const Json outputs = document.value("outputs", Json::object());
  for (const auto& [path, digest] : inputs.items()) {
    record.inputs[path] = digest.get<std::string>();
  }
  for (const auto& [path, digest] : outputs.items()) {
    record.outputs[path] = digest.get<std::string>();
  }
  record.counts = document.value("counts", Json::object());
  record.command = document.value("command", "");
  return record;
}

RunDirectory::RunDirectory(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec || !std::filesystem::is_directory(root_)) raise(ErrorKind::io, "cannot create run directory " + root_.string());
}

std::filesystem::path RunDirectory::resolve(std::string_view relative) const {
  const std::filesystem::path rel(relative);
  if (rel.empty() || rel.is_absolute()) raise(ErrorKind::domain, "run paths must be relative: " + std::string(relative));
  for (const auto& part : rel) {
    if (part == "..") raise(ErrorKind::domain, "run paths may not leave the run directory: " + std::string(relative));
  }
  return root_ / rel;
}

bool RunDirectory::exists(std::string_view relative) const { return std::filesystem::exists(resolve(relative)); }

std::string RunDirectory::read(std::string_view relative) const { return read_file(resolve(relative)); }

std::string RunDirectory::digest(std::string_view relative) const { return sha256_hex(read(relative)); }

Json RunDirectory::manifest() const {
  if (!exists(kManifest)) return Json::object();
  return read_json_file(resolve(kManifest));
}

void RunDirectory::initialize(const Json& header) {
  ManifestLock lock(root_);
  if (!exists(kManifest)) {
    Json manifest = header;
    manifest["stages"] = Json::array();
    write_file_atomic(resolve(kManifest), manifest.dump(2) + "\n");
    return;
  }
  Json manifest = this->manifest();
  bool changed = false;
  for (const auto& [key, value] : header.items()) {
    if (key == "run_id" || key == "created_at" || key == "stages") continue;
    if (!manifest.contains(key) || manifest[key] != value) {
      manifest[key] = value;
      changed = true;
    }
  }
  if (changed) write_file_atomic(resolve(kManifest), manifest.dump(2) + "\n");
}

void RunDirectory::verify() const {
  for (const auto& stage : stages_of(manifest())) {
    const auto record = StageRecord::from_json(stage);
    for (const auto& [path, expected] : record.outputs) {
      if (!exists(path)) raise(ErrorKind::integrity, "stage " + record.name + " output " + path + " is missing");
      if (digest(path) != expected) {
        raise(ErrorKind::integrity, "digest mismatch for " + path + " (stage " + record.name + "); refusing to proceed");
      }
    }
  }
}

std::optional<StageRecord> RunDirectory::completed_stage(std::string_view name, std::string_view input_digest) const {
  for (const auto& stage : stages_of(manifest())) {
    if (stage.value("name", "") != name) continue;
    auto record = StageRecord::from_json(stage);
    if (record.status != "completed" || record.input_digest != input_digest) return std::nullopt;
    for (const auto& [path, expected] : record.outputs) {
      if (!exists(path) || digest(path) != expected) {
        raise(ErrorKind::integrity, "digest mismatch for " + path + " (stage " + record.name + "); refusing to proceed");
      }
    }
    return record;
  }
  return std::nullopt;
}

StageRecord RunDirectory::persist_stage(StageRecord record, const StageOutputs& outputs) {
  record.outputs.clear();
  for (const auto& [path, content] : outputs) record.outputs[path] = sha256_hex(content);

  ManifestLock lock(root_);
  Json manifest = this->manifest();
  if (!manifest.is_object()) manifest = Json::object();
  Json stages = stages_of(manifest);

  std::optional<std::size_t> slot;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].value("name", "") == record.name) slot = i;
  }
  if (slot && stages[*slot] == record.to_json()) {
    bool intact = true;
    for (const auto& [path, expected] : record.outputs) intact = intact && exists(path) && digest(path) == expected;
    if (intact) return record;
  }

  for (const auto& [path, content] : outputs) {
    const auto target = resolve(path);
    if (std::filesystem::exists(target) && sha256_hex(read_file(target)) == record.outputs[path]) continue;
    write_file_atomic(target, content);
  }
  if (slot) {
    stages[*slot] = record.to_json();
  } else {
    stages.push_back(record.to_json());
  }
  manifest["stages"] = std::move(stages);
  write_file_atomic(resolve(kManifest), manifest.dump(2) + "\n");
  return record;
}

std::string RunDirectory::input_digest(std::string_view name, const Json& params,
                                       const std::map<std::string, std::string>& inputs) {
  Json basis{{"stage", name}, {"params", params}};
  Json in = Json::object();
  for (const auto& [path, digest] : inputs) in[path] = digest;
  basis["inputs"] = std::move(in);
  return sha256_hex(basis.dump());
}

}  // namespace selfreport
