#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfreport/context_io.hpp"

namespace selfreport {

std::string sha256_hex(std::string_view data);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

struct StageRecord {
  std::string name;
  std::string kind;
  std::string status = "completed";
  std::string input_digest;
  Json params = Json::object();
  std::map<std::string, std::string> inputs;   // relative path -> sha256
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  Json counts = Json::object();
  std::string command;

  Json to_json() const;
  static StageRecord from_json(const Json& document);
};

using StageOutputs = std::vector<std::pair<std::string, std::string>>;  // relative path, content

// A run directory: manifest.json plus stage outputs under fixed
// subdirectories. Manifest updates are serialized by an advisory file lock
// and committed with write-temp-then-rename.
class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  // Rejects absolute paths and paths that climb out of the run directory.
  std::filesystem::path resolve(std::string_view relative) const;
  bool exists(std::string_view relative) const;
  std::string read(std::string_view relative) const;
  std::string digest(std::string_view relative) const;

  Json manifest() const;
  // Creates the manifest, or refreshes an existing manifest's header fields
  // other than run_id and created_at.
  void initialize(const Json& header);

  // Checks that every output listed in the manifest exists with its digest.
  void verify() const;

  // The completed stage with this name and input digest, after confirming its
  // outputs are intact; nullopt if the stage must (re)run.
  std::optional<StageRecord> completed_stage(std::string_view name, std::string_view input_digest) const;

  // Writes outputs and records the stage. Re-persisting an identical stage
  // changes nothing on disk.
  StageRecord persist_stage(StageRecord record, const StageOutputs& outputs);

  // Digest over stage name, parameters, and input file digests.
  static std::string input_digest(std::string_view name, const Json& params,
                                  const std::map<std::string, std::string>& inputs);

 private:
  std::filesystem::path root_;
};

std::string utc_timestamp();

}  // namespace selfreport
