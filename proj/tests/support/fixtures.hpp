#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "how2/corpus/records.hpp"
#include "how2/util/prompt_library.hpp"

namespace how2::test {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path source_dir();
std::filesystem::path prompts_dir();
std::filesystem::path fixtures_dir();
const util::PromptLibrary& prompts();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

corpus::ProcedureInstance make_instance(const std::string& id, corpus::Topic topic, std::size_t n_steps,
                                        std::size_t n_resources = 2);

corpus::GenerationRecord make_generation(const corpus::ProcedureInstance& inst, const std::string& model_id,
                                         std::vector<std::string> steps);

}  // namespace how2::test
