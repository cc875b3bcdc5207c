#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace how2::test {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("how2-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path source_dir() { return HOW2_TEST_SOURCE_DIR; }
std::filesystem::path prompts_dir() { return source_dir() / "prompts"; }
std::filesystem::path fixtures_dir() { return source_dir() / "tests" / "fixtures"; }

const util::PromptLibrary& prompts() {
  static const util::PromptLibrary lib(prompts_dir());
  return lib;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

corpus::ProcedureInstance make_instance(const std::string& id, corpus::Topic topic, std::size_t n_steps,
                                        std::size_t n_resources) {
  corpus::ProcedureInstance inst;
  inst.id = id;
  inst.topic = topic;
  inst.goal = "Complete task " + id;
  for (std::size_t r = 0; r < n_resources; ++r) inst.resources.push_back("tool " + std::to_string(r + 1));
  for (std::size_t s = 0; s < n_steps; ++s) {
    inst.steps.push_back("Perform action " + std::to_string(s + 1) + " for " + id + ".");
  }
  inst.source_url = "https://example.org/" + id;
  return inst;
}

corpus::GenerationRecord make_generation(const corpus::ProcedureInstance& inst, const std::string& model_id,
                                         std::vector<std::string> steps) {
  corpus::GenerationRecord g;
  g.instance_id = inst.id;
  g.model_id = model_id;
  g.steps = std::move(steps);
  std::string raw;
  for (std::size_t i = 0; i < g.steps.size(); ++i) raw += std::to_string(i + 1) + ". " + g.steps[i] + "\n";
  g.raw_text = raw;
  for (const auto& s : g.steps) g.gen_tokens += static_cast<std::int64_t>(std::count(s.begin(), s.end(), ' ') + 1);
  for (const auto& s : inst.steps) g.ref_tokens += static_cast<std::int64_t>(std::count(s.begin(), s.end(), ' ') + 1);
  return g;
}

}  // namespace how2::test
