#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace how2::corpus {

class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
};

// Whitespace split; always registered as "whitespace".
class WhitespaceCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
};

// Byte-level BPE in the GPT-2 family: regex-style pre-tokenization, byte to
// printable-unicode mapping, then rank-ordered merges. Loads the "model"
// section of a Hugging Face tokenizer.json (vocab + merges).
class ByteLevelBpe final : public TokenCounter {
 public:
  static std::unique_ptr<ByteLevelBpe> from_tokenizer_json(const std::filesystem::path& path);
  static std::unique_ptr<ByteLevelBpe> from_json_text(std::string_view text);

  std::vector<std::string> encode(std::string_view text) const;
  std::size_t count(std::string_view text) const override { return encode(text).size(); }

  /// Pre-tokenizer pieces (raw bytes), exposed for testing.
  static std::vector<std::string> pre_tokenize(std::string_view text);

 private:
  std::vector<std::string> bpe(const std::string& piece) const;

  std::unordered_map<std::string, std::size_t> merge_ranks_;  // "left\x01right" -> rank
};

class TokenizerRegistry {
 public:
  TokenizerRegistry();

  void add(const std::string& scheme, std::shared_ptr<const TokenCounter> counter);
  bool contains(std::string_view scheme) const;
  /// Throws ConfigError for an unregistered scheme.
  const TokenCounter& get(std::string_view scheme) const;
  std::size_t count(std::string_view text, std::string_view scheme) const {
    return get(scheme).count(text);
  }
  std::vector<std::string> schemes() const;

  /// Registers "whitespace" plus every data/tokenizers/<name>.json as scheme <name>.
  static TokenizerRegistry with_data_dir(const std::filesystem::path& tokenizers_dir);

 private:
  std::map<std::string, std::shared_ptr<const TokenCounter>, std::less<>> counters_;
};

/// Count under the process-wide default registry (whitespace + shipped tables).
std::size_t count_tokens(std::string_view text, std::string_view scheme);
const TokenizerRegistry& default_registry();

/// Sums per-step counts; this is how |gen| and |ref| are measured.
std::size_t count_step_tokens(const std::vector<std::string>& steps, const TokenizerRegistry& registry,
                              std::string_view scheme);

}  // namespace how2::corpus
