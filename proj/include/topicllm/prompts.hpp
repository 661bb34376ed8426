#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace topicllm {

/// Prompt text with `{name}` placeholders.
class PromptTemplate {
 public:
  /// Throws ConfigError naming every required placeholder that is missing.
  PromptTemplate(std::string text, std::vector<std::string> required);

  static PromptTemplate from_file(const std::filesystem::path& path,
                                  std::vector<std::string> required);

  bool has(std::string_view name) const;

  /// Substitutes each `{key}`. Values for keys without a placeholder are
  /// appended after the template body, so optional sections survive custom
  /// templates.
  std::string render(const std::map<std::string, std::string>& values) const;

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

namespace prompts {

// Placeholder names.
inline constexpr const char* kTopics = "topics";
inline constexpr const char* kDocument = "document";
inline constexpr const char* kTree = "tree";
inline constexpr const char* kModeInstruction = "mode_instruction";
inline constexpr const char* kCorrection = "correction";
inline constexpr const char* kBranch = "branch";
inline constexpr const char* kDocuments = "documents";

PromptTemplate generation();
PromptTemplate refinement();
PromptTemplate assignment();
PromptTemplate subtopics();

std::string_view generation_text();
std::string_view refinement_text();
std::string_view assignment_text();
std::string_view subtopics_text();

}  // namespace prompts

}  // namespace topicllm
