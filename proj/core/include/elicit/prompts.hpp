#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/corpus.hpp"

namespace elicit {

using PromptBindings = std::map<std::string, std::string, std::less<>>;

/// A plain-text prompt with {identifier} placeholders. Braces that do not
/// enclose an identifier are literal text.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  PromptTemplate(std::string id, std::string body);

  const std::string& id() const noexcept { return id_; }
  const std::string& body() const noexcept { return body_; }

  /// Placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;

  /// Substitutes every placeholder. Throws ValidationError naming the first
  /// placeholder without a binding. Substituted text is not rescanned.
  std::string render(const PromptBindings& bindings) const;

 private:
  std::string id_;
  std::string body_;
};

/// The prompt set used by the dataset pipeline.
struct PromptLibrary {
  PromptTemplate comment_formatting;
  PromptTemplate shallow_check;
  PromptTemplate question_generation;
  PromptTemplate question_verification;
  /// Generation prompt followed by the bad-example block.
  PromptTemplate question_regeneration;
  std::string goal_good_execution;
  std::string goal_tips_for_improvement;

  const std::string& goal_for(CommentType type) const noexcept;

  /// Templates compiled in from prompts/.
  static PromptLibrary builtin();
  /// Reads <dir>/<name>.txt for every template.
  static PromptLibrary load(const std::filesystem::path& dir);
};

}  // namespace elicit
