#include "elicit/prompts.hpp"

#include <fstream>
#include <sstream>

#include "elicit/error.hpp"

namespace elicit {
namespace detail {
const std::map<std::string, std::string>& builtin_prompt_files();
}  // namespace detail

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(s.front())) return false;
  for (char c : s) {
    if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
  }
  return true;
}

// Visits literal runs and placeholder names of `body` in order.
template <typename OnText, typename OnPlaceholder>
void scan(std::string_view body, OnText&& on_text, OnPlaceholder&& on_placeholder) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = body.find('}', open + 1);
    if (close == std::string_view::npos) break;
    const auto name = body.substr(open + 1, close - open - 1);
    if (!is_identifier(name)) {
      on_text(body.substr(pos, open + 1 - pos));
      pos = open + 1;
      continue;
    }
    on_text(body.substr(pos, open - pos));
    on_placeholder(name);
    pos = close + 1;
  }
  on_text(body.substr(pos));
}

std::string strip_final_newline(std::string text) {
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

PromptLibrary assemble(const std::map<std::string, std::string>& files) {
  auto get = [&](const std::string& name) {
    auto it = files.find(name);
    if (it == files.end()) throw ValidationError("missing prompt template " + name + ".txt");
    return strip_final_newline(it->second);
  };
  PromptLibrary lib;
  lib.comment_formatting = PromptTemplate("comment_formatting", get("comment_formatting"));
  lib.shallow_check = PromptTemplate("shallow_check", get("shallow_check"));
  const auto generation = get("question_generation");
  lib.question_generation = PromptTemplate("question_generation", generation);
  lib.question_verification = PromptTemplate("question_verification", get("question_verification"));
  lib.question_regeneration = PromptTemplate(
      "question_regeneration", generation + "\n" + get("question_regeneration_suffix"));
  lib.goal_good_execution = get("goal_good_execution");
  lib.goal_tips_for_improvement = get("goal_tips_for_improvement");
  return lib;
}

constexpr const char* kPromptNames[] = {
    "comment_formatting",           "shallow_check",       "question_generation",
    "question_verification",        "goal_good_execution", "goal_tips_for_improvement",
    "question_regeneration_suffix",
};

}  // namespace

PromptTemplate::PromptTemplate(std::string id, std::string body)
    : id_(std::move(id)), body_(std::move(body)) {}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  scan(body_, [](std::string_view) {}, [&](std::string_view name) {
    for (const auto& n : names) {
      if (n == name) return;
    }
    names.emplace_back(name);
  });
  return names;
}

std::string PromptTemplate::render(const PromptBindings& bindings) const {
  std::string out;
  out.reserve(body_.size() * 2);
  scan(body_, [&](std::string_view text) { out.append(text); },
       [&](std::string_view name) {
         auto it = bindings.find(name);
         if (it == bindings.end()) {
           throw ValidationError("prompt " + id_ + ": unbound placeholder {" + std::string(name) +
                                 "}");
         }
         out.append(it->second);
       });
  return out;
}

const std::string& PromptLibrary::goal_for(CommentType type) const noexcept {
  return type == CommentType::kGoodExecution ? goal_good_execution : goal_tips_for_improvement;
}

PromptLibrary PromptLibrary::builtin() { return assemble(detail::builtin_prompt_files()); }

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const char* name : kPromptNames) {
    const auto path = dir / (std::string(name) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open prompt template " + path.string());
    std::ostringstream body;
    body << in.rdbuf();
    files.emplace(name, body.str());
  }
  return assemble(files);
}

}  // namespace elicit
