#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace reliasql {

/// Prompt wording, loaded from text files with {named} placeholders.
struct PromptTemplates {
  std::string task;               // task outline and SQLite dialect note
  std::string generate_system;
  std::string generate_user;      // {task} {tables} {examples} {question}
  std::string templatize_system;
  std::string templatize_user;    // {templates} {question}
  std::string align_system;
  std::string align_user;         // {question} {sql}
};

/// Reads task.txt, generate.system.txt, generate.user.txt, templatize.system.txt,
/// templatize.user.txt, align.system.txt and align.user.txt from `dir`.
PromptTemplates load_prompt_templates(const std::filesystem::path& dir);

/// Single-pass substitution of {key} markers; unknown markers are left as written.
std::string fill_template(const std::string& text, const std::map<std::string, std::string>& values);

}  // namespace reliasql
