#include "reliasql/prompts.hpp"

#include "reliasql/dataset_io.hpp"
#include "reliasql/error.hpp"

namespace reliasql {

PromptTemplates load_prompt_templates(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    auto path = dir / name;
    if (!std::filesystem::exists(path)) throw ConfigError("prompt template " + path.string() + " is missing");
    return read_text_file(path);
  };
  PromptTemplates t;
  t.task = read("task.txt");
  t.generate_system = read("generate.system.txt");
  t.generate_user = read("generate.user.txt");
  t.templatize_system = read("templatize.system.txt");
  t.templatize_user = read("templatize.user.txt");
  t.align_system = read("align.system.txt");
  t.align_user = read("align.user.txt");
  return t;
}

std::string fill_template(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      auto close = text.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = values.find(text.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

}  // namespace reliasql
